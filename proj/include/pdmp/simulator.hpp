#ifndef PDMP_SIMULATOR_HPP
#define PDMP_SIMULATOR_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/ode.hpp"

namespace pdmp {

enum class EdgeScaling { uniform, partition };

// What gets stored along a path. dense keeps every accepted ODE step
// (Hermite-accurate x(t) queries); jumps_only keeps segment endpoints,
// which is enough for occupation statistics and much lighter for big
// ensembles.
enum class RecordMode { dense, jumps_only };

struct SimConfig {
  double lambda = 1.0;
  EdgeScaling scaling = EdgeScaling::uniform;
  std::optional<MetastatePartition> partition;  // required for partition scaling
  double ode_rel_tol = 1e-8;
  double ode_abs_tol = 1e-10;
  double event_tol = 1e-10;  // time tolerance of the hazard-crossing bisection
  std::size_t max_jumps = 10'000'000;
  std::uint64_t seed = 0;
  RecordMode record = RecordMode::dense;

  // lambda on fast (intra-block) edges, 1 on slow ones; uniform scaling
  // multiplies every edge by lambda.
  double edge_scale(int from, int to) const {
    if (scaling == EdgeScaling::uniform) return lambda;
    return partition->same_block(from, to) ? lambda : 1.0;
  }

  void check() const {
    if (!(lambda > 0.0)) throw BadParams("lambda must be positive");
    if (!(ode_rel_tol > 0.0) || !(ode_abs_tol > 0.0) || !(event_tol > 0.0))
      throw BadParams("tolerances must be positive");
    if (max_jumps < 1) throw BadParams("max_jumps must be >= 1");
    if (scaling == EdgeScaling::partition && !partition)
      throw BadParams("partition scaling requires a partition");
  }
};

struct Trajectory {
  double t0 = 0.0;
  std::vector<double> x0;
  int sigma0 = 0;
  std::vector<double> jump_times;  // strictly increasing, in (t0, horizon]
  std::vector<int> chem_states;    // sigma_0 .. sigma_n
  DensePath mech;                  // continuous mechanical record
  std::uint64_t seed_used = 0;
  std::uint64_t stream = 0;

  std::size_t n_jumps() const { return jump_times.size(); }
  double horizon() const { return mech.back_time(); }

  // cadlag chemical state: at a jump instant the post-jump value is taken
  int state_at(double t) const;
  void x_at(double t, std::span<double> out) const { mech.eval(t, out); }
  double x_at(double t, std::size_t i = 0) const { return mech.eval_component(t, i); }

  // exact sojourn time in sigma over [t0, horizon]
  double sojourn_time(int sigma) const;
};

struct OccupationPath {
  std::vector<double> grid;
  std::vector<std::vector<double>> rho;  // [sigma][grid index], 0/1 indicators
};

// Outcome of one deterministic segment: either the cumulative hazard
// crossed the threshold at tau, or the horizon was reached.
struct SegmentOutcome {
  enum class Kind { jump, horizon };
  Kind kind = Kind::horizon;
  double time = 0.0;           // tau or the horizon
  std::vector<double> x_end;   // mechanical state at `time`
  double hazard_at_end = 0.0;  // accumulated hazard at `time`
};

// Integrates dx/dt = F_sigma(x,t) jointly with dLambda/dt =
// rate_scale*gamma_sigma(x,t) until Lambda crosses `threshold` or t
// reaches the model horizon. The crossing is localized by bisection on
// the dense output. Pass a DensePath to record the mechanical segment.
SegmentOutcome integrate_segment(const PdmpModel& model, int sigma, std::span<const double> x0,
                                 double t0, double rate_scale, double threshold,
                                 const SimConfig& config, DensePath* record = nullptr);

// `stream` selects the counter-based RNG stream; ensemble path i uses
// stream i.
Trajectory simulate_path(const PdmpModel& model, const SimConfig& config,
                         std::span<const double> x0, int sigma0, double t0 = 0.0,
                         std::uint64_t stream = 0);

// Path i uses the stream derived from (config.seed, i); outputs are
// independent of the worker count.
std::vector<Trajectory> simulate_ensemble(const PdmpModel& model, const SimConfig& config,
                                          std::span<const double> x0, int sigma0,
                                          std::size_t n_paths, unsigned n_workers = 1);

// n_states <= 0 infers the count from the visited states.
OccupationPath occupation_path(const Trajectory& traj, const std::vector<double>& grid,
                               int n_states = -1);

// Exact piecewise quadrature of f over the sojourn intervals of sigma;
// no grid discretization.
double time_average(const Trajectory& traj, const std::function<double(double)>& f, int sigma);

// Per-state tilting potentials V_sigma(t), piecewise C^1. The derivative
// callback may be empty; it is not needed for the likelihood weight.
struct TiltSpec {
  std::function<double(int sigma, double t)> value;
  std::function<double(int sigma, double t)> derivative;
};

struct WeightedTrajectory {
  Trajectory trajectory;
  double log_weight = 0.0;  // log dP/dP^V along the path
};

// Simulates under the perturbed rates r~ = r * exp(V_to - V_from) (with
// the same edge scaling) and records the exact log likelihood ratio of
// the unperturbed law w.r.t. the perturbed one.
WeightedTrajectory simulate_tilted(const PdmpModel& model, const SimConfig& config,
                                   const TiltSpec& tilt, std::span<const double> x0, int sigma0,
                                   double t0 = 0.0);

std::vector<WeightedTrajectory> simulate_tilted_ensemble(const PdmpModel& model,
                                                         const SimConfig& config,
                                                         const TiltSpec& tilt,
                                                         std::span<const double> x0, int sigma0,
                                                         std::size_t n_paths,
                                                         unsigned n_workers = 1);

struct EnsembleError : std::runtime_error {
  EnsembleError(std::vector<std::pair<std::size_t, std::string>> failures_, std::string what)
      : std::runtime_error(std::move(what)), failures(std::move(failures_)) {}
  std::vector<std::pair<std::size_t, std::string>> failures;
};

}  // namespace pdmp

#endif
