#ifndef PDMP_COARSE_HPP
#define PDMP_COARSE_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/ode.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp::coarse {

// Invariant measure of the intra-block (fast-edge) generator of block i,
// frozen at (x,t). Indexed like partition.blocks[i].
Eigen::VectorXd block_quasistationary(const PdmpModel& model, const MetastatePartition& partition,
                                      int block, std::span<const double> x, double t);

// F_i(x,t) = sum over sigma in the block of F_sigma(x,t) mu_i(sigma|x,t)
void effective_field(const PdmpModel& model, const MetastatePartition& partition, int block,
                     std::span<const double> x, double t, std::span<double> out);

// r(i,j|x,t) = sum_{s in block i} sum_{s' in block j} mu_i(s|x,t) r(s,s'|x,t)
double effective_rate(const PdmpModel& model, const MetastatePartition& partition, int i, int j,
                      std::span<const double> x, double t);

// gamma_i(x,t) on the effective state space; identical to total_jump_rate
// of the effective model.
double metastate_hazard(const PdmpModel& effective_model, int block, std::span<const double> x,
                        double t);

// Assembles the limit PDMP over the metastates {1..l}; directly simulable.
PdmpModel build_effective(const PdmpModel& model, const MetastatePartition& partition);

// CDF of the first inter-metastate jump time of the effective model,
// starting in metastate i0 at x0: 1 - exp(-int_0^t gamma_i0(x_*(s),s) ds)
// with x_* driven by F_i0. Evaluated by quadrature along the ODE solution.
std::function<double(double)> first_jump_cdf(const PdmpModel& effective_model, int block_0,
                                             std::span<const double> x0, double t_max,
                                             const OdeOptions& opts = {});

// First time the chemical path of `traj` leaves the metastate of its
// initial state; +inf when none before the horizon.
double first_metastate_exit(const Trajectory& traj, const MetastatePartition& partition);

struct WindowEvent {
  double t_center = 0.0;
  double half_width = 0.0;
  int block = 0;  // alpha(sigma(T_k))
};

struct ConvergenceReport {
  struct PerLambda {
    double lambda = 0.0;
    double ks_first_jump = 0.0;            // coarse-grained vs effective-model sample
    double ks_first_jump_quadrature = 0.0; // effective-model sample vs quadrature CDF
    double sup_dev_before_exit_median = 0.0;
    std::vector<double> event_prob_empirical;
    std::vector<double> event_prob_effective;
  };
  std::vector<WindowEvent> events;
  std::vector<PerLambda> per_lambda;
};

// Simulates the partition-scaled model at each lambda, coarse-grains the
// chemical path, and compares first-exit statistics and window events
// against the effective model.
ConvergenceReport convergence_report(const PdmpModel& model, const MetastatePartition& partition,
                                     const std::vector<double>& lambdas, std::size_t n_paths,
                                     std::span<const double> x0, int sigma0,
                                     const SimConfig& base_config, unsigned n_workers = 1);

// Kolmogorov-Smirnov distance between two samples of (possibly censored)
// first-jump times; values beyond `horizon` count as "no jump".
double ks_distance_censored(std::vector<double> a, std::vector<double> b, double horizon);

}  // namespace pdmp::coarse

#endif
