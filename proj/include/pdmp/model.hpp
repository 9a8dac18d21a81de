#ifndef PDMP_MODEL_HPP
#define PDMP_MODEL_HPP

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdmp/errors.hpp"

namespace pdmp {

// Finite set of chemical states, identified by position; labels are for IO.
struct ChemicalStateSpace {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }

  static ChemicalStateSpace indexed(int n) {
    ChemicalStateSpace s;
    s.labels.reserve(n);
    for (int i = 0; i < n; ++i) s.labels.push_back(std::to_string(i));
    return s;
  }
};

// Per-state mechanical drift F_sigma(x,t). Evaluation must be deterministic
// and reentrant; growth constants bound |F| <= kappa1 + kappa2*|x|.
struct ForceField {
  std::function<void(int sigma, std::span<const double> x, double t, std::span<double> out)>
      evaluate;
  double kappa1 = 0.0;
  double kappa2 = 0.0;
  std::optional<double> lipschitz_hint;
};

// Jump rates r(sigma,sigma'|x,t), sigma != sigma'. The diagonal is never
// queried (self-jumps are excluded by construction).
struct RateField {
  std::function<double(int from, int to, std::span<const double> x, double t)> evaluate;
};

struct PdmpModel {
  ChemicalStateSpace states;
  ForceField force;
  RateField rates;
  int dim = 1;
  double horizon = 1.0;

  int n_states() const { return states.size(); }

  void force_at(int sigma, std::span<const double> x, double t, std::span<double> out) const {
    force.evaluate(sigma, x, t, out);
  }
  double rate_at(int from, int to, std::span<const double> x, double t) const {
    return from == to ? 0.0 : rates.evaluate(from, to, x, t);
  }
};

// Partition of the chemical states into metastates; intra-block edges are
// the fast ones.
struct MetastatePartition {
  std::vector<std::vector<int>> blocks;
  std::vector<int> block_of;

  int n_blocks() const { return static_cast<int>(blocks.size()); }

  static MetastatePartition make(std::vector<std::vector<int>> blocks, int n_states);
  bool same_block(int a, int b) const { return block_of[a] == block_of[b]; }
};

// gamma_sigma(x,t) = sum over targets of r(sigma,.|x,t)
double total_jump_rate(const PdmpModel& model, int sigma, std::span<const double> x, double t);

// L_c(x,t): off-diagonal (s,s') = r(s,s'|x,t), rows sum to zero.
Eigen::MatrixXd chemical_generator(const PdmpModel& model, std::span<const double> x, double t);

// Probe points for the assumption checks: cartesian product of mechanical
// points and times.
struct ProbeGrid {
  std::vector<std::vector<double>> points;
  std::vector<double> times;

  std::size_t n_probes() const { return points.size() * times.size(); }

  // Uniform lattice with nx points per axis inside [lo,hi]^d and nt times
  // in [0,T].
  static ProbeGrid box(const std::vector<double>& lo, const std::vector<double>& hi, int nx,
                       double t_max, int nt);
};

struct ValidationReport {
  std::size_t n_probes = 0;
  double sup_total_rate = 0.0;
  bool a1_ok = false;
  bool a2_ok = false;
  bool a4_ok = false;
  bool a2prime_ok = true;  // only meaningful when a partition was supplied
  bool checked_partition = false;
  bool passed() const { return a1_ok && a2_ok && a4_ok && a2prime_ok; }

  std::optional<std::string> failed_assumption;
  std::vector<double> witness_x;
  double witness_t = 0.0;
  int witness_block = -1;

  std::string summary() const;
};

// Checks (A1) finiteness of total rates, (A2) irreducibility of the frozen
// chemical generator, (A4) the linear growth bound on the force, and, when a
// partition is given, (A2') irreducibility of each intra-block generator.
// All checks are probe-based on the supplied grid.
ValidationReport validate(const PdmpModel& model, const ProbeGrid& grid,
                          const MetastatePartition* partition = nullptr);

// Strong connectivity of the digraph with edges where rate > tol.
bool irreducible(const Eigen::MatrixXd& generator, double tol = 1e-12);

using ModelParams = std::map<std::string, double>;

// Built-in families: "two_state_linear", "motor3", "random_ergodic".
PdmpModel registry_get(const std::string& name, const ModelParams& params);

}  // namespace pdmp

#endif
