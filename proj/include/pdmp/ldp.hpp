#ifndef PDMP_LDP_HPP
#define PDMP_LDP_HPP

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/ode.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp {

// Edge vectors c live on W = {(s,s'): s != s'}; stored as a square matrix
// whose diagonal is ignored.
using EdgeVector = Eigen::MatrixXd;

struct JResult {
  double value = 0.0;
  // Optimizer on the positive sphere (sum z^2 = 1); present when the edge
  // vector is irreducible so the supremum is attained.
  std::optional<Eigen::VectorXd> z;
};

struct JSolverOptions {
  double residual_tol = 1e-12;  // on the stationarity system, relative to sum(c)
  int max_iterations = 200;
  double delta0 = 1e-4;   // regularization schedule start for reducible c
  double delta_ratio = 0.25;
  int delta_steps = 12;
};

// J(c) = sup_z sum c(s,s') (1 - z_{s'}/z_s). Irreducible c: damped Newton
// on the log parametrization with the sphere gauge. Reducible c: the
// continuity extension, evaluated along a vanishing-regularization
// schedule with extrapolation.
JResult edge_rate_function(const EdgeVector& c, const JSolverOptions& opts = {});

// max_s |outflow(s) - inflow(s)|; zero exactly on the zero set of J.
double balance_defect(const EdgeVector& c);

// j(pi, r) = J(c[pi,r]) with c[pi,r](s,s') = pi(s) r(s,s').
JResult j_general(const Eigen::VectorXd& pi, const Eigen::MatrixXd& rates,
                  const JSolverOptions& opts = {});

// Closed form under reversibility of mu for the rates:
// sum pi(s) r(s,s') (1 - sqrt(pi(s') mu(s) / (pi(s) mu(s')))), terms with
// pi(s)=0 dropped.
double j_reversible(const Eigen::VectorXd& pi, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& rates);

// Two chemical states: (sqrt(rho0 gamma0) - sqrt(rho1 gamma1))^2.
double j_two_state(double rho0, double rho1, double gamma0, double gamma1);

// Residual of the stationarity system at z: max_s |sum_s' c(s,s')
// z_{s'}/z_s - sum_s' c(s',s) z_s/z_{s'}|.
double stationarity_residual(const EdgeVector& c, const Eigen::VectorXd& z);

// A mechanical path and an occupation-density path on a shared uniform
// time grid. rho is held cell-constant (left endpoint) by all quadratures.
struct PathPair {
  std::vector<double> grid;                // N+1 points
  std::vector<std::vector<double>> x;      // [k][dim]
  std::vector<std::vector<double>> rho;    // [sigma][k]
  std::vector<double> x0;

  std::size_t n_cells() const { return grid.size() - 1; }
  void check_simplex(double tol = 1e-9) const;
};

// J(x,rho) = int_0^T j(rho(t), r(.,.|x(t),t)) dt, midpoint quadrature on
// the rho grid.
double path_rate_J(const PdmpModel& model, const PathPair& pair, const JSolverOptions& opts = {});

// J_V(x,rho) = int sum_{s,s'} rho_s r(s,s'|x,t) (1 - e^{V_{s'}-V_s}) dt,
// same quadrature cells as path_rate_J.
double tilted_rate_JV(const PdmpModel& model, const PathPair& pair, const TiltSpec& tilt);

// The optimal tilt V_s(t) = log z~_s(rho(t), x(t), t), cell-constant.
TiltSpec optimal_tilt(const PdmpModel& model, const PathPair& pair,
                      const JSolverOptions& opts = {});

// d((x,rho),(x',rho')) = ||x-x'||_inf + sum_s sup_t |int_0^t (rho_s - rho'_s)|
double upsilon_distance(const PathPair& a, const PathPair& b);

// Integrates xdot = sum_s F_s(x,t) rho_s(t) with rho cell-constant.
DensePath reconstruct_mechanical_path(const PdmpModel& model, const std::vector<double>& grid,
                                      const std::vector<std::vector<double>>& rho,
                                      std::span<const double> x0, const OdeOptions& opts = {});

// Packages (x,rho) into an Upsilon element by reconstructing x from rho.
PathPair make_path_pair(const PdmpModel& model, const std::vector<double>& grid,
                        const std::vector<std::vector<double>>& rho, std::span<const double> x0,
                        const OdeOptions& opts = {});

// sup_k |x_k - reconstruct(rho)(t_k)|: how far the pair is from Upsilon.
double upsilon_residual(const PdmpModel& model, const PathPair& pair,
                        const OdeOptions& opts = {});

}  // namespace pdmp

#endif
