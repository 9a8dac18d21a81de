#ifndef PDMP_AVERAGING_HPP
#define PDMP_AVERAGING_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "pdmp/model.hpp"
#include "pdmp/ode.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp {

// Invariant measure of an irreducible rate matrix: solves mu L = 0 with
// sum(mu) = 1 by replacing one column of the system with ones. The result
// is strictly positive (Perron-Frobenius).
Eigen::VectorXd quasistationary(const Eigen::MatrixXd& generator);

// F-bar(x,t) = sum_sigma mu(sigma|x,t) F_sigma(x,t)
void averaged_field(const PdmpModel& model, std::span<const double> x, double t,
                    std::span<double> out);

// Wraps averaged_field as an ODE right-hand side.
OdeRhs averaged_rhs(const PdmpModel& model);

// Solves xdot = F-bar(x,t) from (x0,t0) to t1.
DensePath solve_averaged_ode(const PdmpModel& model, std::span<const double> x0, double t0,
                             double t1, const OdeOptions& opts = {});

// mu(s) r(s,s') == mu(s') r(s',s) for all pairs, within rel_tol.
bool check_reversibility(const Eigen::VectorXd& mu, const Eigen::MatrixXd& generator,
                         double rel_tol = 1e-10);

struct LlnReport {
  struct PerLambda {
    double lambda = 0.0;
    std::vector<double> sup_dev;                   // per path
    std::vector<std::vector<double>> occ_dev;      // [sigma][path]
    double sup_dev_quantile(double q) const;
    double occ_dev_quantile(int sigma, double q) const;
  };
  std::vector<PerLambda> per_lambda;
};

// For each lambda: ensemble of sup_t |x(t)-x_*(t)| and of
// |int f(t) (chi(sigma(t)=s) - mu(s|x_*(t),t)) dt| per state.
LlnReport lln_report(const PdmpModel& model, std::span<const double> x0, int sigma0,
                     const std::vector<double>& lambdas, std::size_t n_paths,
                     const std::function<double(double)>& f, const SimConfig& base_config,
                     unsigned n_workers = 1);

double quantile(std::vector<double> values, double q);

}  // namespace pdmp

#endif
