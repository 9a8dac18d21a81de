#include "pdmp/averaging.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp {

Eigen::VectorXd quasistationary(const Eigen::MatrixXd& generator) {
  const int n = static_cast<int>(generator.rows());
  if (n == 1) return Eigen::VectorXd::Ones(1);
  if (!irreducible(generator)) throw Reducible();

  // mu L = 0 plus normalization: replace the last column of L by ones and
  // solve mu A = e_n, i.e. A^T mu = e_n.
  Eigen::MatrixXd a = generator;
  a.col(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a.transpose());
  Eigen::VectorXd mu = lu.solve(rhs);

  const double residual = (generator.transpose() * mu).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, generator.cwiseAbs().maxCoeff());
  if (!mu.allFinite() || residual > 1e-9 * scale)
    throw Reducible("singular stationary system (residual " + std::to_string(residual) + ")");
  const double total = mu.sum();
  if (!(std::abs(total) > 0.0)) throw NonPositive();
  mu /= total;
  if ((mu.array() <= 0.0).any()) throw NonPositive();
  return mu;
}

void averaged_field(const PdmpModel& model, std::span<const double> x, double t,
                    std::span<double> out) {
  const Eigen::VectorXd mu = quasistationary(chemical_generator(model, x, t));
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> f(model.dim);
  for (int s = 0; s < model.n_states(); ++s) {
    model.force_at(s, x, t, f);
    for (int i = 0; i < model.dim; ++i) out[i] += mu(s) * f[i];
  }
}

OdeRhs averaged_rhs(const PdmpModel& model) {
  return [&model](double t, std::span<const double> x, std::span<double> dx) {
    averaged_field(model, x, t, dx);
  };
}

DensePath solve_averaged_ode(const PdmpModel& model, std::span<const double> x0, double t0,
                             double t1, const OdeOptions& opts) {
  return integrate_dense(averaged_rhs(model), t0, x0, t1, opts);
}

bool check_reversibility(const Eigen::VectorXd& mu, const Eigen::MatrixXd& generator,
                         double rel_tol) {
  const int n = static_cast<int>(generator.rows());
  if ((mu.array() <= 0.0).any()) throw NonPositive("reversibility needs strictly positive mu");
  for (int s = 0; s < n; ++s)
    for (int sp = s + 1; sp < n; ++sp) {
      const double a = mu(s) * generator(s, sp);
      const double b = mu(sp) * generator(sp, s);
      if (std::abs(a - b) > rel_tol * std::max({std::abs(a), std::abs(b), 1e-300}))
        return false;
    }
  return true;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

double LlnReport::PerLambda::sup_dev_quantile(double q) const { return quantile(sup_dev, q); }
double LlnReport::PerLambda::occ_dev_quantile(int sigma, double q) const {
  return quantile(occ_dev[sigma], q);
}

namespace {

double integrate_simpson(const std::function<double(double)>& f, double a, double b, int n_cells) {
  // fixed-cell composite Simpson; used where the integrand is smooth
  double total = 0.0;
  const double h = (b - a) / n_cells;
  for (int k = 0; k < n_cells; ++k) {
    const double lo = a + k * h, hi = lo + h;
    total += h / 6.0 * (f(lo) + 4.0 * f(0.5 * (lo + hi)) + f(hi));
  }
  return total;
}

}  // namespace

LlnReport lln_report(const PdmpModel& model, std::span<const double> x0, int sigma0,
                     const std::vector<double>& lambdas, std::size_t n_paths,
                     const std::function<double(double)>& f, const SimConfig& base_config,
                     unsigned n_workers) {
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1])) throw BadParams("lambdas must be increasing");

  const int n = model.n_states();
  const double horizon = model.horizon;
  DensePath star = solve_averaged_ode(model, x0, 0.0, horizon,
                                      {base_config.ode_rel_tol, base_config.ode_abs_tol});

  // the mu-side of the occupation functional does not depend on lambda
  std::vector<double> mu_integral(n);
  for (int s = 0; s < n; ++s) {
    auto integrand = [&](double t) {
      std::vector<double> xs(model.dim);
      star.eval(t, xs);
      const Eigen::VectorXd mu = quasistationary(chemical_generator(model, xs, t));
      return f(t) * mu(s);
    };
    mu_integral[s] = integrate_simpson(integrand, 0.0, horizon, 400);
  }

  LlnReport report;
  for (double lambda : lambdas) {
    SimConfig config = base_config;
    config.lambda = lambda;
    auto paths = simulate_ensemble(model, config, x0, sigma0, n_paths, n_workers);

    LlnReport::PerLambda row;
    row.lambda = lambda;
    row.occ_dev.assign(n, {});
    std::vector<double> xs(model.dim);
    for (const auto& traj : paths) {
      double sup = 0.0;
      for (const auto& node : traj.mech.nodes) {
        star.eval(node.t, xs);
        double d2 = 0.0;
        for (int i = 0; i < model.dim; ++i) d2 += (node.y[i] - xs[i]) * (node.y[i] - xs[i]);
        sup = std::max(sup, std::sqrt(d2));
      }
      row.sup_dev.push_back(sup);
      for (int s = 0; s < n; ++s)
        row.occ_dev[s].push_back(std::abs(time_average(traj, f, s) - mu_integral[s]));
    }
    report.per_lambda.push_back(std::move(row));
  }
  return report;
}

}  // namespace pdmp
