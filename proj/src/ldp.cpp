#include "pdmp/ldp.hpp"

#include <algorithm>
#include <cmath>

namespace pdmp {

namespace {

double edge_sum(const EdgeVector& c) {
  double total = 0.0;
  const int n = static_cast<int>(c.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) total += c(i, j);
  return total;
}

// Phi(u) = sum c_ij exp(u_j - u_i); convex, translation invariant.
double phi_log(const EdgeVector& c, const Eigen::VectorXd& u) {
  double total = 0.0;
  const int n = static_cast<int>(c.rows());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && c(i, j) > 0.0) total += c(i, j) * std::exp(u(j) - u(i));
  return total;
}

// Newton minimization of Phi on the zero-sum gauge. The gradient is the
// tilted flow imbalance, the Hessian a weighted graph Laplacian.
JResult solve_irreducible(const EdgeVector& c, const JSolverOptions& opts) {
  const int n = static_cast<int>(c.rows());
  const double total = edge_sum(c);
  const double tol = opts.residual_tol * std::max(1.0, total);

  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad(n), step(n);
  Eigen::MatrixXd hess(n, n);
  double phi = phi_log(c, u);

  auto fill_grad_hess = [&] {
    grad.setZero();
    hess.setZero();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j || !(c(i, j) > 0.0)) continue;
        const double w = c(i, j) * std::exp(u(j) - u(i));
        grad(i) -= w;
        grad(j) += w;
        hess(i, i) += w;
        hess(j, j) += w;
        hess(i, j) -= w;
        hess(j, i) -= w;
      }
  };

  bool converged = false;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    fill_grad_hess();
    if (grad.cwiseAbs().maxCoeff() <= tol) {
      converged = true;
      break;
    }

    // The Laplacian kernel is the all-ones direction; penalizing it leaves
    // the zero-sum solution untouched.
    const double ridge = std::max(1e-14, 1e-3 * hess.trace() / n);
    Eigen::MatrixXd shifted = hess + ridge * Eigen::MatrixXd::Ones(n, n);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    step = ldlt.solve(-grad);
    if (!step.allFinite()) throw NonConvergence("singular Newton system");
    step.array() -= step.mean();

    double t = 1.0;
    const double slope = grad.dot(step);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      Eigen::VectorXd trial = u + t * step;
      const double phit = phi_log(c, trial);
      if (phit <= phi + 1e-4 * t * slope) {
        u = trial;
        u.array() -= u.mean();
        phi = phit;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) throw NonConvergence("backtracking stalled");
  }
  if (!converged) {
    fill_grad_hess();
    if (grad.cwiseAbs().maxCoeff() > tol)
      throw NonConvergence("Newton iteration cap reached");
  }

  Eigen::VectorXd z = (u.array() - u.maxCoeff()).exp();
  z /= z.norm();
  JResult result;
  result.value = total - phi_log(c, u);
  result.z = z;
  return result;
}

bool edge_irreducible(const EdgeVector& c) {
  const int n = static_cast<int>(c.rows());
  if (n == 1) return true;
  auto reaches_all = [&](bool reversed) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (int b = 0; b < n; ++b) {
        if (b == a || seen[b]) continue;
        if ((reversed ? c(b, a) : c(a, b)) > 0.0) {
          seen[b] = 1;
          ++count;
          stack.push_back(b);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

// One Aitken pass; sequences here have geometric error terms from the
// vanishing-regularization schedule.
std::vector<double> aitken(const std::vector<double>& v) {
  std::vector<double> out;
  for (std::size_t k = 0; k + 2 < v.size(); ++k) {
    const double d2 = v[k + 2] - 2.0 * v[k + 1] + v[k];
    if (std::abs(d2) < 1e-300)
      out.push_back(v[k + 2]);
    else
      out.push_back(v[k + 2] - (v[k + 2] - v[k + 1]) * (v[k + 2] - v[k + 1]) / d2);
  }
  return out;
}

JResult solve_by_regularization(const EdgeVector& c, const JSolverOptions& opts) {
  const int n = static_cast<int>(c.rows());
  std::vector<double> values;
  double delta = opts.delta0;
  for (int k = 0; k < opts.delta_steps; ++k, delta *= opts.delta_ratio) {
    EdgeVector reg = c;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) reg(i, j) += delta;
    values.push_back(solve_irreducible(reg, opts).value);
  }
  std::vector<double> acc = values;
  for (int pass = 0; pass < 3 && acc.size() >= 3; ++pass) acc = aitken(acc);
  JResult result;
  result.value = std::max(0.0, acc.back());
  return result;
}

}  // namespace

JResult edge_rate_function(const EdgeVector& c, const JSolverOptions& opts) {
  const int n = static_cast<int>(c.rows());
  if (c.cols() != n) throw BadParams("edge vector must be square");
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && (!std::isfinite(c(i, j)) || c(i, j) < 0.0))
        throw BadParams("edge vector entries must be finite and nonnegative");
  if (n == 1) {
    JResult r;
    r.value = 0.0;
    r.z = Eigen::VectorXd::Ones(1);
    return r;
  }
  if (edge_irreducible(c)) return solve_irreducible(c, opts);
  return solve_by_regularization(c, opts);
}

double balance_defect(const EdgeVector& c) {
  const int n = static_cast<int>(c.rows());
  double defect = 0.0;
  for (int s = 0; s < n; ++s) {
    double out = 0.0, in = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == s) continue;
      out += c(s, j);
      in += c(j, s);
    }
    defect = std::max(defect, std::abs(out - in));
  }
  return defect;
}

double stationarity_residual(const EdgeVector& c, const Eigen::VectorXd& z) {
  const int n = static_cast<int>(c.rows());
  double res = 0.0;
  for (int s = 0; s < n; ++s) {
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == s) continue;
      lhs += c(s, j) * z(j) / z(s);
      rhs += c(j, s) * z(s) / z(j);
    }
    res = std::max(res, std::abs(lhs - rhs));
  }
  return res;
}

JResult j_general(const Eigen::VectorXd& pi, const Eigen::MatrixXd& rates,
                  const JSolverOptions& opts) {
  const int n = static_cast<int>(pi.size());
  if (rates.rows() != n || rates.cols() != n) throw BadParams("rates shape mismatch");
  EdgeVector c = EdgeVector::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) c(i, j) = pi(i) * rates(i, j);
  return edge_rate_function(c, opts);
}

double j_reversible(const Eigen::VectorXd& pi, const Eigen::VectorXd& mu,
                    const Eigen::MatrixXd& rates) {
  const int n = static_cast<int>(pi.size());
  if ((mu.array() <= 0.0).any()) throw NotReversible("mu must be strictly positive");
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    if (!(pi(s) > 0.0)) continue;  // zero-measure terms are dropped
    for (int sp = 0; sp < n; ++sp) {
      if (sp == s) continue;
      const double ratio = pi(sp) * mu(s) / (pi(s) * mu(sp));
      total += pi(s) * rates(s, sp) * (1.0 - std::sqrt(ratio));
    }
  }
  return total;
}

double j_two_state(double rho0, double rho1, double gamma0, double gamma1) {
  if (rho0 < 0.0 || rho1 < 0.0 || gamma0 < 0.0 || gamma1 < 0.0)
    throw BadParams("j_two_state inputs must be nonnegative");
  const double d = std::sqrt(rho0 * gamma0) - std::sqrt(rho1 * gamma1);
  return d * d;
}

void PathPair::check_simplex(double tol) const {
  if (grid.size() < 2) throw BadParams("path pair needs at least one cell");
  if (rho.empty()) throw BadParams("path pair has no occupation densities");
  for (const auto& row : rho)
    if (row.size() != grid.size()) throw GridMismatch("rho rows must match the grid");
  if (x.size() != grid.size()) throw GridMismatch("x samples must match the grid");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double total = 0.0;
    for (const auto& row : rho) {
      if (row[k] < -tol || row[k] > 1.0 + tol)
        throw BadParams("rho outside [0,1] at grid index " + std::to_string(k));
      total += row[k];
    }
    if (std::abs(total - 1.0) > tol)
      throw BadParams("rho does not sum to 1 at grid index " + std::to_string(k));
  }
}

namespace {

// Shared cell loop: midpoint in t for the rates, left endpoint for rho.
template <typename CellFn>
double quadrature_over_cells(const PdmpModel& model, const PathPair& pair, CellFn&& cell) {
  const std::size_t n_cells = pair.n_cells();
  const int n = static_cast<int>(pair.rho.size());
  std::vector<double> xm(model.dim);
  Eigen::VectorXd rho_cell(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n_cells; ++k) {
    const double dt = pair.grid[k + 1] - pair.grid[k];
    const double tm = 0.5 * (pair.grid[k] + pair.grid[k + 1]);
    for (int i = 0; i < model.dim; ++i) xm[i] = 0.5 * (pair.x[k][i] + pair.x[k + 1][i]);
    for (int s = 0; s < n; ++s) rho_cell(s) = std::max(0.0, pair.rho[s][k]);
    total += dt * cell(k, tm, xm, rho_cell);
  }
  return total;
}

Eigen::MatrixXd rates_at(const PdmpModel& model, std::span<const double> x, double t) {
  const int n = model.n_states();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) r(i, j) = model.rates.evaluate(i, j, x, t);
  return r;
}

}  // namespace

double path_rate_J(const PdmpModel& model, const PathPair& pair, const JSolverOptions& opts) {
  return quadrature_over_cells(
      model, pair, [&](std::size_t k, double tm, std::span<const double> xm,
                       const Eigen::VectorXd& rho_cell) {
        try {
          return j_general(rho_cell, rates_at(model, xm, tm), opts).value;
        } catch (const NonConvergence& e) {
          throw NonConvergence(std::string(e.what()) + " (at t=" + std::to_string(tm) + ")");
        }
      });
}

double tilted_rate_JV(const PdmpModel& model, const PathPair& pair, const TiltSpec& tilt) {
  const int n = static_cast<int>(pair.rho.size());
  return quadrature_over_cells(
      model, pair,
      [&](std::size_t, double tm, std::span<const double> xm, const Eigen::VectorXd& rho_cell) {
        double cell = 0.0;
        for (int s = 0; s < n; ++s) {
          if (!(rho_cell(s) > 0.0)) continue;
          const double vs = tilt.value(s, tm);
          for (int sp = 0; sp < n; ++sp) {
            if (sp == s) continue;
            const double r = model.rates.evaluate(s, sp, xm, tm);
            cell += rho_cell(s) * r * (1.0 - std::exp(tilt.value(sp, tm) - vs));
          }
        }
        return cell;
      });
}

TiltSpec optimal_tilt(const PdmpModel& model, const PathPair& pair, const JSolverOptions& opts) {
  const std::size_t n_cells = pair.n_cells();
  const int n = static_cast<int>(pair.rho.size());
  auto table = std::make_shared<std::vector<Eigen::VectorXd>>();
  table->reserve(n_cells);
  std::vector<double> xm(model.dim);
  Eigen::VectorXd rho_cell(n);
  for (std::size_t k = 0; k < n_cells; ++k) {
    const double tm = 0.5 * (pair.grid[k] + pair.grid[k + 1]);
    for (int i = 0; i < model.dim; ++i) xm[i] = 0.5 * (pair.x[k][i] + pair.x[k + 1][i]);
    for (int s = 0; s < n; ++s) rho_cell(s) = std::max(0.0, pair.rho[s][k]);
    JResult res = j_general(rho_cell, rates_at(model, xm, tm), opts);
    if (!res.z) throw NonConvergence("optimal tilt needs an attained optimizer; got a "
                                     "degenerate occupation/rate pair");
    table->push_back(res.z->array().log().matrix());
  }
  const std::vector<double> grid = pair.grid;
  TiltSpec tilt;
  tilt.value = [table, grid](int sigma, double t) {
    auto it = std::upper_bound(grid.begin(), grid.end(), t);
    std::size_t cell = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    cell = std::min(cell, table->size() - 1);
    return (*table)[cell](sigma);
  };
  tilt.derivative = [](int, double) { return 0.0; };  // cell-constant
  return tilt;
}

double upsilon_distance(const PathPair& a, const PathPair& b) {
  if (a.grid.size() != b.grid.size() || a.rho.size() != b.rho.size())
    throw GridMismatch();
  for (std::size_t k = 0; k < a.grid.size(); ++k)
    if (std::abs(a.grid[k] - b.grid[k]) > 1e-12) throw GridMismatch();

  double sup_x = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.x[k].size(); ++i)
      d2 += (a.x[k][i] - b.x[k][i]) * (a.x[k][i] - b.x[k][i]);
    sup_x = std::max(sup_x, std::sqrt(d2));
  }

  double rho_part = 0.0;
  for (std::size_t s = 0; s < a.rho.size(); ++s) {
    double integral = 0.0, sup = 0.0;
    for (std::size_t k = 0; k + 1 < a.grid.size(); ++k) {
      const double dt = a.grid[k + 1] - a.grid[k];
      const double d0 = a.rho[s][k] - b.rho[s][k];
      const double d1 = a.rho[s][k + 1] - b.rho[s][k + 1];
      integral += 0.5 * dt * (d0 + d1);
      sup = std::max(sup, std::abs(integral));
    }
    rho_part += sup;
  }
  return sup_x + rho_part;
}

DensePath reconstruct_mechanical_path(const PdmpModel& model, const std::vector<double>& grid,
                                      const std::vector<std::vector<double>>& rho,
                                      std::span<const double> x0, const OdeOptions& opts) {
  if (grid.size() < 2) throw BadParams("grid needs at least two points");
  const int n = static_cast<int>(rho.size());
  std::size_t cell = 0;
  std::vector<double> f(model.dim);
  auto rhs = [&](double t, std::span<const double> x, std::span<double> dx) {
    std::fill(dx.begin(), dx.end(), 0.0);
    for (int s = 0; s < n; ++s) {
      const double w = rho[s][cell];
      if (!(w > 0.0)) continue;
      model.force_at(s, x, t, f);
      for (int i = 0; i < model.dim; ++i) dx[i] += w * f[i];
    }
  };

  DensePath path;
  Rk45 stepper(x0.size(), opts);
  std::vector<double> x(x0.begin(), x0.end());
  stepper.start(grid[0], x, rhs);
  path.nodes.push_back({grid[0], x,
                        std::vector<double>(stepper.f_curr().begin(), stepper.f_curr().end())});
  for (cell = 0; cell + 1 < grid.size(); ++cell) {
    // rho jumps at cell boundaries; restart so the step error control
    // never straddles the discontinuity
    x.assign(stepper.y_curr().begin(), stepper.y_curr().end());
    stepper.restart(grid[cell], x, rhs);
    while (stepper.step(rhs, grid[cell + 1])) {
      path.nodes.push_back(
          {stepper.t_curr(),
           std::vector<double>(stepper.y_curr().begin(), stepper.y_curr().end()),
           std::vector<double>(stepper.f_curr().begin(), stepper.f_curr().end())});
    }
  }
  return path;
}

PathPair make_path_pair(const PdmpModel& model, const std::vector<double>& grid,
                        const std::vector<std::vector<double>>& rho, std::span<const double> x0,
                        const OdeOptions& opts) {
  PathPair pair;
  pair.grid = grid;
  pair.rho = rho;
  pair.x0.assign(x0.begin(), x0.end());
  DensePath xpath = reconstruct_mechanical_path(model, grid, rho, x0, opts);
  pair.x.resize(grid.size());
  std::vector<double> buf(model.dim);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    xpath.eval(grid[k], buf);
    pair.x[k] = buf;
  }
  pair.check_simplex();
  return pair;
}

double upsilon_residual(const PdmpModel& model, const PathPair& pair, const OdeOptions& opts) {
  DensePath xpath = reconstruct_mechanical_path(model, pair.grid, pair.rho, pair.x0, opts);
  double sup = 0.0;
  std::vector<double> buf(model.dim);
  for (std::size_t k = 0; k < pair.grid.size(); ++k) {
    xpath.eval(pair.grid[k], buf);
    double d2 = 0.0;
    for (int i = 0; i < model.dim; ++i) d2 += (pair.x[k][i] - buf[i]) * (pair.x[k][i] - buf[i]);
    sup = std::max(sup, std::sqrt(d2));
  }
  return sup;
}

}  // namespace pdmp
