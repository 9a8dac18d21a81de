#include "pdmp/motor.hpp"

#include <cmath>

#include "pdmp/coarse.hpp"
#include "pdmp/simulator.hpp"

namespace pdmp::motor {

double potential(const MotorParams& p, int sigma, double x) {
  switch (sigma) {
    case 0:
      return 0.5 * x * x;
    case 1:
      return 0.5 * x * x + p.f * x;
    case 2:
      return 0.5 * (x - 1.0) * (x - 1.0) + p.f * x + p.epsilon;
    default:
      throw BadParams("motor state must be 0, 1 or 2");
  }
}

double force(const MotorParams& p, int sigma, double x) {
  switch (sigma) {
    case 0:
      return -x;
    case 1:
      return -x - p.f;
    case 2:
      return -(x - 1.0) - p.f;
    default:
      throw BadParams("motor state must be 0, 1 or 2");
  }
}

double rate(const MotorParams& p, int from, int to, double x) {
  if (from == to) return 0.0;
  const bool fast = (from != 0 && to != 0);  // the {1,2} channel
  const double omega = fast ? p.omega_fast : p.omega_slow;
  return omega * std::exp(-0.5 * p.beta * (potential(p, to, x) - potential(p, from, x)));
}

double delta_u(const MotorParams& p, double x) { return -x + 0.5 + p.epsilon; }

double effective_force_star(const MotorParams& p, double x) {
  return -x - p.f + 1.0 / (1.0 + std::exp(p.beta * delta_u(p, x)));
}

double effective_force_star_slope(const MotorParams& p, double x) {
  const double y = std::exp(p.beta * delta_u(p, x));
  return -1.0 + p.beta * y / ((1.0 + y) * (1.0 + y));
}

std::optional<Interval> positive_slope_interval(const MotorParams& p) {
  const double beta = p.beta;
  if (beta <= 4.0) return std::nullopt;
  const double disc = std::sqrt(beta * beta - 4.0 * beta);
  const double y_lo_root = 0.5 * (beta - 2.0 - disc);  // y(a_plus)
  const double y_hi_root = 0.5 * (beta - 2.0 + disc);  // y(a_minus)
  // invert y = exp(beta (1/2 - x + eps)); y decreases in x
  const double a_minus = 0.5 + p.epsilon - std::log(y_hi_root) / beta;
  const double a_plus = 0.5 + p.epsilon - std::log(y_lo_root) / beta;
  return Interval{a_minus, a_plus};
}

std::optional<Interval> epsilon_window(double beta) {
  if (beta <= 4.0) return std::nullopt;
  const double disc = std::sqrt(beta * beta - 4.0 * beta);
  const double lo = -0.5 + std::log(0.5 * (beta - 2.0 - disc)) / beta;
  const double hi = -0.5 + std::log(0.5 * (beta - 2.0 + disc)) / beta;
  return Interval{lo, hi};
}

std::vector<Root> find_fstar_roots(const MotorParams& p) {
  const double lo = -2.0 - std::abs(p.f);
  const double hi = 3.0 + std::abs(p.f);
  const int n_cells = 4000;
  const double h = (hi - lo) / n_cells;
  std::vector<Root> roots;
  double xa = lo, fa = effective_force_star(p, xa);
  for (int k = 1; k <= n_cells; ++k) {
    const double xb = lo + k * h;
    const double fb = effective_force_star(p, xb);
    if (fa == 0.0) {
      roots.push_back({xa, effective_force_star(p, xa + 1e-9) < 0.0});
    } else if (fa * fb < 0.0) {
      double a = xa, b = xb;
      while (b - a > 1e-10) {
        const double m = 0.5 * (a + b);
        const double fm = effective_force_star(p, m);
        if (fm == 0.0) {
          a = b = m;
          break;
        }
        if ((fa < 0.0) == (fm < 0.0))
          a = m;
        else
          b = m;
      }
      roots.push_back({0.5 * (a + b), fa > 0.0});
    }
    xa = xb;
    fa = fb;
  }
  return roots;
}

std::optional<Interval> find_bistable_f(double beta, double epsilon, double scan_resolution) {
  MotorParams p;
  p.beta = beta;
  p.epsilon = epsilon;
  p.f = 0.0;
  const auto slope_region = positive_slope_interval(p);
  if (!slope_region) return std::nullopt;
  // The fold values f = F_*(a_+-; 0) bound the three-root region; scan a
  // padded cover of it.
  const double f_lo = effective_force_star(p, slope_region->lo);
  const double f_hi = effective_force_star(p, slope_region->hi);
  const double pad = 10.0 * scan_resolution + 0.05 * (f_hi - f_lo);
  std::optional<Interval> best;
  double cur_lo = 0.0, cur_last = 0.0;
  bool inside = false;
  auto close = [&] {
    if (inside && (!best || cur_last - cur_lo > best->width())) best = Interval{cur_lo, cur_last};
    inside = false;
  };
  for (double f = f_lo - pad; f <= f_hi + pad; f += scan_resolution) {
    MotorParams q = p;
    q.f = f;
    if (find_fstar_roots(q).size() == 3) {
      if (!inside) {
        inside = true;
        cur_lo = f;
      }
      cur_last = f;
    } else {
      close();
    }
  }
  close();
  return best;
}

PdmpModel build_model(const MotorParams& p, double horizon) {
  p.check();
  if (!(horizon > 0.0)) throw BadParams("horizon must be positive");
  PdmpModel model;
  model.states.labels = {"detached", "attached_pre", "attached_post"};
  model.dim = 1;
  model.horizon = horizon;
  MotorParams params = p;
  model.force.evaluate = [params](int sigma, std::span<const double> x, double,
                                  std::span<double> out) { out[0] = force(params, sigma, x[0]); };
  model.force.kappa1 = 1.0 + std::abs(p.f);
  model.force.kappa2 = 1.0;
  model.force.lipschitz_hint = 1.0;
  model.rates.evaluate = [params](int from, int to, std::span<const double> x, double) {
    return rate(params, from, to, x[0]);
  };
  return model;
}

MetastatePartition motor_partition() { return MetastatePartition::make({{0}, {1, 2}}, 3); }

DirectionalityReport directionality_experiment(const MotorParams& p,
                                               const std::vector<double>& x0_list,
                                               std::size_t n_paths, double horizon,
                                               std::uint64_t seed) {
  const auto roots = find_fstar_roots(p);
  if (roots.size() != 3)
    throw BadParams("directionality experiment needs a bistable F_* (three roots)");

  DirectionalityReport report;
  report.x_minus = roots[0].x;
  report.x_mid = roots[1].x;
  report.x_plus = roots[2].x;

  PdmpModel full = build_model(p, horizon);
  PdmpModel effective = coarse::build_effective(full, motor_partition());
  const int attached = 1;  // metastate {1,2}

  SimConfig config;
  config.lambda = 1.0;
  config.seed = seed;
  config.record = RecordMode::jumps_only;

  for (std::size_t i = 0; i < x0_list.size(); ++i) {
    SimConfig cfg = config;
    cfg.seed = seed + 1000003 * i;
    const double x0 = x0_list[i];
    auto paths = simulate_ensemble(effective, cfg, {&x0, 1}, attached, n_paths);
    DirectionalityReport::Row row;
    row.x0 = x0;
    row.n_paths = n_paths;
    for (const auto& traj : paths) {
      const double xt = traj.mech.nodes.back().y[0];
      if (xt > report.x_minus && xt < report.x_mid)
        ++row.terminal_left;
      else if (xt > report.x_mid && xt < report.x_plus)
        ++row.terminal_right;
      else
        ++row.terminal_outside;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace pdmp::motor
