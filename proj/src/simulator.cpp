#include "pdmp/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "pdmp/rng.hpp"

namespace pdmp {

int Trajectory::state_at(double t) const {
  const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  return chem_states[static_cast<std::size_t>(it - jump_times.begin())];
}

double Trajectory::sojourn_time(int sigma) const {
  double total = 0.0;
  double left = t0;
  for (std::size_t k = 0; k < jump_times.size(); ++k) {
    if (chem_states[k] == sigma) total += jump_times[k] - left;
    left = jump_times[k];
  }
  if (chem_states.back() == sigma) total += horizon() - left;
  return total;
}

namespace {

// Runs deterministic segments of one path: the mechanical ODE is augmented
// with the cumulative hazard and, when tilting, with the likelihood-weight
// integrand. The stepper is reused across segments so the step-size hint
// survives jumps.
class PathEngine {
 public:
  PathEngine(const PdmpModel& model, const SimConfig& config, const TiltSpec* tilt,
             double uniform_scale = -1.0)
      : model_(model),
        config_(config),
        tilt_(tilt),
        uniform_scale_(uniform_scale),
        dim_(model.dim),
        aug_(model.dim + 1 + (tilt ? 1 : 0)),
        stepper_(aug_, OdeOptions{config.ode_rel_tol, config.ode_abs_tol}),
        y_(aug_, 0.0) {
    rhs_ = [this](double t, std::span<const double> y, std::span<double> dy) {
      const auto x = y.first(dim_);
      model_.force_at(sigma_, x, t, dy.first(dim_));
      double hazard = 0.0, wint = 0.0;
      const double v_cur = tilt_ ? tilt_->value(sigma_, t) : 0.0;
      for (int to = 0; to < model_.n_states(); ++to) {
        if (to == sigma_) continue;
        const double r = model_.rates.evaluate(sigma_, to, x, t);
        const double s = scale(sigma_, to);
        if (tilt_) {
          const double boost = std::exp(tilt_->value(to, t) - v_cur);
          hazard += s * r * boost;
          wint += s * r * (1.0 - boost);
        } else {
          hazard += s * r;
        }
      }
      dy[dim_] = hazard;
      if (tilt_) dy[dim_ + 1] = wint;
    };
  }

  double scale(int from, int to) const {
    return uniform_scale_ >= 0.0 ? uniform_scale_ : config_.edge_scale(from, to);
  }

  void set_state(int sigma, std::span<const double> x, double t, double weight_integral) {
    sigma_ = sigma;
    t_ = t;
    std::copy(x.begin(), x.end(), y_.begin());
    y_[dim_] = 0.0;
    if (tilt_) y_[dim_ + 1] = weight_integral;
    stepper_.restart(t_, y_, rhs_);
  }

  // Segment until the hazard crosses `threshold` or t reaches t_end.
  SegmentOutcome run_segment(double threshold, double t_end, DensePath* record) {
    const bool dense = record && config_.record == RecordMode::dense;
    if (record && (record->nodes.empty() || record->nodes.back().t < t_))
      push_node(record, t_, stepper_.y_curr(), stepper_.f_curr());
    for (;;) {
      if (!stepper_.step(rhs_, t_end)) {
        SegmentOutcome out;
        out.kind = SegmentOutcome::Kind::horizon;
        out.time = t_end;
        out.x_end.assign(stepper_.y_curr().begin(), stepper_.y_curr().begin() + dim_);
        out.hazard_at_end = stepper_.y_curr()[dim_];
        t_ = t_end;
        return out;
      }
      if (stepper_.y_curr()[dim_] >= threshold) {
        double lo = stepper_.t_prev(), hi = stepper_.t_curr();
        while (hi - lo > config_.event_tol) {
          const double mid = 0.5 * (lo + hi);
          if (stepper_.eval_in_step_component(mid, dim_) >= threshold)
            hi = mid;
          else
            lo = mid;
        }
        double tau = hi;
        if (tau <= t_) tau = std::nextafter(t_, t_end);
        SegmentOutcome out;
        out.kind = SegmentOutcome::Kind::jump;
        out.time = tau;
        std::vector<double> ytau(aug_);
        stepper_.eval_in_step(tau, ytau);
        out.x_end.assign(ytau.begin(), ytau.begin() + dim_);
        out.hazard_at_end = ytau[dim_];
        if (tilt_) weight_integral_at_end_ = ytau[dim_ + 1];
        t_ = tau;
        return out;
      }
      if (dense) push_node(record, stepper_.t_curr(), stepper_.y_curr(), stepper_.f_curr());
    }
  }

  double weight_integral_at_end() const { return weight_integral_at_end_; }
  double final_weight_integral() const { return tilt_ ? stepper_.y_curr()[dim_ + 1] : 0.0; }
  double time() const { return t_; }

  // Appends a mechanical node; slope recomputed for the given state.
  void push_state_node(DensePath* record, int sigma, double t, std::span<const double> x) {
    std::vector<double> f(dim_);
    model_.force_at(sigma, x, t, f);
    record->nodes.push_back(
        {t, std::vector<double>(x.begin(), x.end()), std::move(f)});
  }

 private:
  void push_node(DensePath* record, double t, std::span<const double> y,
                 std::span<const double> f) {
    record->nodes.push_back({t, std::vector<double>(y.begin(), y.begin() + dim_),
                             std::vector<double>(f.begin(), f.begin() + dim_)});
  }

  const PdmpModel& model_;
  const SimConfig& config_;
  const TiltSpec* tilt_;
  double uniform_scale_;
  int dim_;
  int aug_;
  Rk45 stepper_;
  OdeRhs rhs_;
  std::vector<double> y_;
  int sigma_ = 0;
  double t_ = 0.0;
  double weight_integral_at_end_ = 0.0;
};

struct PathResult {
  Trajectory trajectory;
  double log_weight = 0.0;
};

PathResult simulate_one(const PdmpModel& model, const SimConfig& config, const TiltSpec* tilt,
                        std::span<const double> x0, int sigma0, double t0, std::uint64_t stream) {
  config.check();
  if (sigma0 < 0 || sigma0 >= model.n_states()) throw BadParams("sigma0 outside the state space");
  if (static_cast<int>(x0.size()) != model.dim) throw BadParams("x0 has wrong dimension");
  if (config.scaling == EdgeScaling::partition &&
      static_cast<int>(config.partition->block_of.size()) != model.n_states())
    throw BadParams("partition does not match the model's state space");
  const double horizon = model.horizon;
  if (!(t0 < horizon)) throw BadParams("t0 must precede the horizon");

  CounterRng rng(config.seed, stream);
  PathEngine engine(model, config, tilt);

  Trajectory traj;
  traj.t0 = t0;
  traj.x0.assign(x0.begin(), x0.end());
  traj.sigma0 = sigma0;
  traj.chem_states.push_back(sigma0);
  traj.seed_used = config.seed;
  traj.stream = stream;

  int sigma = sigma0;
  std::vector<double> x(x0.begin(), x0.end());
  double t = t0;
  double weight_integral = 0.0;
  double jump_terms = 0.0;

  for (;;) {
    const double threshold = rng.exponential();
    engine.set_state(sigma, x, t, weight_integral);
    SegmentOutcome out = engine.run_segment(threshold, horizon, &traj.mech);
    if (out.kind == SegmentOutcome::Kind::horizon) {
      if (traj.mech.nodes.back().t < horizon)
        engine.push_state_node(&traj.mech, sigma, horizon, out.x_end);
      weight_integral = engine.final_weight_integral();
      break;
    }
    const double tau = out.time;
    x = out.x_end;
    weight_integral = engine.weight_integral_at_end();
    // close the segment with the pre-jump slope, reopen with the new one
    engine.push_state_node(&traj.mech, sigma, tau, x);

    double v_from = 0.0;
    std::vector<double> w(model.n_states(), 0.0);
    double total = 0.0;
    if (tilt) v_from = tilt->value(sigma, tau);
    for (int to = 0; to < model.n_states(); ++to) {
      if (to == sigma) continue;
      double wt = engine.scale(sigma, to) * model.rates.evaluate(sigma, to, x, tau);
      if (tilt) wt *= std::exp(tilt->value(to, tau) - v_from);
      w[to] = wt;
      total += wt;
    }
    if (!(total > 0.0))
      throw StepFailure("hazard crossed but rates vanish at t=" + std::to_string(tau));
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int next = -1;
    for (int to = 0; to < model.n_states(); ++to) {
      acc += w[to];
      if (u <= acc && to != sigma) {
        next = to;
        break;
      }
    }
    if (next < 0) {
      for (int to = model.n_states() - 1; to >= 0; --to)
        if (w[to] > 0.0) {
          next = to;
          break;
        }
    }
    if (tilt) jump_terms += v_from - tilt->value(next, tau);

    sigma = next;
    traj.jump_times.push_back(tau);
    traj.chem_states.push_back(sigma);
    if (traj.jump_times.size() > config.max_jumps) throw MaxJumpsExceeded(config.max_jumps);
    engine.push_state_node(&traj.mech, sigma, tau, x);
    t = tau;
  }

  PathResult result;
  result.trajectory = std::move(traj);
  result.log_weight = jump_terms - weight_integral;
  return result;
}

template <typename T, typename Fn>
std::vector<T> run_ensemble(std::size_t n_paths, unsigned n_workers, Fn&& make) {
  if (n_paths < 1) throw BadParams("ensemble needs at least one path");
  std::vector<T> results(n_paths);
  std::vector<std::pair<std::size_t, std::string>> failures;
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < n_paths; ++i) {
      try {
        results[i] = make(i);
      } catch (const std::exception& e) {
        failures.emplace_back(i, e.what());
      }
    }
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> cursor{0};
    std::mutex fail_mutex;
    for (unsigned w = 0; w < n_workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = cursor.fetch_add(1);
          if (i >= n_paths) return;
          try {
            results[i] = make(i);
          } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(fail_mutex);
            failures.emplace_back(i, e.what());
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    std::sort(failures.begin(), failures.end());
  }
  if (!failures.empty()) {
    std::string what = "ensemble failed on " + std::to_string(failures.size()) +
                       " path(s); first: path " + std::to_string(failures.front().first) + ": " +
                       failures.front().second;
    throw EnsembleError(std::move(failures), std::move(what));
  }
  return results;
}

}  // namespace

SegmentOutcome integrate_segment(const PdmpModel& model, int sigma, std::span<const double> x0,
                                 double t0, double rate_scale, double threshold,
                                 const SimConfig& config, DensePath* record) {
  if (!(threshold > 0.0)) throw BadParams("hazard threshold must be positive");
  if (!(t0 < model.horizon)) throw BadParams("t0 must precede the horizon");
  if (!(rate_scale >= 0.0)) throw BadParams("rate scale must be nonnegative");
  PathEngine engine(model, config, nullptr, rate_scale);
  engine.set_state(sigma, x0, t0, 0.0);
  return engine.run_segment(threshold, model.horizon, record);
}

Trajectory simulate_path(const PdmpModel& model, const SimConfig& config,
                         std::span<const double> x0, int sigma0, double t0, std::uint64_t stream) {
  return simulate_one(model, config, nullptr, x0, sigma0, t0, stream).trajectory;
}

std::vector<Trajectory> simulate_ensemble(const PdmpModel& model, const SimConfig& config,
                                          std::span<const double> x0, int sigma0,
                                          std::size_t n_paths, unsigned n_workers) {
  return run_ensemble<Trajectory>(n_paths, n_workers, [&](std::size_t i) {
    return simulate_one(model, config, nullptr, x0, sigma0, 0.0, i).trajectory;
  });
}

WeightedTrajectory simulate_tilted(const PdmpModel& model, const SimConfig& config,
                                   const TiltSpec& tilt, std::span<const double> x0, int sigma0,
                                   double t0) {
  if (!tilt.value) throw BadParams("tilt potentials are required");
  PathResult r = simulate_one(model, config, &tilt, x0, sigma0, t0, 0);
  return {std::move(r.trajectory), r.log_weight};
}

std::vector<WeightedTrajectory> simulate_tilted_ensemble(const PdmpModel& model,
                                                         const SimConfig& config,
                                                         const TiltSpec& tilt,
                                                         std::span<const double> x0, int sigma0,
                                                         std::size_t n_paths, unsigned n_workers) {
  if (!tilt.value) throw BadParams("tilt potentials are required");
  return run_ensemble<WeightedTrajectory>(n_paths, n_workers, [&](std::size_t i) {
    PathResult r = simulate_one(model, config, &tilt, x0, sigma0, 0.0, i);
    return WeightedTrajectory{std::move(r.trajectory), r.log_weight};
  });
}

OccupationPath occupation_path(const Trajectory& traj, const std::vector<double>& grid,
                               int n_states) {
  if (n_states <= 0)
    n_states = 1 + *std::max_element(traj.chem_states.begin(), traj.chem_states.end());
  OccupationPath occ;
  occ.grid = grid;
  occ.rho.assign(n_states, std::vector<double>(grid.size(), 0.0));
  for (std::size_t k = 0; k < grid.size(); ++k) occ.rho[traj.state_at(grid[k])][k] = 1.0;
  return occ;
}

namespace {

double adaptive_simpson(const std::function<double(double)>& f, double a, double fa, double m,
                        double fm, double b, double fb, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

double integrate_function(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, fa, m, fm, b, fb, whole, tol, 40);
}

}  // namespace

double time_average(const Trajectory& traj, const std::function<double(double)>& f, int sigma) {
  double total = 0.0;
  double left = traj.t0;
  const double tol = 1e-12;
  for (std::size_t k = 0; k < traj.jump_times.size(); ++k) {
    if (traj.chem_states[k] == sigma) total += integrate_function(f, left, traj.jump_times[k], tol);
    left = traj.jump_times[k];
  }
  if (traj.chem_states.back() == sigma) total += integrate_function(f, left, traj.horizon(), tol);
  return total;
}

}  // namespace pdmp
