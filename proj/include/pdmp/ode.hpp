#ifndef PDMP_ODE_HPP
#define PDMP_ODE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "pdmp/errors.hpp"

namespace pdmp {

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct OdeOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double initial_step = 0.0;  // 0 -> chosen from the first rhs evaluation
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_rejects_per_step = 60;
};

// Cubic Hermite on [t0,t1] from endpoint values and slopes.
inline void hermite_eval(double t0, std::span<const double> y0, std::span<const double> f0,
                         double t1, std::span<const double> y1, std::span<const double> f1,
                         double t, std::span<double> out) {
  const double h = t1 - t0;
  if (h <= 0.0) {
    std::copy(y1.begin(), y1.end(), out.begin());
    return;
  }
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = h00 * y0[i] + h * h10 * f0[i] + h01 * y1[i] + h * h11 * f1[i];
}

inline double hermite_eval_scalar(double t0, double y0, double f0, double t1, double y1, double f1,
                                  double t) {
  double v;
  hermite_eval(t0, {&y0, 1}, {&f0, 1}, t1, {&y1, 1}, {&f1, 1}, t, {&v, 1});
  return v;
}

// Dense piecewise-Hermite record of an ODE solution.
struct DensePath {
  struct Node {
    double t;
    std::vector<double> y;
    std::vector<double> dy;
  };
  std::vector<Node> nodes;

  bool empty() const { return nodes.empty(); }
  double front_time() const { return nodes.front().t; }
  double back_time() const { return nodes.back().t; }
  std::size_t dim() const { return nodes.empty() ? 0 : nodes.front().y.size(); }

  void eval(double t, std::span<double> out) const {
    const auto& n0 = nodes.front();
    const auto& nb = nodes.back();
    if (t <= n0.t) {
      std::copy(n0.y.begin(), n0.y.end(), out.begin());
      return;
    }
    if (t >= nb.t) {
      std::copy(nb.y.begin(), nb.y.end(), out.begin());
      return;
    }
    auto it = std::upper_bound(nodes.begin(), nodes.end(), t,
                               [](double a, const Node& n) { return a < n.t; });
    const Node& hi = *it;
    const Node& lo = *(it - 1);
    hermite_eval(lo.t, lo.y, lo.dy, hi.t, hi.y, hi.dy, t, out);
  }

  double eval_component(double t, std::size_t i) const {
    std::vector<double> buf(dim());
    eval(t, buf);
    return buf[i];
  }
};

// Dormand-Prince 5(4) with FSAL. The stepper owns its work arrays; one
// instance is reused across many short segments (the step-size hint is
// carried over restarts, which keeps event-dense simulations cheap).
class Rk45 {
 public:
  Rk45(std::size_t dim, OdeOptions opts) : opts_(opts), n_(dim) {
    y_.resize(n_);
    f_.resize(n_);
    yp_.resize(n_);
    fp_.resize(n_);
    ytmp_.resize(n_);
    yerr_.resize(n_);
    for (auto& k : k_) k.resize(n_);
  }

  void start(double t0, std::span<const double> y0, const OdeRhs& rhs) {
    t_ = t0;
    std::copy(y0.begin(), y0.end(), y_.begin());
    rhs(t_, y_, std::span<double>(f_));
    check_finite(f_, t_);
    if (dt_ <= 0.0) dt_ = initial_step_guess();
  }

  // Restart at a new point (e.g. after a jump changed the rhs) keeping dt.
  void restart(double t0, std::span<const double> y0, const OdeRhs& rhs) { start(t0, y0, rhs); }

  double dt_hint() const { return dt_; }
  void set_dt_hint(double h) { dt_ = h; }

  // One accepted step, truncated at t_limit. Returns false when t is
  // already at t_limit. After a successful call the previous point is
  // available through *_prev() for dense (Hermite) evaluation.
  bool step(const OdeRhs& rhs, double t_limit) {
    if (t_ >= t_limit) return false;
    double h = std::min({dt_, opts_.max_step, t_limit - t_});
    const double t_scale = std::max({std::abs(t_), std::abs(t_limit), 1.0});
    std::size_t rejects = 0;
    for (;;) {
      if (!(h > 0.0) || h < 16.0 * std::numeric_limits<double>::epsilon() * t_scale) {
        // Step collapsed to the time resolution: the interval is ignorable.
        h = 16.0 * std::numeric_limits<double>::epsilon() * t_scale;
        if (t_ + h >= t_limit) h = t_limit - t_;
        if (!(h > 0.0)) throw StepFailure("step size underflow at t=" + std::to_string(t_));
      }
      const double err = attempt(rhs, h);
      if (err <= 1.0) {
        // accept: shift current -> previous
        tp_ = t_;
        yp_.swap(y_);
        fp_.swap(f_);
        t_ = tp_ + h;
        y_.swap(ytmp_);  // ytmp_ holds y_new
        f_.swap(k_[6]);  // FSAL: k7 = f(t_new, y_new)
        check_finite(y_, t_);
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        dt_ = h * std::clamp(grow, 0.2, 5.0);
        return true;
      }
      if (++rejects > opts_.max_rejects_per_step)
        throw StepFailure("tolerance unreachable at t=" + std::to_string(t_));
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
    }
  }

  double t_prev() const { return tp_; }
  double t_curr() const { return t_; }
  std::span<const double> y_prev() const { return yp_; }
  std::span<const double> f_prev() const { return fp_; }
  std::span<const double> y_curr() const { return y_; }
  std::span<const double> f_curr() const { return f_; }

  // Hermite evaluation inside the last accepted step.
  void eval_in_step(double t, std::span<double> out) const {
    hermite_eval(tp_, yp_, fp_, t_, y_, f_, t, out);
  }
  double eval_in_step_component(double t, std::size_t i) const {
    return hermite_eval_scalar(tp_, yp_[i], fp_[i], t_, y_[i], f_[i], t);
  }

 private:
  double attempt(const OdeRhs& rhs, double h) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
    const std::size_t n = n_;
    auto& k1 = f_;  // FSAL
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * a21 * k1[i];
    rhs(t_ + h / 5.0, ytmp_, std::span<double>(k_[1]));
    for (std::size_t i = 0; i < n; ++i) ytmp_[i] = y_[i] + h * (a31 * k1[i] + a32 * k_[1][i]);
    rhs(t_ + 3.0 * h / 10.0, ytmp_, std::span<double>(k_[2]));
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a41 * k1[i] + a42 * k_[1][i] + a43 * k_[2][i]);
    rhs(t_ + 4.0 * h / 5.0, ytmp_, std::span<double>(k_[3]));
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a51 * k1[i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
    rhs(t_ + 8.0 * h / 9.0, ytmp_, std::span<double>(k_[4]));
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (a61 * k1[i] + a62 * k_[1][i] + a63 * k_[2][i] + a64 * k_[3][i] +
                              a65 * k_[4][i]);
    rhs(t_ + h, ytmp_, std::span<double>(k_[5]));
    for (std::size_t i = 0; i < n; ++i)
      ytmp_[i] = y_[i] + h * (b1 * k1[i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] +
                              b6 * k_[5][i]);
    rhs(t_ + h, ytmp_, std::span<double>(k_[6]));

    double err2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] +
                            e6 * k_[5][i] + e7 * k_[6][i]);
      const double sc =
          opts_.abs_tol + opts_.rel_tol * std::max(std::abs(y_[i]), std::abs(ytmp_[i]));
      err2 += (e / sc) * (e / sc);
    }
    return std::sqrt(err2 / static_cast<double>(n));
  }

  double initial_step_guess() const {
    double fn = 0.0, yn = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      fn = std::max(fn, std::abs(f_[i]));
      yn = std::max(yn, std::abs(y_[i]));
    }
    const double scale = (yn + opts_.abs_tol) / (fn + 1e-30);
    return std::clamp(0.01 * scale, 1e-8, 0.1);
  }

  void check_finite(const std::vector<double>& v, double t) const {
    for (double x : v)
      if (!std::isfinite(x)) throw NonFiniteState("non-finite value at t=" + std::to_string(t));
  }

  OdeOptions opts_;
  std::size_t n_;
  double t_ = 0.0, tp_ = 0.0;
  double dt_ = 0.0;
  std::vector<double> y_, f_, yp_, fp_, ytmp_, yerr_;
  std::vector<double> k_[7];
};

// Convenience driver: integrate rhs over [t0,t1], recording every accepted
// step into a DensePath.
inline DensePath integrate_dense(const OdeRhs& rhs, double t0, std::span<const double> y0,
                                 double t1, const OdeOptions& opts) {
  Rk45 stepper(y0.size(), opts);
  stepper.start(t0, y0, rhs);
  DensePath path;
  path.nodes.push_back({t0, std::vector<double>(y0.begin(), y0.end()),
                        std::vector<double>(stepper.f_curr().begin(), stepper.f_curr().end())});
  while (stepper.step(rhs, t1)) {
    path.nodes.push_back({stepper.t_curr(),
                          std::vector<double>(stepper.y_curr().begin(), stepper.y_curr().end()),
                          std::vector<double>(stepper.f_curr().begin(), stepper.f_curr().end())});
  }
  return path;
}

}  // namespace pdmp

#endif
