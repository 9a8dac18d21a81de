// Test-only oracles, independent of the library's solver paths.
#ifndef PDMP_TESTS_ORACLES_HPP
#define PDMP_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

namespace oracles {

// Stationary measure as the row limit of exp(t L) for large t.
inline Eigen::VectorXd stationary_by_matrix_exponential(const Eigen::MatrixXd& generator,
                                                        double t = 100.0) {
  Eigen::MatrixXd p = (t * generator).exp();
  return p.row(0).transpose();
}

// Brute-force maximization of J-hat(c, z) = sum c_ij (1 - z_j/z_i) over a
// log-grid of z with the first coordinate gauge-fixed (J-hat is invariant
// under scaling of z), followed by coordinate-wise ternary refinement.
// Derivative-free and independent of the Newton path.
inline double edge_rate_by_grid(const Eigen::MatrixXd& c, int grid_points = 120,
                                double log_range = 6.0, int refine_rounds = 200) {
  const int n = static_cast<int>(c.rows());
  auto value = [&](const std::vector<double>& logz) {
    double total = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j && c(i, j) > 0.0) total += c(i, j) * (1.0 - std::exp(logz[j] - logz[i]));
    return total;
  };

  std::vector<double> best(n, 0.0);
  double best_val = value(best);
  std::vector<double> logz(n, 0.0);
  std::vector<int> idx(n - 1, 0);
  if (n >= 2) {
    for (;;) {
      for (int k = 0; k < n - 1; ++k)
        logz[k + 1] = -log_range + 2.0 * log_range * idx[k] / double(grid_points - 1);
      const double v = value(logz);
      if (v > best_val) {
        best_val = v;
        best = logz;
      }
      int k = 0;
      while (k < n - 1 && ++idx[k] == grid_points) idx[k++] = 0;
      if (k == n - 1) break;
    }
  }

  // ternary refinement per coordinate inside the final grid cell
  double span = 2.0 * log_range / (grid_points - 1);
  for (int round = 0; round < refine_rounds; ++round) {
    for (int k = 1; k < n; ++k) {
      double lo = best[k] - span, hi = best[k] + span;
      for (int it = 0; it < 40; ++it) {
        const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        std::vector<double> z1 = best, z2 = best;
        z1[k] = m1;
        z2[k] = m2;
        if (value(z1) < value(z2))
          lo = m1;
        else
          hi = m2;
      }
      best[k] = 0.5 * (lo + hi);
    }
    const double v = value(best);
    if (v <= best_val + 1e-15) {
      best_val = std::max(best_val, v);
      break;
    }
    best_val = v;
    span *= 0.5;
  }
  return best_val;
}

// One-sample Kolmogorov-Smirnov distance against a cdf.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    ks = std::max(ks, std::abs((i + 1.0) / n - f));
    ks = std::max(ks, std::abs(i / n - f));
  }
  return ks;
}

inline double central_difference(const std::function<double(double)>& f, double x,
                                 double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& values) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

}  // namespace oracles

#endif
