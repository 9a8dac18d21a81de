#ifndef PDMP_MOTOR_HPP
#define PDMP_MOTOR_HPP

#include <optional>
#include <vector>

#include "pdmp/model.hpp"

namespace pdmp::motor {

// Three-state lever-arm motor: 0 detached, 1 and 2 attached in different
// conformations. f is the external load, epsilon the ATP offset, beta the
// inverse temperature.
struct MotorParams {
  double f = 0.0;
  double epsilon = 0.0;
  double beta = 1.0;
  double omega_slow = 1.0;  // prefactor for the 0<->1 and 0<->2 channels
  double omega_fast = 1.0;  // prefactor for the 1<->2 channel

  void check() const {
    if (!(beta > 0.0)) throw BadParams("motor beta must be positive");
    if (!(omega_slow > 0.0) || !(omega_fast > 0.0))
      throw BadParams("motor rate prefactors must be positive");
  }
};

// U0 = x^2/2, U1 = x^2/2 + f x, U2 = (x-1)^2/2 + f x + eps
double potential(const MotorParams& p, int sigma, double x);

// Force fields -dU/dx for sigma in {0,1,2}.
double force(const MotorParams& p, int sigma, double x);

// Detailed-balance rates r(s,s'|x) = omega_e * exp(-beta (U_{s'}-U_s)/2);
// omega_e is omega_fast on the {1,2} pair and omega_slow otherwise.
double rate(const MotorParams& p, int from, int to, double x);

// U2(x) - U1(x) = -x + 1/2 + epsilon
double delta_u(const MotorParams& p, double x);

// Effective field in the attached metastate {1,2}:
// F_*(x) = -x - f + 1/(1 + e^{beta dU(x)})
double effective_force_star(const MotorParams& p, double x);
double effective_force_star_slope(const MotorParams& p, double x);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double v) const { return lo < v && v < hi; }
};

// Region where d/dx F_* > 0 (computed at f=0; f only shifts the graph
// vertically, so the region does not depend on f). Empty iff beta <= 4.
std::optional<Interval> positive_slope_interval(const MotorParams& p);

// epsilon values for which 0 lies in the positive-slope interval.
std::optional<Interval> epsilon_window(double beta);

struct Root {
  double x = 0.0;
  bool stable = false;  // F_* changes sign + -> -
};

// All zeros of F_* on a bracketing scan, bisected to 1e-10 and classified
// by the sign change.
std::vector<Root> find_fstar_roots(const MotorParams& p);

// Maximal interval of external forces f for which F_* has three roots;
// empty when the slope region is empty.
std::optional<Interval> find_bistable_f(double beta, double epsilon, double scan_resolution = 1e-3);

// Full three-state PDMP over {0,1,2} with the motor fields and rates.
PdmpModel build_model(const MotorParams& p, double horizon);

// The attached/detached metastate split {0} | {1,2}.
MetastatePartition motor_partition();

struct DirectionalityReport {
  struct Row {
    double x0 = 0.0;
    std::size_t n_paths = 0;
    std::size_t terminal_left = 0;   // terminal x in (x_minus, x_mid)
    std::size_t terminal_right = 0;  // terminal x in (x_mid, x_plus)
    std::size_t terminal_outside = 0;
    double fraction_left() const { return double(terminal_left) / double(n_paths); }
    double fraction_right() const { return double(terminal_right) / double(n_paths); }
  };
  double x_minus = 0.0, x_mid = 0.0, x_plus = 0.0;
  std::vector<Row> rows;
};

// Simulates the two-metastate effective PDMP (states {0,*}) from each x0
// and reports where the paths end relative to the basins of F_*.
DirectionalityReport directionality_experiment(const MotorParams& p, const std::vector<double>& x0_list,
                                               std::size_t n_paths, double horizon,
                                               std::uint64_t seed);

}  // namespace pdmp::motor

#endif
