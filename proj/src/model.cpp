#include "pdmp/model.hpp"

#include <cmath>
#include <sstream>

#include "pdmp/motor.hpp"
#include "pdmp/rng.hpp"

namespace pdmp {

MetastatePartition MetastatePartition::make(std::vector<std::vector<int>> blocks, int n_states) {
  MetastatePartition p;
  p.blocks = std::move(blocks);
  p.block_of.assign(n_states, -1);
  if (p.blocks.empty()) throw BadParams("partition needs at least one block");
  for (int b = 0; b < p.n_blocks(); ++b) {
    if (p.blocks[b].empty()) throw BadParams("partition block is empty");
    for (int s : p.blocks[b]) {
      if (s < 0 || s >= n_states) throw BadParams("partition refers to unknown state");
      if (p.block_of[s] != -1) throw BadParams("partition blocks overlap");
      p.block_of[s] = b;
    }
  }
  for (int s = 0; s < n_states; ++s)
    if (p.block_of[s] == -1) throw BadParams("partition does not cover all states");
  return p;
}

double total_jump_rate(const PdmpModel& model, int sigma, std::span<const double> x, double t) {
  double total = 0.0;
  for (int to = 0; to < model.n_states(); ++to)
    if (to != sigma) total += model.rates.evaluate(sigma, to, x, t);
  return total;
}

Eigen::MatrixXd chemical_generator(const PdmpModel& model, std::span<const double> x, double t) {
  const int n = model.n_states();
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(n, n);
  for (int from = 0; from < n; ++from) {
    double outflow = 0.0;
    for (int to = 0; to < n; ++to) {
      if (to == from) continue;
      const double r = model.rates.evaluate(from, to, x, t);
      gen(from, to) = r;
      outflow += r;
    }
    gen(from, from) = -outflow;
  }
  return gen;
}

ProbeGrid ProbeGrid::box(const std::vector<double>& lo, const std::vector<double>& hi, int nx,
                         double t_max, int nt) {
  if (lo.size() != hi.size()) throw BadParams("probe box bounds have mismatched dimensions");
  if (nx < 1 || nt < 1) throw BadParams("probe grid needs at least one point per axis");
  ProbeGrid grid;
  const std::size_t d = lo.size();
  std::vector<int> idx(d, 0);
  for (;;) {
    std::vector<double> p(d);
    for (std::size_t k = 0; k < d; ++k)
      p[k] = nx == 1 ? lo[k] : lo[k] + (hi[k] - lo[k]) * idx[k] / double(nx - 1);
    grid.points.push_back(std::move(p));
    std::size_t k = 0;
    while (k < d && ++idx[k] == nx) idx[k++] = 0;
    if (k == d) break;
  }
  grid.times.resize(nt);
  for (int j = 0; j < nt; ++j) grid.times[j] = nt == 1 ? 0.0 : t_max * j / double(nt - 1);
  return grid;
}

bool irreducible(const Eigen::MatrixXd& generator, double tol) {
  const int n = static_cast<int>(generator.rows());
  if (n == 1) return true;
  // strong connectivity <=> node 0 reaches all nodes in G and in G-reversed
  auto reaches_all = [&](bool reversed) {
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (int v = 0; v < n; ++v) {
        if (v == u || seen[v]) continue;
        const double r = reversed ? generator(v, u) : generator(u, v);
        if (r > tol) {
          seen[v] = 1;
          ++count;
          stack.push_back(v);
        }
      }
    }
    return count == n;
  };
  return reaches_all(false) && reaches_all(true);
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << "checked on " << n_probes << " probes: ";
  if (passed()) {
    os << "all assumptions hold (sup rate " << sup_total_rate << ")";
  } else {
    os << "assumption " << failed_assumption.value_or("?") << " fails at t=" << witness_t
       << ", x=(";
    for (std::size_t i = 0; i < witness_x.size(); ++i)
      os << (i ? "," : "") << witness_x[i];
    os << ")";
    if (witness_block >= 0) os << ", block " << witness_block;
  }
  return os.str();
}

ValidationReport validate(const PdmpModel& model, const ProbeGrid& grid,
                          const MetastatePartition* partition) {
  ValidationReport rep;
  rep.n_probes = grid.n_probes();
  rep.a1_ok = rep.a2_ok = rep.a4_ok = true;
  rep.checked_partition = partition != nullptr;
  const int n = model.n_states();
  std::vector<double> fbuf(model.dim);

  auto record_failure = [&](const char* which, const std::vector<double>& x, double t, int block) {
    if (!rep.failed_assumption) {
      rep.failed_assumption = which;
      rep.witness_x = x;
      rep.witness_t = t;
      rep.witness_block = block;
    }
  };

  for (const auto& x : grid.points) {
    for (double t : grid.times) {
      Eigen::MatrixXd gen = chemical_generator(model, x, t);
      for (int s = 0; s < n; ++s) {
        const double g = -gen(s, s);
        if (!std::isfinite(g)) {
          rep.a1_ok = false;
          record_failure("A1", x, t, -1);
        }
        rep.sup_total_rate = std::max(rep.sup_total_rate, g);
      }
      if (!irreducible(gen)) {
        rep.a2_ok = false;
        record_failure("A2", x, t, -1);
      }
      double xnorm = 0.0;
      for (double xi : x) xnorm += xi * xi;
      xnorm = std::sqrt(xnorm);
      const double bound = model.force.kappa1 + model.force.kappa2 * xnorm;
      for (int s = 0; s < n; ++s) {
        model.force_at(s, x, t, fbuf);
        double fn = 0.0;
        for (double fi : fbuf) fn += fi * fi;
        fn = std::sqrt(fn);
        if (!(fn <= bound) || !std::isfinite(fn)) {
          rep.a4_ok = false;
          record_failure("A4", x, t, -1);
        }
      }
      if (partition) {
        for (int b = 0; b < partition->n_blocks(); ++b) {
          const auto& block = partition->blocks[b];
          const int m = static_cast<int>(block.size());
          if (m == 1) continue;
          Eigen::MatrixXd sub(m, m);
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) sub(i, j) = gen(block[i], block[j]);
          if (!irreducible(sub)) {
            rep.a2prime_ok = false;
            record_failure("A2'", x, t, b);
          }
        }
      }
    }
  }
  return rep;
}

namespace {

double get_param(const ModelParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_keys(const ModelParams& params, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw BadParams("unknown parameter '" + key + "'");
  }
}

PdmpModel make_two_state_linear(const ModelParams& params) {
  check_keys(params, {"a", "gamma0", "gamma1", "horizon"});
  const double a = get_param(params, "a", 1.0);
  const double g0 = get_param(params, "gamma0", 1.0);
  const double g1 = get_param(params, "gamma1", 1.0);
  const double horizon = get_param(params, "horizon", 2.0);
  if (!(g0 >= 0.0) || !(g1 >= 0.0)) throw BadParams("two_state_linear rates must be nonnegative");
  if (!(horizon > 0.0)) throw BadParams("horizon must be positive");

  PdmpModel model;
  model.states = ChemicalStateSpace::indexed(2);
  model.dim = 1;
  model.horizon = horizon;
  model.force.evaluate = [a](int sigma, std::span<const double> x, double, std::span<double> out) {
    out[0] = -x[0] + (sigma == 1 ? a : 0.0);
  };
  model.force.kappa1 = std::abs(a);
  model.force.kappa2 = 1.0;
  model.force.lipschitz_hint = 1.0;
  model.rates.evaluate = [g0, g1](int from, int, std::span<const double>, double) {
    return from == 0 ? g0 : g1;
  };
  return model;
}

PdmpModel make_random_ergodic(const ModelParams& params) {
  check_keys(params, {"seed", "n_states", "horizon"});
  const auto seed = static_cast<std::uint64_t>(get_param(params, "seed", 7.0));
  const int n = static_cast<int>(get_param(params, "n_states", 4.0));
  const double horizon = get_param(params, "horizon", 2.0);
  if (n < 2) throw BadParams("random_ergodic needs at least two states");
  if (!(horizon > 0.0)) throw BadParams("horizon must be positive");

  // Each rate is a positive quadratic a + c (x-m)^2; every pair gets a
  // channel, so the chain is irreducible everywhere.
  CounterRng rng(seed, 0);
  std::vector<double> base(n * n), curv(n * n), center(n * n), shift(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      base[i * n + j] = 0.2 + 0.8 * rng.uniform();
      curv[i * n + j] = 0.3 * rng.uniform();
      center[i * n + j] = 2.0 * rng.uniform() - 1.0;
    }
  double max_shift = 0.0;
  for (int i = 0; i < n; ++i) {
    shift[i] = 2.0 * rng.uniform() - 1.0;
    max_shift = std::max(max_shift, std::abs(shift[i]));
  }

  PdmpModel model;
  model.states = ChemicalStateSpace::indexed(n);
  model.dim = 1;
  model.horizon = horizon;
  model.force.evaluate = [shift](int sigma, std::span<const double> x, double,
                                 std::span<double> out) { out[0] = -x[0] + shift[sigma]; };
  model.force.kappa1 = max_shift;
  model.force.kappa2 = 1.0;
  model.force.lipschitz_hint = 1.0;
  model.rates.evaluate = [n, base, curv, center](int from, int to, std::span<const double> x,
                                                 double) {
    const int k = from * n + to;
    const double dx = x[0] - center[k];
    return base[k] + curv[k] * dx * dx;
  };
  return model;
}

}  // namespace

PdmpModel registry_get(const std::string& name, const ModelParams& params) {
  if (name == "two_state_linear") return make_two_state_linear(params);
  if (name == "random_ergodic") return make_random_ergodic(params);
  if (name == "motor3") {
    check_keys(params, {"beta", "epsilon", "f", "omega_slow", "omega_fast", "horizon"});
    motor::MotorParams p;
    p.beta = get_param(params, "beta", 8.0);
    p.epsilon = get_param(params, "epsilon", -0.5);
    p.f = get_param(params, "f", 0.4);
    p.omega_slow = get_param(params, "omega_slow", 1.0);
    p.omega_fast = get_param(params, "omega_fast", 1.0);
    p.check();
    const double horizon = get_param(params, "horizon", 2.0);
    if (!(horizon > 0.0)) throw BadParams("horizon must be positive");
    return motor::build_model(p, horizon);
  }
  throw UnknownFamily(name);
}

}  // namespace pdmp
