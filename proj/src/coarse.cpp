#include "pdmp/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "pdmp/averaging.hpp"

namespace pdmp::coarse {

Eigen::VectorXd block_quasistationary(const PdmpModel& model, const MetastatePartition& partition,
                                      int block, std::span<const double> x, double t) {
  const auto& states = partition.blocks.at(block);
  const int m = static_cast<int>(states.size());
  if (m == 1) return Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd gen(m, m);
  for (int i = 0; i < m; ++i) {
    double outflow = 0.0;
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      const double r = model.rates.evaluate(states[i], states[j], x, t);
      gen(i, j) = r;
      outflow += r;
    }
    gen(i, i) = -outflow;
  }
  try {
    return quasistationary(gen);
  } catch (const Reducible&) {
    throw Reducible("intra-block generator of block " + std::to_string(block) +
                    " is reducible");
  }
}

void effective_field(const PdmpModel& model, const MetastatePartition& partition, int block,
                     std::span<const double> x, double t, std::span<double> out) {
  const auto& states = partition.blocks.at(block);
  if (states.size() == 1) {
    model.force_at(states[0], x, t, out);
    return;
  }
  const Eigen::VectorXd mu = block_quasistationary(model, partition, block, x, t);
  std::fill(out.begin(), out.end(), 0.0);
  std::vector<double> f(model.dim);
  for (std::size_t k = 0; k < states.size(); ++k) {
    model.force_at(states[k], x, t, f);
    for (int i = 0; i < model.dim; ++i) out[i] += mu(static_cast<int>(k)) * f[i];
  }
}

double effective_rate(const PdmpModel& model, const MetastatePartition& partition, int i, int j,
                      std::span<const double> x, double t) {
  if (i == j) return 0.0;
  const Eigen::VectorXd mu = block_quasistationary(model, partition, i, x, t);
  const auto& from_states = partition.blocks.at(i);
  const auto& to_states = partition.blocks.at(j);
  double total = 0.0;
  for (std::size_t a = 0; a < from_states.size(); ++a)
    for (int sp : to_states)
      total += mu(static_cast<int>(a)) * model.rates.evaluate(from_states[a], sp, x, t);
  return total;
}

double metastate_hazard(const PdmpModel& effective_model, int block, std::span<const double> x,
                        double t) {
  return total_jump_rate(effective_model, block, x, t);
}

PdmpModel build_effective(const PdmpModel& model, const MetastatePartition& partition) {
  if (static_cast<int>(partition.block_of.size()) != model.n_states())
    throw BadParams("partition does not match the model's state space");
  auto base = std::make_shared<const PdmpModel>(model);
  auto part = std::make_shared<const MetastatePartition>(partition);

  PdmpModel effective;
  effective.states = ChemicalStateSpace::indexed(partition.n_blocks());
  effective.dim = model.dim;
  effective.horizon = model.horizon;
  // F_i is a convex combination of the F_sigma, so the growth bound carries over
  effective.force.kappa1 = model.force.kappa1;
  effective.force.kappa2 = model.force.kappa2;
  effective.force.lipschitz_hint = model.force.lipschitz_hint;
  effective.force.evaluate = [base, part](int block, std::span<const double> x, double t,
                                          std::span<double> out) {
    effective_field(*base, *part, block, x, t, out);
  };
  effective.rates.evaluate = [base, part](int i, int j, std::span<const double> x, double t) {
    return effective_rate(*base, *part, i, j, x, t);
  };
  return effective;
}

std::function<double(double)> first_jump_cdf(const PdmpModel& effective_model, int block_0,
                                             std::span<const double> x0, double t_max,
                                             const OdeOptions& opts) {
  const int dim = effective_model.dim;
  auto rhs = [&effective_model, block_0, dim](double t, std::span<const double> y,
                                              std::span<double> dy) {
    effective_model.force_at(block_0, y.first(dim), t, dy.first(dim));
    dy[dim] = total_jump_rate(effective_model, block_0, y.first(dim), t);
  };
  std::vector<double> y0(x0.begin(), x0.end());
  y0.push_back(0.0);
  auto path = std::make_shared<DensePath>(integrate_dense(rhs, 0.0, y0, t_max, opts));
  const std::size_t hazard_index = dim;
  return [path, hazard_index](double t) {
    return 1.0 - std::exp(-path->eval_component(t, hazard_index));
  };
}

double first_metastate_exit(const Trajectory& traj, const MetastatePartition& partition) {
  const int home = partition.block_of.at(traj.sigma0);
  for (std::size_t k = 0; k < traj.jump_times.size(); ++k)
    if (partition.block_of.at(traj.chem_states[k + 1]) != home) return traj.jump_times[k];
  return std::numeric_limits<double>::infinity();
}

double ks_distance_censored(std::vector<double> a, std::vector<double> b, double horizon) {
  auto clean = [horizon](std::vector<double>& v) {
    for (double& t : v)
      if (t > horizon) t = std::numeric_limits<double>::infinity();
    std::sort(v.begin(), v.end());
  };
  clean(a);
  clean(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double ks = 0.0;
  while (ia < a.size() || ib < b.size()) {
    const double ta = ia < a.size() ? a[ia] : std::numeric_limits<double>::infinity();
    const double tb = ib < b.size() ? b[ib] : std::numeric_limits<double>::infinity();
    const double t = std::min(ta, tb);
    if (std::isinf(t)) break;  // censored tails carry no CDF increments inside [0,horizon]
    while (ia < a.size() && a[ia] <= t) ++ia;
    while (ib < b.size() && b[ib] <= t) ++ib;
    ks = std::max(ks, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  return ks;
}

namespace {

double ks_sample_vs_cdf(std::vector<double> sample, const std::function<double(double)>& cdf,
                        double horizon) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double ks = 0.0;
  std::size_t i = 0;
  for (; i < sample.size() && sample[i] <= horizon; ++i) {
    const double f = cdf(sample[i]);
    ks = std::max(ks, std::abs((static_cast<double>(i) + 1.0) / n - f));
    ks = std::max(ks, std::abs(static_cast<double>(i) / n - f));
  }
  // censored tail: compare the total mass inside the window
  ks = std::max(ks, std::abs(static_cast<double>(i) / n - cdf(horizon)));
  return ks;
}

struct PathStats {
  double first_exit = std::numeric_limits<double>::infinity();
  double sup_dev_before_exit = 0.0;
  std::vector<double> exit_times;  // first few inter-metastate jumps
  std::vector<int> exit_blocks;
};

PathStats coarse_stats(const Trajectory& traj, const MetastatePartition& partition,
                       const DensePath& star, int max_events) {
  PathStats stats;
  int block = partition.block_of.at(traj.sigma0);
  for (std::size_t k = 0; k < traj.jump_times.size(); ++k) {
    const int nb = partition.block_of.at(traj.chem_states[k + 1]);
    if (nb != block) {
      stats.exit_times.push_back(traj.jump_times[k]);
      stats.exit_blocks.push_back(nb);
      block = nb;
      if (static_cast<int>(stats.exit_times.size()) >= max_events) break;
    }
  }
  if (!stats.exit_times.empty()) stats.first_exit = stats.exit_times.front();

  const double t_stop = std::min(stats.first_exit, traj.horizon());
  std::vector<double> xs(star.dim());
  for (const auto& node : traj.mech.nodes) {
    if (node.t > t_stop) break;
    star.eval(node.t, xs);
    double d2 = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      d2 += (node.y[i] - xs[i]) * (node.y[i] - xs[i]);
    stats.sup_dev_before_exit = std::max(stats.sup_dev_before_exit, std::sqrt(d2));
  }
  return stats;
}

bool hits_windows(const PathStats& stats, const std::vector<WindowEvent>& events) {
  if (stats.exit_times.size() < events.size()) return false;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const auto& ev = events[k];
    if (std::abs(stats.exit_times[k] - ev.t_center) > ev.half_width) return false;
    if (stats.exit_blocks[k] != ev.block) return false;
  }
  return true;
}

}  // namespace

ConvergenceReport convergence_report(const PdmpModel& model, const MetastatePartition& partition,
                                     const std::vector<double>& lambdas, std::size_t n_paths,
                                     std::span<const double> x0, int sigma0,
                                     const SimConfig& base_config, unsigned /*n_workers*/) {
  for (std::size_t i = 1; i < lambdas.size(); ++i)
    if (!(lambdas[i] > lambdas[i - 1])) throw BadParams("lambdas must be increasing");

  const double horizon = model.horizon;
  const int i0 = partition.block_of.at(sigma0);
  PdmpModel effective = build_effective(model, partition);
  const OdeOptions ode_opts{base_config.ode_rel_tol, base_config.ode_abs_tol};

  // reference path: effective ODE in the starting metastate
  auto star_rhs = [&](double t, std::span<const double> y, std::span<double> dy) {
    effective.force_at(i0, y, t, dy);
  };
  DensePath star = integrate_dense(star_rhs, 0.0, x0, horizon, ode_opts);

  // effective-model reference sample (exit times are its plain jump times)
  const int max_events = 3;
  MetastatePartition trivial =
      MetastatePartition::make([&] {
        std::vector<std::vector<int>> blocks;
        for (int b = 0; b < partition.n_blocks(); ++b) blocks.push_back({b});
        return blocks;
      }(), partition.n_blocks());

  SimConfig eff_config = base_config;
  eff_config.lambda = 1.0;
  eff_config.scaling = EdgeScaling::uniform;
  eff_config.record = RecordMode::jumps_only;

  std::vector<PathStats> eff_stats;
  eff_stats.reserve(n_paths);
  std::vector<double> eff_first;
  for (std::size_t i = 0; i < n_paths; ++i) {
    Trajectory traj =
        simulate_path(effective, eff_config, x0, i0, 0.0, (1ull << 40) + i);
    eff_stats.push_back(coarse_stats(traj, trivial, star, max_events));
    eff_first.push_back(eff_stats.back().first_exit);
  }

  ConvergenceReport report;

  // window events centered at the effective model's median exit times
  {
    std::vector<std::vector<double>> times(max_events);
    std::vector<std::vector<int>> blocks(max_events);
    for (const auto& s : eff_stats)
      for (std::size_t k = 0; k < s.exit_times.size(); ++k) {
        times[k].push_back(s.exit_times[k]);
        blocks[k].push_back(s.exit_blocks[k]);
      }
    double prev_center = 0.0;
    for (int k = 0; k < max_events; ++k) {
      if (times[k].size() < n_paths / 4) break;  // too few paths reach this event
      WindowEvent ev;
      ev.t_center = quantile(times[k], 0.5);
      std::vector<int> counts(partition.n_blocks(), 0);
      for (int b : blocks[k]) counts[b]++;
      ev.block = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      ev.half_width = 0.5 * std::max(1e-6, ev.t_center - prev_center);
      if (horizon - ev.t_center < ev.half_width) break;
      prev_center = ev.t_center;
      report.events.push_back(ev);
    }
  }

  auto event_probability = [&](const std::vector<PathStats>& stats) {
    std::vector<double> probs;
    for (std::size_t k = 1; k <= report.events.size(); ++k) {
      std::vector<WindowEvent> head(report.events.begin(), report.events.begin() + k);
      std::size_t hits = 0;
      for (const auto& s : stats)
        if (hits_windows(s, head)) ++hits;
      probs.push_back(static_cast<double>(hits) / static_cast<double>(stats.size()));
    }
    return probs;
  };
  const std::vector<double> eff_probs = event_probability(eff_stats);
  auto cdf = first_jump_cdf(effective, i0, x0, horizon, ode_opts);

  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    SimConfig config = base_config;
    config.lambda = lambdas[li];
    config.scaling = EdgeScaling::partition;
    config.partition = partition;
    config.record = RecordMode::jumps_only;

    std::vector<PathStats> stats;
    stats.reserve(n_paths);
    std::vector<double> first;
    std::vector<double> sup_devs;
    for (std::size_t i = 0; i < n_paths; ++i) {
      Trajectory traj =
          simulate_path(model, config, x0, sigma0, 0.0, (li + 1) * (1ull << 32) + i);
      stats.push_back(coarse_stats(traj, partition, star, max_events));
      first.push_back(stats.back().first_exit);
      sup_devs.push_back(stats.back().sup_dev_before_exit);
    }

    ConvergenceReport::PerLambda row;
    row.lambda = lambdas[li];
    row.ks_first_jump = ks_distance_censored(first, eff_first, horizon);
    row.ks_first_jump_quadrature = ks_sample_vs_cdf(eff_first, cdf, horizon);
    row.sup_dev_before_exit_median = quantile(sup_devs, 0.5);
    row.event_prob_empirical = event_probability(stats);
    row.event_prob_effective = eff_probs;
    report.per_lambda.push_back(std::move(row));
  }
  return report;
}

}  // namespace pdmp::coarse
