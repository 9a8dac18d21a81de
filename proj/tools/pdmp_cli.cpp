// Experiment runner: every subcommand reads a config file, runs one
// experiment kind and writes CSV/JSON artifacts plus a manifest that is
// sufficient to reproduce the run.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "pdmp/averaging.hpp"
#include "pdmp/coarse.hpp"
#include "pdmp/config.hpp"
#include "pdmp/io.hpp"
#include "pdmp/ldp.hpp"
#include "pdmp/model.hpp"
#include "pdmp/motor.hpp"
#include "pdmp/simulator.hpp"
#include "pdmp/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = std::thread::hardware_concurrency();
  std::string kind;
};

struct RunContext {
  pdmp::ConfigFile config;
  CliOptions cli;
  fs::path out;
  std::vector<std::string> artifacts;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  fs::path artifact(const std::string& name) {
    artifacts.push_back(name);
    return out / name;
  }
};

pdmp::ModelParams to_model_params(const std::map<std::string, std::string>& raw) {
  pdmp::ModelParams params;
  for (const auto& [key, value] : raw) {
    if (key == "family") continue;
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
      throw pdmp::ConfigError("[model] " + key + " is not a number: '" + value + "'");
    params[key] = v;
  }
  return params;
}

pdmp::PdmpModel load_model(pdmp::ConfigFile& cfg) {
  if (!cfg.has_section("model")) throw pdmp::ConfigError("config needs a [model] section");
  const std::string family = cfg.get_string("model", "family");
  return pdmp::registry_get(family, to_model_params(cfg.section("model")));
}

std::optional<pdmp::MetastatePartition> load_partition(pdmp::ConfigFile& cfg, int n_states) {
  if (!cfg.has_section("partition")) return std::nullopt;
  const std::string blocks_raw = cfg.get_string("partition", "blocks");
  cfg.check_consumed("partition");
  std::vector<std::vector<int>> blocks;
  std::stringstream ss(blocks_raw);
  std::string block;
  while (std::getline(ss, block, '|')) {
    std::vector<int> states;
    std::stringstream bs(block);
    int s;
    while (bs >> s) states.push_back(s);
    if (!states.empty()) blocks.push_back(states);
  }
  return pdmp::MetastatePartition::make(blocks, n_states);
}

pdmp::SimConfig load_sim_config(pdmp::ConfigFile& cfg, const CliOptions& cli,
                                const std::optional<pdmp::MetastatePartition>& partition) {
  pdmp::SimConfig sim;
  sim.lambda = cfg.get_double("sim", "lambda", 1.0);
  sim.seed = cfg.get_u64("sim", "seed", 0);
  sim.ode_rel_tol = cfg.get_double("sim", "ode_rel_tol", 1e-8);
  sim.ode_abs_tol = cfg.get_double("sim", "ode_abs_tol", 1e-10);
  sim.event_tol = cfg.get_double("sim", "event_tol", 1e-10);
  sim.max_jumps = static_cast<std::size_t>(cfg.get_int("sim", "max_jumps", 10'000'000));
  const std::string scaling = cfg.get_string("sim", "scaling", "uniform");
  if (scaling == "uniform") {
    sim.scaling = pdmp::EdgeScaling::uniform;
  } else if (scaling == "partition") {
    sim.scaling = pdmp::EdgeScaling::partition;
    if (!partition) throw pdmp::ConfigError("scaling = partition needs a [partition] section");
  } else {
    throw pdmp::ConfigError("[sim] scaling must be uniform or partition");
  }
  if (partition) sim.partition = *partition;
  const std::string record = cfg.get_string("sim", "record", "dense");
  if (record == "dense")
    sim.record = pdmp::RecordMode::dense;
  else if (record == "jumps_only")
    sim.record = pdmp::RecordMode::jumps_only;
  else
    throw pdmp::ConfigError("[sim] record must be dense or jumps_only");
  if (cli.seed) sim.seed = *cli.seed;  // flag overrides config
  cfg.check_consumed("sim");
  return sim;
}

std::vector<double> parse_list(const std::string& raw, const char* what) {
  std::vector<double> values;
  std::stringstream ss(raw);
  double v;
  while (ss >> v) values.push_back(v);
  if (values.empty()) throw pdmp::ConfigError(std::string("empty list for ") + what);
  return values;
}

std::vector<double> uniform_grid(double t0, double t1, double step) {
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / step));
  for (std::size_t k = 0; k <= n; ++k) grid.push_back(std::min(t1, t0 + step * k));
  if (grid.back() < t1) grid.push_back(t1);
  return grid;
}

json trajectory_summary(const pdmp::Trajectory& traj, std::optional<double> log_weight) {
  json j;
  j["n_jumps"] = traj.n_jumps();
  j["final_t"] = traj.horizon();
  j["final_x"] = traj.mech.nodes.back().y;
  j["final_sigma"] = traj.chem_states.back();
  j["seed"] = traj.seed_used;
  j["stream"] = traj.stream;
  if (log_weight) j["log_weight"] = *log_weight;
  return j;
}

void run_simulate(RunContext& ctx) {
  auto model = load_model(ctx.config);
  auto partition = load_partition(ctx.config, model.n_states());
  auto sim = load_sim_config(ctx.config, ctx.cli, partition);
  const double x0v = ctx.config.get_double("experiment", "x0", 0.0);
  const int sigma0 = static_cast<int>(ctx.config.get_int("experiment", "sigma0", 0));
  const double grid_step = ctx.config.get_double("experiment", "grid_step", 0.01);
  ctx.config.check_consumed("experiment");
  std::vector<double> x0(model.dim, x0v);

  auto traj = pdmp::simulate_path(model, sim, x0, sigma0);
  pdmp::io::write_trajectory_csv(ctx.artifact("trajectory.csv"), traj,
                                 uniform_grid(0.0, model.horizon, grid_step));
  pdmp::io::write_jump_table_csv(ctx.artifact("jumps.csv"), traj);
  std::ofstream(ctx.artifact("summary.json")) << trajectory_summary(traj, std::nullopt).dump(2)
                                              << "\n";
}

void run_lln(RunContext& ctx) {
  auto model = load_model(ctx.config);
  auto partition = load_partition(ctx.config, model.n_states());
  auto sim = load_sim_config(ctx.config, ctx.cli, partition);
  const double x0v = ctx.config.get_double("experiment", "x0", 0.0);
  const int sigma0 = static_cast<int>(ctx.config.get_int("experiment", "sigma0", 0));
  ctx.config.check_consumed("experiment");
  const auto lambdas = parse_list(ctx.config.get_string("lln", "lambdas"), "[lln] lambdas");
  const auto n_paths = static_cast<std::size_t>(ctx.config.get_int("lln", "n_paths", 100));
  ctx.config.check_consumed("lln");
  std::vector<double> x0(model.dim, x0v);

  // test function fixed to f = 1: the occupation functional becomes the
  // plain sojourn-time deviation
  auto report = pdmp::lln_report(model, x0, sigma0, lambdas, n_paths,
                                 [](double) { return 1.0; }, sim, ctx.cli.threads);

  std::vector<std::string> header{"lambda", "quantile", "sup_dev"};
  for (int s = 0; s < model.n_states(); ++s)
    header.push_back("occ_dev_sigma" + std::to_string(s));
  pdmp::io::CsvWriter csv(ctx.artifact("lln.csv"), header);
  for (const auto& row : report.per_lambda)
    for (double q : {0.25, 0.5, 0.75, 0.9}) {
      std::vector<double> cells{row.lambda, q, row.sup_dev_quantile(q)};
      for (int s = 0; s < model.n_states(); ++s) cells.push_back(row.occ_dev_quantile(s, q));
      csv.row(cells);
    }

  json j;
  for (const auto& row : report.per_lambda)
    j["median_sup_dev"][pdmp::io::format_double(row.lambda)] = row.sup_dev_quantile(0.5);
  std::ofstream(ctx.artifact("lln.json")) << j.dump(2) << "\n";
}

void run_ldp_rate(RunContext& ctx) {
  auto model = load_model(ctx.config);
  const std::string pair_file = ctx.config.get_string("ldp", "path_pair");
  ctx.config.check_consumed("ldp");
  auto pair = pdmp::io::read_path_pair_csv(pair_file, model.dim);
  pair.check_simplex(1e-6);

  pdmp::io::CsvWriter csv(ctx.artifact("rate_sweep.csv"), {"t", "j_value", "residual"});
  const int n = model.n_states();
  double total = 0.0;
  std::vector<double> xm(model.dim);
  for (std::size_t k = 0; k + 1 < pair.grid.size(); ++k) {
    const double tm = 0.5 * (pair.grid[k] + pair.grid[k + 1]);
    const double dt = pair.grid[k + 1] - pair.grid[k];
    for (int i = 0; i < model.dim; ++i) xm[i] = 0.5 * (pair.x[k][i] + pair.x[k + 1][i]);
    Eigen::VectorXd rho(n);
    for (int s = 0; s < n; ++s) rho(s) = std::max(0.0, pair.rho[s][k]);
    Eigen::MatrixXd rates = pdmp::chemical_generator(model, xm, tm);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) c(i, j) = rho(i) * rates(i, j);
    auto res = pdmp::edge_rate_function(c);
    const double residual = res.z ? pdmp::stationarity_residual(c, *res.z) : 0.0;
    csv.row(std::vector<double>{tm, res.value, residual});
    total += dt * res.value;
  }
  json j;
  j["path_rate_J"] = total;
  std::ofstream(ctx.artifact("rate.json")) << j.dump(2) << "\n";
}

void run_tilt(RunContext& ctx) {
  auto model = load_model(ctx.config);
  auto partition = load_partition(ctx.config, model.n_states());
  auto sim = load_sim_config(ctx.config, ctx.cli, partition);
  const double x0v = ctx.config.get_double("experiment", "x0", 0.0);
  const int sigma0 = static_cast<int>(ctx.config.get_int("experiment", "sigma0", 0));
  ctx.config.check_consumed("experiment");
  const auto v = parse_list(ctx.config.get_string("tilt", "v"), "[tilt] v");
  const auto n_paths = static_cast<std::size_t>(ctx.config.get_int("tilt", "n_paths", 1));
  ctx.config.check_consumed("tilt");
  if (static_cast<int>(v.size()) != model.n_states())
    throw pdmp::ConfigError("[tilt] v needs one value per chemical state");
  std::vector<double> x0(model.dim, x0v);

  pdmp::TiltSpec tilt;
  tilt.value = [v](int sigma, double) { return v[sigma]; };
  tilt.derivative = [](int, double) { return 0.0; };

  sim.record = pdmp::RecordMode::jumps_only;
  auto paths = pdmp::simulate_tilted_ensemble(model, sim, tilt, x0, sigma0, n_paths,
                                              ctx.cli.threads);

  pdmp::io::CsvWriter csv(ctx.artifact("weights.csv"),
                          {"path", "log_weight", "n_jumps", "sojourn_sigma0"});
  double mean_w = 0.0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    csv.row(std::vector<double>{static_cast<double>(i), paths[i].log_weight,
                                static_cast<double>(paths[i].trajectory.n_jumps()),
                                paths[i].trajectory.sojourn_time(sigma0)});
    mean_w += std::exp(paths[i].log_weight);
  }
  mean_w /= static_cast<double>(paths.size());

  json j = trajectory_summary(paths.front().trajectory, paths.front().log_weight);
  j["mean_weight"] = mean_w;
  j["n_paths"] = n_paths;
  std::ofstream(ctx.artifact("tilt.json")) << j.dump(2) << "\n";
}

void run_coarse(RunContext& ctx) {
  auto model = load_model(ctx.config);
  auto partition = load_partition(ctx.config, model.n_states());
  if (!partition) throw pdmp::ConfigError("coarse needs a [partition] section");
  auto sim = load_sim_config(ctx.config, ctx.cli, partition);
  const double x0v = ctx.config.get_double("experiment", "x0", 0.0);
  const int sigma0 = static_cast<int>(ctx.config.get_int("experiment", "sigma0", 0));
  ctx.config.check_consumed("experiment");
  const auto lambdas = parse_list(ctx.config.get_string("coarse", "lambdas"), "[coarse] lambdas");
  const auto n_paths = static_cast<std::size_t>(ctx.config.get_int("coarse", "n_paths", 500));
  ctx.config.check_consumed("coarse");
  std::vector<double> x0(model.dim, x0v);

  auto report = pdmp::coarse::convergence_report(model, *partition, lambdas, n_paths, x0, sigma0,
                                                 sim, ctx.cli.threads);

  std::vector<std::string> header{"lambda", "ks_T1", "ks_quadrature", "sup_dev_median"};
  for (std::size_t k = 1; k <= report.events.size(); ++k) {
    header.push_back("event" + std::to_string(k) + "_emp");
    header.push_back("event" + std::to_string(k) + "_eff");
  }
  pdmp::io::CsvWriter csv(ctx.artifact("coarse.csv"), header);
  for (const auto& row : report.per_lambda) {
    std::vector<double> cells{row.lambda, row.ks_first_jump, row.ks_first_jump_quadrature,
                              row.sup_dev_before_exit_median};
    for (std::size_t k = 0; k < report.events.size(); ++k) {
      cells.push_back(row.event_prob_empirical[k]);
      cells.push_back(row.event_prob_effective[k]);
    }
    csv.row(cells);
  }
}

void run_motor_phase(RunContext& ctx) {
  const auto betas = parse_list(
      ctx.config.get_string("motor", "betas", "3 4 5 6 7 8 9 10"), "[motor] betas");
  const auto epsilons =
      parse_list(ctx.config.get_string("motor", "epsilons", "-0.5"), "[motor] epsilons");
  const auto fs = parse_list(ctx.config.get_string("motor", "fs", "0.5"), "[motor] fs");
  const double profile_beta = ctx.config.get_double("motor", "profile_beta", 8.0);
  ctx.config.check_consumed("motor");

  pdmp::io::CsvWriter csv(
      ctx.artifact("phase.csv"),
      {"beta", "epsilon", "f", "n_roots", "x_minus", "x_mid", "x_plus"});
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (double beta : betas)
    for (double eps : epsilons)
      for (double f : fs) {
        pdmp::motor::MotorParams p;
        p.beta = beta;
        p.epsilon = eps;
        p.f = f;
        auto roots = pdmp::motor::find_fstar_roots(p);
        std::vector<double> cells{beta, eps, f, static_cast<double>(roots.size()),
                                  nan, nan, nan};
        if (roots.size() == 3) {
          cells[4] = roots[0].x;
          cells[5] = roots[1].x;
          cells[6] = roots[2].x;
        } else if (roots.size() == 1) {
          cells[5] = roots[0].x;
        }
        csv.row(cells);
      }

  // F_* profile for plotting
  pdmp::motor::MotorParams p;
  p.beta = profile_beta;
  p.epsilon = epsilons.front();
  p.f = fs.front();
  pdmp::io::CsvWriter profile(ctx.artifact("fstar_profile.csv"), {"x", "F_star"});
  for (double x = -2.0; x <= 3.0 + 1e-12; x += 0.005)
    profile.row(std::vector<double>{x, pdmp::motor::effective_force_star(p, x)});
}

void run_motor_run(RunContext& ctx) {
  pdmp::motor::MotorParams p;
  p.beta = ctx.config.get_double("motor", "beta", 8.0);
  p.epsilon = ctx.config.get_double("motor", "epsilon", -0.5);
  p.f = ctx.config.get_double("motor", "f", 0.5);
  p.omega_slow = ctx.config.get_double("motor", "omega_slow", 1.0);
  p.omega_fast = ctx.config.get_double("motor", "omega_fast", 1.0);
  const double horizon = ctx.config.get_double("motor", "horizon", 10.0);
  const auto n_paths = static_cast<std::size_t>(ctx.config.get_int("motor", "n_paths", 200));
  const auto x0_list =
      parse_list(ctx.config.get_string("motor", "x0_list", "-1.0 1.5"), "[motor] x0_list");
  std::uint64_t seed = ctx.config.get_u64("motor", "seed", 0);
  if (ctx.cli.seed) seed = *ctx.cli.seed;
  ctx.config.check_consumed("motor");

  auto report = pdmp::motor::directionality_experiment(p, x0_list, n_paths, horizon, seed);
  pdmp::io::CsvWriter csv(ctx.artifact("directionality.csv"),
                          {"x0", "n_paths", "fraction_left", "fraction_right"});
  for (const auto& row : report.rows)
    csv.row(std::vector<double>{row.x0, static_cast<double>(row.n_paths), row.fraction_left(),
                                row.fraction_right()});
  json j;
  j["x_minus"] = report.x_minus;
  j["x_mid"] = report.x_mid;
  j["x_plus"] = report.x_plus;
  std::ofstream(ctx.artifact("roots.json")) << j.dump(2) << "\n";
}

void write_manifest(RunContext& ctx, int exit_code, const std::string& error) {
  json manifest;
  manifest["kind"] = ctx.cli.kind;
  manifest["version"] = pdmp::kVersion;
  manifest["config_file"] = ctx.cli.config_path;
  {
    std::ifstream in(ctx.cli.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    manifest["config"] = ss.str();
  }
  if (ctx.cli.seed) manifest["seed_override"] = *ctx.cli.seed;
  manifest["threads"] = ctx.cli.threads;
  manifest["artifacts"] = ctx.artifacts;
  manifest["exit_code"] = exit_code;
  if (!error.empty()) manifest["error"] = error;
  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.started).count();
  std::ofstream(ctx.out / "manifest.json") << manifest.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PDMP experiment runner"};
  app.require_subcommand(1);

  CliOptions cli;
  const char* env_out = std::getenv("PDMP_OUT_DIR");
  cli.out_dir = env_out ? env_out : "out";
  if (cli.threads == 0) cli.threads = 1;

  std::map<std::string, std::function<void(RunContext&)>> runners{
      {"simulate", run_simulate},     {"lln", run_lln},
      {"ldp-rate", run_ldp_rate},     {"tilt", run_tilt},
      {"coarse", run_coarse},         {"motor-phase", run_motor_phase},
      {"motor-run", run_motor_run}};

  for (auto& [name, fn] : runners) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", cli.config_path, "experiment config file");
    sub->add_option("--out", cli.out_dir, "output directory (default $PDMP_OUT_DIR or ./out)");
    std::uint64_t seed_val = 0;
    sub->add_option("--seed", seed_val, "master seed (overrides the config)")
        ->each([&cli, &seed_val](const std::string&) { cli.seed = seed_val; });
    sub->add_option("--threads", cli.threads, "worker count (results are independent of it)");
    sub->callback([&cli, name = name] { cli.kind = name; });
  }

  CLI11_PARSE(app, argc, argv);

  RunContext ctx{pdmp::ConfigFile{}, cli, fs::path(cli.out_dir), {}, {}};
  std::error_code ec;
  fs::create_directories(ctx.out, ec);

  try {
    if (cli.kind != "motor-phase" && cli.kind != "motor-run" && cli.config_path.empty())
      throw pdmp::ConfigError("--config is required for this subcommand");
    if (!cli.config_path.empty()) ctx.config = pdmp::ConfigFile::parse_file(cli.config_path);
    runners.at(cli.kind)(ctx);
    ctx.config.check_all_consumed();
    write_manifest(ctx, 0, "");
    return 0;
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    err["kind"] = cli.kind;
    std::cerr << err.dump() << "\n";
    write_manifest(ctx, 1, e.what());
    return 1;
  }
}
