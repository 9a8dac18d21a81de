#include "pdmp/io.hpp"

#include <cstdio>
#include <cstdlib>

namespace pdmp::io {

std::string format_double(double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf, buf + len);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), n_cols_(header.size()) {
  if (!out_) throw ConfigError("cannot open output file " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

void CsvWriter::row(std::span<const double> values) {
  if (values.size() != n_cols_) throw ConfigError("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i)
    out_ << (i ? "," : "") << format_double(values[i]);
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw ConfigError("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<double>& grid) {
  std::vector<std::string> header{"t"};
  const std::size_t dim = traj.x0.size();
  for (std::size_t i = 1; i <= dim; ++i) header.push_back("x_" + std::to_string(i));
  header.push_back("sigma");
  CsvWriter csv(path, header);
  std::vector<double> x(dim);
  std::vector<std::string> cells(header.size());
  for (double t : grid) {
    traj.x_at(t, x);
    cells[0] = format_double(t);
    for (std::size_t i = 0; i < dim; ++i) cells[1 + i] = format_double(x[i]);
    cells[1 + dim] = std::to_string(traj.state_at(t));
    csv.row(cells);
  }
}

void write_jump_table_csv(const std::filesystem::path& path, const Trajectory& traj) {
  CsvWriter csv(path, {"tau", "sigma_before", "sigma_after"});
  std::vector<std::string> cells(3);
  for (std::size_t k = 0; k < traj.jump_times.size(); ++k) {
    cells[0] = format_double(traj.jump_times[k]);
    cells[1] = std::to_string(traj.chem_states[k]);
    cells[2] = std::to_string(traj.chem_states[k + 1]);
    csv.row(cells);
  }
}

void write_path_pair_csv(const std::filesystem::path& path, const PathPair& pair) {
  std::vector<std::string> header{"t"};
  const std::size_t dim = pair.x.empty() ? 0 : pair.x[0].size();
  for (std::size_t i = 1; i <= dim; ++i) header.push_back("x_" + std::to_string(i));
  for (std::size_t s = 0; s < pair.rho.size(); ++s) header.push_back("rho_" + std::to_string(s));
  CsvWriter csv(path, header);
  std::vector<double> row(header.size());
  for (std::size_t k = 0; k < pair.grid.size(); ++k) {
    row[0] = pair.grid[k];
    for (std::size_t i = 0; i < dim; ++i) row[1 + i] = pair.x[k][i];
    for (std::size_t s = 0; s < pair.rho.size(); ++s) row[1 + dim + s] = pair.rho[s][k];
    csv.row(row);
  }
}

PathPair read_path_pair_csv(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open path pair file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty path pair file " + path.string());
  std::size_t n_cols = 1;
  for (char ch : line)
    if (ch == ',') ++n_cols;
  if (n_cols < static_cast<std::size_t>(dim) + 2)
    throw ConfigError("path pair file has too few columns");
  const std::size_t n_states = n_cols - 1 - dim;

  PathPair pair;
  pair.rho.assign(n_states, {});
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto next = line.find(',', pos);
      const std::string cell =
          next == std::string::npos ? line.substr(pos) : line.substr(pos, next - pos);
      char* end = nullptr;
      vals.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str())
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": bad number");
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (vals.size() != n_cols)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    pair.grid.push_back(vals[0]);
    pair.x.emplace_back(vals.begin() + 1, vals.begin() + 1 + dim);
    for (std::size_t s = 0; s < n_states; ++s) pair.rho[s].push_back(vals[1 + dim + s]);
  }
  if (pair.grid.size() < 2) throw ConfigError("path pair file needs at least two rows");
  pair.x0 = pair.x.front();
  return pair;
}

}  // namespace pdmp::io
