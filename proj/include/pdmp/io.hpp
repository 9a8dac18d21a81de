#ifndef PDMP_IO_HPP
#define PDMP_IO_HPP

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pdmp/simulator.hpp"

namespace pdmp::io {

// 17 significant digits, '.' decimal point, locale-independent:
// round-trips every finite double.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(std::span<const double> values);
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t n_cols_;
};

// Columns t, x_1..x_d, sigma sampled on `grid`.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<double>& grid);

// Exact jump-event table: tau_k, sigma_before, sigma_after.
void write_jump_table_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace pdmp::io

#include "pdmp/ldp.hpp"

namespace pdmp::io {

// PathPair CSV: t, x_1..x_d, rho_0..rho_{n-1}.
void write_path_pair_csv(const std::filesystem::path& path, const PathPair& pair);
PathPair read_path_pair_csv(const std::filesystem::path& path, int dim);

}  // namespace pdmp::io

#endif
