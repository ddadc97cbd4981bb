#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "sgflow/config.hpp"
#include "sgflow/fv_engine.hpp"
#include "sgflow/monte_carlo.hpp"

namespace sgflow::cli {

struct RunOptions {
  std::string kind;     ///< riemann1d | line-injection | five-spot | bench
  std::string out_dir;  ///< empty: no files written
  IniConfig config;
  bool paper_scale = false;
};

struct FieldSnapshot {
  double time = 0.0;
  std::vector<double> mean, sd;
};

struct ExperimentResult {
  fv::Grid grid;
  std::vector<FieldSnapshot> mw, mc;
  nlohmann::json manifest;
  std::vector<std::string> outputs;
  fv::SgField final_state;
};

/// Positions (cell boundaries) where the 1D mean profile jumps by more than
/// `jump_tol` between adjacent cells.
std::vector<double> detect_jumps(const std::vector<double>& mean, const fv::Grid& grid,
                                 double jump_tol);

ExperimentResult run_riemann1d(const RunOptions& opt);
ExperimentResult run_line_injection(const RunOptions& opt);
ExperimentResult run_five_spot(const RunOptions& opt);

struct BenchRow {
  int P = 0;
  std::string mode;  // "full" | "reduced"
  double wall_seconds = 0.0;
  std::uint64_t macc_count = 0;
  double deviation = 0.0;  // reduced-vs-full max-norm over the final state
};

struct BenchResult {
  std::vector<BenchRow> rows;
  nlohmann::json manifest;
  std::vector<std::string> outputs;
};

BenchResult run_bench(const RunOptions& opt);

/// Shared helpers used by the CLI and the acceptance suite.
kl::XiKind parse_xi_kind(const std::string& name);
transport::FluxMode parse_flux_mode(const std::string& name);
std::string format_time(double t);

}  // namespace sgflow::cli
