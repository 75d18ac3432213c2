#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wbdc/scenario.hpp"
#include "wbdc/sim.hpp"

namespace wbdc {

enum ExitCode : int { kExitOk = 0, kExitControl = 1, kExitUsage = 2 };

/// Trace CSV: t, q..., qdot..., tau..., fr..., delta..., residual per level...,
/// solve_ms. Column count is fixed per scenario; inactive contacts write 0 and
/// missing levels write nan.
void write_trace_csv(const Scenario& scenario, const Trace& trace, std::ostream& out);

struct BenchRow {
  std::string task_set;
  double mean_ms = 0.0;
  double sd_ms = 0.0;
  int iterations = 0;
};

/// Times controller cycles alone at the scenario's initial state, once per
/// task set (or the full task list when the scenario defines none).
std::vector<BenchRow> bench_scenario(const Scenario& scenario, int iterations);
void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out);

int cmd_run(const std::string& scenario_path, const std::string& out_path, std::ostream& log);
int cmd_bench(const std::string& scenario_path, int iterations, const std::string& out_path,
              std::ostream& log);

/// Full command line entry point.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace wbdc
