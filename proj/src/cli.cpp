#include "wbdc/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "wbdc/errors.hpp"

namespace wbdc {
namespace {

std::string sig3(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << v;
  return ss.str();
}

// I/O and parse problems map to 2, everything raised while controlling to 1.
int classify(const Error& e) {
  if (dynamic_cast<const ScenarioError*>(&e) || dynamic_cast<const ModelParseError*>(&e) ||
      dynamic_cast<const ModelTopologyError*>(&e))
    return kExitUsage;
  return kExitControl;
}

}  // namespace

void write_trace_csv(const Scenario& scenario, const Trace& trace, std::ostream& out) {
  const RobotModel& model = *scenario.model;
  std::size_t n_delta = 0, n_levels = 0;
  for (const auto& r : trace.records) {
    n_delta = std::max(n_delta, static_cast<std::size_t>(r.output.delta.size()));
    n_levels = std::max(n_levels, r.output.diagnostics.task_residuals.size());
  }

  out << "t";
  for (int i = 0; i < model.nq(); ++i) out << ",q" << i;
  for (int i = 0; i < model.dof(); ++i) out << ",qdot" << i;
  for (int i = 0; i < model.num_actuated(); ++i) out << ",tau" << i;
  std::vector<int> offsets;
  int n_force = 0;
  for (const auto& c : scenario.contacts) {
    offsets.push_back(n_force);
    for (int k = 0; k < c.spec.wrench_dim(); ++k) out << ",fr_" << c.spec.frame << "_" << k;
    n_force += c.spec.wrench_dim();
  }
  for (std::size_t i = 0; i < n_delta; ++i) out << ",delta" << i;
  for (std::size_t i = 0; i < n_levels; ++i) out << ",residual" << i + 1;
  out << ",solve_ms\n";

  out << std::setprecision(10);
  for (const auto& r : trace.records) {
    out << r.t;
    for (int i = 0; i < model.nq(); ++i) out << "," << r.state.q(i);
    for (int i = 0; i < model.dof(); ++i) out << "," << r.state.qdot(i);
    for (int i = 0; i < model.num_actuated(); ++i) out << "," << r.output.tau(i);
    Vector forces = Vector::Zero(n_force);
    for (std::size_t c = 0; c < r.contact_scripts.size(); ++c) {
      const auto s = static_cast<std::size_t>(r.contact_scripts[c]);
      forces.segment(offsets[s], scenario.contacts[s].spec.wrench_dim()) = r.output.reaction_forces[c];
    }
    for (int i = 0; i < n_force; ++i) out << "," << forces(i);
    for (std::size_t i = 0; i < n_delta; ++i)
      out << "," << (static_cast<Eigen::Index>(i) < r.output.delta.size() ? r.output.delta(static_cast<Eigen::Index>(i)) : 0.0);
    const auto& res = r.output.diagnostics.task_residuals;
    for (std::size_t i = 0; i < n_levels; ++i) {
      out << ",";
      if (i < res.size()) out << res[i];
      else out << "nan";
    }
    out << "," << r.output.diagnostics.solve_time_s * 1e3 << "\n";
  }
}

std::vector<BenchRow> bench_scenario(const Scenario& scenario_in, int iterations) {
  if (iterations < 100) throw ScenarioError("bench: at least 100 iterations are required");
  Scenario scenario = scenario_in;
  resolve_origins(scenario);
  const RobotModel& model = *scenario.model;
  const std::vector<ContactSpec> contacts = scripted_contacts(scenario, 0.0);

  std::vector<TaskSet> sets = scenario.task_sets;
  if (sets.empty()) {
    TaskSet all{"all", {}};
    for (const auto& t : scenario.tasks) all.tasks.push_back(t.spec.name);
    sets.push_back(std::move(all));
  }

  std::vector<BenchRow> rows;
  for (const auto& set : sets) {
    const std::vector<TaskSpec> tasks = scripted_tasks(scenario, 0.0, &set.tasks);
    WbdcController controller(model, scenario.config);
    for (int i = 0; i < 10; ++i)
      controller.step(scenario.initial, tasks, contacts, scenario.internals, scenario.weights);

    std::vector<double> ms(static_cast<std::size_t>(iterations));
    for (int i = 0; i < iterations; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      controller.step(scenario.initial, tasks, contacts, scenario.internals, scenario.weights);
      ms[static_cast<std::size_t>(i)] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
    double mean = 0.0;
    for (double v : ms) mean += v;
    mean /= iterations;
    double var = 0.0;
    for (double v : ms) var += (v - mean) * (v - mean);
    rows.push_back({set.name, mean, std::sqrt(var / std::max(1, iterations - 1)), iterations});
  }
  return rows;
}

void write_bench_csv(const std::vector<BenchRow>& rows, std::ostream& out) {
  out << "task_set,mean_ms,sd_ms,iterations\n";
  for (const auto& r : rows)
    out << r.task_set << "," << sig3(r.mean_ms) << "," << sig3(r.sd_ms) << "," << r.iterations << "\n";
}

int cmd_run(const std::string& scenario_path, const std::string& out_path, std::ostream& log) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::ofstream out(out_path);
  if (!out) {
    log << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  try {
    const Trace trace = run_scenario(scenario);
    write_trace_csv(scenario, trace, out);
  } catch (const SimulationAborted& e) {
    write_trace_csv(scenario, e.partial(), out);
    log << "error at t = " << e.time() << " s: " << e.what() << "\n";
    return kExitControl;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return classify(e);
  }
  if (!out) {
    log << "error: failed writing " << out_path << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

int cmd_bench(const std::string& scenario_path, int iterations, const std::string& out_path,
              std::ostream& log) {
  if (iterations < 100) {
    log << "error: --iters must be at least 100\n";
    return kExitUsage;
  }
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<BenchRow> rows;
  try {
    rows = bench_scenario(scenario, iterations);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return classify(e);
  }
  std::ofstream out(out_path);
  if (!out) {
    log << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  write_bench_csv(rows, out);
  for (const auto& r : rows)
    log << r.task_set << ": " << sig3(r.mean_ms) << " ms (sd " << sig3(r.sd_ms) << ")\n";
  return kExitOk;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Whole-body dynamic control: closed-loop runs and cycle benchmarks"};
  app.require_subcommand(1);
  unsigned long seed = 0;
  app.add_option("--seed", seed, "Seed for randomized fixtures");

  std::string scenario, out_path;
  int iters = 1000;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write a trace CSV");
  run->add_option("--scenario", scenario, "Scenario file")->required();
  run->add_option("--out", out_path, "Output CSV")->required();
  auto* bench = app.add_subcommand("bench", "Time controller cycles per task set");
  bench->add_option("--scenario", scenario, "Scenario file")->required();
  bench->add_option("--iters", iters, "Iterations per task set (>= 100)");
  bench->add_option("--out", out_path, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (run->parsed()) return cmd_run(scenario, out_path, err);
  return cmd_bench(scenario, iters, out_path, err);
}

}  // namespace wbdc
