// orgscada: scenario runner and live node.
#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include "orgscada/gateway/live_node.hpp"
#include "orgscada/harness/runner.hpp"

using namespace orgscada;

namespace {

int emit(const RunResult& r, ReportFormat fmt, const std::string& events_out) {
  std::cout << render_table(r.report, fmt);
  if (!events_out.empty()) {
    std::ofstream f(events_out);
    f << events_to_json(r.events).dump(2) << "\n";
  }
  for (const auto& v : r.violations) std::cerr << "violation: " << v << "\n";
  for (const auto& a : r.anomalies) std::cerr << "anomaly: " << a << "\n";
  return r.violations.empty() ? 0 : 2;
}

volatile std::sig_atomic_t g_stop = 0;

int serve(const std::string& dir, const std::string& listen, const std::string& http_listen) {
  OrganizationConfig cfg = load_config_dir(dir);
  if (!listen.empty()) cfg.listen_address = listen;
  if (!http_listen.empty()) cfg.http_listen = http_listen;
  LiveNode node(cfg);
  node.start();
  std::cerr << cfg.org_name << ": peers on " << node.tcp_port();
  if (node.http_port() != 0) std::cerr << ", http on " << node.http_port();
  std::cerr << "\n";
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  node.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"orgscada"};
  app.require_subcommand(1);

  std::string scenario_arg, format = "text", events_out;
  std::optional<std::uint64_t> seed;
  auto* run_cmd = app.add_subcommand("run", "run a scenario on the simulated network");
  run_cmd->add_option("--scenario", scenario_arg, "scenario file or builtin name")->required();
  run_cmd->add_option("--format", format, "text|csv|json");
  run_cmd->add_option("--seed", seed, "plant seed");
  run_cmd->add_option("--events", events_out, "write the merged event log (JSON) here");

  auto* list_cmd = app.add_subcommand("list-scenarios", "list builtin scenarios");

  auto* fig_cmd = app.add_subcommand("fig11", "replay the three-org overlap evolution");
  fig_cmd->add_option("--format", format, "text|csv|json");
  fig_cmd->add_option("--events", events_out, "write the merged event log (JSON) here");

  std::string config_dir, listen, http_listen;
  auto* serve_cmd = app.add_subcommand("serve", "run one organization on the wall clock");
  serve_cmd->add_option("--config", config_dir, "directory with processes.xml and acquaintances.xml")->required();
  serve_cmd->add_option("--listen", listen, "peer listener host:port (overrides the config)");
  serve_cmd->add_option("--http-listen", http_listen, "gateway host:port (overrides the config)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_cmd->parsed()) {
      for (const auto& n : builtin_scenarios()) std::cout << n << "\n";
      return 0;
    }
    if (serve_cmd->parsed()) return serve(config_dir, listen, http_listen);
    const ReportFormat fmt = report_format_from_string(format);
    Scenario s;
    if (fig_cmd->parsed()) {
      s = fig11_scenario(seed.value_or(1));
    } else if (auto b = builtin_scenario(scenario_arg, seed.value_or(1))) {
      s = std::move(*b);
    } else {
      s = load_scenario(scenario_arg);
      if (seed) apply_seed(s, *seed);
    }
    return emit(run(s), fmt, events_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
