#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "handoff/report.hpp"
#include "handoff/scenario_config.hpp"
#include "handoff/sharing.hpp"
#include "handoff/sim.hpp"

namespace fs = std::filesystem;
using namespace handoff;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRun = 3;
constexpr int kExitTransport = 4;

std::atomic<bool> g_stop{false};
void on_signal(int) { g_stop.store(true); }

struct Overrides {
  std::string scheme;
  std::string user;
  std::optional<double> threshold_kbps;
  std::optional<std::uint64_t> seed;
};

std::optional<std::uint64_t> seed_from_env() {
  const char* v = std::getenv("HANDOFF_SIM_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  unsigned long long parsed = std::strtoull(v, &end, 10);
  if (errno != 0 || !end || *end != '\0')
    throw ConfigError("HANDOFF_SIM_SEED: not an unsigned integer: " + std::string(v));
  return std::uint64_t(parsed);
}

// Precedence: --seed flag, then HANDOFF_SIM_SEED, then the config value.
void apply_seed(Scenario& sc, const Overrides& ov) {
  if (auto env = seed_from_env()) sc.seed = *env;
  if (ov.seed) sc.seed = *ov.seed;
}

// --scheme/--user/--threshold-kbps narrow the config's run lists to one entry.
void narrow_run_lists(ScenarioFile& file, const Overrides& ov) {
  if (!ov.scheme.empty()) {
    auto s = scheme_from_name(ov.scheme);
    if (!s) throw ConfigError("--scheme: unknown scheme \"" + ov.scheme + "\"");
    file.schemes = {*s};
  }
  if (!ov.user.empty()) {
    auto u = user_kind_from_name(ov.user);
    if (!u) throw ConfigError("--user: unknown user \"" + ov.user + "\"");
    file.users = {*u};
  }
  if (ov.threshold_kbps) {
    if (!(*ov.threshold_kbps > 0.0)) throw ConfigError("--threshold-kbps: must be > 0");
    file.thresholds = {Threshold{*ov.threshold_kbps}};
  }
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << content;
}

void append_csv_row(const fs::path& p, const std::string& row) {
  bool fresh = !fs::exists(p);
  std::ofstream os(p, std::ios::binary | std::ios::app);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  if (fresh) os << csv_header() << "\n";
  os << row << "\n";
}

int cmd_run(const std::string& config, const Overrides& ov, const std::string& out_dir,
            const std::string& format) {
  ScenarioFile file = load_scenario_file(config);
  apply_seed(file.scenario, ov);
  narrow_run_lists(file, ov);
  RunSpec spec{file.schemes.front(), file.users.front(), file.thresholds.front(), std::nullopt};

  SimReport rep = run(file.scenario, spec);

  bool want_json = format != "csv";
  bool want_csv = format != "json";
  if (want_json) std::cout << report_json(rep);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    if (want_json) write_file(fs::path(out_dir) / "run.json", report_json(rep));
    if (want_csv) append_csv_row(fs::path(out_dir) / "runs.csv", csv_row(rep));
  } else if (want_csv && !want_json) {
    std::cout << csv_header() << "\n" << csv_row(rep) << "\n";
  }
  return kExitOk;
}

int cmd_grid(const std::string& config, const Overrides& ov, const std::string& out_dir,
             const std::string& format, int parallel) {
  ScenarioFile file = load_scenario_file(config);
  apply_seed(file.scenario, ov);
  narrow_run_lists(file, ov);

  auto rows = compare(file.scenario, file.schemes, file.users, file.thresholds, parallel);
  GridOutput out = render_grid(rows, file.scenario);

  bool want_json = format != "csv";
  bool want_csv = format != "json";
  fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);
  if (want_json) write_file(dir / "grid.json", out.json);
  if (want_csv) write_file(dir / "grid.csv", out.csv);

  std::printf("%zu cells\n", rows.size());
  for (const auto& ck : out.summary.checks)
    std::printf("check %-24s %s  (%s)\n", ck.name.c_str(), ck.pass ? "pass" : "FAIL",
                ck.detail.c_str());
  std::size_t errored = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) ++errored;
  if (errored > 0) std::printf("%zu cells recorded errors (see grid output)\n", errored);
  return kExitOk;
}

int cmd_validate(const std::string& config) {
  ScenarioFile file = load_scenario_file(config);
  std::printf("ok: %zu aps, %zu schemes, %zu users, %zu thresholds\n", file.scenario.aps.size(),
              file.schemes.size(), file.users.size(), file.thresholds.size());
  return kExitOk;
}

int cmd_serve(const std::string& bind, const std::string& registry_path, double cell_size_deg) {
  auto colon = bind.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--bind must be host:port, got " + bind);
  std::string host = bind.substr(0, colon);
  if (host != "127.0.0.1" && host != "localhost")
    throw ConfigError("serve binds loopback only; use 127.0.0.1 or localhost");
  int port = 0;
  try {
    port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw ConfigError("--bind port is not a number: " + bind);
  }
  if (port < 0 || port > 65535) throw ConfigError("--bind port out of range");

  Registry reg(cell_size_deg);
  if (!registry_path.empty()) reg = Registry::load(registry_path, cell_size_deg);

  SharingServer server(std::move(reg));
  server.start(std::uint16_t(port));
  std::printf("listening on 127.0.0.1:%u\n", unsigned(server.port()));
  std::fflush(stdout);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return kExitOk;
}

int cmd_query(const std::string& endpoint, double lat_deg, double lon_deg, int max_results) {
  if (max_results < 0) throw ConfigError("--max-results: must be >= 0");
  auto hits =
      client_nearest(endpoint, GeoPoint::from_degrees(lat_deg, lon_deg), std::size_t(max_results));
  std::cout << render_nearest_reply(hits) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dual-radio handoff energy simulator"};
  app.require_subcommand(1);

  std::string config, out_dir, format = "both";
  Overrides ov;
  int parallel = 1;

  auto add_common = [&](CLI::App* sub, bool with_overrides) {
    sub->add_option("--config", config, "scenario YAML")->required();
    if (with_overrides) {
      sub->add_option("--scheme", ov.scheme, "override scheme");
      sub->add_option("--user", ov.user, "override user class");
      sub->add_option("--threshold-kbps", ov.threshold_kbps, "override threshold");
      sub->add_option("--seed", ov.seed, "override seed");
      sub->add_option("--out", out_dir, "output directory");
      sub->add_option("--format", format, "csv|json|both")
          ->check(CLI::IsMember({"csv", "json", "both"}));
    }
  };

  auto* run_cmd = app.add_subcommand("run", "execute one simulation");
  add_common(run_cmd, true);

  auto* grid_cmd = app.add_subcommand("grid", "execute the scheme x user x threshold grid");
  add_common(grid_cmd, true);
  grid_cmd->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario config");
  validate_cmd->add_option("--config", config, "scenario YAML")->required();

  std::string bind = "127.0.0.1:0", registry_path;
  double cell_size_deg = 0.01;
  auto* serve_cmd = app.add_subcommand("serve", "host a sharing service");
  serve_cmd->add_option("--bind", bind, "host:port (loopback only; port 0 = ephemeral)");
  serve_cmd->add_option("--registry", registry_path, "initial .aplog file");
  serve_cmd->add_option("--cell-size-deg", cell_size_deg, "index cell size");

  std::string endpoint;
  double lat_deg = 0.0, lon_deg = 0.0;
  int max_results = 1;
  auto* query_cmd = app.add_subcommand("query", "nearest-AP lookup against a service");
  query_cmd->add_option("--endpoint", endpoint, "host:port")->required();
  query_cmd->add_option("--lat-deg", lat_deg, "query latitude")->required();
  query_cmd->add_option("--lon-deg", lon_deg, "query longitude")->required();
  query_cmd->add_option("--max-results", max_results, "result count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) return cmd_run(config, ov, out_dir, format);
    if (grid_cmd->parsed()) return cmd_grid(config, ov, out_dir, format, parallel);
    if (validate_cmd->parsed()) return cmd_validate(config);
    if (serve_cmd->parsed()) return cmd_serve(bind, registry_path, cell_size_deg);
    if (query_cmd->parsed()) return cmd_query(endpoint, lat_deg, lon_deg, max_results);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return kExitTransport;
  } catch (const AplogError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRun;
  }
  return kExitOk;
}
