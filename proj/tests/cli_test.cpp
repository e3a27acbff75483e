#include <doctest.h>

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "handoff/ap_registry.hpp"
#include "handoff/geo.hpp"
#include "handoff/sharing.hpp"

using handoff::ApRecord;
using handoff::GeoPoint;
using handoff::Registry;
using handoff::SharingServer;

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const std::string kBin = HANDOFF_SIM_BIN;

fs::path scenario_dir() { return fs::path(HANDOFF_SCENARIO_DIR); }

struct CliResult {
  int exit_code = -1;
  std::string out;
};

// runs through /bin/sh so env prefixes work; stderr folded into stdout
CliResult run_shell(const std::string& command) {
  CliResult res;
  FILE* p = popen((command + " 2>&1").c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof buf, p)) res.out.append(buf, n);
  int st = pclose(p);
  res.exit_code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return res;
}

CliResult run_cli(const std::string& args) { return run_shell("\"" + kBin + "\" " + args); }

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path write(const std::string& name, const std::string& text) const {
    auto p = path / name;
    std::ofstream(p) << text;
    return p;
  }
};

const char* kMiniConfig =
    "scenario:\n"
    "  duration_s: 600\n"
    "aps:\n"
    "  - {bssid: \"aa:bb:cc:00:00:01\", ssid: gate, lat_deg: 38.881, lon_deg: 121.53, "
    "range_m: 120}\n";

std::size_t count_lines(const fs::path& p) {
  std::ifstream is(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) ++n;
  return n;
}

ApRecord record(const std::string& bssid, const std::string& ssid, double lat, double lon) {
  ApRecord r;
  r.bssid = bssid;
  r.ssid = ssid;
  r.location = GeoPoint::from_degrees(lat, lon);
  r.range_m = 80.0;
  r.timestamp_s = 1.0;
  return r;
}

}  // namespace

TEST_CASE("validate reports the shipped scenario as ok") {
  auto r = run_cli("validate --config \"" + (scenario_dir() / "suburban.yaml").string() + "\"");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "ok: 3 aps, 5 schemes, 4 users, 4 thresholds\n");
}

TEST_CASE("validate rejects a broken config naming the field") {
  TempDir dir;
  auto bad = dir.write("bad.yaml",
                       "aps:\n"
                       "  - {bssid: \"aa:bb:cc:00:00:01\", ssid: x, lat_deg: 1.0, lon_deg: 2.0, "
                       "range_m: -5}\n");
  auto r = run_cli("validate --config \"" + bad.string() + "\"");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("range_m") != std::string::npos);
}

TEST_CASE("run emits a parseable report") {
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto r = run_cli("run --config \"" + cfg.string() +
                   "\" --scheme gprs-non-switching --user u2 --threshold-kbps 10");
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  CHECK(j["scheme"] == "gprs-non-switching");
  CHECK(j["user"] == "u2");
  CHECK(j["threshold_kbps"] == 10.0);
  CHECK(j["scan_count"] == 0);
  CHECK(j["total_j"].get<double>() > 0.0);
  CHECK(j["buckets"].is_object());
}

TEST_CASE("run --format csv prints a header and one row") {
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto r = run_cli("run --config \"" + cfg.string() + "\" --user u2 --format csv");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.rfind("scheme,user,threshold_kbps", 0) == 0);
  CHECK(r.out.find("\nagps-switching,u2,") != std::string::npos);
}

TEST_CASE("run --out writes run.json and appends to runs.csv") {
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto out = dir.path / "results";
  auto cmd = "run --config \"" + cfg.string() + "\" --user u1 --out \"" + out.string() + "\"";
  REQUIRE(run_cli(cmd).exit_code == 0);
  CHECK(fs::exists(out / "run.json"));
  CHECK(count_lines(out / "runs.csv") == 2);
  REQUIRE(run_cli(cmd).exit_code == 0);
  CHECK(count_lines(out / "runs.csv") == 3);
}

TEST_CASE("identical seeds give byte-identical output") {
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto base = "run --config \"" + cfg.string() + "\" --scheme agps-switching --user u3";
  auto a = run_cli(base + " --seed 7");
  auto b = run_cli(base + " --seed 7");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(json::parse(a.out)["seed"] == 7);
  auto c = run_cli(base + " --seed 8");
  CHECK(c.out != a.out);
}

TEST_CASE("the seed flag outranks the environment, which outranks the config") {
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto base = "\"" + kBin + "\" run --config \"" + cfg.string() + "\" --user u3";
  auto flag7 = run_shell(base + " --seed 7");
  auto env9 = run_shell("HANDOFF_SIM_SEED=9 " + base);
  auto both = run_shell("HANDOFF_SIM_SEED=9 " + base + " --seed 7");
  REQUIRE(flag7.exit_code == 0);
  REQUIRE(env9.exit_code == 0);
  CHECK(both.out == flag7.out);
  CHECK(json::parse(env9.out)["seed"] == 9);

  auto bad = run_shell("HANDOFF_SIM_SEED=ketchup " + base);
  CHECK(bad.exit_code == 2);
  CHECK(bad.out.find("HANDOFF_SIM_SEED") != std::string::npos);
}

TEST_CASE("grid runs the config's full cross product and writes both files") {
  TempDir dir;
  auto cfg = dir.write("grid.yaml", std::string(kMiniConfig) +
                                        "run:\n"
                                        "  schemes: [gprs-non-switching, wifi-non-switching]\n"
                                        "  users: [u1, u2]\n"
                                        "  thresholds_kbps: [10]\n");
  auto out = dir.path / "grid_out";
  auto r = run_cli("grid --config \"" + cfg.string() + "\" --out \"" + out.string() + "\"");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("4 cells") != std::string::npos);
  auto j = json::parse(std::ifstream(out / "grid.json"));
  CHECK(j["rows"].size() == 4);
  CHECK(j["summary"]["ratios"].size() == 2);
  CHECK(count_lines(out / "grid.csv") >= 5);
}

TEST_CASE("grid overrides narrow the cross product") {
  TempDir dir;
  auto cfg = dir.write("grid.yaml", std::string(kMiniConfig) +
                                        "run:\n"
                                        "  users: [u1, u2]\n"
                                        "  thresholds_kbps: [10, 20]\n");
  auto out = dir.path / "one_scheme";
  auto r = run_cli("grid --config \"" + cfg.string() + "\" --scheme agps-switching --out \"" +
                   out.string() + "\"");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("4 cells") != std::string::npos);
  auto j = json::parse(std::ifstream(out / "grid.json"));
  REQUIRE(j["rows"].size() == 4);
  for (const auto& row : j["rows"]) CHECK(row["scheme"] == "agps-switching");

  auto narrower = run_cli("grid --config \"" + cfg.string() +
                          "\" --scheme agps-switching --user u2 --threshold-kbps 20 --out \"" +
                          (dir.path / "single").string() + "\"");
  REQUIRE(narrower.exit_code == 0);
  CHECK(narrower.out.find("1 cells") != std::string::npos);
}

TEST_CASE("bad invocations exit with the config code") {
  CHECK(run_cli("run --config nope.yaml --bogus-flag 3").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("run --config /does/not/exist.yaml").exit_code == 2);
  TempDir dir;
  auto cfg = dir.write("mini.yaml", kMiniConfig);
  auto r = run_cli("run --config \"" + cfg.string() + "\" --scheme teleport");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("teleport") != std::string::npos);
}

TEST_CASE("help exits cleanly") {
  auto r = run_cli("--help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("run") != std::string::npos);
  CHECK(r.out.find("serve") != std::string::npos);
}

TEST_CASE("query with nothing listening reports a transport failure") {
  auto r = run_cli("query --endpoint 127.0.0.1:9 --lat-deg 0 --lon-deg 0");
  CHECK(r.exit_code == 4);
  CHECK(r.out.find("transport error") != std::string::npos);
}

TEST_CASE("query prints the service's nearest hits") {
  Registry reg(0.01);
  reg.insert(record("aa:bb:cc:00:00:21", "cli-a", 10.0, 20.0));
  reg.insert(record("aa:bb:cc:00:00:22", "cli-b", 10.01, 20.0));
  SharingServer srv(std::move(reg));
  srv.start(0);
  auto r = run_cli("query --endpoint 127.0.0.1:" + std::to_string(srv.port()) +
                   " --lat-deg 10.0 --lon-deg 20.0 --max-results 2");
  srv.stop();
  REQUIRE(r.exit_code == 0);
  auto j = json::parse(r.out);
  REQUIRE(j["results"].size() == 2);
  CHECK(j["results"][0]["bssid"] == "aa:bb:cc:00:00:21");
  CHECK(j["results"][0]["distance_m"].get<double>() < 1.0);
  CHECK(j["results"][1]["ssid"] == "cli-b");
}

TEST_CASE("serve announces its port, answers queries, and stops on SIGTERM") {
  int fds[2];
  REQUIRE(::pipe(fds) == 0);
  pid_t pid = ::fork();
  REQUIRE(pid >= 0);
  if (pid == 0) {
    ::dup2(fds[1], STDOUT_FILENO);
    ::close(fds[0]);
    ::close(fds[1]);
    std::string aplog = (scenario_dir() / "suburban.aplog").string();
    ::execl(kBin.c_str(), "handoff-sim", "serve", "--bind", "127.0.0.1:0", "--registry",
            aplog.c_str(), (char*)nullptr);
    ::_exit(127);
  }
  ::close(fds[1]);
  struct Reaper {
    pid_t pid;
    ~Reaper() {
      if (pid > 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, nullptr, 0);
      }
    }
  } reaper{pid};

  FILE* rf = ::fdopen(fds[0], "r");
  REQUIRE(rf != nullptr);
  char line[256] = {0};
  REQUIRE(std::fgets(line, sizeof line, rf) != nullptr);
  unsigned port = 0;
  REQUIRE(std::sscanf(line, "listening on 127.0.0.1:%u", &port) == 1);
  REQUIRE(port > 0);

  auto hits = handoff::client_nearest("127.0.0.1:" + std::to_string(port),
                                      GeoPoint::from_degrees(38.88, 121.622), 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].record.bssid == "aa:bb:cc:00:00:01");
  CHECK(hits[0].record.ssid == "campus-east");

  REQUIRE(::kill(pid, SIGTERM) == 0);
  int st = 0;
  REQUIRE(::waitpid(pid, &st, 0) == pid);
  reaper.pid = -1;
  CHECK(WIFEXITED(st));
  CHECK(WEXITSTATUS(st) == 0);
  std::fclose(rf);
}

TEST_CASE("serve refuses a non-loopback bind") {
  auto r = run_cli("serve --bind 0.0.0.0:4000");
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("loopback") != std::string::npos);
}
