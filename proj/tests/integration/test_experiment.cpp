#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "layercode/cli/experiment.hpp"

using namespace layercode;
using namespace layercode::cli;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

CommandResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" LAYERCODE_CLI_PATH "' " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  for (auto& l : lines_of(text))
    if (!l.empty() && l[0] != '#') out.push_back(l);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string run_to_string(const ExperimentSpec& spec, int* code = nullptr) {
  std::ostringstream out;
  const int rc = run_experiment(spec, out);
  if (code) *code = rc;
  return out.str();
}

const std::string desk = " --k 20 --c 2500 ";

}  // namespace

TEST_CASE("config text parsing") {
  const auto kv = parse_config_text("# comment\n k = 100 \nomega=1.06 # trailing\n\nrates = 1, 2,3\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("k") == "100");
  CHECK(kv.at("omega") == "1.06");
  CHECK(kv.at("rates") == "1, 2,3");
  CHECK_THROWS_WITH_AS(parse_config_text("k = 1\nnot a pair\n"), "config line 2: expected 'key = value'",
                       ConfigError);
  CHECK_THROWS_AS(parse_config_text("= 3\n"), ConfigError);
  CHECK_THROWS_AS(load_config_file("/definitely/not/here.conf"), ConfigError);
}

TEST_CASE("spec settings") {
  ExperimentSpec spec;
  spec.set("rates", "1.5, 2.5");
  spec.set("lambda", "0.2");
  spec.set("intra-layer", "serial");
  spec.set("deadline", "inf");
  spec.set("omega_grid", "1,1.05");
  spec.set("with_payload", "yes");
  CHECK(spec.sim.rates == std::vector<double>{1.5, 2.5});
  CHECK(spec.sim.arrival_rate == 0.2);
  CHECK(spec.sim.intra_layer == IntraLayer::Serial);
  CHECK_FALSE(spec.sim.deadline.has_value());
  CHECK(spec.omega_grid == std::vector<double>{1.0, 1.05});
  CHECK(spec.sim.payload.has_value());
  CHECK_THROWS_AS(spec.set("unknown_key", "1"), ConfigError);
  CHECK_THROWS_AS(spec.set("k", "ten"), ConfigError);
  CHECK_THROWS_AS(spec.set("k", "-3"), ConfigError);
  CHECK_THROWS_AS(spec.set("format", "xml"), ConfigError);

  ExperimentSpec a, b;
  CHECK(a.config_hash() == b.config_hash());
  CHECK(a.config_hash().size() == 16);
  b.set("seed", "2");
  CHECK(a.config_hash() != b.config_hash());

  ExperimentSpec bad;
  bad.set("omega", "0.5");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK(parse_mode("sweep-omega") == Mode::SweepOmega);
  CHECK(to_string(Mode::VerifyCodec) == "verify-codec");
  CHECK_THROWS_AS(parse_mode("fly"), ConfigError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"cluster5.conf", "desk_scale.conf"}) {
    ExperimentSpec spec;
    for (const auto& [k, v] : load_config_file(std::string(LAYERCODE_CONFIG_DIR) + "/" + name)) spec.set(k, v);
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.sim.rates.size() == 5);
  }
}

TEST_CASE("simulate output") {
  ExperimentSpec spec;
  spec.sim.k = 20;
  spec.sim.task_complexity_unlayered = 2500;
  spec.sim.num_jobs = 50;
  const auto text = run_to_string(spec);
  const auto rows = data_lines(text);
  REQUIRE(rows.size() == 51);
  CHECK(rows[0] == "job_id,arrival_time,service_start,status,last_layer,D0,D1,D2");
  CHECK(rows[1].rfind("0,", 0) == 0);
  CHECK(lines_of(text)[0].rfind("# layercode v", 0) == 0);
  CHECK(text.find("config_hash=" + spec.config_hash()) != std::string::npos);

  SUBCASE("zero jobs is a header only") {
    spec.sim.num_jobs = 0;
    CHECK(data_lines(run_to_string(spec)) ==
          std::vector<std::string>{"job_id,arrival_time,service_start,status,last_layer,D0,D1,D2"});
  }
  SUBCASE("terminated jobs leave missing layers empty") {
    spec.sim.arrival_rate = 0.08;
    spec.sim.deadline = 8.0;
    spec.sim.num_jobs = 200;
    bool saw = false;
    for (const auto& row : data_lines(run_to_string(spec))) {
      if (row.find(",terminated,") != std::string::npos) {
        saw = true;
        CHECK(row.back() == ',');
      }
    }
    CHECK(saw);
  }
  SUBCASE("json") {
    spec.format = Format::Json;
    const auto doc = nlohmann::json::parse(run_to_string(spec));
    CHECK(doc["jobs"].size() == 50);
    CHECK(doc["provenance"]["config_hash"] == spec.config_hash());
    CHECK(doc["summary"].size() == 3);
  }
}

TEST_CASE("bounds prints the per-layer service bounds") {
  ExperimentSpec spec;
  spec.mode = Mode::Bounds;
  spec.cs2 = 0.2;
  const auto rows = data_lines(run_to_string(spec));
  REQUIRE(rows.size() == 4);
  CHECK(rows[1] == "0,0.250000,5.681818,9.692513,4.010695");
  CHECK(rows[2] == "1,0.750000,17.045455,21.056150,4.010695");
  CHECK(rows[3] == "2,1.000000,22.727273,26.737968,4.010695");
}

TEST_CASE("sweep outputs") {
  ExperimentSpec spec;
  spec.sim.k = 20;
  spec.sim.task_complexity_unlayered = 2500;
  spec.sim.num_jobs = 300;
  spec.omega_grid = {1.0, 1.05};
  spec.deadline_grid = {5, 20};
  spec.threads = 2;

  spec.mode = Mode::SweepOmega;
  auto rows = data_lines(run_to_string(spec));
  CHECK(rows[0] == "omega,scheme,layer,mean_delay,mean_compute,ts_bound,delay_bound,cs2");
  CHECK(rows.size() == 1 + 2 * 4);  // three layered rows and one unlayered row per Ω

  spec.mode = Mode::SweepDeadline;
  rows = data_lines(run_to_string(spec));
  CHECK(rows[0] == "deadline,scheme,layer,success_rate,terminated");
  CHECK(rows.size() == 1 + 2 * 4);

  // Thread count must not change results.
  const auto parallel = run_to_string(spec);
  spec.threads = 1;
  CHECK(data_lines(run_to_string(spec)) == data_lines(parallel));
}

TEST_CASE("verify-codec passes") {
  ExperimentSpec spec;
  spec.mode = Mode::VerifyCodec;
  spec.trials = 30;
  int code = -1;
  const auto rows = data_lines(run_to_string(spec, &code));
  CHECK(code == kExitOk);
  REQUIRE(rows.size() == 5);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].find(",30,0,pass") != std::string::npos);
}

TEST_CASE("cli binary") {
  const fs::path dir = fs::temp_directory_path() / "layercode_cli_test";
  fs::create_directories(dir);

  SUBCASE("zero jobs exits cleanly with a header") {
    const auto r = run_cli("simulate --jobs 0");
    CHECK(r.exit_code == 0);
    CHECK(data_lines(r.out) == std::vector<std::string>{"job_id,arrival_time,service_start,status,last_layer,D0,D1,D2"});
  }
  SUBCASE("exit codes") {
    CHECK(run_cli("simulate --no-such-flag").exit_code == 1);
    CHECK(run_cli("simulate --omega 0.5").exit_code == 1);
    CHECK(run_cli("simulate --set bogus=1").exit_code == 1);
    CHECK(run_cli("simulate --config /no/such/file.conf").exit_code == 1);
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("simulate --jobs 1 --out /no/such/dir/out.csv").exit_code == 2);
    CHECK(run_cli("--version").exit_code == 0);
  }
  SUBCASE("bounds") {
    const auto r = run_cli("bounds --cs2 0.2");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("\n0,0.250000,5.681818,") != std::string::npos);
    CHECK(r.out.find("\n1,0.750000,17.045455,") != std::string::npos);
    CHECK(r.out.find("\n2,1.000000,22.727273,") != std::string::npos);
  }
  SUBCASE("repeated runs are byte-identical") {
    const auto a = dir / "a.csv", b = dir / "b.csv";
    CHECK(run_cli("simulate" + desk + "--jobs 200 --seed 7 --out " + a.string()).exit_code == 0);
    CHECK(run_cli("simulate" + desk + "--jobs 200 --seed 7 --out " + b.string()).exit_code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(data_lines(slurp(a)).size() == 201);
  }
  SUBCASE("seed precedence") {
    const auto conf = dir / "seeded.conf";
    std::ofstream(conf) << "seed = 3\nk = 20\nc = 2500\njobs = 20\n";
    const auto unseeded = dir / "unseeded.conf";
    std::ofstream(unseeded) << "k = 20\nc = 2500\njobs = 20\n";
    const auto with = [&](const std::string& args, const std::string& env = "") {
      return data_lines(run_cli("simulate " + args, env).out);
    };
    const auto seed3 = with("--config " + conf.string());
    const auto seed5 = with("--config " + unseeded.string() + " --seed 5");
    CHECK(seed3 != seed5);
    // Env applies only when neither the flag nor the file sets a seed.
    CHECK(with("--config " + unseeded.string(), "LAYERCODE_SEED=5") == seed5);
    CHECK(with("--config " + conf.string(), "LAYERCODE_SEED=5") == seed3);
    CHECK(with("--config " + conf.string() + " --seed 5", "LAYERCODE_SEED=9") == seed5);
    // Flags override the file.
    const auto r = run_cli("simulate --config " + conf.string() + " --jobs 4");
    CHECK(data_lines(r.out).size() == 5);
    CHECK(r.out.find(" seed=3 ") != std::string::npos);
  }
  SUBCASE("json and payload flags") {
    const auto r = run_cli("simulate" + desk + "--jobs 5 --format json --with-payload --m 2");
    REQUIRE(r.exit_code == 0);
    const auto doc = nlohmann::json::parse(r.out);
    CHECK(doc["diagnostics"]["payload_failures"] == 0);
    CHECK(doc["diagnostics"]["payload_checks"] == 25);
  }
  SUBCASE("histogram sidecar") {
    const auto hist = dir / "hist.csv";
    CHECK(run_cli("simulate" + desk + "--jobs 100 --hist " + hist.string()).exit_code == 0);
    const auto rows = data_lines(slurp(hist));
    REQUIRE_FALSE(rows.empty());
    CHECK(rows[0] == "layer,bin_lo,bin_hi,count");
    CHECK(rows.size() == 1 + 3 * 40);
  }
  SUBCASE("verify-codec") {
    const auto r = run_cli("verify-codec --trials 10");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("fail\n") == std::string::npos);
  }
  fs::remove_all(dir);
}
