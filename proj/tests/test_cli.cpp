#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "hsl/io.hpp"
#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- helpers

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

// Runs the CLI binary through the shell, capturing stdout+stderr; returns
// the process exit code (or -1 if it did not exit normally).
struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_shell(const std::string& cmd_line, const fs::path& capture_dir) {
  fs::create_directories(capture_dir);
  const fs::path log = capture_dir / "cli_output.txt";
  const std::string cmd = cmd_line + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult r{-1, slurp(log)};
  if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
  return r;
}

RunResult run_cli(const std::string& args, const fs::path& capture_dir) {
  return run_shell(std::string(HSL_CLI_PATH) + " " + args, capture_dir);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("hsl_cli_test_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct EnvGuard {
  std::string key;
  explicit EnvGuard(const std::string& k, const std::string& v) : key(k) {
    ::setenv(k.c_str(), v.c_str(), 1);
  }
  ~EnvGuard() { ::unsetenv(key.c_str()); }
};

}  // namespace

// ------------------------------------------------------------ digests/CSV

TEST_CASE("sha256 known-answer vectors") {
  CHECK(hsl::sha256_hex(std::string{}) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hsl::sha256_hex(std::string("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hsl::sha256_hex(
            std::string("The quick brown fox jumps over the lazy dog")) ==
        "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
  // 56 bytes forces the two-block padding path.
  CHECK(hsl::sha256_hex(std::string(
            "abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256_file_hex matches in-memory digest and rejects bad paths") {
  const fs::path dir = fresh_dir("sha");
  const fs::path f = dir / "blob.bin";
  std::ofstream(f, std::ios::binary) << "hello\nworld\n";
  CHECK(hsl::sha256_file_hex(f.string()) ==
        hsl::sha256_hex(std::string("hello\nworld\n")));
  CHECK_THROWS_AS((void)hsl::sha256_file_hex((dir / "missing").string()),
                  std::exception);
}

TEST_CASE("csv_field applies RFC-4180 quoting exactly when needed") {
  CHECK(hsl::csv_field("plain") == "plain");
  CHECK(hsl::csv_field("") == "");
  CHECK(hsl::csv_field("a,b") == "\"a,b\"");
  CHECK(hsl::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(hsl::csv_field("line\nbreak") == "\"line\nbreak\"");
  CHECK(hsl::csv_field("cr\rhere") == "\"cr\rhere\"");
  CHECK(hsl::csv_join({"a", "b,c", "d"}) == "a,\"b,c\",d");
}

TEST_CASE("format_double round-trips and names non-finite values") {
  for (double v : {0.0, 1.0, -1.5, 3.141592653589793, 1e-300, 6.02214076e23,
                   0.1, 2.2250738585072014e-308}) {
    const std::string s = hsl::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(hsl::format_double(std::nan("")) == "nan");
  CHECK(hsl::format_double(HUGE_VAL) == "inf");
  CHECK(hsl::format_double(-HUGE_VAL) == "-inf");
}

// --------------------------------------------------------- config layering

TEST_CASE("parse_int_list and parse_double_list reject junk tokens") {
  CHECK(hsl::parse_int_list("8,16,32") == std::vector<int>{8, 16, 32});
  CHECK(hsl::parse_double_list("0.5,-1") == std::vector<double>{0.5, -1.0});
  CHECK_THROWS_AS((void)hsl::parse_int_list("8,x,32"), std::runtime_error);
  CHECK_THROWS_AS((void)hsl::parse_int_list("8.5"), std::runtime_error);
  CHECK_THROWS_AS((void)hsl::parse_int_list(""), std::runtime_error);
  CHECK_THROWS_AS((void)hsl::parse_double_list("1,,2"), std::runtime_error);
}

TEST_CASE("apply_config_json overrides fields and diagnoses bad input") {
  hsl::ExperimentConfig cfg = hsl::default_config();
  hsl::apply_config_json(cfg,
                         R"({"d": 3, "ell_list": [4, 6], "reps": 77,
                             "phi": {"kind": "hermite", "hermite": 3},
                             "tolerances": {"rate_window": 0.2}})",
                         "inline");
  CHECK(cfg.d == 3);
  CHECK(cfg.ell_list == std::vector<int>{4, 6});
  CHECK(cfg.reps == 77);
  CHECK(cfg.phi_kind == "hermite");
  CHECK(cfg.phi_hermite == 3);
  CHECK(cfg.tolerances.at("rate_window") == 0.2);

  SUBCASE("unknown key names the field") {
    hsl::ExperimentConfig c2 = hsl::default_config();
    CHECK_THROWS_WITH_AS(hsl::apply_config_json(c2, R"({"repz": 5})", "inline"),
                         doctest::Contains("repz"), std::runtime_error);
  }
  SUBCASE("wrong type names the field") {
    hsl::ExperimentConfig c2 = hsl::default_config();
    CHECK_THROWS_WITH_AS(
        hsl::apply_config_json(c2, R"({"reps": "many"})", "inline"),
        doctest::Contains("reps"), std::runtime_error);
  }
  SUBCASE("malformed document reports a parse diagnostic") {
    hsl::ExperimentConfig c2 = hsl::default_config();
    CHECK_THROWS_WITH_AS(hsl::apply_config_json(c2, "{\"d\": 2,,}", "inline"),
                         doctest::Contains("inline"), std::runtime_error);
  }
}

TEST_CASE("apply_env layers HSL_ variables over the current config") {
  hsl::ExperimentConfig cfg = hsl::default_config();
  {
    EnvGuard g1("HSL_REPS", "123");
    EnvGuard g2("HSL_ELL", "10,12");
    EnvGuard g3("HSL_PHI_T", "0.25");
    EnvGuard g4("HSL_SEED", "424242");
    hsl::apply_env(cfg);
  }
  CHECK(cfg.reps == 123);
  CHECK(cfg.ell_list == std::vector<int>{10, 12});
  CHECK(cfg.phi_t == 0.25);
  CHECK(cfg.seed == 424242u);
  // Guards removed the variables; a fresh application is a no-op.
  hsl::ExperimentConfig clean = hsl::default_config();
  hsl::apply_env(clean);
  CHECK(clean.reps == hsl::default_config().reps);
}

TEST_CASE("config_hash is canonical and ignores execution-only fields") {
  hsl::ExperimentConfig a = hsl::default_config();
  hsl::ExperimentConfig b = hsl::default_config();
  hsl::apply_config_json(a, R"({"d": 3, "reps": 50})", "inline");
  hsl::apply_config_json(b, R"({"reps": 50, "d": 3})", "inline");
  CHECK(hsl::config_hash(a) == hsl::config_hash(b));

  b.threads = 7;
  b.out_dir = "/somewhere/else";
  CHECK(hsl::config_hash(a) == hsl::config_hash(b));
  // ...but the full dump does carry them.
  CHECK(json::parse(hsl::config_to_json(b))["threads"] == 7);

  b.seed = a.seed + 1;
  CHECK(hsl::config_hash(a) != hsl::config_hash(b));
}

TEST_CASE("backend_choice maps the config string and rejects junk") {
  hsl::ExperimentConfig cfg = hsl::default_config();
  CHECK(hsl::backend_choice(cfg) == hsl::BackendChoice::Auto);
  cfg.backend = "synthesis";
  CHECK(hsl::backend_choice(cfg) == hsl::BackendChoice::Synthesis);
  cfg.backend = "cholesky";
  CHECK(hsl::backend_choice(cfg) == hsl::BackendChoice::Cholesky);
  cfg.backend = "magic";
  CHECK_THROWS_WITH_AS((void)hsl::backend_choice(cfg), doctest::Contains("magic"),
                       std::runtime_error);

  hsl::ExperimentConfig c2 = hsl::default_config();
  CHECK_THROWS_WITH_AS(hsl::apply_config_json(c2, R"({"backend": "magic"})", "inline"),
                       doctest::Contains("backend"), std::runtime_error);
}

TEST_CASE("make_chaos dispatches on phi.kind") {
  hsl::ExperimentConfig cfg = hsl::default_config();
  cfg.phi_kind = "exponential";
  cfg.phi_t = 0.5;
  CHECK(hsl::make_chaos(cfg).coeff(0) == doctest::Approx(std::exp(0.125)));

  cfg.phi_kind = "hermite";
  cfg.phi_hermite = 2;
  // Convention: coeff(q) = E[phi(Z) H_q(Z)], so phi = H_2 gives 2! = 2.
  CHECK(hsl::make_chaos(cfg).coeff(2) == 2.0);
  CHECK(hsl::make_chaos(cfg).coeff(1) == 0.0);

  cfg.phi_kind = "polynomial";
  cfg.phi_poly = {0.0, 1.0};  // identity: pure first chaos
  CHECK(hsl::make_chaos(cfg).coeff(1) == doctest::Approx(1.0));

  cfg.phi_kind = "sinusoid";
  CHECK_THROWS_WITH_AS((void)hsl::make_chaos(cfg), doctest::Contains("sinusoid"),
                       std::runtime_error);
}

TEST_CASE("record_to_json carries the manifest fields") {
  hsl::ResultRecord rec{"exp-1", "2026-01-02T03:04:05Z", "deadbeef",
                        "payload.csv", "cafe"};
  const json j = json::parse(hsl::record_to_json(rec));
  CHECK(j["experiment_id"] == "exp-1");
  CHECK(j["timestamp"] == "2026-01-02T03:04:05Z");
  CHECK(j["config_hash"] == "deadbeef");
  CHECK(j["payload_path"] == "payload.csv");
  CHECK(j["payload_sha256"] == "cafe");
}

// -------------------------------------------------------- binary smoke runs

TEST_CASE("cli: no subcommand and unknown flags exit nonzero") {
  const fs::path dir = fresh_dir("usage");
  CHECK(run_cli("", dir).exit_code != 0);
  CHECK(run_cli("frobnicate", dir).exit_code != 0);
  CHECK(run_cli("verify --only 99 --out " + (dir / "v").string(), dir)
            .exit_code == 2);
}

TEST_CASE("cli: config --print-defaults emits the canonical default JSON") {
  const fs::path dir = fresh_dir("defaults");
  const RunResult r = run_cli("config --print-defaults", dir);
  CHECK(r.exit_code == 0);
  const json j = json::parse(r.output);
  CHECK(j["d"] == 2);
  CHECK(j["reps"] == 1000);
  CHECK(j["phi"]["kind"] == "exponential");
  CHECK(j["phi"]["t"] == 0.5);
  CHECK(j["ell_list"] == json::array({8, 16, 32, 64}));
}

TEST_CASE("cli: moments writes the documented CSV with exact second moments") {
  const fs::path dir = fresh_dir("moments");
  const RunResult r = run_cli("moments --out " + dir.string() + " --ell 8", dir);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "moments.csv");
  CHECK(csv.rfind("d,ell,q,moment,asymptote,ratio\r\n", 0) == 0);
  // d=2, ell=8, q=2 row: the pair moment equals (surface measure)/(dimension).
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  bool found = false;
  while (std::getline(lines, line)) {
    if (line.rfind("2,8,2,", 0) == 0) {
      std::istringstream f(line.substr(6));
      double moment = 0;
      f >> moment;
      CHECK(moment ==
            doctest::Approx(4.0 * M_PI / 17.0).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
  // Manifest rows name sibling payloads by leaf, with correct digests.
  std::istringstream manifest(slurp(dir / "moments_manifest.jsonl"));
  int rows = 0;
  while (std::getline(manifest, line)) {
    const json rec = json::parse(line);
    const std::string leaf = rec["payload_path"].get<std::string>();
    CHECK(leaf.find('/') == std::string::npos);
    CHECK(hsl::sha256_file_hex((dir / leaf).string()) == rec["payload_sha256"]);
    ++rows;
  }
  CHECK(rows >= 1);
}

TEST_CASE("cli: simulate payloads are byte-identical for config+seed reruns") {
  const fs::path a = fresh_dir("sim_a");
  const fs::path b = fresh_dir("sim_b");
  const fs::path c = fresh_dir("sim_c");
  const std::string common = "simulate --ell 4 --reps 8 --seed 42 --out ";
  CHECK(run_cli(common + a.string(), a).exit_code == 0);
  CHECK(run_cli(common + b.string() + " --threads 2", b).exit_code == 0);
  CHECK(run_cli("simulate --ell 4 --reps 8 --seed 43 --out " + c.string(), c)
            .exit_code == 0);

  const std::string pa = slurp(a / "samples.jsonl");
  CHECK(pa == slurp(b / "samples.jsonl"));
  CHECK(pa != slurp(c / "samples.jsonl"));
  CHECK(slurp(a / "simulate_summary.json") == slurp(b / "simulate_summary.json"));
  CHECK(line_count(pa) == 8);

  const json first = json::parse(pa.substr(0, pa.find('\n')));
  CHECK(first["ell"] == 4);
  CHECK(first["replicate"] == 0);
  CHECK(first["seed"] == 42);
  CHECK(std::isfinite(first["X"].get<double>()));
  CHECK(std::isfinite(first["Xtilde"].get<double>()));
}

TEST_CASE("cli: environment overrides layer between file and flags") {
  const fs::path dir = fresh_dir("layers");
  const fs::path cfg_file = dir / "cfg.json";
  std::ofstream(cfg_file) << R"({"reps": 3, "ell_list": [4], "seed": 7})";

  // File alone: 3 replicates.
  const fs::path o1 = dir / "o1";
  CHECK(run_cli("simulate --config " + cfg_file.string() + " --out " +
                    o1.string(),
                dir)
            .exit_code == 0);
  CHECK(line_count(slurp(o1 / "samples.jsonl")) == 3);

  // Environment beats the file: 5 replicates.
  const fs::path o2 = dir / "o2";
  CHECK(run_shell("env HSL_REPS=5 " + std::string(HSL_CLI_PATH) +
                      " simulate --config " + cfg_file.string() + " --out " +
                      o2.string(),
                  dir)
            .exit_code == 0);
  CHECK(line_count(slurp(o2 / "samples.jsonl")) == 5);

  // Flag beats both: 7 replicates.
  const fs::path o3 = dir / "o3";
  CHECK(run_shell("env HSL_REPS=5 " + std::string(HSL_CLI_PATH) +
                      " simulate --config " + cfg_file.string() + " --reps 7" +
                      " --out " + o3.string(),
                  dir)
            .exit_code == 0);
  CHECK(line_count(slurp(o3 / "samples.jsonl")) == 7);
}

TEST_CASE("cli: forced cholesky backend samples the same law as synthesis") {
  const fs::path a = fresh_dir("bke_a");
  const fs::path b = fresh_dir("bke_b");
  const std::string common = " --ell 4 --reps 64 --seed 9 --out ";
  CHECK(run_shell("env HSL_BACKEND=cholesky " + std::string(HSL_CLI_PATH) +
                      " simulate" + common + a.string(),
                  a)
            .exit_code == 0);
  CHECK(run_cli("simulate" + common + b.string(), b).exit_code == 0);
  // Different factorizations map the normals differently, so samples differ...
  CHECK(slurp(a / "samples.jsonl") != slurp(b / "samples.jsonl"));
  // ...but both runs leave the analytic moments identical and both MC means
  // land within a few standard errors of them.
  const json sa = json::parse(slurp(a / "simulate_summary.json"));
  const json sb = json::parse(slurp(b / "simulate_summary.json"));
  CHECK(sa["per_ell"][0]["analytic_mean"] == sb["per_ell"][0]["analytic_mean"]);
  const double mean = sa["per_ell"][0]["analytic_mean"].get<double>();
  const double var = sa["per_ell"][0]["analytic_variance"].get<double>();
  const double se = std::sqrt(var / 64.0);
  CHECK(std::abs(sa["per_ell"][0]["mc_mean_X"].get<double>() - mean) <= 5 * se);
  CHECK(std::abs(sb["per_ell"][0]["mc_mean_X"].get<double>() - mean) <= 5 * se);
}

TEST_CASE("cli: malformed and invalid configs exit 2 naming the problem") {
  const fs::path dir = fresh_dir("badcfg");
  const fs::path bad = dir / "bad.json";
  std::ofstream(bad) << R"({"reps": "many"})";
  RunResult r = run_cli("simulate --config " + bad.string() + " --out " +
                            (dir / "o").string(),
                        dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("reps") != std::string::npos);

  const fs::path broken = dir / "broken.json";
  std::ofstream(broken) << "{\"d\": 2,";
  r = run_cli("simulate --config " + broken.string() + " --out " +
                  (dir / "o2").string(),
              dir);
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("broken.json") != std::string::npos);

  r = run_cli("simulate --config " + (dir / "ghost.json").string() + " --out " +
                  (dir / "o3").string(),
              dir);
  CHECK(r.exit_code == 2);
}

TEST_CASE("cli: verify --only runs the requested fast criteria") {
  const fs::path dir = fresh_dir("verify");
  const RunResult r =
      run_cli("verify --only 2 --out " + (dir / "v").string(), dir);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("reproducing-identity") != std::string::npos);
  CHECK(r.output.find("[PASS]") != std::string::npos);
  const json summary = json::parse(slurp(dir / "v" / "verify_summary.json"));
  CHECK(summary["results"].size() == 1);
  CHECK(summary["results"][0]["id"] == 2);
  CHECK(summary["results"][0]["pass"] == true);
}

TEST_CASE("cli: diagram exits by identity status and covers the n=1 slice") {
  const fs::path dir = fresh_dir("diagram");
  const RunResult r = run_cli("diagram --out " + dir.string(), dir);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "diagram.csv");
  CHECK(csv.rfind("n,q,kappa_count,identity_ok\r\n", 0) == 0);
  CHECK(csv.find("1,1,0,true") != std::string::npos);
  CHECK(csv.find("false") == std::string::npos);
}
