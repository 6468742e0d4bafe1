#include <doctest.h>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <unistd.h>

#include "qkdfs/cli.hpp"
#include "qkdfs/detector.hpp"

using namespace qkdfs;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("qkdfs_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_config(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << text;
  return p.string();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_lines(const std::string& text, int n) {
  std::size_t pos = 0;
  for (int i = 0; i < n; ++i) pos = text.find('\n', pos) + 1;
  return text.substr(0, pos);
}

/// Data rows of a CSV output as column -> value maps.
std::vector<std::map<std::string, std::string>> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);  // schema
  std::getline(in, line);
  std::vector<std::string> cols;
  std::stringstream hs(line);
  for (std::string c; std::getline(hs, c, ',');) cols.push_back(c);
  std::vector<std::map<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    std::map<std::string, std::string> row;
    std::stringstream ls(line);
    std::string cell;
    for (const auto& c : cols) {
      if (!std::getline(ls, cell, ',')) cell.clear();
      row[c] = cell;
    }
    rows.push_back(row);
  }
  return rows;
}

double num(const std::map<std::string, std::string>& row, const std::string& col) { return std::stod(row.at(col)); }

const std::string decoy_cfg = R"(# decoy reference setup
[channel]
loss_db = 25
misalignment_deg = 2
[detector]
eta_det = 0.7
dc_det = 1e-6
swap = true
[protocol]
n = 1e12
f_ec = 1.16
)";

const std::string qubit_cfg = R"([protocol]
source = qubit
n = 1e8
[channel]
loss_db = 0
[detector]
eta_det = 1
dc_det = 0
)";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = RunConfig::parse(
      "# leading comment\n"
      "[channel]\n"
      "  loss_db = 2.5e1   # trailing\n"
      "\n"
      "[epsilon]\n"
      "eps_pa = log2:-40\n"
      "eps_ev = 1E-10\n"
      "[detector]\n"
      "swap = true\n");
  CHECK(c.real("channel.loss_db") == 25.0);
  CHECK(c.epsilon("epsilon.eps_pa").log2() == -40.0);
  CHECK(c.epsilon("epsilon.eps_ev").value() == doctest::Approx(1e-10).epsilon(1e-12));
  CHECK(c.boolean("detector.swap"));
  CHECK(c.real("detector.eta_det") == 0.7);  // default
  CHECK(c.line_of("channel.loss_db") == 3);
  CHECK(c.integer("authsim.runs") == 10000);

  auto fails_at = [](const std::string& text, int line, const std::string& key) {
    try {
      RunConfig::parse(text);
    } catch (const ConfigError& e) {
      CHECK(e.line() == line);
      CHECK(e.key() == key);
      return;
    }
    FAIL("expected a ConfigError for: " << text);
  };
  fails_at("[channel]\nloss = 3\n", 2, "channel.loss");
  fails_at("[nowhere]\n", 1, "nowhere");
  fails_at("loss_db = 3\n", 1, "loss_db");
  fails_at("[channel]\nloss_db = 3\nloss_db = 4\n", 3, "channel.loss_db");
  fails_at("[channel]\n\nloss_db = three\n", 3, "channel.loss_db");
  fails_at("[detector]\nswap = yes\n", 2, "detector.swap");
  fails_at("[epsilon]\neps_pa = 2\n", 2, "epsilon.eps_pa");
  fails_at("[epsilon]\neps_pa = log2:1\n", 2, "epsilon.eps_pa");
  fails_at("[authsim]\nruns = 1.5\n", 2, "authsim.runs");
  fails_at("[channel\n", 1, "");
  fails_at("[channel]\njust text\n", 2, "");

  RunConfig r = RunConfig::parse("");
  CHECK_THROWS_AS(r.require({"protocol.n"}), ConfigError);
  CHECK_THROWS_AS(r.integer("postselect.n"), ConfigError);
  CHECK_THROWS_AS(r.set("channel.nope", "1"), ConfigError);
  r.set("postselect.n", "1e6");
  CHECK(r.integer("postselect.n") == 1000000);
}

TEST_CASE("sweep axes") {
  const SweepAxis lin = SweepAxis::parse("channel.loss_db=0:40:5");
  CHECK(lin.points() == std::vector<double>{0, 10, 20, 30, 40});
  const SweepAxis lg = SweepAxis::parse("simulate.t=1e-6:1e-3:4:log");
  const auto p = lg.points();
  CHECK(p[1] == doctest::Approx(1e-5));
  CHECK(p[3] == 1e-3);
  CHECK(SweepAxis::parse("protocol.n=5:9:1").points() == std::vector<double>{5});
  CHECK_THROWS_AS(SweepAxis::parse("channel.loss_db=0:40"), ConfigError);
  CHECK_THROWS_AS(SweepAxis::parse("channel.bogus=0:40:3"), ConfigError);
  CHECK_THROWS_AS(SweepAxis::parse("detector.swap=0:1:2"), ConfigError);
  CHECK_THROWS_AS(SweepAxis::parse("simulate.t=0:1:3:log"), ConfigError);
  CHECK_THROWS_AS(SweepAxis::parse("channel.loss_db=0:40:0"), ConfigError);
  CHECK_THROWS_AS(SweepAxis::parse("channel.loss_db=0:40:3:cubic"), ConfigError);
}

TEST_CASE("golden headers") {
  const std::string dc = write_config("decoy.cfg", decoy_cfg);
  const std::string qc = write_config("qubit.cfg", qubit_cfg);
  const std::string ps = write_config("ps.cfg", "[postselect]\nn = 1000\n");
  const std::string au = write_config("auth.cfg", "[authsim]\nruns = 20\n");
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
      {"keyrate_decoy", {"keyrate", "decoy", "--config", dc}},
      {"keyrate_qubit", {"keyrate", "qubit", "--config", qc}},
      {"delta", {"delta", "--config", dc}},
      {"decoy_bounds", {"decoy-bounds", "--config", dc}},
      {"postselect", {"postselect", "--config", ps}},
      {"simulate", {"simulate", "--config", qc}},
      {"authsim", {"authsim", "--config", au}},
      {"keyrate_decoy_sweep", {"keyrate", "decoy", "--config", dc, "--sweep", "channel.loss_db=0:10:2"}},
  };
  for (const auto& [golden, args] : cases) {
    const Run r = cli(args);
    REQUIRE_MESSAGE(r.code == 0, golden << ": " << r.err);
    CHECK_MESSAGE(first_lines(r.out, 2) == read_file(std::string(QKDFS_GOLDEN_DIR) + "/" + golden + ".header"),
                  golden);
  }
}

TEST_CASE("exit codes") {
  const std::string dc = write_config("decoy.cfg", decoy_cfg);
  Run r = cli({"keyrate", "decoy", "--config", write_config("bad.cfg", "[channel]\nloss_db = 25\nlos_db = 3\n")});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(r.err.find("channel.los_db") != std::string::npos);

  r = cli({"keyrate", "decoy", "--config", write_config("missing.cfg", "[channel]\nloss_db = 25\n")});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("protocol.n") != std::string::npos);

  CHECK(cli({"keyrate", "decoy", "--config", (scratch_dir() / "absent.cfg").string()}).code == exit_config);
  CHECK(cli({"keyrate"}).code == exit_config);
  CHECK(cli({"bogus"}).code == exit_config);
  CHECK(cli({"delta", "--frobnicate"}).code == exit_config);
  CHECK(cli({"delta", "--format", "xml"}).code == exit_config);
  CHECK(cli({"delta", "--sweep", "channel.loss_db=1:2"}).code == exit_config);
  CHECK(cli({"delta", "--out", (scratch_dir() / "no" / "such" / "dir.csv").string()}).code == exit_config);

  r = cli({"decoy-bounds", "--config", write_config("dev.cfg", decoy_cfg + "[decoy_bounds]\ndeviation = disabled\n")});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("line 13") != std::string::npos);

  CHECK(cli({"keyrate", "qubit", "--config", write_config("qd.cfg", qubit_cfg + "[epsilon]\neps_d = 1e-12\n")}).code ==
        exit_config);

  r = cli({"keyrate", "decoy", "--config", write_config("eta.cfg", decoy_cfg + "[intensities]\nmu2 = 2\n")});
  CHECK(r.code == exit_domain);
  CHECK(cli({"delta", "--config", write_config("eta2.cfg", "[detector]\neta_det = 1.5\n")}).code == exit_domain);
  CHECK(cli({"authsim", "--config", write_config("pa.cfg", "[authsim]\np_attack = 2\nruns = 3\n")}).code ==
        exit_domain);

  CHECK(cli({"--help"}).code == exit_ok);
  CHECK(cli({"delta", "--config", dc}).code == exit_ok);
}

TEST_CASE("identical config and seed give identical bytes") {
  const std::string qc = write_config("qubit.cfg", qubit_cfg + "[simulate]\ntrials = 8\n");
  const std::string au = write_config("auth.cfg", "[authsim]\nruns = 500\np_attack = 0.2\n");
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"simulate", "--config", qc, "--seed", "99"},
           {"simulate", "--config", qc, "--seed", "99", "--format", "json"},
           {"authsim", "--config", au, "--seed", "7"},
           {"authsim", "--config", au, "--seed", "7", "--format", "json"},
           {"keyrate", "decoy", "--config", write_config("decoy.cfg", decoy_cfg), "--sweep",
            "detector.delta_eta=0:0.3:7"}}) {
    const Run a = cli(args);
    const Run b = cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    std::vector<std::string> with_out = args;
    const std::string path = (scratch_dir() / "out.txt").string();
    with_out.insert(with_out.end(), {"--out", path});
    CHECK(cli(with_out).out.empty());
    CHECK(read_file(path) == a.out);
  }
  const Run s1 = cli({"simulate", "--config", qc, "--seed", "1"});
  const Run s2 = cli({"simulate", "--config", qc, "--seed", "2"});
  CHECK(s1.out != s2.out);
}

TEST_CASE("keyrate decoy sweeps") {
  const std::string dc = write_config("decoy.cfg", decoy_cfg);
  const Run r = cli({"keyrate", "decoy", "--config", dc, "--sweep", "channel.loss_db=0:40:17"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  REQUIRE(rows.size() == 17);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(num(rows[i], "key_rate") <= num(rows[i - 1], "key_rate"));
    CHECK(num(rows[i], "loss_db") == num(rows[i], "channel.loss_db"));
  }
  CHECK(num(rows.front(), "key_rate") > 0.0);

  const std::string mismatched =
      write_config("decoy5.cfg", decoy_cfg + "[detector]\n" "delta_eta = 0.05\n" "delta_dc = 0.05\n");
  // Sections may be reopened.
  const Run m = cli({"keyrate", "decoy", "--config", mismatched, "--sweep", "channel.loss_db=0:40:17"});
  REQUIRE(m.code == 0);
  const auto mrows = parse_csv(m.out);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(num(rows[i], "key_rate") >= num(mrows[i], "key_rate"));
    CHECK(num(mrows[i], "delta1") > 0.0);
  }

  const Run j = cli({"keyrate", "decoy", "--config", dc, "--format", "json"});
  REQUIRE(j.code == 0);
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["schema"] == "keyrate-decoy/1");
  const auto& res = doc["points"][0]["result"];
  CHECK(res["key_length"].get<std::int64_t>() > 0);
  CHECK(res.contains("photon_bounds"));
  CHECK(res["penalties"].size() > 0);
  CHECK(res["epsilon_log2"].contains("eps_PA"));
}

TEST_CASE("delta command") {
  Run r = cli({"delta"});
  REQUIRE(r.code == 0);
  auto rows = parse_csv(r.out);
  for (const char* c : {"delta1_noswap", "delta2_noswap", "delta1_swap", "delta2_swap"}) CHECK(num(rows[0], c) == 0.0);

  r = cli({"delta", "--sweep", "detector.delta_eta=0.01:0.4:12", "--config",
           write_config("dd.cfg", "[detector]\ndelta_dc = 0.2\n")});
  REQUIRE(r.code == 0);
  rows = parse_csv(r.out);
  REQUIRE(rows.size() == 12);
  for (const auto& row : rows) {
    CHECK(num(row, "delta2_swap") <= num(row, "delta2_noswap"));
    DetectorSpec d;
    d.delta_eta = num(row, "delta_eta");
    d.delta_dc = 0.2;
    CHECK(num(row, "delta1_noswap") == doctest::Approx(delta_metrics_noswap(d).delta1).epsilon(1e-11));
    d.swap = true;
    CHECK(num(row, "delta2_swap") == doctest::Approx(delta_metrics_swap(d).delta2).epsilon(1e-11));
  }
}

TEST_CASE("postselect command") {
  for (const auto& [preset, x] : std::vector<std::pair<std::string, std::string>>{{"qubit", "20"}, {"decoy", "3600"}}) {
    const Run r = cli({"postselect", "--config", write_config("p.cfg", "[postselect]\nn = 1e6\npreset = " + preset + "\n")});
    REQUIRE(r.code == 0);
    CHECK(parse_csv(r.out)[0].at("x") == x);
  }
  Run r = cli({"postselect", "--config", write_config("p1.cfg", "[postselect]\nn = 1e6\nx = 1\nkey_length = 500\n")});
  REQUIRE(r.code == 0);
  auto row = parse_csv(r.out)[0];
  CHECK(num(row, "dimension_penalty_bits") == 0.0);
  CHECK(row.at("feasible") == "true");

  r = cli({"postselect", "--config", write_config("p2.cfg", "[postselect]\npreset = decoy\n"), "--sweep",
           "postselect.n=1e3:1e12:10:log"});
  REQUIRE(r.code == 0);
  const auto rows = parse_csv(r.out);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(num(rows[i], "penalty_bits") > num(rows[i - 1], "penalty_bits"));

  r = cli({"postselect", "--config",
           write_config("p3.cfg", "[postselect]\nn = 1e6\npreset = decoy\neps_tilde_rule = given\n")});
  REQUIRE(r.code == 0);
  CHECK(parse_csv(r.out)[0].at("feasible") == "false");
}

TEST_CASE("simulate command") {
  const std::string qc = write_config("qubit.cfg", qubit_cfg);
  Run r = cli({"simulate", "--config", write_config("t0.cfg", qubit_cfg + "[simulate]\nmode = fixed\nt = 0\n")});
  REQUIRE(r.code == 0);
  CHECK(num(parse_csv(r.out)[0], "mean_rate") == 0.0);

  r = cli({"simulate", "--config", qc});
  REQUIRE(r.code == 0);
  const auto var = parse_csv(r.out)[0];
  r = cli({"simulate", "--config", write_config("fx.cfg", qubit_cfg + "[simulate]\nmode = fixed\n"), "--sweep",
           "simulate.t=1e-6:1e-3:10:log"});
  REQUIRE(r.code == 0);
  const auto fixed = parse_csv(r.out);
  REQUIRE(fixed.size() == 10);
  for (const auto& f : fixed) {
    const double se = std::hypot(num(var, "std_error"), num(f, "std_error"));
    CHECK(num(var, "mean_rate") + 3.0 * se >= num(f, "mean_rate"));
  }
}

TEST_CASE("authsim command") {
  Run r = cli({"authsim", "--config", write_config("h.cfg", "[authsim]\nscenario = honest\n")});
  REQUIRE(r.code == 0);
  auto row = parse_csv(r.out)[0];
  CHECK(row.at("honest_runs") == "1");
  CHECK(row.at("core_abort_runs") == "0");
  CHECK(row.at("both_abort_runs") == "0");

  for (const char* protocol : {"app", "del_app"}) {
    r = cli({"authsim", "--config",
             write_config("t.cfg", std::string("[authsim]\nscenario = tamper_core\nprotocol = ") + protocol + "\n")});
    REQUIRE(r.code == 0);
    row = parse_csv(r.out)[0];
    CHECK(row.at("core_abort_runs") == "1");
    CHECK(row.at("both_abort_runs") == "1");
    CHECK(row.at("both_abort_violations") == "0");
  }

  r = cli({"authsim", "--seed", "3"});
  REQUIRE(r.code == 0);
  row = parse_csv(r.out)[0];
  CHECK(row.at("runs") == "10000");
  CHECK(row.at("k_violations") == "0");
  CHECK(row.at("both_abort_violations") == "0");
  CHECK(row.at("honest_violations") == "0");

  r = cli({"authsim", "--config", write_config("j.cfg", "[authsim]\nruns = 50\ntrace_run = 4\n"), "--format", "json"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::vector<nlohmann::json> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(nlohmann::json::parse(l));
  REQUIRE(lines.size() >= 2);
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    for (const char* k : {"phase", "direction", "sender_index", "receiver_index", "payload_sent", "payload_received",
                          "t_sent", "t_received", "status"}) {
      CHECK(lines[i].contains(k));
    }
  }
  CHECK(lines.back()["schema"] == "authsim/1");
  CHECK(lines.back()["summary"]["runs"] == 50);
  CHECK(cli({"authsim", "--config", write_config("j2.cfg", "[authsim]\nruns = 5\ntrace_run = 5\n")}).code ==
        exit_domain);
}
