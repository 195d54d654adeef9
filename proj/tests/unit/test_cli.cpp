#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace levyheat;

namespace {

const fs::path kSource = LEVYHEAT_SOURCE_DIR;

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / "levyheat_test_cli";
  fs::create_directories(d);
  return d;
}

std::string model(const char* name) { return (kSource / "models" / (std::string(name) + ".json")).string(); }

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::string golden(const std::string& kind) { return first_line(slurp(kSource / "tests" / "golden" / (kind + ".csv"))); }

}  // namespace

TEST_CASE("csv schemas match the golden headers") {
  for (const auto& kind : cli::csv_kinds()) {
    INFO(kind);
    CHECK(join(cli::csv_header(kind)) == golden(kind));
  }
  CHECK(cli::csv_kinds().size() == 15);
}

TEST_CASE("written CSVs carry the golden headers") {
  const fs::path d = scratch() / "headers";
  const std::string cauchy = model("cauchy"), gauss = model("gaussian");
  struct Case {
    std::string kind;
    std::vector<std::string> args;
  };
  const std::vector<Case> cases{
      {"phi", {"phi", "--model", cauchy}},
      {"density", {"density", "--model", cauchy}},
      {"simulate.survival", {"simulate", "survival", "--model", gauss, "--budget", "1000", "--dt", "1e-2"}},
      {"simulate.exits", {"simulate", "exits", "--model", cauchy, "--budget", "50"}},
      {"simulate.dirichlet", {"simulate", "dirichlet", "--model", cauchy, "--budget", "300"}},
      {"simulate.tail", {"simulate", "tail", "--model", cauchy, "--budget", "400"}},
      {"simulate.vanishing", {"simulate", "vanishing", "--model", cauchy, "--budget", "1000"}},
      {"simulate.strip", {"simulate", "strip", "--model", gauss, "--budget", "200", "--dt", "1e-2"}},
      {"verify.sandwich", {"verify", "upper", "--model", cauchy, "--budget", "300"}},
      {"verify.survival", {"verify", "survival", "--model", cauchy, "--budget", "1000"}},
      {"verify.interior", {"verify", "interior", "--model", cauchy, "--budget", "300"}},
      {"verify.smalltime", {"verify", "smalltime", "--model", cauchy, "--budget", "300"}},
      {"verify.tail", {"verify", "tail", "--model", cauchy, "--budget", "400"}},
      {"verify.vanishing", {"verify", "vanishing", "--model", cauchy, "--budget", "1000"}},
      {"verify.hkc", {"verify", "hkc", "--model", cauchy}},
  };
  for (auto c : cases) {
    INFO(c.kind);
    const fs::path out = d / (c.kind + ".csv");
    c.args.push_back("--out");
    c.args.push_back(out.string());
    const Run r = run(c.args);
    INFO(r.err);
    CHECK((r.code == 0 || r.code == 1));
    CHECK(first_line(slurp(out)) == golden(c.kind));
    CHECK(fs::exists(d / (c.kind + ".manifest.json")));
  }
}

TEST_CASE("phi of the Cauchy model is the identity") {
  const Run r = run({"phi", "--model", model("cauchy")});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    double rr, phi, err;
    char c1, c2;
    std::istringstream ls(line);
    ls >> rr >> c1 >> phi >> c2 >> err;
    CHECK(phi == doctest::Approx(rr).epsilon(1e-12));
    CHECK(err <= 1e-10);
    ++rows;
  }
  CHECK(rows > 100);
}

TEST_CASE("model validate") {
  const Run ok = run({"model", "validate", model("cauchy")});
  CHECK(ok.code == 0);
  const json rep = json::parse(ok.out);
  CHECK(rep["all_pass"] == true);
  CHECK(rep["entries"].size() > 0);

  const fs::path bad = scratch() / "bad_model.json";
  std::ofstream(bad) << R"({"format": "levyheat-model/1", "name": "x", "dim": 1,
    "phi1": {"profile": "power", "params": {"alpha": 1}}, "psi1": {"beta": "many"}})";
  const Run r = run({"model", "validate", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("psi1.beta") != std::string::npos);

  const fs::path broken = scratch() / "broken_model.json";
  std::ofstream(broken) << "{\n  \"dim\": 1,\n  oops\n}";
  const Run b = run({"model", "validate", broken.string()});
  CHECK(b.code == 2);
  CHECK(b.err.find("line 3") != std::string::npos);
}

TEST_CASE("every shipped model loads and validates") {
  int n = 0;
  for (const auto& e : fs::directory_iterator(kSource / "models")) {
    INFO(e.path());
    const Run r = run({"model", "validate", e.path().string()});
    CHECK(r.code == 0);
    ++n;
  }
  CHECK(n >= 10);
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"phi"}).code == 2);  // no model
  CHECK(run({"phi", "--model", "/nonexistent.json"}).code == 2);
  CHECK(run({"simulate", "survival", "--model", model("cauchy"), "--budget", "lots"}).code == 2);
  CHECK(run({"simulate", "survival", "--model", model("cauchy"), "--scheme", "magic"}).code == 2);
  // HKC is defined for isotropic models only.
  CHECK(run({"verify", "hkc", "--model", model("aniso_gauss")}).code == 2);
  const fs::path g = scratch() / "grid_bad.json";
  std::ofstream(g) << R"({"t": [1, -2]})";
  const Run r = run({"density", "--model", model("cauchy"), "--grid", g.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("field t[1]") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("violations exit with 1") {
  const fs::path g = scratch() / "grid_hkc.json";
  std::ofstream(g) << R"({"t": [0.1, 1, 10], "r": [0.1, 1, 10]})";
  const Run ok = run({"verify", "hkc", "--model", model("cauchy"), "--grid", g.string()});
  CHECK(ok.code == 0);
  // A cap below any fitted constant.
  const Run tight = run({"verify", "tail", "--model", model("cauchy"), "--budget", "4000", "--cap", "1e-3"});
  CHECK(tight.code == 1);
  CHECK(json::parse(tight.out)["pass"] == false);
}

TEST_CASE("manifest and replay") {
  const fs::path d = scratch() / "replay";
  fs::remove_all(d);
  const fs::path g = d / "grid.json";
  fs::create_directories(d);
  std::ofstream(g) << R"({"delta": [0.5, 2], "t": [0.5, 1]})";
  const fs::path a = d / "a" / "surv.csv", b = d / "b" / "surv.csv";
  const Run r = run({"simulate", "survival", "--model", model("cauchy"), "--grid", g.string(), "--budget", "2000",
                     "--seed", "7", "--bit-reproducible", "--out", a.string()});
  REQUIRE(r.code == 0);
  const json m = json::parse(slurp(d / "a" / "surv.manifest.json"));
  CHECK(m["format"] == cli::kManifestFormat);
  CHECK(m["tool_version"] == LEVYHEAT_VERSION);
  CHECK(m["request"]["seed"] == 7);
  CHECK(m["request"]["budget"] == 2000.0);
  CHECK(m["request"]["bit_reproducible"] == true);
  CHECK(m["request"]["grid"]["delta"].size() == 2);
  CHECK(m["simulation"]["n_paths_per_point"] == 1000);
  CHECK(m["simulation"]["scheme_used"] == "exact-stable");
  CHECK(m["model"]["source"] == slurp(model("cauchy")));
  CHECK(m["outputs"].size() == 2);
  CHECK(m["wall_clock_seconds"].get<double>() >= 0.0);

  // The grid file is not needed any more: the manifest carries the values.
  fs::remove(g);
  const Run rr = run({"replay", (d / "a" / "surv.manifest.json").string(), "--out", b.string()});
  REQUIRE(rr.code == 0);
  CHECK(slurp(a) == slurp(b));
  const json mb = json::parse(slurp(d / "b" / "surv.manifest.json"));
  CHECK(mb.contains("replayed_from"));

  // Thread count does not enter the results.
  const fs::path c = d / "c" / "surv.csv";
  setenv("LEVYHEAT_THREADS", "3", 1);
  const Run r3 = run({"replay", (d / "a" / "surv.manifest.json").string(), "--out", c.string()});
  unsetenv("LEVYHEAT_THREADS");
  REQUIRE(r3.code == 0);
  CHECK(slurp(a) == slurp(c));

  // A tampered manifest is a config error.
  json bad = m;
  bad["model"]["source"] = "{}";
  std::ofstream(d / "bad.manifest.json") << bad.dump();
  CHECK(run({"replay", (d / "bad.manifest.json").string()}).code == 2);
}

TEST_CASE("fnv1a64") {
  CHECK(cli::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(cli::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(cli::fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
