#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adesens/data.hpp"
#include "adesens/simulation.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;
using namespace adesens;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "adesens");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// A scratch directory removed at scope exit.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name)
      : dir(fs::temp_directory_path() / ("adesens_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& f) const { return (dir / f).string(); }
};

void write_toy(const std::string& path, OutcomeType outcome, Eigen::Index n = 300) {
  DgpSpec spec;
  spec.outcome = outcome;
  spec.delta = 1.0;
  std::ofstream f(path);
  write_csv(f, draw_dataset(spec, n, 12).data);
}

int count_lines(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("cli usage errors and help") {
  CHECK(run_cli({}).code == cli::kUsage);
  CHECK(run_cli({"frobnicate"}).code == cli::kUsage);
  const Result help = run_cli({"--help"});
  CHECK(help.code == cli::kOk);
  CHECK(help.out.find("analyze") != std::string::npos);
  CHECK(run_cli({"analyze"}).code == cli::kUsage);
  CHECK(run_cli({"analyze", "--data", "x.csv", "--points", "many"}).code == cli::kUsage);
  CHECK(run_cli({"simulate", "--dose", "poisson", "--reps", "1"}).code == cli::kUsage);
}

TEST_CASE("cli analyze") {
  Scratch tmp("analyze");
  write_toy(tmp / "toy.csv", OutcomeType::kContinuous);

  const Result r = run_cli({"analyze", "--data", tmp / "toy.csv", "--outcome", "continuous",
                            "--gamma-max", "1", "--points", "101", "--out", tmp / "c1"});
  REQUIRE(r.code == cli::kOk);
  const auto doc = nlohmann::json::parse(slurp(tmp / "c1.json"));
  CHECK(doc["grid"].size() == 101);
  CHECK(doc["grid"][100]["gamma"].get<double>() == 1.0);
  CHECK(doc["crossings"].contains("pointwise"));
  CHECK(count_lines(slurp(tmp / "c1.csv")) == 102);

  SUBCASE("repeated runs are byte identical") {
    REQUIRE(run_cli({"analyze", "--data", tmp / "toy.csv", "--out", tmp / "c2"}).code == cli::kOk);
    CHECK(slurp(tmp / "c1.json") == slurp(tmp / "c2.json"));
    CHECK(slurp(tmp / "c1.csv") == slurp(tmp / "c2.csv"));
    REQUIRE(run_cli({"analyze", "--data", tmp / "toy.csv", "--seed", "3", "--out", tmp / "c3"})
                .code == cli::kOk);
    CHECK(slurp(tmp / "c1.json") != slurp(tmp / "c3.json"));
  }
  SUBCASE("config file") {
    std::ofstream(tmp / "run.cfg") << "folds = 4\nalpha = 0.1\n";
    CHECK(run_cli({"analyze", "--data", tmp / "toy.csv", "--config", tmp / "run.cfg", "--out",
                   tmp / "c4"})
              .code == cli::kOk);
    CHECK(nlohmann::json::parse(slurp(tmp / "c4.json"))["alpha"].get<double>() == 0.1);
    std::ofstream(tmp / "bad.cfg") << "folds = 4\nwidth = 3\n";
    const Result bad = run_cli({"analyze", "--data", tmp / "toy.csv", "--config", tmp / "bad.cfg"});
    CHECK(bad.code == cli::kUsage);
    CHECK(bad.err.find("width") != std::string::npos);
  }
  SUBCASE("data errors") {
    CHECK(run_cli({"analyze", "--data", tmp / "missing.csv"}).code == cli::kDataError);
    std::ofstream(tmp / "half.csv") << "y,a\n0.5,1\n1,2\n0,3\n";
    CHECK(run_cli({"analyze", "--data", tmp / "half.csv", "--outcome", "binary"}).code ==
          cli::kDataError);
    std::ofstream(tmp / "hole.csv") << "y,a\n1,\n";
    const Result hole = run_cli({"analyze", "--data", tmp / "hole.csv"});
    CHECK(hole.code == cli::kDataError);
    CHECK(hole.err.find("row 1") != std::string::npos);
    CHECK(run_cli({"analyze", "--data", tmp / "toy.csv", "--gamma-min", "2", "--gamma-max",
                   "1"})
              .code == cli::kUsage);
  }
}

TEST_CASE("cli analyze binary") {
  Scratch tmp("binary");
  write_toy(tmp / "bin.csv", OutcomeType::kBinary, 400);
  REQUIRE(run_cli({"analyze", "--data", tmp / "bin.csv", "--outcome", "binary", "--points", "5",
                   "--out", tmp / "b"})
              .code == cli::kOk);
  const auto doc = nlohmann::json::parse(slurp(tmp / "b.json"));
  CHECK(doc["grid"].size() == 5);
}

TEST_CASE("cli verify-bounds") {
  const Result r = run_cli({"verify-bounds", "--instances", "1000", "--seed", "1"});
  CHECK(r.code == cli::kOk);
  CHECK(count_lines(r.out) == 1000);
  std::istringstream lines(r.out);
  std::string line;
  int passed = 0;
  while (std::getline(lines, line)) passed += nlohmann::json::parse(line)["pass"].get<bool>();
  CHECK(passed == 1000);
  const Result cont = run_cli({"verify-bounds", "--instances", "2", "--continuous", "3"});
  CHECK(cont.code == cli::kOk);
  CHECK(count_lines(cont.out) == 5);
}

TEST_CASE("cli verify-model") {
  const Result ok = run_cli({"verify-model"});
  CHECK(ok.code == cli::kOk);
  CHECK(count_lines(ok.out) == 4);
  const Result bad = run_cli({"verify-model", "--normalizer-scale", "1.05"});
  CHECK(bad.code == cli::kVerificationFailed);
  CHECK(bad.err.find("score_identity") != std::string::npos);
}

TEST_CASE("cli simulate and ground-truth") {
  Scratch tmp("simulate");
  std::ofstream(tmp / "sim.cfg") << "reps = 2\nn = 300\n";
  const Result r = run_cli({"simulate", "--config", tmp / "sim.cfg", "--zeta", "0", "--truth-mc",
                            "1000", "--out", tmp / "cov.csv"});
  REQUIRE(r.code == cli::kOk);
  const std::string csv = slurp(tmp / "cov.csv");
  CHECK(count_lines(csv) == 6);
  CHECK(csv.find(",2,") != std::string::npos);
  CHECK(count_lines(r.out) == 2);

  const Result gt = run_cli({"ground-truth", "--n-mc", "20000", "--seed", "4"});
  REQUIRE(gt.code == cli::kOk);
  const auto doc = nlohmann::json::parse(gt.out);
  CHECK(std::abs(doc["truth"].get<double>() - doc["monte_carlo"].get<double>()) <=
        4 * doc["se"].get<double>());
}
