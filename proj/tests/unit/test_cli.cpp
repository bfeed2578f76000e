#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "mbs/activation_stats.hpp"
#include "mbs/model_ir.hpp"
#include "mbs/model_zoo.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = mbs::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / ("mbs_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

// zoo -> stats -> plan -> apply -> report into `dir`, returning each file.
std::vector<std::string> pipeline(const TempDir& dir) {
  const std::string model = dir / "model.json", stats = dir / "stats.json", plan = dir / "plan.json",
                    compact = dir / "compact.json", report = dir / "report.csv";
  REQUIRE(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "20", "--out", model}).code == 0);
  REQUIRE(run({"stats", "simulate", "--model", model, "--images", "2", "--seed", "7", "--out", stats}).code == 0);
  REQUIRE(run({"plan", "--model", model, "--stats", stats, "--out", plan}).code == 0);
  REQUIRE(run({"apply", "--model", model, "--plan", plan, "--out", compact}).code == 0);
  REQUIRE(run({"report", "--model", model, "--plan", plan, "--alpha", "0.5", "--format", "csv", "--out", report})
              .code == 0);
  return {slurp(model), slurp(stats), slurp(plan), slurp(compact), slurp(report)};
}

}  // namespace

TEST_CASE("cli pipeline is byte-identical across runs") {
  TempDir a, b;
  const std::vector<std::string> first = pipeline(a);
  const std::vector<std::string> second = pipeline(b);
  CHECK(first == second);
  CHECK(mbs::parse_model(first[3]).name == "resnet-cifar-20");
  CHECK(first[4].find("\r\nalpha=0.5,") != std::string::npos);
}

TEST_CASE("cli analyze and tradeoff") {
  TempDir dir;
  const std::string model = dir / "model.json", stats = dir / "stats.json";
  REQUIRE(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "20", "--out", model}).code == 0);
  REQUIRE(run({"stats", "simulate", "--model", model, "--images", "2", "--out", stats}).code == 0);
  const Result analyze = run({"analyze", "--model", model, "--format", "csv"});
  CHECK(analyze.code == 0);
  CHECK(analyze.out.rfind("layer_id,rf,jump,macroblock,is_base\r\n", 0) == 0);
  const Result tradeoff = run({"tradeoff", "--model", model, "--stats", stats, "--format", "csv"});
  CHECK(tradeoff.code == 0);
  CHECK(tradeoff.out.rfind("k,z,reduction_ratio,params_after,widths\r\n", 0) == 0);
  const Result k = run({"tradeoff", "--model", model, "--stats", stats, "--z-factor", "1.0", "--z-factor", "0.5"});
  CHECK(k.code == 0);
}

TEST_CASE("cli usage errors exit 1") {
  CHECK(run({"bogus"}).code == mbs::cli::kExitUsage);
  CHECK(run({"bogus"}).err.rfind("error: usage: unknown subcommand 'bogus'", 0) == 0);
  CHECK(run({}).code == mbs::cli::kExitUsage);
  CHECK(run({"plan", "--model", "m.json"}).code == mbs::cli::kExitUsage);
  CHECK(run({"analyze", "--model", "m.json", "--z", "3", "--z-factor", "1"}).code == mbs::cli::kExitUsage);
  CHECK(run({"--help"}).code == mbs::cli::kExitOk);
}

TEST_CASE("cli io errors exit 2") {
  TempDir dir;
  const Result missing = run({"analyze", "--model", dir / "absent.json"});
  CHECK(missing.code == mbs::cli::kExitIo);
  CHECK(missing.err.rfind("error: io: ", 0) == 0);

  const std::string model = dir / "model.json";
  REQUIRE(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "20", "--out", model}).code == 0);
  const std::string before = slurp(model);
  CHECK(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "32", "--out", model}).code == mbs::cli::kExitIo);
  CHECK(slurp(model) == before);
  CHECK(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "32", "--out", model, "--force"}).code == 0);
  CHECK(slurp(model) != before);
}

TEST_CASE("cli validation errors exit 3") {
  TempDir dir;
  const std::string m20 = dir / "m20.json", m32 = dir / "m32.json", stats = dir / "stats.json";
  REQUIRE(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "20", "--out", m20}).code == 0);
  REQUIRE(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "32", "--out", m32}).code == 0);
  REQUIRE(run({"stats", "simulate", "--model", m20, "--images", "1", "--out", stats}).code == 0);

  const Result mismatch = run({"plan", "--model", m32, "--stats", stats});
  CHECK(mismatch.code == mbs::cli::kExitValidation);
  CHECK(mismatch.err.rfind("error: fingerprint-mismatch: ", 0) == 0);

  spit(dir / "broken.json", "{\"version\": \"mbs-ir/1\"");
  CHECK(run({"analyze", "--model", dir / "broken.json"}).code == mbs::cli::kExitValidation);
  CHECK(run({"analyze", "--model", m20, "--z", "-1"}).code == mbs::cli::kExitValidation);
  CHECK(run({"zoo", "emit", "--family", "resnet-cifar", "--depth", "21"}).code == mbs::cli::kExitValidation);
}

TEST_CASE("cli degenerate plans warn, or exit 4 under --strict") {
  TempDir dir;
  const std::string model = dir / "model.json", stats = dir / "stats.json";
  const mbs::ModelGraph g = mbs::generate({mbs::ZooFamily::kResNetCifar, 20, std::nullopt});
  spit(model, mbs::serialize_model(g));
  mbs::StatsCollection s;
  s.model_name = g.name;
  s.model_fingerprint = mbs::model_fingerprint(g);
  for (mbs::LayerId id : g.conv_ids()) s.layers.push_back({id, 0.0, 1, 0});
  spit(stats, mbs::serialize_stats(s));

  const Result lenient = run({"plan", "--model", model, "--stats", stats});
  CHECK(lenient.code == 0);
  CHECK(lenient.err.find("warning") != std::string::npos);
  const Result strict = run({"plan", "--model", model, "--stats", stats, "--strict"});
  CHECK(strict.code == mbs::cli::kExitDegenerate);
  CHECK(strict.err.rfind("error: degenerate: ", 0) == 0);
}
