#include <doctest.h>

#include <json.hpp>

#include "falldet/cli.hpp"
#include "falldet/report_io.hpp"
#include "helpers.hpp"

using namespace falldet;
using nlohmann::json;

namespace {

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "falldet");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

json read_json(const std::filesystem::path& p) { return json::parse(testing::read_text(p)); }

// A small synthetic corpus shared by the cases below.
struct Corpus {
  testing::TempDir dir{"cli"};
  std::string d1, d2;
  Corpus() {
    REQUIRE(call({"synth", "--out", dir.path().string(), "--adl", "40", "--falls", "10",
                  "--dataset2-adl", "30", "--seed", "3"}) == cli::kExitOk);
    d1 = (dir / "dataset1").string();
    d2 = (dir / "dataset2").string();
  }
};

}  // namespace

TEST_CASE("synth writes the requested corpus and a run record") {
  Corpus c;
  std::size_t adl = 0, fall = 0;
  for (const auto& e : std::filesystem::directory_iterator(c.dir / "dataset1/adl")) adl += e.is_regular_file();
  for (const auto& e : std::filesystem::directory_iterator(c.dir / "dataset1/fall")) fall += e.is_regular_file();
  CHECK(adl == 40);
  CHECK(fall == 10);
  const auto rec = read_json(c.dir / "run.json");
  CHECK(rec.at("command") == "synth");
  CHECK(rec.at("seed") == 3);
  CHECK(rec.at("inputs").at("dataset1").at("sha256").get<std::string>().size() == 64);
}

TEST_CASE("ingest writes identical manifests on repeat") {
  Corpus c;
  const auto out1 = (c.dir / "i1").string(), out2 = (c.dir / "i2").string();
  for (const auto& out : {out1, out2}) {
    CHECK(call({"ingest", "--dataset1", c.d1, "--dataset2", c.d2, "--out", out, "--seed", "5"}) ==
          cli::kExitOk);
  }
  for (const char* id : {"c1", "c2", "c3"}) {
    const auto a = testing::read_text(c.dir / ("i1/collections/" + std::string(id) + ".json"));
    CHECK(!a.empty());
    CHECK(a == testing::read_text(c.dir / ("i2/collections/" + std::string(id) + ".json")));
  }
  const auto c3 = read_json(c.dir / "i1/collections/c3.json");
  CHECK(c3.at("instances").size() == 40);
}

TEST_CASE("input errors exit with code 2") {
  Corpus c;
  testing::TempDir empty("cli-empty");
  std::filesystem::create_directories(empty / "adl");
  testing::write_text(empty / "manifest.json", R"({"mode": "windows"})");
  const auto out = (c.dir / "o").string();
  CHECK(call({"ingest", "--dataset1", empty.path().string(), "--out", out}) == cli::kExitInputError);
  CHECK(call({"ingest", "--dataset1", (c.dir / "missing").string(), "--out", out}) == cli::kExitInputError);
  CHECK(call({"run", "--dataset1", c.d1, "--collection", "c2", "--out", out}) == cli::kExitInputError);
  CHECK(call({"run", "--dataset1", c.d1, "--window", "64", "--out", out}) == cli::kExitInputError);
  CHECK(call({"run", "--dataset1", c.d1, "--bogus"}) == cli::kExitInputError);
  CHECK(call({"report", "--out", (c.dir / "nothing").string()}) == cli::kExitInputError);
  testing::write_text(c.dir / "bad.json", R"({"sedd": 1})");
  CHECK(call({"run", "--config", (c.dir / "bad.json").string(), "--dataset1", c.d1}) ==
        cli::kExitInputError);
  CHECK(call({"--help"}) == cli::kExitOk);
}

TEST_CASE("run, rerun, report and replay") {
  Corpus c;
  const auto out = (c.dir / "r").string();
  const std::vector<std::string> args{"run", "--dataset1", c.d1, "--collection", "c1", "--feature", "raw",
                                      "--window", "128", "--classifier", "all", "--seed", "11",
                                      "--out", out, "--export-features"};
  REQUIRE(call(args) == cli::kExitOk);
  for (const char* v : {"oc-knn", "tc-knn", "oc-svm", "tc-svm"}) {
    const auto report = read_json(c.dir / ("r/reports/c1_raw_128_" + std::string(v) + ".json"));
    CHECK(report_from_json(report).folds.size() == 10);
    CHECK(std::filesystem::exists(c.dir / ("r/roc/c1_raw_128_" + std::string(v) + ".csv")));
  }
  const auto summary = testing::read_text(c.dir / "r/summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 5);
  CHECK(summary.find("error") == std::string::npos);

  const auto features = testing::read_text(c.dir / "r/features/c1_raw_128.csv");
  CHECK(std::count(features.begin(), features.end(), '\n') == 51);
  CHECK(features.rfind("f0,f1,", 0) == 0);

  const auto rec = read_json(c.dir / "r/run.json");
  CHECK(rec.at("command") == "run");
  CHECK(rec.at("seed") == 11);
  CHECK(rec.at("config").at("features") == json::array({"raw"}));
  CHECK(rec.at("inputs").contains("dataset1"));
  CHECK_FALSE(rec.contains("timestamp"));

  SUBCASE("rerun is byte-identical") {
    REQUIRE(call(args) == cli::kExitOk);
    CHECK(testing::read_text(c.dir / "r/summary.csv") == summary);
  }
  SUBCASE("report re-renders the same summary") {
    std::filesystem::remove(c.dir / "r/summary.csv");
    REQUIRE(call({"report", "--out", out}) == cli::kExitOk);
    CHECK(testing::read_text(c.dir / "r/summary.csv") == summary);
  }
  SUBCASE("a stored run record replays") {
    const auto replay = (c.dir / "replay").string();
    REQUIRE(call({"run", "--config", (c.dir / "r/run.json").string(), "--out", replay}) == cli::kExitOk);
    CHECK(testing::read_text(c.dir / "replay/summary.csv") == summary);
  }
  SUBCASE("flags take precedence over the config") {
    testing::write_text(c.dir / "cfg.json",
                        json{{"seed", 5}, {"classifiers", "oc-knn"}, {"features", "raw"},
                             {"windows", 51}, {"collections", "c1"}}
                            .dump());
    const auto other = (c.dir / "p").string();
    REQUIRE(call({"run", "--config", (c.dir / "cfg.json").string(), "--dataset1", c.d1, "--seed", "9",
                  "--window", "128", "--out", other}) == cli::kExitOk);
    const auto r = read_json(c.dir / "p/run.json");
    CHECK(r.at("seed") == 9);
    CHECK(r.at("config").at("windows") == json::array({128}));
    CHECK(r.at("config").at("classifiers") == json::array({"oc-knn"}));
  }
}

TEST_CASE("failing cells produce error rows and exit code 1") {
  Corpus c;
  testing::write_text(c.dir / "cfg.json", R"({"grid": {"k": [1000]}})");
  const auto out = (c.dir / "f").string();
  CHECK(call({"run", "--config", (c.dir / "cfg.json").string(), "--dataset1", c.d1, "--collection", "c1",
              "--feature", "accel", "--window", "51", "--classifier", "oc-knn,tc-svm", "--out", out}) ==
        cli::kExitCellFailure);
  const auto summary = testing::read_text(c.dir / "f/summary.csv");
  CHECK(summary.find("c1,51,accel,oc-knn,,,,,error:") != std::string::npos);
  CHECK(summary.find("c1,51,accel,tc-svm,") != std::string::npos);
  CHECK(std::filesystem::exists(c.dir / "f/reports/c1_accel_51_tc-svm.json"));
  CHECK_FALSE(std::filesystem::exists(c.dir / "f/reports/c1_accel_51_oc-knn.json"));
}

TEST_CASE("settings round trip through JSON") {
  cli::Settings s;
  s.seed = 17;
  s.features = {FeatureKind::Ltp};
  s.experiment.grid.gamma = {GammaChoice::automatic(), GammaChoice::fixed(0.5)};
  s.experiment.smo.cache_bytes = std::size_t{64} << 20;
  cli::Settings t;
  t.apply_json(s.to_json());
  CHECK(t.to_json() == s.to_json());
  CHECK_THROWS(t.apply_json(json{{"grid", {{"k", json::array()}}}}));
  CHECK_THROWS(t.apply_json(json{{"size_mode", "huge"}}));
}

TEST_CASE("directory digests depend on names and contents") {
  testing::TempDir a("sha-a"), b("sha-b");
  testing::write_text(a / "x/1.txt", "hello");
  testing::write_text(b / "x/1.txt", "hello");
  CHECK(cli::sha256_path(a.path()) == cli::sha256_path(b.path()));
  testing::write_text(b / "x/2.txt", "");
  CHECK(cli::sha256_path(a.path()) != cli::sha256_path(b.path()));
  testing::write_text(a / "f.txt", "abc");
  CHECK(cli::sha256_path(a / "f.txt") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
