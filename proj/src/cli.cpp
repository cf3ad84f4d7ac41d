#include "falldet/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <openssl/evp.h>

#include "falldet/errors.hpp"
#include "falldet/report_io.hpp"
#include "falldet/synth.hpp"

#ifndef FALLDET_VERSION
#define FALLDET_VERSION "0.0.0"
#endif

namespace falldet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class InputError : public Error {
  using Error::Error;
};

// Accepts "all", a single name, or a list of names.
template <typename T, typename Parse>
std::vector<T> parse_axis(const json& v, std::vector<T> all, Parse parse) {
  std::vector<std::string> names;
  if (v.is_string()) {
    names.push_back(v.get<std::string>());
  } else if (v.is_number_unsigned()) {
    names.push_back(v.dump());
  } else if (v.is_array()) {
    for (const auto& e : v) names.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  } else {
    throw InputError("expected a name or a list of names, got " + v.dump());
  }
  std::vector<T> out;
  for (const auto& n : names) {
    if (n == "all") return all;
    const T value = parse(n);
    if (std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
  }
  if (out.empty()) throw InputError("empty selection");
  return out;
}

std::size_t parse_window(const std::string& text) {
  if (text == "51") return kShortWindowLength;
  if (text == "128") return kLongWindowLength;
  throw InputError("window must be 51 or 128, got '" + text + "'");
}

std::vector<std::size_t> parse_windows(const json& v) {
  return parse_axis<std::size_t>(v, {kLongWindowLength, kShortWindowLength}, parse_window);
}

json gamma_to_json(const GammaChoice& g) { return g.scale ? json("scale") : json(g.value); }

GammaChoice gamma_from_json(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() != "scale") throw InputError("gamma must be a number or \"scale\"");
    return GammaChoice::automatic();
  }
  const double g = v.get<double>();
  if (!(g > 0.0)) throw InputError("gamma must be positive");
  return GammaChoice::fixed(g);
}

std::string size_mode_name(SizeMode m) { return m == SizeMode::Strict ? "strict" : "desk-scale"; }

SizeMode parse_size_mode(const std::string& s) {
  if (s == "strict") return SizeMode::Strict;
  if (s == "desk-scale") return SizeMode::DeskScale;
  throw InputError("size_mode must be strict or desk-scale, got '" + s + "'");
}

void write_json(const fs::path& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

std::string hex(const unsigned char* data, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

void write_run_record(const Settings& s, const std::string& command) {
  json inputs = json::object();
  for (const auto& [name, path] : {std::pair{"dataset1", s.dataset1}, std::pair{"dataset2", s.dataset2}}) {
    if (path) inputs[name] = {{"path", path->generic_string()}, {"sha256", sha256_path(*path)}};
  }
  const json record = {{"command", command},
                       {"version", FALLDET_VERSION},
                       {"seed", s.seed},
                       {"config", s.to_json()},
                       {"inputs", inputs}};
  write_json(s.out / "run.json", record);
}

struct Datasets {
  std::vector<Recording> d1;
  std::vector<Recording> d2;
};

Datasets load_datasets(const Settings& s) {
  if (!s.dataset1) throw InputError("--dataset1 is required");
  if (!fs::exists(*s.dataset1)) throw InputError("dataset1 path does not exist: " + s.dataset1->string());
  Datasets d;
  d.d1 = parse_dataset1(*s.dataset1);
  if (s.dataset2) {
    if (!fs::exists(*s.dataset2)) throw InputError("dataset2 path does not exist: " + s.dataset2->string());
    d.d2 = parse_dataset2(*s.dataset2);
  }
  if (d.d1.empty() && d.d2.empty()) throw InputError("no instances found");
  return d;
}

std::vector<CollectionId> resolve_collections(const Settings& s) {
  if (s.collections.empty()) {
    if (s.dataset2) return {CollectionId::C1, CollectionId::C2, CollectionId::C3};
    return {CollectionId::C1};
  }
  for (const auto id : s.collections) {
    if (id != CollectionId::C1 && !s.dataset2) {
      throw InputError(std::string("collection ") + std::string(to_string(id)) +
                       " needs --dataset2");
    }
  }
  return s.collections;
}

fs::path manifest_path(const Settings& s, CollectionId id) {
  return s.out / "collections" / (std::string(to_string(id)) + ".json");
}

void print_counts(const Collection& c) {
  const auto n = c.counts();
  std::printf("%s: %zu ADL (%zu dataset1, %zu dataset2), %zu FALL\n",
              std::string(to_string(c.id)).c_str(), n.adl, n.adl_d1, n.adl_d2, n.fall);
  for (const auto& note : c.notes) std::printf("  note: %s\n", note.c_str());
}

Collection build(const Settings& s, const Datasets& d, CollectionId id) {
  try {
    return build_collection(id, d.d1, d.d2, s.seed, s.size_mode, s.folds);
  } catch (const InsufficientData& e) {
    throw InputError(e.what());
  }
}

// Reuses a stored manifest when it matches the requested seed and folds.
Collection load_or_build(const Settings& s, const Datasets& d, CollectionId id) {
  const fs::path path = manifest_path(s, id);
  if (fs::exists(path)) {
    const json doc = json::parse(read_file(path));
    if (doc.value("seed", std::uint64_t{0}) == s.seed &&
        doc.value("num_folds", std::size_t{0}) == s.folds) {
      return collection_from_manifest(doc, d.d1, d.d2);
    }
  }
  Collection c = build(s, d, id);
  write_json(path, collection_manifest(c));
  return c;
}

int cmd_ingest(const Settings& s) {
  const auto ids = resolve_collections(s);
  const Datasets d = load_datasets(s);
  for (const auto id : ids) {
    const Collection c = build(s, d, id);
    write_json(manifest_path(s, id), collection_manifest(c));
    print_counts(c);
  }
  write_run_record(s, "ingest");
  return kExitOk;
}

struct Cell {
  FeatureKind feature;
  std::size_t window;
  Variant variant;
};

int cmd_run(const Settings& s) {
  const auto ids = resolve_collections(s);
  const Datasets d = load_datasets(s);
  std::vector<SummaryRow> rows;
  bool failed = false;
  std::mutex mu;

  for (const auto id : ids) {
    const Collection collection = load_or_build(s, d, id);
    print_counts(collection);
    const auto labels = collection.labels();
    for (const std::size_t window : s.windows) {
      for (const FeatureKind feature : s.features) {
        std::vector<Cell> cells;
        for (const Variant v : s.classifiers) cells.push_back({feature, window, v});

        std::optional<FeatureMatrix> features;
        std::string extract_error;
        try {
          features = extract_matrix(collection, feature, window, s.experiment.ltp);
        } catch (const std::exception& e) {
          extract_error = e.what();
        }

        if (features && s.export_features) {
          write_file_atomic(s.out / "features" /
                                (std::string(to_string(id)) + "_" + std::string(to_string(feature)) +
                                 "_" + std::to_string(window) + ".csv"),
                            feature_matrix_csv(*features, labels));
        }

        const unsigned workers =
            std::max(1u, std::min<unsigned>(s.jobs, static_cast<unsigned>(cells.size())));
        ExperimentConfig config = s.experiment;
        config.seed = s.seed;
        config.threads = std::max(1u, s.jobs / workers);

        std::atomic<std::size_t> next{0};
        auto work = [&] {
          for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& cell = cells[i];
            const std::string name = cell_name(id, cell.feature, cell.window, cell.variant);
            SummaryRow row{id, cell.window, cell.feature, cell.variant, 0, 0, 0, 0, {}};
            try {
              if (!features) throw Error("feature extraction failed: " + extract_error);
              EvalReport report = evaluate(*features, labels, collection.folds, cell.variant, config);
              report.collection = id;
              report.feature = cell.feature;
              report.window_len = cell.window;
              for (const auto& note : collection.notes) report.notes.push_back(note);
              write_json(s.out / "reports" / (name + ".json"), report_to_json(report));
              write_file_atomic(s.out / "roc" / (name + ".csv"), roc_csv(report.averaged_roc));
              row = summary_row(report);
            } catch (const std::exception& e) {
              row.error = e.what();
            }
            std::lock_guard lock(mu);
            if (row.error.empty()) {
              std::printf("%s: AUC %.4f SE %.4f SP %.4f\n", name.c_str(), row.auc, row.se, row.sp);
            } else {
              std::fprintf(stderr, "%s: error: %s\n", name.c_str(), row.error.c_str());
              failed = true;
            }
            std::fflush(stdout);
            rows.push_back(std::move(row));
          }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
      }
    }
  }

  sort_summary(rows);
  write_file_atomic(s.out / "summary.csv", summary_csv(rows));
  write_json(s.out / "summary.json", summary_json(rows));
  write_run_record(s, "run");
  return failed ? kExitCellFailure : kExitOk;
}

int cmd_report(const Settings& s) {
  const fs::path dir = s.out / "reports";
  std::vector<fs::path> files;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
  }
  if (files.empty()) throw InputError("no reports found in " + dir.string());
  std::sort(files.begin(), files.end());
  std::vector<SummaryRow> rows;
  for (const auto& f : files) {
    try {
      rows.push_back(summary_row(report_from_json(json::parse(read_file(f)))));
    } catch (const json::exception& e) {
      throw InputError(f.string() + ": " + e.what());
    } catch (const InvalidArgument& e) {
      throw InputError(f.string() + ": " + e.what());
    }
  }
  sort_summary(rows);
  write_file_atomic(s.out / "summary.csv", summary_csv(rows));
  write_json(s.out / "summary.json", summary_json(rows));
  std::fputs(summary_csv(rows).c_str(), stdout);
  write_run_record(s, "report");
  return kExitOk;
}

int cmd_synth(Settings s) {
  const auto d1 = synthesize_dataset1({s.synth_adl, s.synth_falls, s.seed});
  write_dataset1(s.out / "dataset1", d1, s.seed);
  s.dataset1 = s.out / "dataset1";
  if (s.synth_dataset2 > 0) {
    write_dataset2(s.out / "dataset2", synthesize_dataset2(s.synth_dataset2, s.seed));
    s.dataset2 = s.out / "dataset2";
  }
  std::printf("wrote %zu ADL and %zu FALL synthetic windows to %s\n", s.synth_adl, s.synth_falls,
              (s.out / "dataset1").string().c_str());
  write_run_record(s, "synth");
  return kExitOk;
}

}  // namespace

json Settings::to_json() const {
  auto names = [](const auto& items) {
    json a = json::array();
    for (const auto& i : items) a.push_back(std::string(to_string(i)));
    return a;
  };
  json gamma = json::array();
  for (const auto& g : experiment.grid.gamma) gamma.push_back(gamma_to_json(g));
  json doc = {{"seed", seed},
              {"collections", names(collections)},
              {"features", names(features)},
              {"windows", windows},
              {"classifiers", names(classifiers)},
              {"jobs", jobs},
              {"out", out.generic_string()},
              {"size_mode", size_mode_name(size_mode)},
              {"folds", folds},
              {"inner_folds", experiment.inner_folds},
              {"grid",
               {{"k", experiment.grid.k},
                {"C", experiment.grid.c},
                {"nu", experiment.grid.nu},
                {"gamma", gamma}}},
              {"ltp", {{"neighbours", experiment.ltp.num_neighbours}, {"step", experiment.ltp.step}}},
              {"smo",
               {{"tol", experiment.smo.tol},
                {"max_iterations", experiment.smo.max_iterations},
                {"cache_mb", experiment.smo.cache_bytes >> 20}}},
              {"export_features", export_features},
              {"synth", {{"adl", synth_adl}, {"falls", synth_falls}, {"dataset2_adl", synth_dataset2}}}};
  if (collections.empty()) doc["collections"] = "all";
  if (dataset1) doc["dataset1"] = dataset1->generic_string();
  if (dataset2) doc["dataset2"] = dataset2->generic_string();
  return doc;
}

void Settings::apply_json(const json& input) {
  const json& doc = input.contains("config") && input.contains("command") ? input.at("config") : input;
  if (!doc.is_object()) throw InputError("config must be a JSON object");
  try {
    for (const auto& [key, v] : doc.items()) {
      if (key == "dataset1") {
        dataset1 = v.get<std::string>();
      } else if (key == "dataset2") {
        dataset2 = v.get<std::string>();
      } else if (key == "seed") {
        seed = v.get<std::uint64_t>();
      } else if (key == "collections") {
        collections = v == "all" ? std::vector<CollectionId>{}
                                 : parse_axis<CollectionId>(v, {CollectionId::C1, CollectionId::C2,
                                                                CollectionId::C3},
                                                            parse_collection_id);
      } else if (key == "features") {
        features = parse_axis<FeatureKind>(v, Settings{}.features, parse_feature_kind);
      } else if (key == "windows") {
        windows = parse_windows(v);
      } else if (key == "classifiers") {
        classifiers = parse_axis<Variant>(v, Settings{}.classifiers, parse_variant);
      } else if (key == "jobs") {
        jobs = std::max(1u, v.get<unsigned>());
      } else if (key == "out") {
        out = v.get<std::string>();
      } else if (key == "size_mode") {
        size_mode = parse_size_mode(v.get<std::string>());
      } else if (key == "folds") {
        folds = v.get<std::size_t>();
      } else if (key == "inner_folds") {
        experiment.inner_folds = v.get<std::size_t>();
      } else if (key == "grid") {
        for (const auto& [gk, gv] : v.items()) {
          if (gk == "k") {
            experiment.grid.k = gv.get<std::vector<std::size_t>>();
          } else if (gk == "C") {
            experiment.grid.c = gv.get<std::vector<double>>();
          } else if (gk == "nu") {
            experiment.grid.nu = gv.get<std::vector<double>>();
          } else if (gk == "gamma") {
            experiment.grid.gamma.clear();
            for (const auto& g : gv) experiment.grid.gamma.push_back(gamma_from_json(g));
          } else {
            throw InputError("unknown grid key '" + gk + "'");
          }
        }
      } else if (key == "ltp") {
        experiment.ltp.num_neighbours = v.value("neighbours", experiment.ltp.num_neighbours);
        experiment.ltp.step = v.value("step", experiment.ltp.step);
      } else if (key == "smo") {
        experiment.smo.tol = v.value("tol", experiment.smo.tol);
        experiment.smo.max_iterations = v.value("max_iterations", experiment.smo.max_iterations);
        experiment.smo.cache_bytes =
            v.value("cache_mb", experiment.smo.cache_bytes >> 20) << 20;
      } else if (key == "export_features") {
        export_features = v.get<bool>();
      } else if (key == "synth") {
        synth_adl = v.value("adl", synth_adl);
        synth_falls = v.value("falls", synth_falls);
        synth_dataset2 = v.value("dataset2_adl", synth_dataset2);
      } else {
        throw InputError("unknown config key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid config: ") + e.what());
  }
  for (const auto& grid_empty :
       {experiment.grid.k.empty(), experiment.grid.c.empty(), experiment.grid.nu.empty(),
        experiment.grid.gamma.empty()}) {
    if (grid_empty) throw InputError("hyperparameter grids must not be empty");
  }
}

std::string sha256_path(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::recursive_directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
      return fs::relative(a, path).generic_string() < fs::relative(b, path).generic_string();
    });
  } else {
    files.push_back(path);
  }
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw Error("sha256 unavailable");
  }
  std::vector<char> buf(1 << 16);
  for (const auto& f : files) {
    if (fs::is_directory(path)) {
      const std::string rel = fs::relative(f, path).generic_string();
      EVP_DigestUpdate(ctx.get(), rel.data(), rel.size() + 1);
    }
    std::ifstream in(f, std::ios::binary);
    if (!in) throw InputError("cannot read " + f.string());
    while (in) {
      in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
      EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  return hex(digest, len);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Fall detection as anomaly detection: ingest, synthesize, evaluate, report"};
  app.set_version_flag("--version", FALLDET_VERSION);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::string> dataset1, dataset2, out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  bool export_features = false;
  std::vector<std::string> collections, features, windows, classifiers;
  std::optional<std::size_t> synth_adl, synth_falls, synth_d2;

  auto common = [&](CLI::App* sub, bool experiment_axes) {
    sub->add_option("--config", config_path, "JSON config (a stored run.json also works)");
    sub->add_option("--seed", seed, "master seed");
    sub->add_option("--out", out, "output directory");
    if (!experiment_axes) return;
    sub->add_option("--dataset1", dataset1, "dataset1 root directory");
    sub->add_option("--dataset2", dataset2, "dataset2 root directory");
    sub->add_option("--collection", collections, "c1, c2, c3 or all")->delimiter(',');
    sub->add_option("--feature", features, "raw, magnitude, accel, ltp or all")->delimiter(',');
    sub->add_option("--window", windows, "51, 128 or all")->delimiter(',');
    sub->add_option("--classifier", classifiers, "oc-knn, tc-knn, oc-svm, tc-svm or all")
        ->delimiter(',');
    sub->add_option("--jobs", jobs, "experiment cells run in parallel");
  };
  CLI::App* ingest = app.add_subcommand("ingest", "parse datasets and write collection manifests");
  common(ingest, true);
  CLI::App* run_cmd = app.add_subcommand("run", "evaluate every requested experiment cell");
  common(run_cmd, true);
  run_cmd->add_flag("--export-features", export_features, "write the feature matrices as CSV");
  CLI::App* report = app.add_subcommand("report", "re-render the summary from stored reports");
  common(report, false);
  CLI::App* synth = app.add_subcommand("synth", "write a synthetic dataset1 (non-physiological)");
  common(synth, false);
  synth->add_option("--adl", synth_adl, "number of ADL windows");
  synth->add_option("--falls", synth_falls, "number of fall windows");
  synth->add_option("--dataset2-adl", synth_d2, "also write this many dataset2 ADL windows");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    Settings s;
    if (!config_path.empty()) {
      json doc;
      try {
        doc = json::parse(read_file(config_path));
      } catch (const json::exception& e) {
        throw InputError(config_path + ": " + e.what());
      }
      s.apply_json(doc);
    }
    json flags = json::object();
    if (dataset1) flags["dataset1"] = *dataset1;
    if (dataset2) flags["dataset2"] = *dataset2;
    if (out) flags["out"] = *out;
    if (seed) flags["seed"] = *seed;
    if (jobs) flags["jobs"] = *jobs;
    if (export_features) flags["export_features"] = true;
    if (!collections.empty()) flags["collections"] = collections;
    if (!features.empty()) flags["features"] = features;
    if (!windows.empty()) flags["windows"] = windows;
    if (!classifiers.empty()) flags["classifiers"] = classifiers;
    if (synth_adl) flags["synth"]["adl"] = *synth_adl;
    if (synth_falls) flags["synth"]["falls"] = *synth_falls;
    if (synth_d2) flags["synth"]["dataset2_adl"] = *synth_d2;
    s.apply_json(flags);

    if (ingest->parsed()) return cmd_ingest(s);
    if (run_cmd->parsed()) return cmd_run(s);
    if (report->parsed()) return cmd_report(s);
    return cmd_synth(s);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
}

}  // namespace falldet::cli
