#include "falldet/report_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "falldet/errors.hpp"

namespace falldet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& v) {
  return v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
}

json curve_to_json(const RocCurve& c) {
  json fpr = json::array(), tpr = json::array(), thr = json::array();
  for (const auto& p : c.points) {
    fpr.push_back(p.fpr);
    tpr.push_back(p.tpr);
    thr.push_back(finite_or_null(p.threshold));
  }
  return {{"fpr", fpr}, {"tpr", tpr}, {"threshold", thr}};
}

RocCurve curve_from_json(const json& doc) {
  RocCurve c;
  const auto& fpr = doc.at("fpr");
  const auto& tpr = doc.at("tpr");
  const auto& thr = doc.at("threshold");
  for (std::size_t i = 0; i < fpr.size(); ++i) {
    c.points.push_back({fpr.at(i).get<double>(), tpr.at(i).get<double>(), number_or_inf(thr.at(i))});
  }
  return c;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json report_to_json(const EvalReport& r) {
  json folds = json::array();
  for (const auto& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"auc", f.auc},
                     {"inner_auc", f.inner_auc},
                     {"hyperparameters", f.hyperparameters},
                     {"train_adl", f.train_adl},
                     {"train_fall", f.train_fall},
                     {"test_adl", f.test_adl},
                     {"test_fall", f.test_fall},
                     {"test_indices", f.test_indices},
                     {"train_digest", f.train_digest},
                     {"converged", f.converged},
                     {"roc", curve_to_json(f.roc)}});
  }
  const auto& op = r.operating_point;
  return {{"collection", to_string(r.collection)},
          {"feature", to_string(r.feature)},
          {"window", r.window_len},
          {"classifier", to_string(r.variant)},
          {"dimension", r.dimension},
          {"seed", r.seed},
          {"standardization", r.standardization},
          {"mean_auc", r.mean_auc},
          {"averaged_auc", r.averaged_auc},
          {"operating_point",
           {{"se", op.se}, {"sp", op.sp}, {"gm", op.gm}, {"threshold", finite_or_null(op.threshold)}}},
          {"notes", r.notes},
          {"folds", std::move(folds)},
          {"averaged_roc", curve_to_json(r.averaged_roc)}};
}

EvalReport report_from_json(const json& doc) {
  EvalReport r;
  try {
    r.collection = parse_collection_id(doc.at("collection").get<std::string>());
    r.feature = parse_feature_kind(doc.at("feature").get<std::string>());
    r.window_len = doc.at("window").get<std::size_t>();
    r.variant = parse_variant(doc.at("classifier").get<std::string>());
    r.dimension = doc.at("dimension").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.standardization = doc.at("standardization").get<std::string>();
    r.mean_auc = doc.at("mean_auc").get<double>();
    r.averaged_auc = doc.at("averaged_auc").get<double>();
    const auto& op = doc.at("operating_point");
    r.operating_point = {op.at("se").get<double>(), op.at("sp").get<double>(),
                         op.at("gm").get<double>(), number_or_inf(op.at("threshold"))};
    r.notes = doc.at("notes").get<std::vector<std::string>>();
    for (const auto& f : doc.at("folds")) {
      FoldResult fr;
      fr.fold = f.at("fold").get<std::size_t>();
      fr.auc = f.at("auc").get<double>();
      fr.inner_auc = f.at("inner_auc").get<double>();
      fr.hyperparameters = f.at("hyperparameters").get<std::map<std::string, double>>();
      fr.train_adl = f.at("train_adl").get<std::size_t>();
      fr.train_fall = f.at("train_fall").get<std::size_t>();
      fr.test_adl = f.at("test_adl").get<std::size_t>();
      fr.test_fall = f.at("test_fall").get<std::size_t>();
      fr.test_indices = f.at("test_indices").get<std::vector<std::size_t>>();
      fr.train_digest = f.at("train_digest").get<std::string>();
      fr.converged = f.at("converged").get<bool>();
      fr.roc = curve_from_json(f.at("roc"));
      r.folds.push_back(std::move(fr));
    }
    r.averaged_roc = curve_from_json(doc.at("averaged_roc"));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string roc_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  char buf[128];
  for (const auto& p : curve.points) {
    std::snprintf(buf, sizeof buf, "%.6f,%.9f,%.9g\n", p.fpr, p.tpr, p.threshold);
    out += buf;
  }
  return out;
}

std::string feature_matrix_csv(const FeatureMatrix& features, std::span<const Label> labels) {
  if (labels.size() != features.rows()) throw DimensionError("one label per row required");
  std::string out;
  for (std::size_t j = 0; j < features.cols(); ++j) out += "f" + std::to_string(j) + ",";
  out += "label\n";
  char buf[32];
  for (std::size_t r = 0; r < features.rows(); ++r) {
    for (double v : features.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      out += buf;
    }
    out += to_string(labels[r]);
    out += '\n';
  }
  return out;
}

std::string cell_name(CollectionId c, FeatureKind f, std::size_t window, Variant v) {
  return std::string(to_string(c)) + "_" + std::string(to_string(f)) + "_" +
         std::to_string(window) + "_" + std::string(to_string(v));
}

SummaryRow summary_row(const EvalReport& r) {
  return {r.collection,           r.window_len,          r.feature,
          r.variant,              r.mean_auc,            r.operating_point.se,
          r.operating_point.sp,   r.operating_point.gm,  {}};
}

void sort_summary(std::vector<SummaryRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.window != b.window) return a.window > b.window;
    return std::tie(a.collection, a.feature, a.variant) <
           std::tie(b.collection, b.feature, b.variant);
  });
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "collection,window,feature,classifier,auc,se,sp,gm,status\n";
  for (const auto& r : rows) {
    out += std::string(to_string(r.collection)) + "," + std::to_string(r.window) + "," +
           std::string(to_string(r.feature)) + "," + std::string(to_string(r.variant)) + ",";
    if (r.error.empty()) {
      out += fixed6(r.auc) + "," + fixed6(r.se) + "," + fixed6(r.sp) + "," + fixed6(r.gm) + ",ok\n";
    } else {
      out += ",,,," + csv_field("error: " + r.error) + "\n";
    }
  }
  return out;
}

json summary_json(const std::vector<SummaryRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = {{"collection", to_string(r.collection)},
                {"window", r.window},
                {"feature", to_string(r.feature)},
                {"classifier", to_string(r.variant)}};
    if (r.error.empty()) {
      row["auc"] = r.auc;
      row["se"] = r.se;
      row["sp"] = r.sp;
      row["gm"] = r.gm;
      row["status"] = "ok";
    } else {
      row["status"] = "error";
      row["error"] = r.error;
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace falldet
