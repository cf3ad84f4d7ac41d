#include "falldet/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "falldet/errors.hpp"

namespace falldet {

namespace fs = std::filesystem;

namespace {

double sample_magnitude(double x, double y, double z) {
  return std::sqrt(x * x + y * y + z * z);
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

// Finds a child directory by case-insensitive name.
std::optional<fs::path> find_subdir(const fs::path& root, std::string_view name) {
  if (!fs::is_directory(root)) return std::nullopt;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && lower(entry.path().filename().string()) == name) {
      return entry.path();
    }
  }
  return std::nullopt;
}

TriaxialWindow read_window_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  TriaxialWindow w;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto row = parse_number_row(line, path.string(), line_no);
    if (row.size() != 3) {
      throw ParseError(path.string(), line_no,
                       "expected 3 columns x,y,z, got " + std::to_string(row.size()));
    }
    w.x.push_back(row[0]);
    w.y.push_back(row[1]);
    w.z.push_back(row[2]);
  }
  if (w.size() != kFullWindowLength) {
    throw LengthError(path.string() + ": expected " +
                      std::to_string(kFullWindowLength) + " rows, got " +
                      std::to_string(w.size()));
  }
  w.peak_index = argmax_magnitude(w);
  return w;
}

RawTrace read_trace_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  RawTrace trace;
  trace.source_id = path.string();
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!header_seen) {
      header_seen = true;
      std::string h = lower(line);
      h.erase(std::remove_if(h.begin(), h.end(),
                             [](unsigned char c) { return std::isspace(c); }),
              h.end());
      if (h != "t,x,y,z") {
        throw ParseError(path.string(), line_no, "expected header t,x,y,z");
      }
      continue;
    }
    const auto row = parse_number_row(line, path.string(), line_no);
    if (row.size() != 4) {
      throw ParseError(path.string(), line_no,
                       "expected 4 columns t,x,y,z, got " + std::to_string(row.size()));
    }
    trace.t.push_back(row[0]);
    trace.x.push_back(row[1]);
    trace.y.push_back(row[2]);
    trace.z.push_back(row[3]);
  }
  return trace;
}

// Trace-mode windows. Peaks are found on the signal with gravity still in it
// (that is what triggered the original recordings); the emitted windows have
// the per-axis offset of the full trace removed.
std::vector<TriaxialWindow> windows_from_trace(const RawTrace& raw, Label label) {
  const RawTrace trace = validated(raw);
  const double ox = mean_of(trace.x);
  const double oy = mean_of(trace.y);
  const double oz = mean_of(trace.z);
  const RawTrace uniform = resample_trace(trace, kSampleRateHz, false);
  if (uniform.size() < kFullWindowLength) {
    throw LengthError(raw.source_id + ": trace shorter than " +
                      std::to_string(kFullWindowLength) + " samples at 50 Hz");
  }

  std::vector<std::size_t> peaks = detect_peaks(uniform, kPeakThresholdG);
  if (label == Label::Fall) {
    // One window around the highest peak; fall back to the global maximum
    // when nothing crosses the trigger threshold.
    std::size_t best = 0;
    double best_m = -1.0;
    const auto& candidates = peaks;
    auto consider = [&](std::size_t i) {
      const double m = sample_magnitude(uniform.x[i], uniform.y[i], uniform.z[i]);
      if (m > best_m) {
        best_m = m;
        best = i;
      }
    };
    if (candidates.empty()) {
      for (std::size_t i = 0; i < uniform.size(); ++i) consider(i);
    } else {
      for (std::size_t i : candidates) consider(i);
    }
    peaks = {best};
  }

  std::vector<TriaxialWindow> out;
  out.reserve(peaks.size());
  for (std::size_t p : peaks) {
    TriaxialWindow w = cut_trace_window(uniform, p, kFullWindowLength);
    for (auto& v : w.x) v -= ox;
    for (auto& v : w.y) v -= oy;
    for (auto& v : w.z) v -= oz;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<std::vector<double>> read_matrix_file(const fs::path& path,
                                                  std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = parse_number_row(line, path.string(), line_no);
    if (row.size() != columns) {
      throw LengthError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(columns) +
                        " values, got " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::string> read_label_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    labels.push_back(line.substr(b, e - b + 1));
  }
  return labels;
}

void append_dataset2_split(const fs::path& x_file, const fs::path& y_file,
                           const fs::path& z_file, const fs::path& label_file,
                           const std::string& split,
                           std::vector<Recording>& out) {
  const auto xs = read_matrix_file(x_file, kLongWindowLength);
  const auto ys = read_matrix_file(y_file, kLongWindowLength);
  const auto zs = read_matrix_file(z_file, kLongWindowLength);
  const auto labels = read_label_file(label_file);
  if (xs.size() != ys.size() || xs.size() != zs.size() ||
      xs.size() != labels.size()) {
    throw ParseError(label_file.string(), 0,
                     "axis files and labels disagree in row count");
  }
  for (std::size_t r = 0; r < xs.size(); ++r) {
    if (lower(labels[r]) == "fall") continue;
    Recording rec;
    rec.window.x = xs[r];
    rec.window.y = ys[r];
    rec.window.z = zs[r];
    rec.window.peak_index = argmax_magnitude(rec.window);
    rec.label = Label::Adl;
    rec.source_id = split + ":" + std::to_string(r + 1);
    out.push_back(std::move(rec));
  }
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::Fall ? "FALL" : "ADL";
}

Label parse_label(std::string_view text) {
  const std::string l = lower(text);
  if (l == "fall") return Label::Fall;
  if (l == "adl") return Label::Adl;
  throw InvalidArgument("unknown label '" + std::string(text) + "'");
}

RawTrace validated(RawTrace trace) {
  const std::size_t n = trace.t.size();
  if (trace.x.size() != n || trace.y.size() != n || trace.z.size() != n) {
    throw InvalidTrace(trace.source_id + ": axis lengths differ from timestamps");
  }
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (kept > 0 && !(trace.t[i] > trace.t[kept - 1])) continue;
    trace.t[kept] = trace.t[i];
    trace.x[kept] = trace.x[i];
    trace.y[kept] = trace.y[i];
    trace.z[kept] = trace.z[i];
    ++kept;
  }
  trace.t.resize(kept);
  trace.x.resize(kept);
  trace.y.resize(kept);
  trace.z.resize(kept);
  if (kept < 2) {
    throw InvalidTrace(trace.source_id + ": fewer than 2 distinct samples");
  }
  return trace;
}

std::size_t argmax_magnitude(const TriaxialWindow& w) {
  std::size_t best = 0;
  double best_m = -1.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double m = sample_magnitude(w.x[i], w.y[i], w.z[i]);
    if (m > best_m) {
      best_m = m;
      best = i;
    }
  }
  return best;
}

RawTrace resample_trace(const RawTrace& input, double target_rate,
                        bool remove_offset) {
  if (!(target_rate > 0.0)) throw InvalidArgument("target_rate must be positive");
  const RawTrace trace = validated(input);

  const double ox = remove_offset ? mean_of(trace.x) : 0.0;
  const double oy = remove_offset ? mean_of(trace.y) : 0.0;
  const double oz = remove_offset ? mean_of(trace.z) : 0.0;

  const double t0 = trace.t.front();
  const double span = trace.t.back() - t0;
  // The small slack keeps a grid point that lands on t.back() up to rounding.
  const auto count = static_cast<std::size_t>(std::floor(span * target_rate + 1e-9)) + 1;

  RawTrace out;
  out.source_id = trace.source_id;
  out.t.reserve(count);
  out.x.reserve(count);
  out.y.reserve(count);
  out.z.reserve(count);

  std::size_t seg = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double tk = std::min(t0 + static_cast<double>(k) / target_rate, trace.t.back());
    while (seg + 2 < trace.size() && trace.t[seg + 1] <= tk) ++seg;
    const double ta = trace.t[seg];
    const double tb = trace.t[seg + 1];
    const double w = (tk - ta) / (tb - ta);
    auto lerp = [&](const std::vector<double>& v, double offset) {
      return (v[seg] - offset) + w * (v[seg + 1] - v[seg]);
    };
    out.t.push_back(tk);
    out.x.push_back(lerp(trace.x, ox));
    out.y.push_back(lerp(trace.y, oy));
    out.z.push_back(lerp(trace.z, oz));
  }
  return out;
}

std::vector<std::size_t> detect_peaks(const RawTrace& trace, double threshold_g,
                                      double refractory_s) {
  const std::size_t n = trace.size();
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = sample_magnitude(trace.x[i], trace.y[i], trace.z[i]);
  }
  std::vector<std::size_t> peaks;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(m[i] > threshold_g)) continue;
    if (i > 0 && m[i] < m[i - 1]) continue;
    if (i + 1 < n && m[i] < m[i + 1]) continue;
    if (!peaks.empty() && trace.t[i] - trace.t[peaks.back()] < refractory_s) continue;
    peaks.push_back(i);
  }
  return peaks;
}

TriaxialWindow cut_subwindow(const TriaxialWindow& window, std::size_t length) {
  if (!window.peak_index) throw MissingPeak("window has no peak index");
  const std::size_t n = window.size();
  if (length == 0 || length > n) {
    throw LengthError("cannot cut " + std::to_string(length) +
                      " samples from a window of " + std::to_string(n));
  }
  const std::size_t peak = *window.peak_index;
  const std::size_t half = length / 2;
  const std::size_t start = std::min(peak > half ? peak - half : 0, n - length);

  TriaxialWindow out;
  const auto first = static_cast<std::ptrdiff_t>(start);
  const auto last = static_cast<std::ptrdiff_t>(start + length);
  out.x.assign(window.x.begin() + first, window.x.begin() + last);
  out.y.assign(window.y.begin() + first, window.y.begin() + last);
  out.z.assign(window.z.begin() + first, window.z.begin() + last);
  out.sample_rate = window.sample_rate;
  out.peak_index = peak - start;
  return out;
}

TriaxialWindow cut_trace_window(const RawTrace& trace, std::size_t peak,
                                std::size_t length) {
  TriaxialWindow full;
  full.x = trace.x;
  full.y = trace.y;
  full.z = trace.z;
  full.peak_index = peak;
  if (trace.size() >= 2) full.sample_rate = 1.0 / (trace.t[1] - trace.t[0]);
  TriaxialWindow w = cut_subwindow(full, length);
  w.sample_rate = kSampleRateHz;
  return w;
}

std::vector<double> parse_number_row(std::string_view line, const std::string& file,
                                     std::size_t line_no) {
  std::vector<double> values;
  std::size_t i = 0;
  auto is_sep = [](char c) {
    return c == ',' || c == ' ' || c == '\t' || c == '\r' || c == ';';
  };
  while (i < line.size()) {
    while (i < line.size() && is_sep(line[i])) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !is_sep(line[j])) ++j;
    std::string_view token = line.substr(i, j - i);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc{} || ptr != token.data() + token.size() || !std::isfinite(v)) {
      throw ParseError(file, line_no, "malformed number '" +
                                          std::string(line.substr(i, j - i)) + "'");
    }
    values.push_back(v);
    i = j;
  }
  return values;
}

void write_window_csv(const fs::path& path, const TriaxialWindow& w) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[128];
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", w.x[i], w.y[i], w.z[i]);
    out << buf;
  }
}

std::vector<Recording> parse_dataset1(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  std::string mode = "windows";
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    nlohmann::json manifest;
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(manifest_path.string(), 0, e.what());
    }
    mode = manifest.value("mode", std::string("windows"));
  } else if (!fs::is_directory(root)) {
    throw ParseError(root.string(), 0, "dataset1 directory does not exist");
  }
  if (mode != "windows" && mode != "traces") {
    throw ParseError(manifest_path.string(), 0, "unknown mode '" + mode + "'");
  }

  std::vector<Recording> out;
  for (const Label label : {Label::Adl, Label::Fall}) {
    const auto dir = find_subdir(root, label == Label::Fall ? "fall" : "adl");
    if (!dir) continue;
    for (const auto& file : sorted_files(*dir)) {
      if (lower(file.extension().string()) != ".csv") continue;
      const std::string rel = fs::relative(file, root).generic_string();
      if (mode == "windows") {
        out.push_back({read_window_file(file), label, rel});
      } else {
        RawTrace trace = read_trace_file(file);
        trace.source_id = rel;
        auto windows = windows_from_trace(trace, label);
        for (std::size_t k = 0; k < windows.size(); ++k) {
          const std::string id =
              label == Label::Fall ? rel : rel + "#" + std::to_string(k);
          out.push_back({std::move(windows[k]), label, id});
        }
      }
    }
  }
  return out;
}

std::vector<Recording> parse_dataset2(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw ParseError(root.string(), 0, "dataset2 directory does not exist");
  }
  std::vector<Recording> out;
  bool split_layout = false;
  for (const std::string split : {"train", "test"}) {
    const fs::path dir = root / split;
    if (!fs::is_directory(dir)) continue;
    split_layout = true;
    const fs::path signals = dir / "Inertial Signals";
    append_dataset2_split(signals / ("total_acc_x_" + split + ".txt"),
                          signals / ("total_acc_y_" + split + ".txt"),
                          signals / ("total_acc_z_" + split + ".txt"),
                          dir / ("y_" + split + ".txt"), split, out);
  }
  if (!split_layout) {
    append_dataset2_split(root / "acc_x.txt", root / "acc_y.txt", root / "acc_z.txt",
                          root / "labels.txt", "rows", out);
  }
  return out;
}

}  // namespace falldet
