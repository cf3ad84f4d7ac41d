#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace falldet {

inline constexpr double kSampleRateHz = 50.0;
inline constexpr double kPeakThresholdG = 1.5;
inline constexpr double kRefractorySeconds = 6.0;
inline constexpr std::size_t kFullWindowLength = 300;  // 6 s at 50 Hz
inline constexpr std::size_t kShortWindowLength = 51;  // 1 s
inline constexpr std::size_t kLongWindowLength = 128;  // 2.56 s

// FALL is the positive class everywhere downstream.
enum class Label : unsigned char { Adl, Fall };

std::string_view to_string(Label label);
Label parse_label(std::string_view text);

// Irregularly sampled triaxial recording; time in seconds, acceleration in g.
struct RawTrace {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  std::string source_id;

  std::size_t size() const noexcept { return t.size(); }
};

// Drops samples whose timestamp does not advance past the previous kept one
// and checks the axis lengths. Throws InvalidTrace when fewer than two
// samples remain or the axes disagree in length.
RawTrace validated(RawTrace trace);

struct TriaxialWindow {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  double sample_rate = kSampleRateHz;
  std::optional<std::size_t> peak_index;

  std::size_t size() const noexcept { return x.size(); }
};

// Index of the largest magnitude sample (first on ties).
std::size_t argmax_magnitude(const TriaxialWindow& window);

// Linear resampling onto a uniform grid at target_rate spanning
// [t.front(), t.back()]. With remove_offset, each axis has the mean of its
// input samples subtracted before interpolation.
RawTrace resample_trace(const RawTrace& trace, double target_rate,
                        bool remove_offset = true);

// Local maxima of the magnitude strictly above threshold_g. A peak within
// refractory_s of the previously emitted peak is suppressed.
std::vector<std::size_t> detect_peaks(const RawTrace& trace, double threshold_g,
                                      double refractory_s = kRefractorySeconds);

// Length-L slice with the parent's peak at offset floor(L/2), clamped so the
// slice stays inside the parent.
TriaxialWindow cut_subwindow(const TriaxialWindow& window, std::size_t length);

// Same centring rule applied to a uniformly sampled trace.
TriaxialWindow cut_trace_window(const RawTrace& trace, std::size_t peak,
                                std::size_t length);

struct Recording {
  TriaxialWindow window;
  Label label = Label::Adl;
  std::string source_id;
};

// Dataset1 layout: <root>/manifest.json declaring {"mode": "windows"|"traces"}
// plus <root>/adl/*.csv and <root>/fall/*.csv. Windows mode files hold 300
// headerless "x,y,z" rows; traces mode files hold a "t,x,y,z" header and an
// irregular recording that is resampled, peak-triggered and cut into 300
// sample windows (one per peak for ADL, the strongest peak for FALL).
std::vector<Recording> parse_dataset1(const std::filesystem::path& root);

// Dataset2 layout: either the published train/ and test/ split directories
// ("Inertial Signals/total_acc_{x,y,z}_<split>.txt" and "y_<split>.txt") or a
// flat directory with acc_x.txt, acc_y.txt, acc_z.txt and labels.txt. Each
// row holds 128 values separated by spaces or commas. Rows whose label reads
// FALL are skipped; every other label is an activity of daily living.
std::vector<Recording> parse_dataset2(const std::filesystem::path& root);

// Shared helpers for reading the dataset files.
std::vector<double> parse_number_row(std::string_view line,
                                     const std::string& file,
                                     std::size_t line_no);
void write_window_csv(const std::filesystem::path& path,
                      const TriaxialWindow& window);

}  // namespace falldet
