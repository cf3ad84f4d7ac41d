#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "falldet/ingest.hpp"

namespace falldet {

// Synthetic, explicitly non-physiological windows for exercising the
// pipeline without the public datasets.
//   ADL:  smooth oscillation around 1 g on the vertical axis.
//   FALL: upright, a free-fall dip, an impact spike above 1.5 g at the
//         window centre with two rebounds, then inactivity with gravity on
//         another axis.
struct SynthOptions {
  std::size_t adl = 200;
  std::size_t falls = 20;
  std::uint64_t seed = 7;
};

TriaxialWindow synth_adl_window(std::size_t length, std::uint64_t seed);
TriaxialWindow synth_fall_window(std::size_t length, std::uint64_t seed);

std::vector<Recording> synthesize_dataset1(const SynthOptions& options);

// 128-sample ADL windows in the dataset2 style (gravity on the x axis).
std::vector<Recording> synthesize_dataset2(std::size_t count, std::uint64_t seed);

// Writes windows-mode dataset1 files plus a manifest marking them synthetic.
void write_dataset1(const std::filesystem::path& root, std::span<const Recording> recordings,
                    std::uint64_t seed);

// Writes the flat dataset2 layout (acc_{x,y,z}.txt and labels.txt).
void write_dataset2(const std::filesystem::path& root, std::span<const Recording> recordings);

}  // namespace falldet
