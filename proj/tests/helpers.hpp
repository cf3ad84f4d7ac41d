#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "falldet/ingest.hpp"
#include "falldet/knn.hpp"
#include "falldet/rng.hpp"

namespace testing {

inline falldet::TriaxialWindow random_window(falldet::Rng& rng, std::size_t length,
                                             double spread = 2.0) {
  falldet::TriaxialWindow w;
  for (std::size_t i = 0; i < length; ++i) {
    w.x.push_back(rng.uniform(-spread, spread));
    w.y.push_back(rng.uniform(-spread, spread));
    w.z.push_back(rng.uniform(-spread, spread));
  }
  return w;
}

inline falldet::FeatureMatrix gaussian_cloud(falldet::Rng& rng, std::size_t rows, std::size_t cols,
                                             double centre = 0.0, double sd = 1.0) {
  falldet::FeatureMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : m.row(r)) v = rng.normal(centre, sd);
  }
  return m;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("falldet-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
