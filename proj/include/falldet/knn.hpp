#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace falldet {

// Dense row-major matrix, one instance per row.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  // Appends a row; the first row fixes the column count.
  void push_back(std::span<const double> values);

  // New matrix holding the given rows in the given order.
  FeatureMatrix select(std::span<const std::size_t> rows) const;

  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Neighbour {
  double distance = 0.0;
  std::size_t index = 0;  // row in the training matrix
};

// sqrt of the coordinate-order sum of squared differences.
double euclidean(std::span<const double> a, std::span<const double> b);

// The k nearest training rows, ascending by distance, ties to the lower row
// index. Uses a bounded max-heap with early abandoning of partial sums, so
// the cost is below a full scan while the returned distances are exactly the
// ones a full scan produces. k is clamped to the number of rows.
std::vector<Neighbour> k_nearest(const FeatureMatrix& train, std::span<const double> query,
                                 std::size_t k);

}  // namespace falldet
