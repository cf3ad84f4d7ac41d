#include "falldet/knn.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "falldet/errors.hpp"

namespace falldet {

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  for (const auto& r : rows) m.push_back(r);
  return m;
}

void FeatureMatrix::push_back(std::span<const double> values) {
  if (rows_ == 0 && data_.empty()) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw DimensionError("row of dimension " + std::to_string(values.size()) +
                         " added to matrix of dimension " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  FeatureMatrix out(rows.size(), cols_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<Neighbour> k_nearest(const FeatureMatrix& train, std::span<const double> query,
                                 std::size_t k) {
  if (train.empty()) return {};
  if (query.size() != train.cols()) {
    throw DimensionError("query dimension " + std::to_string(query.size()) +
                         " does not match training dimension " + std::to_string(train.cols()));
  }
  k = std::min(k, train.rows());
  if (k == 0) return {};

  // Max-heap on (squared distance, index): the top is the current k-th best.
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry> heap;
  const std::size_t d = query.size();

  for (std::size_t r = 0; r < train.rows(); ++r) {
    const auto row = train.row(r);
    const bool full = heap.size() == k;
    const double bound = full ? heap.top().first : 0.0;
    double s = 0.0;
    bool abandoned = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = query[j] - row[j];
      s += diff * diff;
      // Rows are visited in ascending index order, so a later row that only
      // ties the current worst can never displace it.
      if (full && s >= bound) {
        abandoned = true;
        break;
      }
    }
    if (abandoned) continue;
    if (!full) {
      heap.emplace(s, r);
    } else if (s < bound) {
      heap.pop();
      heap.emplace(s, r);
    }
  }

  std::vector<Neighbour> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = {std::sqrt(heap.top().first), heap.top().second};
    heap.pop();
  }
  return out;
}

}  // namespace falldet
