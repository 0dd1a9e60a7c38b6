#pragma once

#include <cstddef>
#include <vector>

namespace gk {

/// Binary indexed tree over nonnegative weights: O(log n) point update and
/// O(log n) selection of the index whose cumulative interval contains u.
class FenwickTree {
 public:
  FenwickTree() = default;
  explicit FenwickTree(std::vector<double> weights) { assign(std::move(weights)); }

  void assign(std::vector<double> weights);
  /// Set weight i to v; the cached total is updated incrementally.
  void set(std::size_t i, double v);

  [[nodiscard]] double weight(std::size_t i) const { return w_[i]; }
  [[nodiscard]] std::size_t size() const { return w_.size(); }
  /// Incrementally maintained total.
  [[nodiscard]] double total() const { return total_; }
  /// Total recomputed from scratch by plain summation.
  [[nodiscard]] double exact_total() const;
  /// Sum of weights [0, i).
  [[nodiscard]] double prefix(std::size_t i) const;

  /// Smallest i with prefix(i + 1) > u, for u in [0, total()). Rounding at the
  /// upper end is clamped onto the last positive weight.
  [[nodiscard]] std::size_t find(double u) const;

  /// Rebuild the tree and the cached total from the stored weights.
  void rebuild();

 private:
  std::vector<double> w_;
  std::vector<double> tree_;  // 1-based
  double total_ = 0.0;
  std::size_t top_bit_ = 0;
};

}  // namespace gk
