#include "gklab/fenwick.hpp"

#include <bit>

namespace gk {

void FenwickTree::assign(std::vector<double> weights) {
  w_ = std::move(weights);
  rebuild();
}

void FenwickTree::rebuild() {
  const std::size_t n = w_.size();
  tree_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += w_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n) tree_[parent] += tree_[i];
  }
  total_ = exact_total();
  top_bit_ = n == 0 ? 0 : std::bit_floor(n);
}

void FenwickTree::set(std::size_t i, double v) {
  const double delta = v - w_[i];
  if (delta == 0.0) return;
  w_[i] = v;
  total_ += delta;
  for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
}

double FenwickTree::exact_total() const {
  double s = 0.0;
  for (double v : w_) s += v;
  return s;
}

double FenwickTree::prefix(std::size_t i) const {
  double s = 0.0;
  for (std::size_t k = i; k > 0; k -= k & (~k + 1)) s += tree_[k];
  return s;
}

std::size_t FenwickTree::find(double u) const {
  std::size_t pos = 0;
  for (std::size_t step = top_bit_; step > 0; step >>= 1) {
    const std::size_t next = pos + step;
    if (next < tree_.size() && tree_[next] <= u) {
      pos = next;
      u -= tree_[next];
    }
  }
  // pos is the count of weights whose prefix sum is <= u.
  if (pos >= w_.size()) pos = w_.size() - 1;
  while (pos > 0 && w_[pos] == 0.0) --pos;
  return pos;
}

}  // namespace gk
