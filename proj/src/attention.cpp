#include "eat/attention.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace eat {

SparseMask build_sparse_mask(int t, int k, int cls_index) {
  if (t < 1) throw std::invalid_argument("build_sparse_mask: t must be >= 1");
  if (k < 0 || (k % 2) != 0)
    throw std::invalid_argument("build_sparse_mask: k must be even and >= 0, got " +
                                std::to_string(k));
  if (cls_index != 0)
    throw std::invalid_argument("build_sparse_mask: CLS must sit at index 0");

  SparseMask mask;
  mask.t = t;
  mask.k = k;
  mask.cls_index = cls_index;
  mask.bits.assign(static_cast<size_t>(t) * mask.words_per_row(), 0);

  const int half = k / 2;
  for (int i = 0; i < t; ++i) {
    mask.set(i, 0);  // everyone attends to CLS
    mask.set(0, i);  // CLS attends to everyone
    mask.set(i, i);
    const int lo = std::max(0, i - half);
    const int hi = std::min(t - 1, i + half);
    for (int j = lo; j <= hi; ++j) mask.set(i, j);
  }
  return mask;
}

long long count_allowed_pairs(const SparseMask& mask) {
  long long count = 0;
  for (uint64_t w : mask.bits) count += std::popcount(w);
  return count;
}

}  // namespace eat
