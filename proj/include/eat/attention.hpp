#pragma once
// Windowed sparse attention pattern: every non-CLS token attends to a
// symmetric local window of k neighbors (k/2 left, k/2 right, clipped at
// the sequence ends) plus itself plus CLS; CLS attends everywhere and is
// attended from everywhere. The pattern is built over the compacted
// (post-pruning) sequence order, with CLS always at index 0.

#include <cstdint>
#include <span>
#include <vector>

#include "eat/autograd.hpp"
#include "eat/matrix.hpp"

namespace eat {

// Additive logit penalty for disallowed positions. Decisively zeroes the
// attention weight after softmax without producing NaN/inf arithmetic.
inline constexpr float kMaskPenalty = -1e9f;

struct SparseMask {
  int t = 0;
  int k = 0;
  int cls_index = 0;
  std::vector<uint64_t> bits;  // row-major bitset, words_per_row() words per row

  int words_per_row() const { return (t + 63) / 64; }

  bool allowed(int i, int j) const {
    return (bits[static_cast<size_t>(i) * words_per_row() + (j >> 6)] >>
            (j & 63)) & 1u;
  }

  void set(int i, int j) {
    bits[static_cast<size_t>(i) * words_per_row() + (j >> 6)] |= uint64_t(1)
                                                                 << (j & 63);
  }
};

SparseMask build_sparse_mask(int t, int k, int cls_index);

long long count_allowed_pairs(const SparseMask& mask);

// 0 where allowed, kMaskPenalty where not.
template <class T>
Mat<T> penalty_matrix(const SparseMask& mask) {
  Mat<T> p(mask.t, mask.t);
  for (int i = 0; i < mask.t; ++i)
    for (int j = 0; j < mask.t; ++j)
      if (!mask.allowed(i, j)) p(i, j) = T(kMaskPenalty);
  return p;
}

// Per-head projection weights. heads * head_dim must equal the model width.
template <class T>
struct AttentionParamsT {
  std::vector<Mat<T>> wq, wk, wv;  // each d x head_dim
  std::vector<Mat<T>> wo;          // each head_dim x d
  int heads = 0;
  int head_dim = 0;
};

using AttentionParams = AttentionParamsT<float>;

// Builds the multi-head attention subgraph on the tape. Disallowed logits
// receive the additive penalty before softmax; the result is numerically
// the masked-dense computation, while pair accounting stays sparse via
// count_allowed_pairs.
template <class T>
int attend_graph(Tape<T>& tape, int x, std::span<const int> wq,
                 std::span<const int> wk, std::span<const int> wv,
                 std::span<const int> wo, const SparseMask& mask, int head_dim) {
  const Mat<T> penalty = penalty_matrix<T>(mask);
  const T inv_sqrt = T(1) / std::sqrt(T(head_dim));
  int out = -1;
  for (size_t h = 0; h < wq.size(); ++h) {
    const int q = tape.matmul(x, wq[h]);
    const int k = tape.matmul(x, wk[h]);
    const int v = tape.matmul(x, wv[h]);
    int s = tape.scale(tape.matmul(q, tape.transpose(k)), inv_sqrt);
    s = tape.add_constant(s, penalty);
    const int a = tape.softmax_rows(s);
    const int mixed = tape.matmul(tape.matmul(a, v), wo[h]);
    out = (out < 0) ? mixed : tape.add(out, mixed);
  }
  return out;
}

// Value-level attention over immutable inputs; shares the graph builder
// with the training path.
template <class T>
Mat<T> attend(const Mat<T>& h, const AttentionParamsT<T>& params,
              const SparseMask& mask) {
  if (h.rows != mask.t) throw DimensionError("attend: H rows != mask.t");
  if (params.heads * params.head_dim != h.cols)
    throw DimensionError("attend: heads*head_dim != model width");
  Tape<T> tape;
  const int x = tape.leaf(h);
  std::vector<int> wq, wk, wv, wo;
  for (int i = 0; i < params.heads; ++i) {
    wq.push_back(tape.leaf(params.wq[i]));
    wk.push_back(tape.leaf(params.wk[i]));
    wv.push_back(tape.leaf(params.wv[i]));
    wo.push_back(tape.leaf(params.wo[i]));
  }
  const int out = attend_graph(tape, x, wq, wk, wv, wo, mask, params.head_dim);
  return tape.value(out);
}

}  // namespace eat
