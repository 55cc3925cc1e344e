#pragma once
// Progressive token pruning: L2-norm importance, top-score selection with
// CLS protection, the step-wise per-layer schedule, and the linear
// training-time anneal of the pruning ratio.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "eat/matrix.hpp"

namespace eat {

struct PruneSchedule {
  std::vector<int> prune_layers{2, 4};
  double target_ratio = 0.3;
  // Training-step bounds of the 0 -> target ramp.
  long long anneal_start_step = 0;
  long long anneal_end_step = 0;

  void validate() const;
};

template <class T>
struct LayerStateT {
  Mat<T> H;                               // t x d
  std::vector<int> kept_original_indices; // strictly increasing, starts at 0
  int layer_index = 0;
};

using LayerState = LayerStateT<float>;

// Euclidean norm of each row.
template <class T>
std::vector<double> importance_scores(const Mat<T>& h) {
  std::vector<double> scores(static_cast<size_t>(h.rows), 0.0);
  for (int i = 0; i < h.rows; ++i) {
    double s = 0;
    for (int j = 0; j < h.cols; ++j) s += double(h(i, j)) * double(h(i, j));
    scores[static_cast<size_t>(i)] = std::sqrt(s);
  }
  return scores;
}

// Keeps CLS plus the ceil((1-p)*(t-1)) highest-scoring other positions,
// in original order. Ties break toward the lower index.
std::vector<int> select_kept(std::span<const double> scores, double p, int cls_index);

// 0 before anneal_start, the target at/after anneal_end, linear between.
// Layers outside the schedule get 0.
double anneal_ratio(long long step, const PruneSchedule& schedule, int layer);

template <class T>
LayerStateT<T> apply_pruning(const LayerStateT<T>& state, std::span<const int> kept) {
  bool has_cls = false;
  int prev = -1;
  for (int idx : kept) {
    if (idx < 0 || idx >= state.H.rows)
      throw std::invalid_argument("apply_pruning: kept index out of range");
    if (idx <= prev)
      throw std::invalid_argument("apply_pruning: kept must be strictly increasing");
    prev = idx;
    if (idx == 0) has_cls = true;
  }
  if (!has_cls) throw std::invalid_argument("apply_pruning: kept must contain CLS");

  LayerStateT<T> out;
  out.H = gather_rows(state.H, kept);
  out.kept_original_indices.reserve(kept.size());
  for (int idx : kept)
    out.kept_original_indices.push_back(state.kept_original_indices[static_cast<size_t>(idx)]);
  out.layer_index = state.layer_index;
  return out;
}

}  // namespace eat
