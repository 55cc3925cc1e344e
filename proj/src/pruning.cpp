#include "eat/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace eat {

void PruneSchedule::validate() const {
  if (target_ratio < 0.0 || target_ratio >= 1.0)
    throw std::invalid_argument("PruneSchedule: target_ratio must be in [0, 1)");
  if (anneal_start_step > anneal_end_step)
    throw std::invalid_argument("PruneSchedule: anneal_start > anneal_end");
  for (size_t i = 1; i < prune_layers.size(); ++i)
    if (prune_layers[i] <= prune_layers[i - 1])
      throw std::invalid_argument("PruneSchedule: prune_layers must be strictly increasing");
}

std::vector<int> select_kept(std::span<const double> scores, double p, int cls_index) {
  const int t = static_cast<int>(scores.size());
  if (t < 1) throw std::invalid_argument("select_kept: empty scores");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("select_kept: p must be in [0, 1]");
  if (cls_index < 0 || cls_index >= t)
    throw std::invalid_argument("select_kept: cls_index out of range");

  // ceil((1-p)(t-1)) others; the tiny slack keeps representation noise in p
  // (e.g. 1 - 0.3 stored slightly above 0.7) from bumping the ceiling.
  const int keep_others =
      static_cast<int>(std::ceil((1.0 - p) * double(t - 1) - 1e-9));

  std::vector<int> order;
  order.reserve(static_cast<size_t>(t) - 1);
  for (int i = 0; i < t; ++i)
    if (i != cls_index) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)])
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    return a < b;
  });
  order.resize(static_cast<size_t>(std::max(0, keep_others)));
  order.push_back(cls_index);
  std::sort(order.begin(), order.end());
  return order;
}

double anneal_ratio(long long step, const PruneSchedule& schedule, int layer) {
  if (std::find(schedule.prune_layers.begin(), schedule.prune_layers.end(), layer) ==
      schedule.prune_layers.end())
    return 0.0;
  if (step <= schedule.anneal_start_step) return 0.0;
  if (step >= schedule.anneal_end_step) return schedule.target_ratio;
  const double span = double(schedule.anneal_end_step - schedule.anneal_start_step);
  return schedule.target_ratio * double(step - schedule.anneal_start_step) / span;
}

}  // namespace eat
