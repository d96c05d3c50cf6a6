#pragma once

#include <cmath>
#include <vector>

namespace rankreward::testing {

/// Every weak ordering (ordered tie-aware tier partition) of the ids 1..k,
/// by brute force over all label assignments whose used labels are 0..M-1.
inline std::vector<std::vector<std::vector<int>>> all_tier_partitions(int k) {
  std::vector<std::vector<std::vector<int>>> out;
  std::vector<int> label(k, 0);
  for (;;) {
    int max_label = -1;
    for (int l : label) max_label = l > max_label ? l : max_label;
    std::vector<bool> used(max_label + 1, false);
    for (int l : label) used[l] = true;
    bool contiguous = true;
    for (bool u : used) contiguous = contiguous && u;
    if (contiguous) {
      std::vector<std::vector<int>> tiers(max_label + 1);
      for (int i = 0; i < k; ++i) tiers[label[i]].push_back(i + 1);
      out.push_back(std::move(tiers));
    }
    int pos = 0;
    while (pos < k && ++label[pos] == k) label[pos++] = 0;
    if (pos == k) break;
  }
  return out;
}

/// Tie-aware pairwise win rate: 1 per lower-ranked peer, 0.5 per tie, 0 per
/// higher-ranked peer, over all ordered pairs, divided by k - 1.
inline std::vector<double> win_rate_oracle(const std::vector<std::vector<int>>& tiers, int k) {
  std::vector<int> tier_of(k + 1, -1);
  for (int m = 0; m < static_cast<int>(tiers.size()); ++m) {
    for (int id : tiers[m]) tier_of[id] = m;
  }
  std::vector<double> out(k + 1, 0.0);
  for (int i = 1; i <= k; ++i) {
    double points = 0.0;
    for (int j = 1; j <= k; ++j) {
      if (i == j) continue;
      if (tier_of[i] < tier_of[j]) {
        points += 1.0;
      } else if (tier_of[i] == tier_of[j]) {
        points += 0.5;
      }
    }
    out[i] = points / static_cast<double>(k - 1);
  }
  return out;
}

/// Mean via a compensated (Neumaier) sum, so rounding in the addends does not
/// accumulate into the result.
inline double compensated_mean(const std::vector<double>& xs) {
  double sum = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    comp += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(xs.size());
}

}  // namespace rankreward::testing
