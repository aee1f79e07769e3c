#pragma once

#include <vector>

#include "dhmm/types.hpp"

namespace dhmm {

using LabelSequences = std::vector<std::vector<int>>;

// Bijection from predicted states onto gold states, plus the number of
// mismatched positions under it.
struct Alignment {
  std::vector<int> mapping;
  double cost = 0.0;
};

// Minimum-cost (maximum-match) assignment over a square cost matrix,
// O(n^3). Among equal-cost assignments the lexicographically smallest
// permutation is returned.
std::vector<int> solve_assignment(const Matrix& cost);

// Optimal matching of predicted state identities to gold identities over
// the pooled confusion counts. Both sides must use the same k.
Alignment hungarian_align(const LabelSequences& pred, const LabelSequences& gold, int k);

// Fraction of positions labeled correctly after the optimal relabeling.
double one_to_one_accuracy(const LabelSequences& pred, const LabelSequences& gold, int k);

struct StateHistogram {
  std::vector<long long> counts;
  long long total = 0;
};

StateHistogram state_histogram(const LabelSequences& labels, int k);

// Number of states whose frequency strictly exceeds the threshold.
int effective_state_count(const StateHistogram& hist, long long sigma_f);

}  // namespace dhmm
