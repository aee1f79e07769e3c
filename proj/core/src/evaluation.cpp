#include "dhmm/evaluation.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dhmm/errors.hpp"

namespace dhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment (Jonker-Volgenant style) on an
// n x n cost matrix. Rows/columns are 1-indexed internally.
std::vector<int> assignment_raw(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> match(static_cast<std::size_t>(n) + 1, 0);  // column -> row
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_v(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < min_v[static_cast<std::size_t>(j)]) {
          min_v[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (min_v[static_cast<std::size_t>(j)] < delta) {
          delta = min_v[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          min_v[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    row_to_col[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

double assignment_cost(const Matrix& cost, const std::vector<int>& mapping) {
  double total = 0.0;
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    total += cost(static_cast<Eigen::Index>(i), mapping[i]);
  }
  return total;
}

}  // namespace

std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n == 0) {
    throw InvalidInputError("solve_assignment: cost matrix must be square and non-empty");
  }
  const double optimum = assignment_cost(cost, assignment_raw(cost));

  // Greedy lexicographic refinement: fix each row to the smallest column
  // that still admits an optimal completion. Equal-cost comparisons use a
  // scale-relative slack to absorb potential roundoff in the duals.
  const double slack = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff());
  std::vector<int> mapping(static_cast<std::size_t>(n), -1);
  std::vector<char> column_taken(static_cast<std::size_t>(n), 0);
  double fixed_cost = 0.0;
  for (int i = 0; i < n; ++i) {
    bool assigned = false;
    for (int j = 0; j < n && !assigned; ++j) {
      if (column_taken[static_cast<std::size_t>(j)]) continue;
      // Cost of the best completion with rows > i on columns != taken + {j}.
      const int m = n - i - 1;
      double completion = 0.0;
      if (m > 0) {
        Matrix sub(m, m);
        int si = 0;
        for (int r = i + 1; r < n; ++r, ++si) {
          int sj = 0;
          for (int c = 0; c < n; ++c) {
            if (column_taken[static_cast<std::size_t>(c)] || c == j) continue;
            sub(si, sj++) = cost(r, c);
          }
        }
        completion = assignment_cost(sub, assignment_raw(sub));
      }
      if (fixed_cost + cost(i, j) + completion <= optimum + slack) {
        mapping[static_cast<std::size_t>(i)] = j;
        column_taken[static_cast<std::size_t>(j)] = 1;
        fixed_cost += cost(i, j);
        assigned = true;
      }
    }
    if (!assigned) {
      throw NumericalError("solve_assignment: failed to extend a partial optimal assignment");
    }
  }
  return mapping;
}

namespace {

Matrix confusion_counts(const LabelSequences& pred, const LabelSequences& gold, int k) {
  if (k < 1) throw InvalidInputError("state count must be >= 1");
  if (pred.size() != gold.size()) {
    throw InvalidInputError("prediction and gold have different sequence counts: " +
                            std::to_string(pred.size()) + " vs " + std::to_string(gold.size()));
  }
  Matrix conf = Matrix::Zero(k, k);
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size()) {
      throw InvalidInputError("sequence " + std::to_string(s) + ": length mismatch");
    }
    for (std::size_t t = 0; t < pred[s].size(); ++t) {
      const int p = pred[s][t];
      const int g = gold[s][t];
      if (p < 0 || p >= k || g < 0 || g >= k) {
        throw InvalidInputError("sequence " + std::to_string(s) + ": label out of range [0, " +
                                std::to_string(k) + ")");
      }
      conf(p, g) += 1.0;
    }
  }
  return conf;
}

}  // namespace

Alignment hungarian_align(const LabelSequences& pred, const LabelSequences& gold, int k) {
  const Matrix conf = confusion_counts(pred, gold, k);
  const double total = conf.sum();
  // Minimizing mismatches == maximizing matches.
  Matrix cost(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      cost(i, j) = total - conf(i, j);
    }
  }
  Alignment alignment;
  alignment.mapping = solve_assignment(cost);
  double matched = 0.0;
  for (int i = 0; i < k; ++i) {
    matched += conf(i, alignment.mapping[static_cast<std::size_t>(i)]);
  }
  alignment.cost = total - matched;
  return alignment;
}

double one_to_one_accuracy(const LabelSequences& pred, const LabelSequences& gold, int k) {
  const Matrix conf = confusion_counts(pred, gold, k);
  const double total = conf.sum();
  if (total == 0.0) throw InvalidInputError("one_to_one_accuracy: no labeled positions");
  const Alignment alignment = hungarian_align(pred, gold, k);
  return (total - alignment.cost) / total;
}

StateHistogram state_histogram(const LabelSequences& labels, int k) {
  if (k < 1) throw InvalidInputError("state count must be >= 1");
  StateHistogram hist;
  hist.counts.assign(static_cast<std::size_t>(k), 0);
  for (std::size_t s = 0; s < labels.size(); ++s) {
    for (int label : labels[s]) {
      if (label < 0 || label >= k) {
        throw InvalidInputError("sequence " + std::to_string(s) + ": label " +
                                std::to_string(label) + " out of range [0, " + std::to_string(k) +
                                ")");
      }
      ++hist.counts[static_cast<std::size_t>(label)];
      ++hist.total;
    }
  }
  return hist;
}

int effective_state_count(const StateHistogram& hist, long long sigma_f) {
  if (sigma_f < 0) throw InvalidInputError("sigma_f must be >= 0");
  int count = 0;
  for (long long c : hist.counts) {
    if (c > sigma_f) ++count;  // strictly greater: ties at the threshold are omitted
  }
  return count;
}

}  // namespace dhmm
