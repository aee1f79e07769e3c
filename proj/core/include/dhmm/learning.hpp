#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dhmm/data_io.hpp"
#include "dhmm/types.hpp"

namespace dhmm {

enum class EmissionInitStyle {
  kStandard,  // means ~ N(0,1), variances ~ Gamma(2, 1)
  kPooled,    // overlapped start on the data: means ~ N(pooled mean, pooled sd / 4),
              // variances ~ Gamma(2, 2 * pooled variance)
};

struct TrainConfig {
  double alpha = 0.0;         // diversity weight
  double alpha_anchor = 0.0;  // supervised anchor weight toward the counted matrix
  int max_em_iters = 200;
  double em_tol = 1e-6;       // absolute objective-change stop
  int inner_max_iters = 300;
  double inner_tol = 1e-9;    // stop when the transition subproblem moves less than this
  double init_step = 0.1;     // first step size tried by the line search
  double backtrack_factor = 0.5;
  double dirichlet_eta = 3.0; // concentration for pi / transition-row initialization
  std::uint64_t seed = 42;
  EmissionInitStyle emission_init = EmissionInitStyle::kPooled;
  int n_threads = 1;
  // Additive pseudocount applied by supervised counting (0 = exact MLE).
  // Nonzero values keep held-out decoding away from impossible events.
  double count_smoothing = 0.0;

  void validate() const;
};

struct EmIterationRecord {
  int iteration = 0;
  double log_likelihood = 0.0;  // data term (marginal or joint, per mode)
  double log_det_term = 0.0;    // alpha * log det of the row kernel
  double anchor_term = 0.0;     // -alpha_anchor * ||A - A0||^2, supervised only
  double objective = 0.0;       // sum of the parts
};

struct InnerStepRecord {
  int em_iteration = 0;
  int inner_iteration = 0;
  double subproblem_value = 0.0;
};

struct ObjectiveTrace {
  std::vector<EmIterationRecord> em;
  std::vector<InnerStepRecord> inner;
  std::vector<std::string> warnings;
};

// Expected counts accumulated over a dataset by one E-step (or exact
// counts, in the supervised case).
struct SufficientStats {
  EmissionFamily family = EmissionFamily::kGaussian;
  Vector initial_counts;   // k
  Matrix pair_counts;      // k x k
  Vector state_weight;     // k, total posterior mass per state
  Vector weighted_sum;     // k, gaussian only
  Vector weighted_sq_sum;  // k, gaussian only
  Matrix weighted_obs;     // k x V symbol counts, or k x D feature sums
  std::size_t n_sequences = 0;

  static SufficientStats zeros(int k, EmissionFamily family, int dim);
  void add(const SufficientStats& other);
};

struct TrainedModel {
  HmmParams params;
  ObjectiveTrace trace;
  TrainConfig config;
  bool converged = false;
};

// What to build emissions over: the family plus V (categorical) or D
// (bernoulli); dim is ignored for Gaussian.
struct EmissionSpec {
  EmissionFamily family = EmissionFamily::kGaussian;
  int dim = 0;

  static EmissionSpec for_corpus(const Corpus& corpus);
};

// Euclidean projection onto the probability simplex (sort-based).
Vector project_to_simplex(const Eigen::Ref<const Vector>& v);

// Observation statistics used by the pooled initialization style.
struct PooledStats {
  double mean = 0.0;
  double variance = 1.0;
};
PooledStats pooled_observation_stats(const Corpus& corpus);

// Random starting parameters: pi and transition rows from a symmetric
// Dirichlet, emissions per the configured style.
HmmParams init_params(int k, const EmissionSpec& spec, const TrainConfig& cfg,
                      std::mt19937_64& rng, const PooledStats* pooled = nullptr);

// Accumulates forward-backward posteriors over the corpus. Sequences are
// processed in fixed-size blocks and block results are reduced in block
// order, so the result is bit-identical for any thread count.
std::pair<SufficientStats, double> e_step(const HmmParams& params, const Corpus& corpus,
                                          int n_threads = 1);

InitialDistribution m_step_pi(const SufficientStats& stats);

// Weighted MLE per family. States with zero posterior mass keep their
// previous parameters; each such event appends a warning.
EmissionModel m_step_emissions(const SufficientStats& stats, const EmissionModel& previous,
                               std::vector<std::string>* warnings);

// Row-normalized pair counts; a zero row becomes uniform with a warning.
TransitionMatrix update_transitions_closed_form(const SufficientStats& stats,
                                                std::vector<std::string>* warnings = nullptr);

struct InnerUpdateResult {
  TransitionMatrix a;
  std::vector<double> objective_values;  // accepted subproblem values, non-decreasing
  bool converged = false;
};

// Projected gradient ascent on the transition subproblem
//   sum_ij C_ij log A_ij + alpha log det K(A) [- alpha_anchor ||A - A0||^2]
// with backtracking line search and per-row simplex projection. The
// anchor term participates only when anchor != nullptr.
InnerUpdateResult update_transitions_diversified(const SufficientStats& stats,
                                                 const TransitionMatrix& a_old,
                                                 const TrainConfig& cfg,
                                                 const TransitionMatrix* anchor = nullptr,
                                                 ObjectiveTrace* trace = nullptr,
                                                 int em_iteration = 0);

// MAP-EM for the diversified objective; plain EM falls out at alpha = 0.
TrainedModel em_fit_unsupervised(const Corpus& corpus, int k, const EmissionSpec& spec,
                                 const TrainConfig& cfg);

struct CountedParams {
  InitialDistribution pi;
  TransitionMatrix a;
  EmissionModel b;
  Matrix pair_counts;  // raw transition counts backing the supervised gradient
  std::vector<std::string> warnings;
};

// Closed-form counting estimates from a fully labeled corpus. A nonzero
// pseudocount is spread over start states, transitions and discrete
// emission events before normalizing.
CountedParams count_statistics(const Corpus& corpus, int k, const EmissionSpec& spec,
                               double pseudocount = 0.0);

// Counts pi and B, then refines the transition matrix by projected
// gradient ascent on the anchored diversified objective.
TrainedModel fit_supervised(const Corpus& corpus, int k, const EmissionSpec& spec,
                            const TrainConfig& cfg);

// Three fixed random probes comparing the analytic log-det gradient to
// central finite differences; throws NumericalError on disagreement.
// Called at the start of every gradient-based training run.
void validate_gradient_probes();

}  // namespace dhmm
