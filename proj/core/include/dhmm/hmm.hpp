#pragma once

#include <random>
#include <vector>

#include "dhmm/types.hpp"

namespace dhmm {

// Log density/mass of observing y in the given state. Returns -inf for
// zero-probability categorical/Bernoulli outcomes; Gaussian values are
// continuous densities and may exceed 0 in log space.
double emission_log_prob(const EmissionModel& b, double y, int state);
double emission_log_prob(const EmissionModel& b, int symbol, int state);
double emission_log_prob(const EmissionModel& b, const std::vector<std::uint8_t>& features,
                         int state);
// Dispatches on the sequence's storage; t indexes the timestep.
double emission_log_prob(const EmissionModel& b, const ObservationSequence& seq, int t,
                         int state);

// Exact unary/pairwise posteriors and log-likelihood via the rescaled
// forward-backward recursions. Emission weights are max-shifted per
// timestep before scaling, so sequences far longer than the toy setting
// stay in range. Throws NumericalError naming the timestep if every
// state has zero emission probability there.
PosteriorMarginals forward_backward(const HmmParams& params, const ObservationSequence& seq);

// log P(Y | params); the normalization constant of forward_backward.
double sequence_log_likelihood(const HmmParams& params, const ObservationSequence& seq);

// log P(X, Y | params) for a fully labeled sequence; -inf when the label
// path crosses a zero-probability transition or emission.
double joint_log_likelihood(const HmmParams& params, const ObservationSequence& seq);

struct ViterbiResult {
  std::vector<int> states;
  double log_joint_prob;
};

// Most likely state sequence. Ties are broken toward the smaller state
// index at every backtracking step and at the final argmax.
ViterbiResult viterbi(const HmmParams& params, const ObservationSequence& seq);

// Draws a labeled sequence of length t_len from the generative model.
ObservationSequence sample_sequence(const HmmParams& params, int t_len, std::mt19937_64& rng);

}  // namespace dhmm
