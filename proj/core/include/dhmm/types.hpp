#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dhmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Tolerance for "sums to one" checks on stored distributions.
inline constexpr double kDistributionTol = 1e-12;

enum class EmissionFamily { kGaussian, kCategorical, kBernoulli };

const char* family_name(EmissionFamily family);
EmissionFamily family_from_name(const std::string& name);

// Distribution over the initial hidden state.
struct InitialDistribution {
  Vector probs;

  int size() const { return static_cast<int>(probs.size()); }
  void validate() const;
};

// Row-stochastic k x k matrix; row i is the next-state distribution
// conditioned on being in state i.
struct TransitionMatrix {
  Matrix rows;

  int size() const { return static_cast<int>(rows.rows()); }
  void validate() const;
};

// Per-state scalar Gaussians.
struct GaussianEmissions {
  Vector mean;    // k
  Vector stddev;  // k, strictly positive
};

// Per-state distribution over a finite vocabulary; k x V row-stochastic.
struct CategoricalEmissions {
  Matrix probs;
};

// Per-state product of independent Bernoullis over D binary features;
// k x D with entries in [0, 1].
struct BernoulliEmissions {
  Matrix probs;
};

struct EmissionModel {
  std::variant<GaussianEmissions, CategoricalEmissions, BernoulliEmissions> dist;

  EmissionFamily family() const;
  int num_states() const;
  // Vocabulary size V (categorical), feature dimension D (Bernoulli), 1 for Gaussian.
  int dim() const;
  void validate() const;
};

struct HmmParams {
  InitialDistribution pi;
  TransitionMatrix a;
  EmissionModel b;

  int num_states() const { return pi.size(); }
  void validate() const;
};

using RealObs = std::vector<double>;
using SymbolObs = std::vector<int>;
using BinaryObs = std::vector<std::vector<std::uint8_t>>;

struct ObservationSequence {
  std::variant<RealObs, SymbolObs, BinaryObs> data;
  std::optional<std::vector<int>> labels;

  EmissionFamily family() const;
  int length() const;
  void validate() const;  // length >= 1; labels (if any) same length
};

// Exact posterior marginals of the hidden chain given one sequence.
struct PosteriorMarginals {
  Matrix unary;                  // T x k, unary(t, i) = q(X_t = i)
  std::vector<Matrix> pairwise;  // T-1 slices, pairwise[t](i, j) = q(X_t = i, X_{t+1} = j)
  double log_likelihood = 0.0;
};

}  // namespace dhmm
