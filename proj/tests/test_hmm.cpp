#include <doctest.h>

#include <cmath>
#include <random>

#include "dhmm/errors.hpp"
#include "dhmm/hmm.hpp"
#include "oracles.hpp"

using namespace dhmm;

namespace {

HmmParams two_state_categorical(Matrix a, Matrix b, Vector pi) {
  HmmParams params;
  params.pi.probs = std::move(pi);
  params.a.rows = std::move(a);
  CategoricalEmissions c;
  c.probs = std::move(b);
  params.b.dist = std::move(c);
  return params;
}

void check_marginal_invariants(const PosteriorMarginals& post) {
  const int t_len = static_cast<int>(post.unary.rows());
  for (int t = 0; t < t_len; ++t) {
    CHECK(post.unary.row(t).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int t = 0; t + 1 < t_len; ++t) {
    const Matrix& slice = post.pairwise[static_cast<std::size_t>(t)];
    CHECK(slice.sum() == doctest::Approx(1.0).epsilon(1e-9));
    // Row/column marginalization agrees with the unaries.
    for (int i = 0; i < slice.rows(); ++i) {
      CHECK(slice.row(i).sum() == doctest::Approx(post.unary(t, i)).epsilon(1e-9));
      CHECK(slice.col(i).sum() == doctest::Approx(post.unary(t + 1, i)).epsilon(1e-9));
    }
  }
}

}  // namespace

TEST_CASE("emission log probabilities match hand values") {
  GaussianEmissions g;
  g.mean = Vector::Zero(1);
  g.stddev = Vector::Ones(1);
  EmissionModel gauss{g};
  CHECK(emission_log_prob(gauss, 0.0, 0) ==
        doctest::Approx(std::log(1.0 / std::sqrt(2.0 * M_PI))).epsilon(1e-12));

  CategoricalEmissions c;
  c.probs.resize(1, 2);
  c.probs << 0.5, 0.5;
  EmissionModel cat{c};
  CHECK(emission_log_prob(cat, 0, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));

  BernoulliEmissions bern;
  bern.probs.resize(1, 2);
  bern.probs << 0.9, 0.1;
  EmissionModel prod{bern};
  // p(y=(1,0)) = 0.9 * 0.9
  CHECK(emission_log_prob(prod, std::vector<std::uint8_t>{1, 0}, 0) ==
        doctest::Approx(std::log(0.81)).epsilon(1e-12));
}

TEST_CASE("emission log prob rejects mismatched inputs") {
  GaussianEmissions g;
  g.mean = Vector::Zero(2);
  g.stddev = Vector::Ones(2);
  EmissionModel gauss{g};
  CHECK_THROWS_AS(emission_log_prob(gauss, 1, 0), InvalidInputError);       // symbol vs gaussian
  CHECK_THROWS_AS(emission_log_prob(gauss, 0.0, 5), InvalidInputError);     // state range

  BernoulliEmissions bern;
  bern.probs = Matrix::Constant(1, 4, 0.5);
  EmissionModel prod{bern};
  CHECK_THROWS_AS(emission_log_prob(prod, std::vector<std::uint8_t>{1, 0}, 0), InvalidInputError);
}

TEST_CASE("forward-backward on a single step reduces to the prior") {
  auto params = two_state_categorical((Matrix(2, 2) << 0.7, 0.3, 0.2, 0.8).finished(),
                                      (Matrix(2, 2) << 0.9, 0.1, 0.4, 0.6).finished(),
                                      (Vector(2) << 0.25, 0.75).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0};
  const PosteriorMarginals post = forward_backward(params, seq);
  const double z = 0.25 * 0.9 + 0.75 * 0.4;
  CHECK(post.unary(0, 0) == doctest::Approx(0.25 * 0.9 / z).epsilon(1e-12));
  CHECK(post.unary(0, 1) == doctest::Approx(0.75 * 0.4 / z).epsilon(1e-12));
  CHECK(post.pairwise.empty());
  CHECK(post.log_likelihood == doctest::Approx(std::log(z)).epsilon(1e-12));
}

TEST_CASE("identical rows and emissions give uniform posteriors") {
  auto params = two_state_categorical((Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                      (Matrix(2, 2) << 0.3, 0.7, 0.3, 0.7).finished(),
                                      (Vector(2) << 0.5, 0.5).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0, 1, 1, 0};
  const PosteriorMarginals post = forward_backward(params, seq);
  for (int t = 0; t < 4; ++t) {
    CHECK(post.unary(t, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(post.unary(t, 1) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("forward-backward matches exhaustive enumeration") {
  std::mt19937_64 rng(2024);
  for (const auto family :
       {EmissionFamily::kGaussian, EmissionFamily::kCategorical, EmissionFamily::kBernoulli}) {
    for (int trial = 0; trial < 8; ++trial) {
      const int k = 2 + static_cast<int>(rng() % 3);
      const int t_len = 1 + static_cast<int>(rng() % 6);
      const HmmParams params = oracle::random_params(k, family, 4, rng);
      const ObservationSequence seq = oracle::random_sequence(params, t_len, rng);

      const PosteriorMarginals post = forward_backward(params, seq);
      const auto expected = oracle::enumerate_paths(params, seq);

      CHECK(post.log_likelihood ==
            doctest::Approx(expected.log_likelihood).epsilon(1e-10));
      CHECK((post.unary - expected.unary).cwiseAbs().maxCoeff() < 1e-10);
      for (std::size_t t = 0; t < post.pairwise.size(); ++t) {
        CHECK((post.pairwise[t] - expected.pairwise[t]).cwiseAbs().maxCoeff() < 1e-10);
      }
      check_marginal_invariants(post);

      CHECK(sequence_log_likelihood(params, seq) ==
            doctest::Approx(expected.log_likelihood).epsilon(1e-10));
    }
  }
}

TEST_CASE("deterministic chain likelihood is the surviving path") {
  auto params = two_state_categorical(Matrix::Identity(2, 2),
                                      (Matrix(2, 2) << 0.9, 0.1, 0.4, 0.6).finished(),
                                      (Vector(2) << 1.0, 0.0).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0, 1, 0};
  const double expected = std::log(0.9) + std::log(0.1) + std::log(0.9);
  CHECK(sequence_log_likelihood(params, seq) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("joint log likelihood: direct sum, -inf path, marginalization identity") {
  std::mt19937_64 rng(7);
  const HmmParams params = oracle::random_params(3, EmissionFamily::kCategorical, 4, rng);

  ObservationSequence seq;
  seq.data = SymbolObs{1};
  seq.labels = std::vector<int>{2};
  CHECK(joint_log_likelihood(params, seq) ==
        doctest::Approx(std::log(params.pi.probs[2]) + emission_log_prob(params.b, 1, 2))
            .epsilon(1e-12));

  // Zero-probability transition on the path.
  auto degenerate = two_state_categorical((Matrix(2, 2) << 1.0, 0.0, 0.0, 1.0).finished(),
                                          (Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                          (Vector(2) << 0.5, 0.5).finished());
  ObservationSequence blocked;
  blocked.data = SymbolObs{0, 0};
  blocked.labels = std::vector<int>{0, 1};
  CHECK(joint_log_likelihood(degenerate, blocked) ==
        -std::numeric_limits<double>::infinity());

  // exp(joint) summed over all assignments equals exp(marginal).
  const HmmParams inst = oracle::random_params(3, EmissionFamily::kCategorical, 5, rng);
  ObservationSequence obs = oracle::random_sequence(inst, 4, rng);
  double max_joint = -std::numeric_limits<double>::infinity();
  std::vector<double> joints;
  std::vector<int> labels(4, 0);
  ObservationSequence labeled = obs;
  for (int p = 0; p < 81; ++p) {
    int rest = p;
    for (int t = 0; t < 4; ++t) {
      labels[static_cast<std::size_t>(t)] = rest % 3;
      rest /= 3;
    }
    labeled.labels = labels;
    const double lj = joint_log_likelihood(inst, labeled);
    joints.push_back(lj);
    max_joint = std::max(max_joint, lj);
  }
  double total = 0.0;
  for (double lj : joints) total += std::exp(lj - max_joint);
  CHECK(max_joint + std::log(total) ==
        doctest::Approx(sequence_log_likelihood(inst, obs)).epsilon(1e-10));
}

TEST_CASE("viterbi matches exhaustive argmax and its own joint score") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const HmmParams params = oracle::random_params(3, EmissionFamily::kCategorical, 4, rng);
    const ObservationSequence seq = oracle::random_sequence(params, 6, rng);
    const ViterbiResult result = viterbi(params, seq);
    const auto expected = oracle::enumerate_paths(params, seq);
    CHECK(result.log_joint_prob == doctest::Approx(expected.best_log_joint).epsilon(1e-10));

    ObservationSequence labeled = seq;
    labeled.labels = result.states;
    CHECK(joint_log_likelihood(params, labeled) ==
          doctest::Approx(result.log_joint_prob).epsilon(1e-10));
  }
}

TEST_CASE("viterbi: identity transitions pin the initial state") {
  auto params = two_state_categorical(Matrix::Identity(2, 2),
                                      (Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                      (Vector(2) << 0.0, 1.0).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0, 1, 0, 1};
  const ViterbiResult result = viterbi(params, seq);
  CHECK(result.states == std::vector<int>{1, 1, 1, 1});
}

TEST_CASE("viterbi tie-break picks the smallest state sequence") {
  // Fully uniform model: every path ties, so the documented tie-break
  // must return all zeros.
  auto params = two_state_categorical((Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                      (Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                      (Vector(2) << 0.5, 0.5).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0, 1, 0};
  CHECK(viterbi(params, seq).states == std::vector<int>{0, 0, 0});
}

TEST_CASE("all-states-impossible observation raises a timestep error") {
  auto params = two_state_categorical((Matrix(2, 2) << 0.5, 0.5, 0.5, 0.5).finished(),
                                      (Matrix(2, 2) << 1.0, 0.0, 1.0, 0.0).finished(),
                                      (Vector(2) << 0.5, 0.5).finished());
  ObservationSequence seq;
  seq.data = SymbolObs{0, 1, 0};  // symbol 1 has zero mass in every state
  CHECK_THROWS_WITH_AS(forward_backward(params, seq),
                       doctest::Contains("timestep 1"), NumericalError);
  CHECK_THROWS_AS(sequence_log_likelihood(params, seq), NumericalError);
  CHECK_THROWS_AS(viterbi(params, seq), NumericalError);
}

TEST_CASE("long sequences do not underflow") {
  std::mt19937_64 rng(5);
  const HmmParams params = oracle::random_params(26, EmissionFamily::kBernoulli, 128, rng);
  const ObservationSequence seq = oracle::random_sequence(params, 250, rng);
  const PosteriorMarginals post = forward_backward(params, seq);
  CHECK(std::isfinite(post.log_likelihood));
  check_marginal_invariants(post);
}

TEST_CASE("sample_sequence is deterministic and follows the chain") {
  {
    std::mt19937_64 rng_a(11), rng_b(11);
    std::mt19937_64 rng_model(3);
    const HmmParams params =
        oracle::random_params(3, EmissionFamily::kCategorical, 4, rng_model);
    const ObservationSequence first = sample_sequence(params, 12, rng_a);
    const ObservationSequence second = sample_sequence(params, 12, rng_b);
    CHECK(std::get<SymbolObs>(first.data) == std::get<SymbolObs>(second.data));
    CHECK(*first.labels == *second.labels);
  }

  // Identity transitions from a point mass stay at state 0.
  HmmParams stuck;
  stuck.pi.probs = (Vector(2) << 1.0, 0.0).finished();
  stuck.a.rows = Matrix::Identity(2, 2);
  GaussianEmissions g;
  g.mean = (Vector(2) << 0.0, 5.0).finished();
  g.stddev = Vector::Ones(2);
  stuck.b.dist = std::move(g);
  std::mt19937_64 rng(1);
  const ObservationSequence seq = sample_sequence(stuck, 20, rng);
  for (int label : *seq.labels) CHECK(label == 0);
}

TEST_CASE("sampled initial states follow the prior (3-sigma multinomial)") {
  std::mt19937_64 rng_model(21);
  const HmmParams params = oracle::random_params(4, EmissionFamily::kCategorical, 3, rng_model);
  std::mt19937_64 rng(1234);
  const int n = 10000;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>((*sample_sequence(params, 1, rng).labels)[0])];
  }
  for (int s = 0; s < 4; ++s) {
    const double p = params.pi.probs[s];
    const double sigma = std::sqrt(n * p * (1.0 - p));
    CHECK(std::abs(counts[static_cast<std::size_t>(s)] - n * p) <= 3.0 * sigma);
  }
}
