#include "dhmm/hmm.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dhmm/errors.hpp"

namespace dhmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrt2Pi = 0.5 * std::log(2.0 * M_PI);

void check_state(const EmissionModel& b, int state) {
  if (state < 0 || state >= b.num_states()) {
    throw InvalidInputError("state index " + std::to_string(state) + " out of range [0, " +
                            std::to_string(b.num_states()) + ")");
  }
}

// T x k matrix of emission log-probabilities for the whole sequence.
Matrix emission_log_table(const HmmParams& params, const ObservationSequence& seq) {
  const int t_len = seq.length();
  const int k = params.num_states();
  Matrix log_b(t_len, k);
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < k; ++i) {
      log_b(t, i) = emission_log_prob(params.b, seq, t, i);
    }
  }
  return log_b;
}

[[noreturn]] void throw_underflow(int t) {
  throw NumericalError("zero total probability mass at timestep " + std::to_string(t) +
                       ": no state can emit the observation");
}

}  // namespace

double emission_log_prob(const EmissionModel& b, double y, int state) {
  check_state(b, state);
  const auto* g = std::get_if<GaussianEmissions>(&b.dist);
  if (g == nullptr) {
    throw InvalidInputError("real-valued observation given to a " +
                            std::string(family_name(b.family())) + " emission model");
  }
  const double z = (y - g->mean[state]) / g->stddev[state];
  return -kLogSqrt2Pi - std::log(g->stddev[state]) - 0.5 * z * z;
}

double emission_log_prob(const EmissionModel& b, int symbol, int state) {
  check_state(b, state);
  const auto* c = std::get_if<CategoricalEmissions>(&b.dist);
  if (c == nullptr) {
    throw InvalidInputError("symbol observation given to a " +
                            std::string(family_name(b.family())) + " emission model");
  }
  if (symbol < 0 || symbol >= c->probs.cols()) {
    throw InvalidInputError("symbol " + std::to_string(symbol) + " outside vocabulary of size " +
                            std::to_string(c->probs.cols()));
  }
  const double p = c->probs(state, symbol);
  return p > 0.0 ? std::log(p) : kNegInf;
}

double emission_log_prob(const EmissionModel& b, const std::vector<std::uint8_t>& features,
                         int state) {
  check_state(b, state);
  const auto* bern = std::get_if<BernoulliEmissions>(&b.dist);
  if (bern == nullptr) {
    throw InvalidInputError("binary feature vector given to a " +
                            std::string(family_name(b.family())) + " emission model");
  }
  if (static_cast<Eigen::Index>(features.size()) != bern->probs.cols()) {
    throw InvalidInputError("feature vector has " + std::to_string(features.size()) +
                            " dims, emission model expects " +
                            std::to_string(bern->probs.cols()));
  }
  double lp = 0.0;
  for (std::size_t d = 0; d < features.size(); ++d) {
    const double p = bern->probs(state, static_cast<Eigen::Index>(d));
    if (features[d]) {
      lp += p > 0.0 ? std::log(p) : kNegInf;
    } else {
      lp += p < 1.0 ? std::log1p(-p) : kNegInf;
    }
  }
  return lp;
}

double emission_log_prob(const EmissionModel& b, const ObservationSequence& seq, int t,
                         int state) {
  if (t < 0 || t >= seq.length()) {
    throw InvalidInputError("timestep " + std::to_string(t) + " out of range");
  }
  return std::visit(
      [&](const auto& v) { return emission_log_prob(b, v[static_cast<std::size_t>(t)], state); },
      seq.data);
}

PosteriorMarginals forward_backward(const HmmParams& params, const ObservationSequence& seq) {
  seq.validate();
  const int t_len = seq.length();
  const int k = params.num_states();
  const Matrix log_b = emission_log_table(params, seq);

  // Per-timestep max shift keeps exp() in range; the shift cancels in all
  // posteriors and is added back into the log-likelihood.
  Vector shift(t_len);
  Matrix emis(t_len, k);
  for (int t = 0; t < t_len; ++t) {
    const double m = log_b.row(t).maxCoeff();
    if (m == kNegInf) throw_underflow(t);
    shift[t] = m;
    for (int i = 0; i < k; ++i) {
      emis(t, i) = std::exp(log_b(t, i) - m);
    }
  }

  Matrix alpha(t_len, k);
  Vector scale(t_len);
  alpha.row(0) = params.pi.probs.transpose().cwiseProduct(emis.row(0));
  scale[0] = alpha.row(0).sum();
  if (scale[0] <= 0.0) throw_underflow(0);
  alpha.row(0) /= scale[0];
  for (int t = 1; t < t_len; ++t) {
    alpha.row(t) = (alpha.row(t - 1) * params.a.rows).cwiseProduct(emis.row(t));
    scale[t] = alpha.row(t).sum();
    if (scale[t] <= 0.0) throw_underflow(t);
    alpha.row(t) /= scale[t];
  }

  Matrix beta(t_len, k);
  beta.row(t_len - 1).setOnes();
  for (int t = t_len - 2; t >= 0; --t) {
    const Vector weighted =
        emis.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
    beta.row(t) = (params.a.rows * weighted).transpose() / scale[t + 1];
  }

  PosteriorMarginals post;
  post.unary = alpha.cwiseProduct(beta);
  post.pairwise.reserve(static_cast<std::size_t>(t_len - 1));
  for (int t = 0; t + 1 < t_len; ++t) {
    const Vector weighted =
        emis.row(t + 1).transpose().cwiseProduct(beta.row(t + 1).transpose());
    Matrix slice = (alpha.row(t).transpose() * weighted.transpose()).cwiseProduct(params.a.rows);
    post.pairwise.push_back(slice / scale[t + 1]);
  }
  post.log_likelihood = scale.array().log().sum() + shift.sum();
  return post;
}

double sequence_log_likelihood(const HmmParams& params, const ObservationSequence& seq) {
  seq.validate();
  const int t_len = seq.length();
  const int k = params.num_states();
  const Matrix log_b = emission_log_table(params, seq);

  Vector alpha(k);
  double ll = 0.0;
  for (int t = 0; t < t_len; ++t) {
    const double m = log_b.row(t).maxCoeff();
    if (m == kNegInf) throw_underflow(t);
    Vector emis = (log_b.row(t).transpose().array() - m).exp();
    if (t == 0) {
      alpha = params.pi.probs.cwiseProduct(emis);
    } else {
      alpha = (params.a.rows.transpose() * alpha).cwiseProduct(emis);
    }
    const double c = alpha.sum();
    if (c <= 0.0) throw_underflow(t);
    alpha /= c;
    ll += std::log(c) + m;
  }
  return ll;
}

double joint_log_likelihood(const HmmParams& params, const ObservationSequence& seq) {
  seq.validate();
  if (!seq.labels) throw InvalidInputError("joint_log_likelihood requires a labeled sequence");
  const auto& x = *seq.labels;
  const int k = params.num_states();
  for (int label : x) {
    if (label < 0 || label >= k) {
      throw InvalidInputError("label " + std::to_string(label) + " out of range [0, " +
                              std::to_string(k) + ")");
    }
  }
  auto log_or_neg_inf = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };
  double lp = log_or_neg_inf(params.pi.probs[x[0]]) + emission_log_prob(params.b, seq, 0, x[0]);
  for (int t = 1; t < seq.length(); ++t) {
    lp += log_or_neg_inf(params.a.rows(x[t - 1], x[t]));
    lp += emission_log_prob(params.b, seq, t, x[t]);
  }
  return lp;
}

ViterbiResult viterbi(const HmmParams& params, const ObservationSequence& seq) {
  seq.validate();
  const int t_len = seq.length();
  const int k = params.num_states();
  const Matrix log_b = emission_log_table(params, seq);

  Matrix log_a(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      log_a(i, j) = params.a.rows(i, j) > 0.0 ? std::log(params.a.rows(i, j)) : kNegInf;
    }
  }

  Matrix delta(t_len, k);
  Eigen::MatrixXi back(t_len, k);
  for (int i = 0; i < k; ++i) {
    delta(0, i) = (params.pi.probs[i] > 0.0 ? std::log(params.pi.probs[i]) : kNegInf) +
                  log_b(0, i);
  }
  if (delta.row(0).maxCoeff() == kNegInf) throw_underflow(0);
  for (int t = 1; t < t_len; ++t) {
    for (int j = 0; j < k; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (int i = 0; i < k; ++i) {
        const double s = delta(t - 1, i) + log_a(i, j);
        if (s > best) {  // strict: keeps the smallest i on ties
          best = s;
          arg = i;
        }
      }
      delta(t, j) = best + log_b(t, j);
      back(t, j) = arg;
    }
    if (delta.row(t).maxCoeff() == kNegInf) throw_underflow(t);
  }

  ViterbiResult result;
  result.states.resize(static_cast<std::size_t>(t_len));
  int arg = 0;
  double best = kNegInf;
  for (int i = 0; i < k; ++i) {
    if (delta(t_len - 1, i) > best) {
      best = delta(t_len - 1, i);
      arg = i;
    }
  }
  result.log_joint_prob = best;
  result.states[static_cast<std::size_t>(t_len - 1)] = arg;
  for (int t = t_len - 1; t > 0; --t) {
    arg = back(t, arg);
    result.states[static_cast<std::size_t>(t - 1)] = arg;
  }
  return result;
}

ObservationSequence sample_sequence(const HmmParams& params, int t_len, std::mt19937_64& rng) {
  if (t_len < 1) throw InvalidInputError("sample_sequence requires t_len >= 1");

  auto draw_from = [&](const Eigen::Ref<const Vector>& p) {
    std::discrete_distribution<int> dist(p.data(), p.data() + p.size());
    return dist(rng);
  };

  std::vector<int> labels(static_cast<std::size_t>(t_len));
  labels[0] = draw_from(params.pi.probs);
  for (int t = 1; t < t_len; ++t) {
    labels[static_cast<std::size_t>(t)] =
        draw_from(params.a.rows.row(labels[static_cast<std::size_t>(t - 1)]).transpose());
  }

  ObservationSequence seq;
  if (const auto* g = std::get_if<GaussianEmissions>(&params.b.dist)) {
    RealObs obs(static_cast<std::size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
      const int s = labels[static_cast<std::size_t>(t)];
      std::normal_distribution<double> normal(g->mean[s], g->stddev[s]);
      obs[static_cast<std::size_t>(t)] = normal(rng);
    }
    seq.data = std::move(obs);
  } else if (const auto* c = std::get_if<CategoricalEmissions>(&params.b.dist)) {
    SymbolObs obs(static_cast<std::size_t>(t_len));
    for (int t = 0; t < t_len; ++t) {
      obs[static_cast<std::size_t>(t)] =
          draw_from(c->probs.row(labels[static_cast<std::size_t>(t)]).transpose());
    }
    seq.data = std::move(obs);
  } else {
    const auto& bern = std::get<BernoulliEmissions>(params.b.dist);
    const int d_dim = static_cast<int>(bern.probs.cols());
    BinaryObs obs(static_cast<std::size_t>(t_len));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < t_len; ++t) {
      const int s = labels[static_cast<std::size_t>(t)];
      std::vector<std::uint8_t> row(static_cast<std::size_t>(d_dim));
      for (int d = 0; d < d_dim; ++d) {
        row[static_cast<std::size_t>(d)] = unit(rng) < bern.probs(s, d) ? 1 : 0;
      }
      obs[static_cast<std::size_t>(t)] = std::move(row);
    }
    seq.data = std::move(obs);
  }
  seq.labels = std::move(labels);
  return seq;
}

}  // namespace dhmm
