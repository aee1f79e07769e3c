#include "dhmm/learning.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "dhmm/errors.hpp"
#include "dhmm/hmm.hpp"
#include "dhmm/kernel.hpp"

namespace dhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entries are clamped here after projection so the count term (1/A) and
// the kernel gradient (1/sqrt(A)) stay finite on boundary iterates.
constexpr double kInteriorFloor = 1e-12;

// Variance floor for the Gaussian M-step; collapse onto a single point
// otherwise drives the estimate singular.
constexpr double kVarianceFloor = 1e-8;

// Sequences per reduction block in the E-step. Fixed independently of the
// thread count so partial sums combine identically for any parallelism.
constexpr std::size_t kEStepBlock = 64;

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInputError(msg);
}

TransitionMatrix clamp_interior(Matrix rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      rows(i, j) = std::max(rows(i, j), kInteriorFloor);
    }
    rows.row(i) /= rows.row(i).sum();
  }
  return TransitionMatrix{std::move(rows)};
}

// Objective of the transition subproblem, split into its parts.
struct SubproblemValue {
  double count_term = 0.0;
  double log_det_term = 0.0;
  double anchor_term = 0.0;
  double total() const { return count_term + log_det_term + anchor_term; }
};

SubproblemValue transition_objective(const Matrix& counts, const TransitionMatrix& a,
                                     const TrainConfig& cfg, const TransitionMatrix* anchor) {
  SubproblemValue v;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) > 0.0) {
        v.count_term += counts(i, j) * std::log(a.rows(i, j));
      }
    }
  }
  if (cfg.alpha > 0.0) {
    v.log_det_term = cfg.alpha * log_det_kernel(a);
  }
  if (anchor != nullptr && cfg.alpha_anchor > 0.0) {
    v.anchor_term = -cfg.alpha_anchor * (a.rows - anchor->rows).squaredNorm();
  }
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  require(alpha >= 0.0, "alpha must be >= 0");
  require(alpha_anchor >= 0.0, "alpha_anchor must be >= 0");
  require(max_em_iters >= 1, "max_em_iters must be >= 1");
  require(em_tol > 0.0, "em_tol must be > 0");
  require(inner_max_iters >= 1, "inner_max_iters must be >= 1");
  require(inner_tol > 0.0, "inner_tol must be > 0");
  require(init_step > 0.0, "init_step must be > 0");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0,
          "backtrack_factor must be in (0, 1)");
  require(dirichlet_eta > 0.0, "dirichlet_eta must be > 0");
  require(n_threads >= 1, "n_threads must be >= 1");
}

EmissionSpec EmissionSpec::for_corpus(const Corpus& corpus) {
  EmissionSpec spec;
  spec.family = corpus.family;
  switch (corpus.family) {
    case EmissionFamily::kGaussian:    spec.dim = 0; break;
    case EmissionFamily::kCategorical: spec.dim = corpus.vocab_size; break;
    case EmissionFamily::kBernoulli:   spec.dim = corpus.feature_dim; break;
  }
  return spec;
}

Vector project_to_simplex(const Eigen::Ref<const Vector>& v) {
  const Eigen::Index k = v.size();
  require(k >= 1, "project_to_simplex: empty vector");
  for (Eigen::Index i = 0; i < k; ++i) {
    require(std::isfinite(v[i]), "project_to_simplex: non-finite entry");
  }
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (1.0 - cumulative) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] + candidate > 0.0) {
      theta = candidate;
    }
  }
  Vector out(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out[i] = std::max(v[i] + theta, 0.0);
  }
  return out;
}

PooledStats pooled_observation_stats(const Corpus& corpus) {
  require(corpus.family == EmissionFamily::kGaussian,
          "pooled_observation_stats: corpus is not real-valued");
  double sum = 0.0, sq_sum = 0.0;
  std::size_t n = 0;
  for (const auto& seq : corpus.sequences) {
    for (double y : std::get<RealObs>(seq.data)) {
      sum += y;
      sq_sum += y * y;
      ++n;
    }
  }
  require(n > 0, "pooled_observation_stats: empty corpus");
  PooledStats stats;
  stats.mean = sum / static_cast<double>(n);
  stats.variance = std::max(sq_sum / static_cast<double>(n) - stats.mean * stats.mean, 0.0);
  return stats;
}

namespace {

Vector dirichlet_draw(int k, double eta, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(eta, 1.0);
  Vector draw(k);
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    draw[i] = gamma(rng);
    sum += draw[i];
  }
  return draw / sum;
}

}  // namespace

HmmParams init_params(int k, const EmissionSpec& spec, const TrainConfig& cfg,
                      std::mt19937_64& rng, const PooledStats* pooled) {
  require(k >= 2, "init_params: k must be >= 2");
  HmmParams params;
  params.pi.probs = dirichlet_draw(k, cfg.dirichlet_eta, rng);
  params.a.rows.resize(k, k);
  for (int i = 0; i < k; ++i) {
    params.a.rows.row(i) = dirichlet_draw(k, cfg.dirichlet_eta, rng).transpose();
  }

  switch (spec.family) {
    case EmissionFamily::kGaussian: {
      // Pooled style: components start heavily overlapped on the data
      // (tightly clumped means, variances well above the pooled spread),
      // leaving the mixture structure to be carved out by EM. Standard
      // style is the unit-scale start.
      double mean_loc = 0.0, mean_scale = 1.0, var_scale = 1.0;
      if (cfg.emission_init == EmissionInitStyle::kPooled) {
        require(pooled != nullptr, "pooled initialization requires pooled stats");
        const double pooled_var = std::max(pooled->variance, kVarianceFloor);
        mean_loc = pooled->mean;
        mean_scale = std::sqrt(pooled_var) / 4.0;
        var_scale = 2.0 * pooled_var;
      }
      std::normal_distribution<double> normal(mean_loc, mean_scale);
      std::gamma_distribution<double> gamma(2.0, var_scale);
      GaussianEmissions g;
      g.mean.resize(k);
      g.stddev.resize(k);
      for (int i = 0; i < k; ++i) g.mean[i] = normal(rng);
      for (int i = 0; i < k; ++i) g.stddev[i] = std::sqrt(std::max(gamma(rng), kVarianceFloor));
      params.b.dist = std::move(g);
      break;
    }
    case EmissionFamily::kCategorical: {
      require(spec.dim >= 2, "categorical emissions need a vocabulary of size >= 2");
      CategoricalEmissions c;
      c.probs.resize(k, spec.dim);
      for (int i = 0; i < k; ++i) {
        c.probs.row(i) = dirichlet_draw(spec.dim, cfg.dirichlet_eta, rng).transpose();
      }
      params.b.dist = std::move(c);
      break;
    }
    case EmissionFamily::kBernoulli: {
      require(spec.dim >= 1, "bernoulli emissions need a feature dimension >= 1");
      std::uniform_real_distribution<double> unit(0.25, 0.75);
      BernoulliEmissions bern;
      bern.probs.resize(k, spec.dim);
      for (int i = 0; i < k; ++i) {
        for (int d = 0; d < spec.dim; ++d) {
          bern.probs(i, d) = unit(rng);
        }
      }
      params.b.dist = std::move(bern);
      break;
    }
  }
  return params;
}

SufficientStats SufficientStats::zeros(int k, EmissionFamily family, int dim) {
  SufficientStats stats;
  stats.family = family;
  stats.initial_counts = Vector::Zero(k);
  stats.pair_counts = Matrix::Zero(k, k);
  stats.state_weight = Vector::Zero(k);
  if (family == EmissionFamily::kGaussian) {
    stats.weighted_sum = Vector::Zero(k);
    stats.weighted_sq_sum = Vector::Zero(k);
  } else {
    stats.weighted_obs = Matrix::Zero(k, dim);
  }
  return stats;
}

void SufficientStats::add(const SufficientStats& other) {
  initial_counts += other.initial_counts;
  pair_counts += other.pair_counts;
  state_weight += other.state_weight;
  if (family == EmissionFamily::kGaussian) {
    weighted_sum += other.weighted_sum;
    weighted_sq_sum += other.weighted_sq_sum;
  } else {
    weighted_obs += other.weighted_obs;
  }
  n_sequences += other.n_sequences;
}

namespace {

void accumulate_sequence(SufficientStats& stats, const ObservationSequence& seq,
                         const PosteriorMarginals& post) {
  const int t_len = seq.length();
  stats.initial_counts += post.unary.row(0).transpose();
  for (const auto& slice : post.pairwise) {
    stats.pair_counts += slice;
  }
  stats.state_weight += post.unary.colwise().sum().transpose();
  if (stats.family == EmissionFamily::kGaussian) {
    const auto& obs = std::get<RealObs>(seq.data);
    for (int t = 0; t < t_len; ++t) {
      const double y = obs[static_cast<std::size_t>(t)];
      stats.weighted_sum += post.unary.row(t).transpose() * y;
      stats.weighted_sq_sum += post.unary.row(t).transpose() * (y * y);
    }
  } else if (stats.family == EmissionFamily::kCategorical) {
    const auto& obs = std::get<SymbolObs>(seq.data);
    for (int t = 0; t < t_len; ++t) {
      stats.weighted_obs.col(obs[static_cast<std::size_t>(t)]) += post.unary.row(t).transpose();
    }
  } else {
    const auto& obs = std::get<BinaryObs>(seq.data);
    for (int t = 0; t < t_len; ++t) {
      const auto& feats = obs[static_cast<std::size_t>(t)];
      for (std::size_t d = 0; d < feats.size(); ++d) {
        if (feats[d]) {
          stats.weighted_obs.col(static_cast<Eigen::Index>(d)) +=
              post.unary.row(t).transpose();
        }
      }
    }
  }
  stats.n_sequences += 1;
}

void check_compatible(const HmmParams& params, const Corpus& corpus) {
  if (params.b.family() != corpus.family) {
    throw InvalidInputError(std::string("model emissions are ") + family_name(params.b.family()) +
                            " but corpus is " + family_name(corpus.family));
  }
  if (corpus.family == EmissionFamily::kCategorical && params.b.dim() != corpus.vocab_size) {
    throw InvalidInputError("model vocabulary size " + std::to_string(params.b.dim()) +
                            " does not match corpus vocabulary " +
                            std::to_string(corpus.vocab_size));
  }
  if (corpus.family == EmissionFamily::kBernoulli && params.b.dim() != corpus.feature_dim) {
    throw InvalidInputError("model feature dimension " + std::to_string(params.b.dim()) +
                            " does not match corpus dimension " +
                            std::to_string(corpus.feature_dim));
  }
}

}  // namespace

std::pair<SufficientStats, double> e_step(const HmmParams& params, const Corpus& corpus,
                                          int n_threads) {
  require(!corpus.sequences.empty(), "e_step: empty corpus");
  check_compatible(params, corpus);
  const int k = params.num_states();
  const int dim = params.b.dim();

  const std::size_t n = corpus.sequences.size();
  const std::size_t n_blocks = (n + kEStepBlock - 1) / kEStepBlock;
  std::vector<SufficientStats> block_stats(n_blocks);
  std::vector<double> block_ll(n_blocks, 0.0);
  std::vector<std::string> block_error(n_blocks);

  auto run_block = [&](std::size_t block) {
    SufficientStats stats = SufficientStats::zeros(k, corpus.family, dim);
    double ll = 0.0;
    const std::size_t lo = block * kEStepBlock;
    const std::size_t hi = std::min(lo + kEStepBlock, n);
    for (std::size_t s = lo; s < hi; ++s) {
      try {
        const PosteriorMarginals post = forward_backward(params, corpus.sequences[s]);
        accumulate_sequence(stats, corpus.sequences[s], post);
        ll += post.log_likelihood;
      } catch (const NumericalError& e) {
        block_error[block] = "sequence " + std::to_string(s) + ": " + e.what();
        return;
      }
    }
    block_stats[block] = std::move(stats);
    block_ll[block] = ll;
  };

  const int workers =
      std::max(1, std::min<int>(n_threads, static_cast<int>(n_blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
          run_block(b);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t b = 0; b < n_blocks; ++b) {
    if (!block_error[b].empty()) throw NumericalError(block_error[b]);
  }

  // Fixed reduction order: block 0, 1, 2, ... regardless of worker count.
  SufficientStats total = SufficientStats::zeros(k, corpus.family, dim);
  double total_ll = 0.0;
  for (std::size_t b = 0; b < n_blocks; ++b) {
    total.add(block_stats[b]);
    total_ll += block_ll[b];
  }
  return {std::move(total), total_ll};
}

InitialDistribution m_step_pi(const SufficientStats& stats) {
  require(stats.n_sequences >= 1, "m_step_pi: no sequences");
  InitialDistribution pi;
  pi.probs = stats.initial_counts / static_cast<double>(stats.n_sequences);
  // Guard against accumulated roundoff drifting off the simplex.
  pi.probs /= pi.probs.sum();
  return pi;
}

EmissionModel m_step_emissions(const SufficientStats& stats, const EmissionModel& previous,
                               std::vector<std::string>* warnings) {
  const int k = previous.num_states();
  auto warn = [&](const std::string& msg) {
    if (warnings != nullptr) warnings->push_back(msg);
  };

  EmissionModel updated = previous;
  if (stats.family == EmissionFamily::kGaussian) {
    auto& g = std::get<GaussianEmissions>(updated.dist);
    for (int i = 0; i < k; ++i) {
      const double w = stats.state_weight[i];
      if (w <= 0.0) {
        warn("state " + std::to_string(i) +
             ": zero posterior mass, emission parameters unchanged");
        continue;
      }
      const double mean = stats.weighted_sum[i] / w;
      double var = stats.weighted_sq_sum[i] / w - mean * mean;
      if (var < kVarianceFloor) {
        warn("state " + std::to_string(i) + ": variance floored at 1e-8");
        var = kVarianceFloor;
      }
      g.mean[i] = mean;
      g.stddev[i] = std::sqrt(var);
    }
  } else if (stats.family == EmissionFamily::kCategorical) {
    auto& c = std::get<CategoricalEmissions>(updated.dist);
    for (int i = 0; i < k; ++i) {
      const double w = stats.weighted_obs.row(i).sum();
      if (w <= 0.0) {
        warn("state " + std::to_string(i) +
             ": zero posterior mass, emission parameters unchanged");
        continue;
      }
      c.probs.row(i) = stats.weighted_obs.row(i) / w;
    }
  } else {
    auto& bern = std::get<BernoulliEmissions>(updated.dist);
    for (int i = 0; i < k; ++i) {
      const double w = stats.state_weight[i];
      if (w <= 0.0) {
        warn("state " + std::to_string(i) +
             ": zero posterior mass, emission parameters unchanged");
        continue;
      }
      bern.probs.row(i) = (stats.weighted_obs.row(i) / w).cwiseMin(1.0).cwiseMax(0.0);
    }
  }
  return updated;
}

TransitionMatrix update_transitions_closed_form(const SufficientStats& stats,
                                                std::vector<std::string>* warnings) {
  const Eigen::Index k = stats.pair_counts.rows();
  TransitionMatrix a;
  a.rows.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double row_sum = stats.pair_counts.row(i).sum();
    if (row_sum <= 0.0) {
      if (warnings != nullptr) {
        warnings->push_back("transition row " + std::to_string(i) +
                            ": no expected transitions, substituting uniform");
      }
      a.rows.row(i).setConstant(1.0 / static_cast<double>(k));
    } else {
      a.rows.row(i) = stats.pair_counts.row(i) / row_sum;
    }
  }
  return a;
}

InnerUpdateResult update_transitions_diversified(const SufficientStats& stats,
                                                 const TransitionMatrix& a_old,
                                                 const TrainConfig& cfg,
                                                 const TransitionMatrix* anchor,
                                                 ObjectiveTrace* trace, int em_iteration) {
  cfg.validate();
  const Matrix& counts = stats.pair_counts;
  const int k = static_cast<int>(counts.rows());
  require(a_old.size() == k, "update_transitions_diversified: dimension mismatch");

  InnerUpdateResult result;
  result.a = clamp_interior(a_old.rows);
  SubproblemValue current = transition_objective(counts, result.a, cfg, anchor);

  // Duplicate starting rows (for example uniform fallbacks for states
  // never observed in a labeled corpus) make the prior -inf and leave no
  // gradient to follow. Blend in a fixed cyclic pattern, which has
  // pairwise-distinct rows, until the kernel is nonsingular.
  if (cfg.alpha > 0.0 && current.log_det_term == -kInf) {
    Matrix cyclic(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        cyclic(i, j) = 1.0 + (i + j) % k;
      }
      cyclic.row(i) /= cyclic.row(i).sum();
    }
    for (double blend : {0.01, 0.05, 0.2}) {
      TransitionMatrix nudged = clamp_interior((1.0 - blend) * result.a.rows + blend * cyclic);
      SubproblemValue value = transition_objective(counts, nudged, cfg, anchor);
      if (value.log_det_term != -kInf) {
        result.a = std::move(nudged);
        current = value;
        break;
      }
    }
    if (current.log_det_term == -kInf) {
      result.converged = false;
      result.objective_values.push_back(current.total());
      return result;
    }
  }

  // The count term is far stiffer than the prior, so the count optimum is
  // usually a much better starting point than the previous iterate; pick
  // whichever scores higher. Near-singular count optima (tied rows) lose
  // this comparison through their log det and the previous iterate wins.
  if (counts.rowwise().sum().minCoeff() > 0.0) {
    SufficientStats tmp;
    tmp.pair_counts = counts;
    TransitionMatrix counted = clamp_interior(update_transitions_closed_form(tmp, nullptr).rows);
    SubproblemValue at_counts = transition_objective(counts, counted, cfg, anchor);
    if (at_counts.total() > current.total()) {
      result.a = std::move(counted);
      current = at_counts;
    }
  }
  result.objective_values.push_back(current.total());

  auto record = [&](int inner_iter, const SubproblemValue& value) {
    if (trace == nullptr) return;
    trace->inner.push_back({em_iteration, inner_iter, value.total()});
    if (anchor != nullptr) {
      trace->em.push_back({inner_iter, value.count_term, value.log_det_term, value.anchor_term,
                           value.total()});
    }
  };
  record(0, current);

  double warm_step = cfg.init_step;
  for (int iter = 1; iter <= cfg.inner_max_iters; ++iter) {
    Matrix grad(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        grad(i, j) = counts(i, j) > 0.0 ? counts(i, j) / result.a.rows(i, j) : 0.0;
      }
    }
    if (cfg.alpha > 0.0) {
      grad += cfg.alpha * log_det_kernel_gradient(result.a);
    }
    if (anchor != nullptr && cfg.alpha_anchor > 0.0) {
      grad -= 2.0 * cfg.alpha_anchor * (result.a.rows - anchor->rows);
    }

    // The count term makes gradient magnitudes swing over many orders as
    // entries approach the boundary, so each row steps along its own
    // max-normalized ascent direction: init_step bounds the largest
    // per-entry displacement, the halvings can always reach a usable
    // scale, and a boundary-dominated row cannot stall the others.
    Matrix direction = grad;
    double total_scale = 0.0;
    for (int i = 0; i < k; ++i) {
      const double row_scale = grad.row(i).cwiseAbs().maxCoeff();
      total_scale += row_scale;
      if (row_scale > 0.0) direction.row(i) /= row_scale;
    }
    if (total_scale == 0.0) {
      result.converged = true;
      return result;
    }

    // Backtracking line search: shrink the step until the projected
    // candidate strictly improves the subproblem. The start is warm: a
    // little above the previously accepted step, capped at init_step.
    bool accepted = false;
    TransitionMatrix candidate;
    SubproblemValue candidate_value;
    double step = std::min(cfg.init_step, warm_step * 4.0);
    for (int h = 0; h < 40; ++h) {
      Matrix moved = result.a.rows + step * direction;
      for (int i = 0; i < k; ++i) {
        moved.row(i) = project_to_simplex(moved.row(i).transpose()).transpose();
      }
      candidate = clamp_interior(std::move(moved));
      candidate_value = transition_objective(counts, candidate, cfg, anchor);
      if (candidate_value.total() > current.total()) {
        accepted = true;
        break;
      }
      step *= cfg.backtrack_factor;
    }
    if (!accepted) {
      result.converged = false;
      return result;
    }
    warm_step = step;

    const double improvement = candidate_value.total() - current.total();
    result.a = std::move(candidate);
    current = candidate_value;
    result.objective_values.push_back(current.total());
    record(iter, current);
    if (improvement < cfg.inner_tol) {
      result.converged = true;
      return result;
    }
  }
  result.converged = false;
  return result;
}

void validate_gradient_probes() {
  std::mt19937_64 rng(12345);
  const int k = 4;
  const double h = 1e-6;
  for (int probe = 0; probe < 3; ++probe) {
    TransitionMatrix a;
    a.rows.resize(k, k);
    for (int i = 0; i < k; ++i) {
      a.rows.row(i) = dirichlet_draw(k, 2.0, rng).transpose();
      // keep the probe samples comfortably interior
      a.rows.row(i) = (a.rows.row(i).array() + 0.05) / (1.0 + 0.05 * k);
    }
    const Matrix analytic = log_det_kernel_gradient(a);
    Matrix fd(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        TransitionMatrix plus = a, minus = a;
        plus.rows(i, j) += h;
        minus.rows(i, j) -= h;
        fd(i, j) = (log_det_kernel(plus) - log_det_kernel(minus)) / (2.0 * h);
      }
    }
    const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1.0);
    const double rel_err = (analytic - fd).cwiseAbs().maxCoeff() / scale;
    if (!(rel_err <= 1e-5)) {
      throw NumericalError(
          "analytic log-det gradient disagrees with finite differences (relative error " +
          std::to_string(rel_err) + "); aborting gradient-based training");
    }
  }
}

TrainedModel em_fit_unsupervised(const Corpus& corpus, int k, const EmissionSpec& spec,
                                 const TrainConfig& cfg) {
  cfg.validate();
  corpus.validate();
  require(!corpus.sequences.empty(), "em_fit_unsupervised: empty corpus");
  require(k >= 2, "em_fit_unsupervised: k must be >= 2");
  require(spec.family == corpus.family, "emission spec family does not match corpus");

  if (cfg.alpha > 0.0) validate_gradient_probes();

  std::mt19937_64 rng(cfg.seed);
  PooledStats pooled;
  const PooledStats* pooled_ptr = nullptr;
  if (spec.family == EmissionFamily::kGaussian) {
    pooled = pooled_observation_stats(corpus);
    pooled_ptr = &pooled;
  }

  TrainedModel model;
  model.config = cfg;
  model.params = init_params(k, spec, cfg, rng, pooled_ptr);

  double previous_objective = -kInf;
  for (int iter = 0; iter < cfg.max_em_iters; ++iter) {
    auto [stats, log_likelihood] = e_step(model.params, corpus, cfg.n_threads);
    const double log_det_term =
        cfg.alpha > 0.0 ? cfg.alpha * log_det_kernel(model.params.a) : 0.0;
    const double objective = log_likelihood + log_det_term;
    if (!std::isfinite(objective)) {
      throw NumericalError("non-finite training objective at EM iteration " +
                           std::to_string(iter) + " (log-likelihood " +
                           std::to_string(log_likelihood) + ", diversity term " +
                           std::to_string(log_det_term) + ")");
    }
    model.trace.em.push_back({iter, log_likelihood, log_det_term, 0.0, objective});

    if (iter > 0 && std::abs(objective - previous_objective) < cfg.em_tol) {
      model.converged = true;
      break;
    }
    previous_objective = objective;

    model.params.pi = m_step_pi(stats);
    model.params.b = m_step_emissions(stats, model.params.b, &model.trace.warnings);
    if (cfg.alpha == 0.0) {
      model.params.a = update_transitions_closed_form(stats, &model.trace.warnings);
    } else {
      model.params.a =
          update_transitions_diversified(stats, model.params.a, cfg, nullptr, &model.trace, iter)
              .a;
    }
  }
  return model;
}

CountedParams count_statistics(const Corpus& corpus, int k, const EmissionSpec& spec,
                               double pseudocount) {
  corpus.validate();
  require(!corpus.sequences.empty(), "count_statistics: empty corpus");
  require(corpus.has_labels(), "count_statistics: corpus is not fully labeled");
  require(spec.family == corpus.family, "emission spec family does not match corpus");
  require(pseudocount >= 0.0, "count_statistics: pseudocount must be >= 0");

  const int dim = spec.family == EmissionFamily::kGaussian ? 0 : spec.dim;
  SufficientStats stats = SufficientStats::zeros(k, spec.family, dim);
  for (const auto& seq : corpus.sequences) {
    const auto& labels = *seq.labels;
    for (int label : labels) {
      require(label >= 0 && label < k, "count_statistics: label out of range");
    }
    const int t_len = seq.length();
    Matrix unary = Matrix::Zero(t_len, k);
    for (int t = 0; t < t_len; ++t) {
      unary(t, labels[static_cast<std::size_t>(t)]) = 1.0;
    }
    PosteriorMarginals post;
    post.unary = std::move(unary);
    for (int t = 0; t + 1 < t_len; ++t) {
      Matrix slice = Matrix::Zero(k, k);
      slice(labels[static_cast<std::size_t>(t)], labels[static_cast<std::size_t>(t + 1)]) = 1.0;
      post.pairwise.push_back(std::move(slice));
    }
    accumulate_sequence(stats, seq, post);
  }

  if (pseudocount > 0.0) {
    stats.initial_counts.array() += pseudocount;
    stats.pair_counts.array() += pseudocount;
    if (spec.family == EmissionFamily::kCategorical) {
      stats.weighted_obs.array() += pseudocount;
      stats.state_weight.array() += pseudocount * spec.dim;
    } else if (spec.family == EmissionFamily::kBernoulli) {
      // Beta-style: p = (n1 + eps) / (n + 2 eps)
      stats.weighted_obs.array() += pseudocount;
      stats.state_weight.array() += 2.0 * pseudocount;
    }
  }

  CountedParams counted;
  counted.pi = m_step_pi(stats);
  counted.a = update_transitions_closed_form(stats, &counted.warnings);
  counted.pair_counts = stats.pair_counts;

  // Neutral fallbacks for states never observed in the labels.
  EmissionModel fallback;
  switch (spec.family) {
    case EmissionFamily::kGaussian: {
      GaussianEmissions g;
      g.mean = Vector::Zero(k);
      g.stddev = Vector::Ones(k);
      fallback.dist = std::move(g);
      break;
    }
    case EmissionFamily::kCategorical: {
      CategoricalEmissions c;
      c.probs = Matrix::Constant(k, spec.dim, 1.0 / spec.dim);
      fallback.dist = std::move(c);
      break;
    }
    case EmissionFamily::kBernoulli: {
      BernoulliEmissions bern;
      bern.probs = Matrix::Constant(k, spec.dim, 0.5);
      fallback.dist = std::move(bern);
      break;
    }
  }
  counted.b = m_step_emissions(stats, fallback, &counted.warnings);
  return counted;
}

TrainedModel fit_supervised(const Corpus& corpus, int k, const EmissionSpec& spec,
                            const TrainConfig& cfg) {
  cfg.validate();
  CountedParams counted = count_statistics(corpus, k, spec, cfg.count_smoothing);
  if (cfg.alpha > 0.0) validate_gradient_probes();

  TrainedModel model;
  model.config = cfg;
  model.trace.warnings = counted.warnings;
  model.params.pi = counted.pi;
  model.params.b = counted.b;

  SufficientStats stats = SufficientStats::zeros(k, spec.family, spec.dim);
  stats.pair_counts = counted.pair_counts;
  stats.n_sequences = corpus.size();

  InnerUpdateResult refined = update_transitions_diversified(stats, counted.a, cfg, &counted.a,
                                                             &model.trace, /*em_iteration=*/0);
  model.params.a = std::move(refined.a);
  model.converged = refined.converged;
  return model;
}

}  // namespace dhmm
