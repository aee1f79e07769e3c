#include "dhmm/types.hpp"

#include <cmath>
#include <sstream>

#include "dhmm/errors.hpp"

namespace dhmm {

const char* family_name(EmissionFamily family) {
  switch (family) {
    case EmissionFamily::kGaussian:    return "gaussian";
    case EmissionFamily::kCategorical: return "categorical";
    case EmissionFamily::kBernoulli:   return "bernoulli";
  }
  return "unknown";
}

EmissionFamily family_from_name(const std::string& name) {
  if (name == "gaussian") return EmissionFamily::kGaussian;
  if (name == "categorical") return EmissionFamily::kCategorical;
  if (name == "bernoulli") return EmissionFamily::kBernoulli;
  throw InvalidInputError("unknown emission family: '" + name + "'");
}

namespace {

void check_distribution(const Eigen::Ref<const Vector>& p, const std::string& what) {
  if (p.size() == 0) throw SchemaError(what + ": empty distribution");
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < 0.0) {
      std::ostringstream os;
      os << what << ": entry " << i << " = " << p[i] << " violates non-negativity";
      throw SchemaError(os.str());
    }
  }
  const double sum = p.sum();
  if (std::abs(sum - 1.0) > kDistributionTol) {
    std::ostringstream os;
    os << what << ": sums to " << sum << ", expected 1 within " << kDistributionTol;
    throw SchemaError(os.str());
  }
}

}  // namespace

void InitialDistribution::validate() const {
  check_distribution(probs, "initial distribution");
}

void TransitionMatrix::validate() const {
  if (rows.rows() != rows.cols()) {
    throw SchemaError("transition matrix: not square");
  }
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    check_distribution(rows.row(i).transpose(), "transition row " + std::to_string(i));
  }
}

EmissionFamily EmissionModel::family() const {
  if (std::holds_alternative<GaussianEmissions>(dist)) return EmissionFamily::kGaussian;
  if (std::holds_alternative<CategoricalEmissions>(dist)) return EmissionFamily::kCategorical;
  return EmissionFamily::kBernoulli;
}

int EmissionModel::num_states() const {
  return std::visit(
      [](const auto& d) -> int {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianEmissions>) {
          return static_cast<int>(d.mean.size());
        } else {
          return static_cast<int>(d.probs.rows());
        }
      },
      dist);
}

int EmissionModel::dim() const {
  return std::visit(
      [](const auto& d) -> int {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, GaussianEmissions>) {
          return 1;
        } else {
          return static_cast<int>(d.probs.cols());
        }
      },
      dist);
}

void EmissionModel::validate() const {
  if (const auto* g = std::get_if<GaussianEmissions>(&dist)) {
    if (g->mean.size() != g->stddev.size()) {
      throw SchemaError("gaussian emissions: mean/stddev size mismatch");
    }
    for (Eigen::Index i = 0; i < g->stddev.size(); ++i) {
      if (!std::isfinite(g->stddev[i]) || g->stddev[i] <= 0.0) {
        throw SchemaError("gaussian emissions: stddev of state " + std::to_string(i) +
                          " must be > 0");
      }
      if (!std::isfinite(g->mean[i])) {
        throw SchemaError("gaussian emissions: non-finite mean at state " + std::to_string(i));
      }
    }
  } else if (const auto* c = std::get_if<CategoricalEmissions>(&dist)) {
    for (Eigen::Index i = 0; i < c->probs.rows(); ++i) {
      check_distribution(c->probs.row(i).transpose(), "categorical emission row " + std::to_string(i));
    }
  } else {
    const auto& p = std::get<BernoulliEmissions>(dist).probs;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if (!std::isfinite(p(i, j)) || p(i, j) < 0.0 || p(i, j) > 1.0) {
          std::ostringstream os;
          os << "bernoulli emissions: p(" << i << "," << j << ") = " << p(i, j)
             << " outside [0,1]";
          throw SchemaError(os.str());
        }
      }
    }
  }
}

void HmmParams::validate() const {
  pi.validate();
  a.validate();
  b.validate();
  const int k = pi.size();
  if (a.size() != k) {
    throw SchemaError("transition matrix is " + std::to_string(a.size()) + "x" +
                      std::to_string(a.size()) + " but k = " + std::to_string(k));
  }
  if (b.num_states() != k) {
    throw SchemaError("emission model has " + std::to_string(b.num_states()) +
                      " components but k = " + std::to_string(k));
  }
}

EmissionFamily ObservationSequence::family() const {
  if (std::holds_alternative<RealObs>(data)) return EmissionFamily::kGaussian;
  if (std::holds_alternative<SymbolObs>(data)) return EmissionFamily::kCategorical;
  return EmissionFamily::kBernoulli;
}

int ObservationSequence::length() const {
  return std::visit([](const auto& v) { return static_cast<int>(v.size()); }, data);
}

void ObservationSequence::validate() const {
  if (length() < 1) throw InvalidInputError("observation sequence must have length >= 1");
  if (labels && static_cast<int>(labels->size()) != length()) {
    throw InvalidInputError("label sequence length does not match observations");
  }
}

}  // namespace dhmm
