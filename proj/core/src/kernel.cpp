#include "dhmm/kernel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <string>

#include "dhmm/errors.hpp"

namespace dhmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_pair(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q) {
  if (p.size() != q.size()) {
    throw InvalidInputError("distributions have different lengths: " + std::to_string(p.size()) +
                            " vs " + std::to_string(q.size()));
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) {
      throw InvalidInputError("distribution entries must be non-negative");
    }
  }
}

}  // namespace

void KernelMatrix::validate() const {
  const Eigen::Index k = entries.rows();
  if (entries.cols() != k) throw SchemaError("kernel matrix: not square");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (std::abs(entries(i, i) - 1.0) > 1e-12) {
      throw SchemaError("kernel matrix: diagonal entry " + std::to_string(i) + " differs from 1");
    }
    for (Eigen::Index j = i + 1; j < k; ++j) {
      if (std::abs(entries(i, j) - entries(j, i)) > 1e-12) {
        throw SchemaError("kernel matrix: asymmetric at (" + std::to_string(i) + "," +
                          std::to_string(j) + ")");
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(entries, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw SchemaError("kernel matrix: not positive semidefinite (min eigenvalue " +
                      std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
}

double product_kernel(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q,
                      double rho) {
  if (rho <= 0.0) throw InvalidInputError("kernel exponent rho must be > 0");
  check_pair(p, q);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] > 0.0) {
      sum += std::pow(p[i], rho) * std::pow(q[i], rho);
    }
  }
  return sum;
}

double normalized_kernel(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q,
                         double rho) {
  const double self_p = product_kernel(p, p, rho);
  const double self_q = product_kernel(q, q, rho);
  if (self_p <= 0.0 || self_q <= 0.0) {
    throw InvalidInputError("normalized_kernel: zero self-kernel (all-zero vector)");
  }
  return product_kernel(p, q, rho) / std::sqrt(self_p * self_q);
}

KernelMatrix kernel_matrix(const TransitionMatrix& a, double rho) {
  const int k = a.size();
  KernelMatrix km;
  km.rho = rho;
  km.entries.resize(k, k);
  // Self-kernels once per row, then the normalized value pairwise.
  Vector self(k);
  for (int i = 0; i < k; ++i) {
    self[i] = product_kernel(a.rows.row(i).transpose(), a.rows.row(i).transpose(), rho);
    if (self[i] <= 0.0) {
      throw InvalidInputError("kernel_matrix: row " + std::to_string(i) + " has zero self-kernel");
    }
  }
  for (int i = 0; i < k; ++i) {
    km.entries(i, i) = 1.0;
    for (int j = i + 1; j < k; ++j) {
      const double v = product_kernel(a.rows.row(i).transpose(), a.rows.row(j).transpose(), rho) /
                       std::sqrt(self[i] * self[j]);
      km.entries(i, j) = v;
      km.entries(j, i) = v;
    }
  }
  return km;
}

double log_det_kernel(const TransitionMatrix& a, double rho) {
  const KernelMatrix km = kernel_matrix(a, rho);
  const Eigen::LLT<Matrix> llt(km.entries);
  if (llt.info() != Eigen::Success) {
    return -kInf;  // factorization failure = singular (or indefinite from roundoff)
  }
  double log_det = 0.0;
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < km.size(); ++i) {
    if (l(i, i) <= 0.0) return -kInf;
    log_det += 2.0 * std::log(l(i, i));
  }
  if (log_det < std::log(kDetUnderflowFloor)) return -kInf;
  return log_det;
}

Matrix log_det_kernel_gradient(const TransitionMatrix& a) {
  const int k = a.size();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (!(a.rows(i, j) > 0.0)) {
        throw InvalidInputError("log_det_kernel_gradient: entry (" + std::to_string(i) + "," +
                                std::to_string(j) + ") is not strictly positive");
      }
    }
  }

  const KernelMatrix km = kernel_matrix(a, kDefaultRho);
  const Eigen::LLT<Matrix> llt(km.entries);
  if (llt.info() != Eigen::Success) {
    throw SingularKernelError("log_det_kernel_gradient: kernel matrix is singular");
  }
  const Matrix k_inv = llt.solve(Matrix::Identity(k, k));

  // At rho = 1/2 the self-kernel of row m is its plain sum s_m, so the
  // derivative of the normalization contributes a row-constant term in
  // addition to the inverse-kernel sum:
  //   d/dA_ij log det = sum_m Kinv(m,i) sqrt(A_mj / A_ij) / sqrt(s_i s_m)
  //                     - 1 / s_i
  // (rows on the simplex have s = 1 and the offset reduces to -1).
  const Vector row_sum = a.rows.rowwise().sum();
  const Matrix root = a.rows.cwiseSqrt();
  Matrix weighted = k_inv;  // weighted(m, i) = Kinv(m, i) / sqrt(s_m s_i)
  for (int m = 0; m < k; ++m) {
    for (int i = 0; i < k; ++i) {
      weighted(m, i) /= std::sqrt(row_sum[m] * row_sum[i]);
    }
  }
  Matrix grad = (weighted.transpose() * root).cwiseQuotient(root);
  for (int i = 0; i < k; ++i) {
    grad.row(i).array() -= 1.0 / row_sum[i];
  }
  return grad;
}

double bhattacharyya_distance(const Eigen::Ref<const Vector>& p,
                              const Eigen::Ref<const Vector>& q) {
  check_pair(p, q);
  if ((p.array() == q.array()).all()) return 0.0;
  double coeff = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0 && q[i] > 0.0) {
      coeff += std::sqrt(p[i] * q[i]);
    }
  }
  if (coeff <= 0.0) return kInf;
  // Clamp tiny positive roundoff above 1 so equal inputs give exactly 0.
  if (coeff >= 1.0) return 0.0;
  return -std::log(coeff);
}

PairwiseDiversity mean_pairwise_diversity(const TransitionMatrix& a) {
  const int k = a.size();
  if (k < 2) throw InvalidInputError("mean_pairwise_diversity requires k >= 2");
  PairwiseDiversity result;
  double sum = 0.0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double d = bhattacharyya_distance(a.rows.row(i).transpose(), a.rows.row(j).transpose());
      if (d == kInf) {
        result.has_infinite_pair = true;
      }
      sum += d;
    }
  }
  result.mean = result.has_infinite_pair ? kInf : sum / (0.5 * k * (k - 1));
  return result;
}

}  // namespace dhmm
