#pragma once

#include "dhmm/types.hpp"

namespace dhmm {

// Kernel exponent used throughout the library; 0.5 makes the product
// kernel the Bhattacharyya coefficient between rows.
inline constexpr double kDefaultRho = 0.5;

// Determinants at or below this floor are reported as log det = -inf.
inline constexpr double kDetUnderflowFloor = 1e-300;

// Symmetric, unit-diagonal, PSD similarity matrix over transition rows.
struct KernelMatrix {
  Matrix entries;
  double rho = kDefaultRho;

  int size() const { return static_cast<int>(entries.rows()); }
  void validate() const;
};

// sum_x p_x^rho q_x^rho.
double product_kernel(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q,
                      double rho);

// Product kernel divided by the geometric mean of the self-kernels;
// 1 on equal inputs, 0 on disjoint supports.
double normalized_kernel(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& q,
                         double rho);

// Normalized kernel evaluated on every pair of transition rows.
KernelMatrix kernel_matrix(const TransitionMatrix& a, double rho = kDefaultRho);

// log det of the normalized kernel matrix, via Cholesky. Returns -inf
// when the factorization fails or the determinant underflows the floor;
// never throws for row-stochastic input.
double log_det_kernel(const TransitionMatrix& a, double rho = kDefaultRho);

// Gradient of log_det_kernel with respect to each transition entry, at
// rho = 0.5. Requires strictly positive entries and a nonsingular kernel
// matrix. Matches central finite differences of log_det_kernel; the
// derivation accounts for the self-kernel normalization, which is why a
// row-constant offset appears alongside the inverse-kernel sum.
Matrix log_det_kernel_gradient(const TransitionMatrix& a);

// -ln sum_x sqrt(p_x q_x); 0 iff p = q, +inf on disjoint supports.
double bhattacharyya_distance(const Eigen::Ref<const Vector>& p,
                              const Eigen::Ref<const Vector>& q);

struct PairwiseDiversity {
  double mean = 0.0;
  bool has_infinite_pair = false;
};

// Mean Bhattacharyya distance over all unordered row pairs. An infinite
// pair makes the mean +inf and sets the flag rather than being clipped.
PairwiseDiversity mean_pairwise_diversity(const TransitionMatrix& a);

}  // namespace dhmm
