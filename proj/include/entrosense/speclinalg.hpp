#pragma once

#include <Eigen/Dense>
#include <vector>

namespace entrosense {

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultCholTol = 1e-8;

/// Eigen-decomposition of a symmetric PSD matrix together with its numerical rank.
struct SpectralData {
  Eigen::VectorXd eigenvalues;   ///< descending, clipped to >= 0
  Eigen::MatrixXd eigenvectors;  ///< column k pairs with eigenvalues[k]
  Eigen::Index rank = 0;
  double lambda_max = 0.0;
  double lambda_min_pos = 0.0;  ///< smallest eigenvalue counted in the rank (0 if rank == 0)
  double rel_tol = kDefaultRankTol;
  double cutoff = 0.0;  ///< eigenvalues <= cutoff are treated as zero
};

/// The rank cutoff is rel_tol * max(lambda_max(C), reference_lambda_max).
/// Passing the full matrix's lambda_max as reference measures principal
/// submatrices on the same absolute scale as the full matrix.
SpectralData eig_sym(const Eigen::MatrixXd& c, double rel_tol = kDefaultRankTol,
                     double reference_lambda_max = 0.0);

/// log2 of the product of the retained eigenvalues. Throws DomainError at rank 0.
double pseudo_log_det(const SpectralData& spec);

/// V_r diag(lambda_1..r) V_r^T: the exactly rank-r matrix closest to C.
Eigen::MatrixXd truncate_to_rank(const SpectralData& spec);

/// C ~= l * l^T with l of size M x r. Rows of l follow the original sensor
/// order; pivot_order[k] is the sensor eliminated at step k.
struct ReducedCholesky {
  Eigen::MatrixXd l;
  double residual = 0.0;  ///< ||C - l l^T||_F
  std::vector<Eigen::Index> pivot_order;

  Eigen::Index rank() const noexcept { return l.cols(); }
};

/// Diagonal-pivoted outer-product Cholesky. Stops once the largest remaining
/// pivot is <= chol_tol * max(diag(C)). Throws NotPsdError if a remaining
/// pivot drops below -10 * chol_tol * max(diag(C)).
ReducedCholesky pivoted_cholesky(const Eigen::MatrixXd& c, double chol_tol = kDefaultCholTol);

struct LogDetGram {
  double value = 0.0;        ///< log2 det(L^T diag(p) L)
  Eigen::VectorXd gradient;  ///< d value / d p_i
};

/// Throws DomainError if a weight is not > 0 or the Gram matrix is not positive definite.
LogDetGram logdet_gram(const Eigen::MatrixXd& l, const Eigen::VectorXd& p);

/// Value only; skips the M x r solve.
double logdet_gram_value(const Eigen::MatrixXd& l, const Eigen::VectorXd& p);

}  // namespace entrosense
