#include "entrosense/speclinalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "entrosense/errors.hpp"
#include "entrosense/kernels.hpp"

namespace entrosense {
namespace {

Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& l, const Eigen::VectorXd& p) {
  if (p.size() != l.rows()) {
    throw ParameterError("weight vector has " + std::to_string(p.size()) + " entries, factor has " +
                         std::to_string(l.rows()) + " rows");
  }
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p[i] > 0.0)) throw DomainError("logdet_gram: weights must be > 0");
  }
  const auto rows = static_cast<std::size_t>(l.rows());
  const auto cols = static_cast<std::size_t>(l.cols());
  Eigen::MatrixXd g(l.cols(), l.cols());
  kernels::active().weighted_gram(std::span<const double>(l.data(), rows * cols), rows, cols,
                                  std::span<const double>(p.data(), rows),
                                  std::span<double>(g.data(), cols * cols));
  return g;
}

Eigen::LLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& g) {
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw DomainError("logdet_gram: Gram matrix is singular");
  const auto diag = llt.matrixLLT().diagonal();
  for (Eigen::Index k = 0; k < diag.size(); ++k) {
    if (!(diag[k] > 0.0) || !std::isfinite(diag[k])) {
      throw DomainError("logdet_gram: Gram matrix is singular");
    }
  }
  return llt;
}

double log2_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const auto diag = llt.matrixLLT().diagonal();
  double s = 0.0;
  for (Eigen::Index k = 0; k < diag.size(); ++k) s += std::log2(diag[k]);
  return 2.0 * s;
}

}  // namespace

SpectralData eig_sym(const Eigen::MatrixXd& c, double rel_tol, double reference_lambda_max) {
  if (c.rows() != c.cols()) throw ParameterError("eig_sym: matrix is not square");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("eig_sym: rel_tol must be in (0, 1)");
  const double norm = c.norm();
  if ((c - c.transpose()).norm() > 1e-10 * norm) {
    throw ParameterError("eig_sym: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
  if (es.info() != Eigen::Success) throw DomainError("eig_sym: eigensolver failed");

  const Eigen::Index m = c.rows();
  SpectralData out;
  out.rel_tol = rel_tol;
  out.eigenvalues = es.eigenvalues().reverse().cwiseMax(0.0);
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  out.lambda_max = m > 0 ? out.eigenvalues[0] : 0.0;
  out.cutoff = rel_tol * std::max(out.lambda_max, reference_lambda_max);
  out.rank = 0;
  while (out.rank < m && out.eigenvalues[out.rank] > out.cutoff) ++out.rank;
  out.lambda_min_pos = out.rank > 0 ? out.eigenvalues[out.rank - 1] : 0.0;
  return out;
}

double pseudo_log_det(const SpectralData& spec) {
  if (spec.rank < 1) throw DomainError("pseudo-determinant undefined for a rank-0 matrix");
  double s = 0.0;
  for (Eigen::Index k = 0; k < spec.rank; ++k) s += std::log2(spec.eigenvalues[k]);
  return s;
}

Eigen::MatrixXd truncate_to_rank(const SpectralData& spec) {
  const auto v = spec.eigenvectors.leftCols(spec.rank);
  Eigen::MatrixXd c = v * spec.eigenvalues.head(spec.rank).asDiagonal() * v.transpose();
  return 0.5 * (c + c.transpose());
}

ReducedCholesky pivoted_cholesky(const Eigen::MatrixXd& c, double chol_tol) {
  if (c.rows() != c.cols()) throw ParameterError("pivoted_cholesky: matrix is not square");
  if (!(chol_tol > 0.0 && chol_tol < 1.0)) {
    throw ParameterError("pivoted_cholesky: chol_tol must be in (0, 1)");
  }
  const Eigen::Index m = c.rows();
  Eigen::VectorXd d = c.diagonal();
  const double dmax = m > 0 ? d.maxCoeff() : 0.0;
  const double stop = chol_tol * dmax;
  const double fail = -10.0 * chol_tol * dmax;

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  std::vector<bool> done(static_cast<std::size_t>(m), false);
  ReducedCholesky out;

  Eigen::Index k = 0;
  while (k < m && dmax > 0.0) {
    Eigen::Index j = -1;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (done[i]) continue;
      if (d[i] < fail) {
        throw NotPsdError("pivoted_cholesky: pivot " + std::to_string(d[i]) +
                          " indicates an indefinite matrix");
      }
      if (j < 0 || d[i] > d[j]) j = i;
    }
    if (j < 0 || d[j] <= stop) break;

    const double piv = std::sqrt(d[j]);
    Eigen::VectorXd col = c.col(j);
    if (k > 0) col.noalias() -= l.leftCols(k) * l.row(j).head(k).transpose();
    col /= piv;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (done[i]) col[i] = 0.0;
    }
    col[j] = piv;
    l.col(k) = col;
    d -= col.cwiseAbs2();
    d[j] = 0.0;
    done[j] = true;
    out.pivot_order.push_back(j);
    ++k;
  }

  out.l = l.leftCols(k);
  out.residual = (c - out.l * out.l.transpose()).norm();
  return out;
}

LogDetGram logdet_gram(const Eigen::MatrixXd& l, const Eigen::VectorXd& p) {
  const Eigen::MatrixXd g = weighted_gram(l, p);
  const auto llt = factor_gram(g);
  LogDetGram out;
  out.value = log2_det_from_llt(llt);

  // d/dp_i log det(L^T P L) = l_i^T G^{-1} l_i.
  const Eigen::MatrixXd y = llt.solve(l.transpose()).transpose();
  const auto rows = static_cast<std::size_t>(l.rows());
  const auto cols = static_cast<std::size_t>(l.cols());
  out.gradient.resize(l.rows());
  kernels::active().row_dot(std::span<const double>(l.data(), rows * cols),
                            std::span<const double>(y.data(), rows * cols), rows, cols,
                            std::span<double>(out.gradient.data(), rows));
  out.gradient /= std::numbers::ln2;
  return out;
}

double logdet_gram_value(const Eigen::MatrixXd& l, const Eigen::VectorXd& p) {
  return log2_det_from_llt(factor_gram(weighted_gram(l, p)));
}

}  // namespace entrosense
