#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace oracle {

// Least-squares polynomial through (j - at, y[j]) for j in [lo, hi],
// evaluated at `at`. Solved with column-pivoted QR on the raw monomials.
inline double poly_fit_at(const std::vector<double>& y, std::size_t lo, std::size_t hi,
                          std::size_t at, int degree) {
  const Eigen::Index n = static_cast<Eigen::Index>(hi - lo + 1);
  const Eigen::Index p = std::min<Eigen::Index>(degree + 1, n);
  Eigen::MatrixXd a(n, p);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = static_cast<double>(static_cast<long>(lo) + i - static_cast<long>(at));
    double pw = 1.0;
    for (Eigen::Index l = 0; l < p; ++l) {
      a(i, l) = pw;
      pw *= x;
    }
    v(i) = y[lo + static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(v);
  return coef(0);
}

// Convolution weights of the fit via the normal equations (A^T A) a = A^T e_j.
inline std::vector<double> normal_equation_weights(int lo_offset, int hi_offset, int degree) {
  const int n = hi_offset - lo_offset + 1;
  Eigen::MatrixXd a(n, degree + 1);
  for (int i = 0; i < n; ++i) {
    const double x = lo_offset + i;
    double pw = 1.0;
    for (int l = 0; l <= degree; ++l) {
      a(i, l) = pw;
      pw *= x;
    }
  }
  const Eigen::MatrixXd ata = a.transpose() * a;
  const Eigen::MatrixXd pinv = ata.ldlt().solve(a.transpose());
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = pinv(0, i);
  return w;
}

}  // namespace oracle
