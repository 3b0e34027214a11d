#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mzsel/error.hpp"
#include "mzsel/kernels.hpp"
#include "mzsel/matrix.hpp"

namespace mzsel {

/// Eigenpairs of a symmetric matrix: values descending, vectors as the
/// orthonormal columns of `vectors`, each column's largest-magnitude entry
/// positive.
struct EigenDecomposition {
  std::vector<double> values;
  Matrix vectors;

  std::size_t size() const noexcept { return values.size(); }
  double component(std::size_t row, std::size_t k) const noexcept { return vectors(row, k); }
};

struct JacobiOptions {
  std::size_t max_sweeps = 100;
  double tolerance = 1e-12;  // off-diagonal Frobenius norm relative to |A|_F
};

inline constexpr double kSymmetryTolerance = 1e-9;

/// Cyclic Jacobi eigensolver.
inline EigenDecomposition sym_eig(const Matrix& input, JacobiOptions opts = {}) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw Error(Errc::InvalidArgument, "sym_eig needs a square matrix");
  double max_abs = 0.0;
  for (double v : input.data()) max_abs = std::max(max_abs, std::abs(v));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input(i, j) - input(j, i)) > kSymmetryTolerance * max_abs)
        throw Error(Errc::InvalidArgument, "sym_eig input is not symmetric");

  Matrix a = input;
  Matrix v = Matrix::identity(n);
  const double norm = a.frobenius_norm();

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  bool converged = false;
  for (std::size_t sweep = 0; sweep <= opts.max_sweeps; ++sweep) {
    if (off_norm() <= opts.tolerance * norm) {
      converged = true;
      break;
    }
    if (sweep == opts.max_sweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
  }
  if (!converged)
    throw Error(Errc::NonConvergence, "Jacobi did not converge in " + std::to_string(opts.max_sweeps) + " sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.values[k] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(arg, src))) arg = r;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = sign * v(r, src);
  }
  return out;
}

inline EigenDecomposition sym_eig(const KernelMatrix& kernel, JacobiOptions opts = {}) {
  return sym_eig(kernel.entries, opts);
}

/// V diag(values) V^T
inline Matrix reconstruct(const EigenDecomposition& eig) {
  const std::size_t n = eig.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
      out(i, j) = s;
    }
  return out;
}

/// Coordinates of x in the eigenbasis: c_k = v_k . x
inline std::vector<double> project_onto_eigenvectors(const EigenDecomposition& eig, std::span<const double> x) {
  const std::size_t n = eig.size();
  if (x.size() != n) throw Error(Errc::SizeMismatch, "vector length differs from kernel size");
  std::vector<double> c(n, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t r = 0; r < n; ++r) c[k] += eig.vectors(r, k) * x[r];
  return c;
}

}  // namespace mzsel
