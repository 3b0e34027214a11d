#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mzsel/error.hpp"
#include "mzsel/kernels.hpp"
#include "mzsel/log.hpp"
#include "mzsel/matrix.hpp"
#include "mzsel/spectral.hpp"

// Linearized fine-tuning under the squared loss. With flow rate eta the
// residual obeys d(dY)/dt = -eta * Theta * dY, so
//
//   L_t = dY^T exp(-2 eta Theta t) dY,   dL/dt|_0 = -2 eta dY^T Theta dY.
//
// The discrete oracle takes w <- w + step * J^T r (gradient descent with
// step/2 on the summed squared loss), so r_s = (I - step * Theta)^s r_0. Its
// step s is reported at time t = s * step, which matches L_t at eta = 1.

namespace mzsel {

struct DynamicsTrace {
  std::vector<double> times;
  std::vector<double> losses;
  double eta = 0.0;
  double residual_norm = 0.0;  // |dY|^2
};

inline double squared_norm(std::span<const double> x) { return dot(x, x); }

namespace detail {

inline void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw Error(Errc::SizeMismatch, std::string(what) + " has length " + std::to_string(got) + ", expected " +
                                        std::to_string(want));
}

}  // namespace detail

inline DynamicsTrace loss_trajectory(const EigenDecomposition& eig, std::span<const double> residual, double eta,
                                     std::span<const double> times) {
  if (!(eta > 0.0)) throw Error(Errc::InvalidArgument, "eta must be > 0");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] >= 0.0)) throw Error(Errc::InvalidArgument, "times must be >= 0");
    if (i > 0 && times[i] < times[i - 1]) throw Error(Errc::InvalidArgument, "times must be ascending");
  }
  const auto coeff = project_onto_eigenvectors(eig, residual);
  DynamicsTrace trace;
  trace.eta = eta;
  trace.residual_norm = squared_norm(residual);
  trace.times.assign(times.begin(), times.end());
  trace.losses.reserve(times.size());
  for (double t : times) {
    // |dY|^2 + sum_k expm1(-2 eta lambda_k t) c_k^2 keeps L_0 exact.
    double decay = 0.0;
    for (std::size_t k = 0; k < eig.size(); ++k) decay += std::expm1(-2.0 * eta * eig.values[k] * t) * coeff[k] * coeff[k];
    trace.losses.push_back(std::max(0.0, trace.residual_norm + decay));
  }
  return trace;
}

inline DynamicsTrace loss_trajectory(const KernelMatrix& kernel, std::span<const double> residual, double eta,
                                     std::span<const double> times) {
  detail::require_size(residual.size(), kernel.size(), "residual");
  return loss_trajectory(sym_eig(kernel), residual, eta, times);
}

/// dY^T Theta dY
inline double training_speed(const KernelMatrix& kernel, std::span<const double> residual) {
  detail::require_size(residual.size(), kernel.size(), "residual");
  return dot(residual, multiply(kernel.entries, residual));
}

inline constexpr double kDefaultRelativeEigFloor = 1e-8;

inline double default_eig_floor(const EigenDecomposition& eig) {
  const double top = eig.values.empty() ? 0.0 : eig.values.front();
  return kDefaultRelativeEigFloor * top;
}

/// (1/n) sum over eigenvalues >= floor of (y . v_k)^2 / lambda_k. Lower is
/// better. The floor defaults to 1e-8 * lambda_max.
inline double generalization_score(const EigenDecomposition& eig, std::span<const double> y,
                                   std::optional<double> eig_floor = std::nullopt) {
  const double floor = eig_floor.value_or(default_eig_floor(eig));
  if (!(floor > 0.0)) throw Error(Errc::AllEigenvaluesFloored, "eigenvalue floor is not positive (lambda_max <= 0?)");
  const auto coeff = project_onto_eigenvectors(eig, y);
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t k = 0; k < eig.size(); ++k) {
    if (eig.values[k] < floor) continue;
    sum += coeff[k] * coeff[k] / eig.values[k];
    ++kept;
  }
  if (kept == 0) throw Error(Errc::AllEigenvaluesFloored, "no eigenvalue above the floor");
  return sum / static_cast<double>(y.size());
}

inline double generalization_score(const KernelMatrix& kernel, std::span<const double> y,
                                   std::optional<double> eig_floor = std::nullopt) {
  detail::require_size(y.size(), kernel.size(), "labels");
  return generalization_score(sym_eig(kernel), y, eig_floor);
}

struct JensenSides {
  double lhs = 0.0;  // (dY^T Theta dY / |dY|^2)^-1
  double rhs = 0.0;  // dY^T Theta^+ dY / |dY|^2
};

/// Both sides of the Jensen relation between the quadratic forms of Theta
/// and its pseudo-inverse, on dY projected onto the range of Theta.
inline JensenSides jensen_gap(const EigenDecomposition& eig, std::span<const double> residual,
                              std::optional<double> eig_floor = std::nullopt) {
  const double floor = eig_floor.value_or(default_eig_floor(eig));
  if (!(floor > 0.0)) throw Error(Errc::AllEigenvaluesFloored, "eigenvalue floor is not positive (lambda_max <= 0?)");
  const auto coeff = project_onto_eigenvectors(eig, residual);
  double mass = 0.0, forward = 0.0, inverse = 0.0;
  for (std::size_t k = 0; k < eig.size(); ++k) {
    if (eig.values[k] < floor) continue;
    const double c2 = coeff[k] * coeff[k];
    mass += c2;
    forward += eig.values[k] * c2;
    inverse += c2 / eig.values[k];
  }
  if (mass <= 1e-24 * squared_norm(residual) || mass == 0.0)
    throw Error(Errc::ZeroRangeResidual, "residual has no component in the range of the kernel");
  return {mass / forward, inverse / mass};
}

inline JensenSides jensen_gap(const KernelMatrix& kernel, std::span<const double> residual,
                              std::optional<double> eig_floor = std::nullopt) {
  detail::require_size(residual.size(), kernel.size(), "residual");
  return jensen_gap(sym_eig(kernel), residual, eig_floor);
}

/// Multi-output summary: each quantity is summed over target columns, and
/// the Jensen sides are taken on the stacked residual (Theta acting on each
/// column independently).
struct DynamicsSummary {
  double training_speed = 0.0;
  double generalization_score = 0.0;
  JensenSides jensen;
};

inline DynamicsSummary summarize_dynamics(const EigenDecomposition& eig, const std::vector<std::vector<double>>& residuals,
                                          const std::vector<std::vector<double>>& targets,
                                          std::optional<double> eig_floor = std::nullopt) {
  const double floor = eig_floor.value_or(default_eig_floor(eig));
  if (!(floor > 0.0)) throw Error(Errc::AllEigenvaluesFloored, "eigenvalue floor is not positive (lambda_max <= 0?)");
  DynamicsSummary out;
  for (const auto& y : targets) {
    detail::require_size(y.size(), eig.size(), "targets");
    out.generalization_score += generalization_score(eig, y, floor);
  }
  double total = 0.0, mass = 0.0, forward = 0.0, inverse = 0.0;
  for (const auto& r : residuals) {
    detail::require_size(r.size(), eig.size(), "residual");
    total += squared_norm(r);
    const auto coeff = project_onto_eigenvectors(eig, r);
    for (std::size_t k = 0; k < eig.size(); ++k) {
      const double c2 = coeff[k] * coeff[k];
      out.training_speed += eig.values[k] * c2;
      if (eig.values[k] < floor) continue;
      mass += c2;
      forward += eig.values[k] * c2;
      inverse += c2 / eig.values[k];
    }
  }
  if (mass <= 1e-24 * total || mass == 0.0)
    throw Error(Errc::ZeroRangeResidual, "residual has no component in the range of the kernel");
  out.jensen = {mass / forward, inverse / mass};
  return out;
}

/// Largest eigenvalue of J J^T by power iteration.
inline double top_kernel_eigenvalue(const Matrix& jacobian, std::size_t iterations = 100) {
  const std::size_t n = jacobian.rows();
  const std::size_t p = jacobian.cols();
  std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1))));
  std::vector<double> g(p);
  double lambda = 0.0;
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = jacobian.row(i);
      for (std::size_t j = 0; j < p; ++j) g[j] += row[j] * v[i];
    }
    auto w = multiply(jacobian, g);
    const double norm = std::sqrt(squared_norm(w));
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return lambda;
}

inline constexpr double kDivergenceFactor = 1e6;

/// Explicit full-batch gradient descent on the linearized model
/// f(w) = f0 + J (w - w0), recording the summed squared loss after each
/// step count in `record_steps` (ascending).
inline DynamicsTrace gd_oracle_at(const Matrix& jacobian, std::span<const double> f0, std::span<const double> y,
                                  double step, std::span<const std::size_t> record_steps) {
  const std::size_t n = jacobian.rows();
  const std::size_t p = jacobian.cols();
  detail::require_size(f0.size(), n, "f0");
  detail::require_size(y.size(), n, "y");
  if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "step must be > 0");
  if (!std::is_sorted(record_steps.begin(), record_steps.end()))
    throw Error(Errc::InvalidArgument, "record steps must be ascending");

  const double lambda_max = top_kernel_eigenvalue(jacobian);
  if (step * lambda_max >= 1.0)
    log::warn("gd_oracle: step * lambda_max = " + std::to_string(step * lambda_max) +
              " >= 1; iterates oscillate or diverge");

  std::vector<double> initial(n);
  for (std::size_t i = 0; i < n; ++i) initial[i] = y[i] - f0[i];
  std::vector<double> r = initial;
  std::vector<double> g(p);

  DynamicsTrace trace;
  trace.eta = 1.0;
  trace.residual_norm = squared_norm(initial);
  const double limit = kDivergenceFactor * std::max(trace.residual_norm, 1e-300);

  std::size_t s = 0;
  for (std::size_t target : record_steps) {
    for (; s < target; ++s) {
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto row = jacobian.row(i);
        for (std::size_t j = 0; j < p; ++j) g[j] += row[j] * r[i];
      }
      // r <- r - step * J g
      for (std::size_t i = 0; i < n; ++i) r[i] -= step * dot(jacobian.row(i), g);
      if (squared_norm(r) > limit)
        throw Error(Errc::Divergence, "loss exceeded 1e6 * L_0 at step " + std::to_string(s + 1));
    }
    trace.times.push_back(static_cast<double>(target) * step);
    trace.losses.push_back(squared_norm(r));
  }
  return trace;
}

/// gd_oracle_at on steps 0, record_every, 2 * record_every, ..., plus the
/// final step.
inline DynamicsTrace gd_oracle(const Matrix& jacobian, std::span<const double> f0, std::span<const double> y,
                               double eta, std::size_t steps, std::size_t record_every) {
  if (record_every == 0) throw Error(Errc::InvalidArgument, "record_every must be >= 1");
  std::vector<std::size_t> marks;
  for (std::size_t s = 0; s <= steps; s += record_every) marks.push_back(s);
  if (marks.back() != steps) marks.push_back(steps);
  return gd_oracle_at(jacobian, f0, y, eta, marks);
}

/// Regression targets for class labels: one +-1 column for two classes
/// (class 1 -> +1), one-hot columns otherwise.
inline std::vector<std::vector<double>> label_targets(std::span<const std::uint32_t> labels,
                                                      std::uint32_t num_classes) {
  const std::size_t n = labels.size();
  if (num_classes == 2) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == 1 ? 1.0 : -1.0;
    return {y};
  }
  std::vector<std::vector<double>> cols(num_classes, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) cols[labels[i]][i] = 1.0;
  return cols;
}

}  // namespace mzsel
