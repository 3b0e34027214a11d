#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mzsel/dynamics.hpp"
#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/kernels.hpp"
#include "mzsel/matrix.hpp"
#include "mzsel/spectral.hpp"

namespace mzsel {

struct SimulateOptions {
  double eta = 1.0;
  std::optional<double> eig_floor;
  double t_max = 1.0;
  std::size_t points = 11;
  std::optional<double> oracle_step;  // adds a gd_loss column
};

struct SimulateOutput {
  std::vector<double> times;
  std::vector<double> losses;
  std::vector<double> first_order;
  std::vector<double> gd_losses;
  DynamicsSummary summary;
  std::string csv;
  nlohmann::json summary_json;
};

inline void validate(const SimulateOptions& o) {
  if (!(o.eta > 0.0) || !std::isfinite(o.eta)) throw Error(Errc::InvalidArgument, "eta must be > 0");
  if (!(o.t_max >= 0.0) || !std::isfinite(o.t_max)) throw Error(Errc::InvalidArgument, "t-max must be >= 0");
  if (o.points < 2) throw Error(Errc::InvalidArgument, "points must be >= 2");
  if (o.eig_floor && !(*o.eig_floor > 0.0)) throw Error(Errc::InvalidArgument, "eig-floor must be > 0");
  if (o.oracle_step && !(*o.oracle_step > 0.0)) throw Error(Errc::InvalidArgument, "oracle-step must be > 0");
}

/// Loss trajectory, first-order estimate and summary for the kernel of
/// `jacobian` (one row per sample), summed over the label_targets columns.
/// `outputs` holds f_{w0} with one column per target; zero when absent.
inline SimulateOutput simulate(const EmbeddingSet& jacobian, const EmbeddingSet* outputs, const SimulateOptions& opts) {
  validate(opts);
  const std::size_t n = jacobian.n;
  const auto targets = label_targets(jacobian.labels, jacobian.num_classes);
  if (outputs != nullptr && (outputs->n != n || outputs->d != targets.size()))
    throw Error(Errc::SizeMismatch, "outputs must be " + std::to_string(n) + " x " + std::to_string(targets.size()));

  std::vector<std::vector<double>> f0(targets.size(), std::vector<double>(n, 0.0));
  if (outputs != nullptr)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < targets.size(); ++c) f0[c][i] = outputs->row(i)[c];
  std::vector<std::vector<double>> residuals(targets.size(), std::vector<double>(n));
  for (std::size_t c = 0; c < targets.size(); ++c)
    for (std::size_t i = 0; i < n; ++i) residuals[c][i] = targets[c][i] - f0[c][i];

  const auto eig = sym_eig(gram_kernel(jacobian));

  SimulateOutput out;
  for (std::size_t i = 0; i < opts.points; ++i)
    out.times.push_back(opts.t_max * static_cast<double>(i) / static_cast<double>(opts.points - 1));
  out.losses.assign(opts.points, 0.0);
  for (const auto& r : residuals) {
    const auto trace = loss_trajectory(eig, r, opts.eta, out.times);
    for (std::size_t i = 0; i < opts.points; ++i) out.losses[i] += trace.losses[i];
  }
  out.summary = summarize_dynamics(eig, residuals, targets, opts.eig_floor);
  double l0 = 0.0;
  for (const auto& r : residuals) l0 += squared_norm(r);
  for (double t : out.times) out.first_order.push_back(l0 - 2.0 * opts.eta * t * out.summary.training_speed);

  std::vector<std::size_t> steps;
  if (opts.oracle_step) {
    Matrix j(n, jacobian.d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < jacobian.d; ++t) j(i, t) = jacobian.row(i)[t];
    for (double t : out.times) steps.push_back(static_cast<std::size_t>(std::llround(opts.eta * t / *opts.oracle_step)));
    out.gd_losses.assign(opts.points, 0.0);
    for (std::size_t c = 0; c < targets.size(); ++c) {
      const auto trace = gd_oracle_at(j, f0[c], targets[c], *opts.oracle_step, steps);
      for (std::size_t i = 0; i < opts.points; ++i) out.gd_losses[i] += trace.losses[i];
    }
  }

  char buf[128];
  if (opts.oracle_step) {
    std::snprintf(buf, sizeof buf, "# gd_loss: gradient descent with step h = %.17g; step s is reported at t = s * h / eta\n",
                  *opts.oracle_step);
    out.csv += buf;
  }
  out.csv += opts.oracle_step ? "t,L_t,first_order_estimate,gd_loss\n" : "t,L_t,first_order_estimate\n";
  for (std::size_t i = 0; i < opts.points; ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", out.times[i], out.losses[i], out.first_order[i]);
    out.csv += buf;
    if (opts.oracle_step) {
      std::snprintf(buf, sizeof buf, ",%.17g", out.gd_losses[i]);
      out.csv += buf;
    }
    out.csv += "\n";
  }
  out.summary_json = {{"training_speed", out.summary.training_speed},
                      {"generalization_score", out.summary.generalization_score},
                      {"jensen_lhs", out.summary.jensen.lhs},
                      {"jensen_rhs", out.summary.jensen.rhs}};
  return out;
}

}  // namespace mzsel
