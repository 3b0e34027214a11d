#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mzsel/error.hpp"
#include "mzsel/matrix.hpp"

namespace mzsel {

struct TransportPlan {
  Matrix flows;  // sources x sinks
  double cost = 0.0;
};

using PointSet = std::vector<std::vector<double>>;

namespace detail {

// Basis of the transportation simplex: m + k - 1 cells forming a spanning
// tree over the m row nodes and k column nodes (ids m .. m + k - 1).
class TransportBasis {
 public:
  TransportBasis(std::size_t m, std::size_t k) : m_(m), k_(k), basic_(m * k, false) {}

  void add(std::size_t i, std::size_t j) {
    basic_[i * k_ + j] = true;
    cells_.emplace_back(i, j);
  }
  void replace(std::pair<std::size_t, std::size_t> leaving, std::pair<std::size_t, std::size_t> entering) {
    basic_[leaving.first * k_ + leaving.second] = false;
    basic_[entering.first * k_ + entering.second] = true;
    *std::find(cells_.begin(), cells_.end(), leaving) = entering;
  }
  bool is_basic(std::size_t i, std::size_t j) const { return basic_[i * k_ + j]; }
  const std::vector<std::pair<std::size_t, std::size_t>>& cells() const { return cells_; }

  /// Adjacency over tree nodes; each entry is (neighbour, cell index).
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency() const {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(m_ + k_);
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      const auto [i, j] = cells_[c];
      adj[i].emplace_back(m_ + j, c);
      adj[m_ + j].emplace_back(i, c);
    }
    return adj;
  }

 private:
  std::size_t m_, k_;
  std::vector<bool> basic_;
  std::vector<std::pair<std::size_t, std::size_t>> cells_;
};

}  // namespace detail

/// Exact balanced transportation problem by the transportation (network)
/// simplex: north-west corner start, u-v potentials, Dantzig pricing with a
/// switch to Bland's rule after a run of degenerate pivots.
inline TransportPlan solve_transport(std::span<const double> supply, std::span<const double> demand,
                                     const Matrix& cost) {
  const std::size_t m = supply.size();
  const std::size_t k = demand.size();
  if (m == 0 || k == 0) throw Error(Errc::InvalidArgument, "transport needs non-empty supply and demand");
  if (cost.rows() != m || cost.cols() != k) throw Error(Errc::SizeMismatch, "cost matrix shape mismatch");

  Matrix x(m, k);
  detail::TransportBasis basis(m, k);
  {
    std::vector<double> s(supply.begin(), supply.end());
    std::vector<double> d(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    for (;;) {
      const double q = std::min(s[i], d[j]);
      x(i, j) = std::max(q, 0.0);
      basis.add(i, j);
      s[i] -= q;
      d[j] -= q;
      if (i == m - 1 && j == k - 1) break;
      if (i == m - 1) ++j;
      else if (j == k - 1) ++i;
      else if (s[i] < d[j]) ++i;
      else ++j;
    }
  }

  double max_cost = 0.0;
  for (double c : cost.data()) max_cost = std::max(max_cost, std::abs(c));
  const double tol = 1e-12 * std::max(1.0, max_cost);
  const std::size_t max_iterations = 50 * m * k + 1000;
  constexpr std::size_t kDegenerateRunBeforeBland = 50;

  std::vector<double> potential(m + k);
  std::vector<std::size_t> parent_node(m + k), parent_cell(m + k);
  std::vector<bool> seen(m + k);
  std::size_t degenerate_run = 0;

  for (std::size_t iter = 0;; ++iter) {
    if (iter >= max_iterations)
      throw Error(Errc::SolverNonConvergence, "transport simplex exceeded " + std::to_string(max_iterations) + " pivots");

    const auto adj = basis.adjacency();
    auto traverse = [&](std::size_t root, bool set_potentials) {
      std::fill(seen.begin(), seen.end(), false);
      std::queue<std::size_t> q;
      q.push(root);
      seen[root] = true;
      if (set_potentials) potential[root] = 0.0;
      while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (const auto& [w, c] : adj[u]) {
          if (seen[w]) continue;
          seen[w] = true;
          parent_node[w] = u;
          parent_cell[w] = c;
          if (set_potentials) {
            const auto [ci, cj] = basis.cells()[c];
            potential[w] = cost(ci, cj) - potential[u];
          }
          q.push(w);
        }
      }
    };

    traverse(0, true);

    const bool bland = degenerate_run >= kDegenerateRunBeforeBland;
    double best = -tol;
    std::size_t ei = m, ej = k;
    for (std::size_t i = 0; i < m && !(bland && ei < m); ++i)
      for (std::size_t j = 0; j < k; ++j) {
        if (basis.is_basic(i, j)) continue;
        const double reduced = cost(i, j) - potential[i] - potential[m + j];
        if (reduced < best) {
          ei = i;
          ej = j;
          if (bland) break;
          best = reduced;
        }
      }
    if (ei == m) break;

    // Tree path from column node ej back to row node ei; cells alternate
    // -, +, -, ... starting next to ej, the entering cell being +.
    traverse(ei, false);
    std::vector<std::size_t> path;
    for (std::size_t node = m + ej; node != ei; node = parent_node[node]) path.push_back(parent_cell[node]);

    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = path.size();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const auto [i, j] = basis.cells()[path[p]];
      const double f = x(i, j);
      const bool better = f < theta || (f == theta && leave < path.size() &&
                                       i * k + j < basis.cells()[path[leave]].first * k + basis.cells()[path[leave]].second);
      if (better) {
        theta = f;
        leave = p;
      }
    }
    theta = std::max(theta, 0.0);

    for (std::size_t p = 0; p < path.size(); ++p) {
      const auto [i, j] = basis.cells()[path[p]];
      if (p % 2 == 0) x(i, j) = std::max(x(i, j) - theta, 0.0);
      else x(i, j) += theta;
    }
    x(ei, ej) += theta;
    const auto leaving = basis.cells()[path[leave]];
    x(leaving.first, leaving.second) = 0.0;
    basis.replace(leaving, {ei, ej});
    degenerate_run = (theta == 0.0) ? degenerate_run + 1 : 0;
  }

  TransportPlan plan{std::move(x), 0.0};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) plan.cost += plan.flows(i, j) * cost(i, j);
  return plan;
}

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return std::sqrt(s);
}

/// Earth mover's distance between two weighted point sets under the
/// Euclidean ground metric. Weights must be positive and sum to 1.
inline TransportPlan emd(const PointSet& points_a, std::span<const double> weights_a, const PointSet& points_b,
                         std::span<const double> weights_b) {
  auto check = [](const PointSet& pts, std::span<const double> w, const char* side) {
    if (pts.empty() || pts.size() != w.size())
      throw Error(Errc::SizeMismatch, std::string("emd: ") + side + " points/weights size mismatch");
    double total = 0.0;
    for (double v : w) {
      if (!(v > 0.0)) throw Error(Errc::InvalidArgument, std::string("emd: ") + side + " weight not positive");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw Error(Errc::InvalidArgument, std::string("emd: ") + side + " weights do not sum to 1");
  };
  check(points_a, weights_a, "first");
  check(points_b, weights_b, "second");
  const std::size_t dim = points_a.front().size();
  Matrix dist(points_a.size(), points_b.size());
  for (std::size_t i = 0; i < points_a.size(); ++i)
    for (std::size_t j = 0; j < points_b.size(); ++j) {
      if (points_a[i].size() != dim || points_b[j].size() != dim)
        throw Error(Errc::SizeMismatch, "emd: point dimensions differ");
      dist(i, j) = euclidean(points_a[i], points_b[j]);
    }
  return solve_transport(weights_a, weights_b, dist);
}

}  // namespace mzsel
