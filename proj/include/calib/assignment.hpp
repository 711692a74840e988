// Copyright 2026 the calib authors
// SPDX-License-Identifier: Apache-2.0
//
// Linear assignment solvers backing the earth mover's distance: an exact
// O(n^3) Hungarian method for moderate sizes and an epsilon-scaled auction
// with a certified duality gap for large ones.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace calib {

/// Minimum-cost perfect matching on a square cost matrix, shortest
/// augmenting paths with potentials. Returns the optimal cost;
/// col_of_row[i], when requested, is the column matched to row i.
inline double solveAssignmentExact(const Eigen::MatrixXd& cost,
                                   std::vector<int>* col_of_row = nullptr) {
  if (cost.rows() != cost.cols() || cost.rows() == 0) {
    throw std::invalid_argument("solveAssignmentExact: need a square matrix");
  }
  const int n = int(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();

  // 1-based with column 0 as the sentinel start of each augmenting path.
  std::vector<double> u(n + 1, 0), v(n + 1, 0), minv(n + 1, 0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0;
  if (col_of_row) col_of_row->assign(n, -1);
  for (int j = 1; j <= n; ++j) {
    total += cost(p[j] - 1, j - 1);
    if (col_of_row) (*col_of_row)[p[j] - 1] = j - 1;
  }
  return total;
}

struct AuctionResult {
  double cost = 0;         // cost of the found assignment
  double lower_bound = 0;  // certified lower bound on the optimum
  double rel_gap = 0;      // (cost - lower_bound) / max(cost, eps)
  std::vector<int> col_of_row;
};

/// Forward auction with epsilon scaling. `row_cost(i, j)` supplies the cost
/// matrix lazily. Runs until the certified relative duality gap drops below
/// `rel_gap_target` (weak-duality bound computed from the prices) or the
/// scaling floor is hit; the achieved gap is reported either way.
inline AuctionResult solveAssignmentAuction(
    int n, const std::function<double(int, int)>& row_cost,
    double rel_gap_target = 0.01) {
  if (n <= 0) {
    throw std::invalid_argument("solveAssignmentAuction: empty problem");
  }
  if (n == 1) {
    AuctionResult r;
    r.cost = r.lower_bound = row_cost(0, 0);
    r.col_of_row = {0};
    return r;
  }
  double cost_span = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      cost_span = std::max(cost_span, std::abs(row_cost(i, j)));
    }
  }
  if (cost_span == 0) {
    AuctionResult r;
    r.col_of_row.resize(n);
    for (int i = 0; i < n; ++i) r.col_of_row[i] = i;
    return r;
  }

  std::vector<double> price(n, 0.0);
  std::vector<int> owner(n, -1), assigned(n, -1);
  AuctionResult result;

  double eps = cost_span / 4.0;
  const double eps_floor = cost_span * 1e-9 / n;
  while (true) {
    std::fill(owner.begin(), owner.end(), -1);
    std::fill(assigned.begin(), assigned.end(), -1);
    std::vector<int> queue;
    queue.reserve(n);
    for (int i = 0; i < n; ++i) queue.push_back(i);

    while (!queue.empty()) {
      const int i = queue.back();
      queue.pop_back();
      // Best and second-best columns at current prices.
      int best_j = -1;
      double best = std::numeric_limits<double>::infinity();
      double second = best;
      for (int j = 0; j < n; ++j) {
        const double value = row_cost(i, j) + price[j];
        if (value < best) {
          second = best;
          best = value;
          best_j = j;
        } else if (value < second) {
          second = value;
        }
      }
      price[best_j] += (second - best) + eps;
      if (owner[best_j] >= 0) {
        assigned[owner[best_j]] = -1;
        queue.push_back(owner[best_j]);
      }
      owner[best_j] = i;
      assigned[i] = best_j;
    }

    double primal = 0;
    for (int i = 0; i < n; ++i) primal += row_cost(i, assigned[i]);
    // Weak duality: sum_j p_j subtracted from the row-wise minima of the
    // price-adjusted costs bounds the optimum from below.
    double dual = 0;
    for (int i = 0; i < n; ++i) {
      double row_min = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        row_min = std::min(row_min, row_cost(i, j) + price[j]);
      }
      dual += row_min;
    }
    for (int j = 0; j < n; ++j) dual -= price[j];

    result.cost = primal;
    result.lower_bound = dual;
    result.rel_gap =
        primal > 0 ? std::max(primal - dual, 0.0) / primal : 0.0;
    result.col_of_row = assigned;
    if (result.rel_gap <= rel_gap_target || eps <= eps_floor) {
      return result;
    }
    eps /= 5.0;
  }
}

}  // namespace calib
