#include "mvtrack/assignment.hpp"

#include "mvtrack/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace mvtrack {

CostMatrix::CostMatrix(Eigen::MatrixXd cost) : cost_(std::move(cost)) {
  for (Eigen::Index r = 0; r < cost_.rows(); ++r) {
    for (Eigen::Index c = 0; c < cost_.cols(); ++c) {
      const double v = cost_(r, c);
      if (!std::isfinite(v) && v != kInfeasible) {
        throw InvalidArgument("cost cells must be finite or kInfeasible");
      }
    }
  }
}

int Matching::col_of(int row) const {
  for (const auto& [r, c] : pairs) {
    if (r == row) return c;
  }
  return -1;
}

int Matching::row_of(int col) const {
  for (const auto& [r, c] : pairs) {
    if (c == col) return r;
  }
  return -1;
}

namespace {

struct Potentials {
  std::vector<int> row_to_col;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

// Shortest-augmenting-path Hungarian method on a dense square matrix.
Potentials hungarian_square(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based working arrays; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
    } while (j0 != 0);
  }

  Potentials out;
  out.row_to_col.assign(n, -1);
  out.u.resize(n);
  out.v.resize(n);
  for (int j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) {
    out.u(i) = u[i + 1];
    out.v(i) = v[i + 1];
  }
  return out;
}

}  // namespace

Matching solve_assignment(const CostMatrix& cost) {
  Matching result;
  const int rows = cost.rows();
  const int cols = cost.cols();
  const int n = std::max(rows, cols);
  if (rows == 0 || cols == 0) return result;

  double lo = kInfeasible, hi = -kInfeasible;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (!cost.feasible(r, c)) continue;
      lo = std::min(lo, cost(r, c));
      hi = std::max(hi, cost(r, c));
    }
  }
  if (lo == kInfeasible) return result;

  // Each unmatched real row pays `big`, which exceeds any achievable spread of
  // feasible costs, so cardinality is maximized before cost is minimized.
  const int max_pairs = std::min(rows, cols);
  const double range = hi - lo;
  const double big = range * (max_pairs + 1) + 1.0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c >= cols) {
        a(r, c) = big;
      } else {
        a(r, c) = cost.feasible(r, c) ? cost(r, c) - lo : big;
      }
    }
  }

  Potentials sol = hungarian_square(a);

  // Every optimal assignment is a perfect matching on zero-reduced-cost cells
  // for the optimal duals; walk rows in order and pull each one onto the
  // smallest real column that still admits such a matching.
  const double tol = 1e-10 * (1.0 + big) * n;
  auto tight = [&](int r, int c) { return a(r, c) - sol.u(r) - sol.v(c) <= tol; };
  auto real = [&](int r, int c) { return r < rows && c < cols && cost.feasible(r, c); };

  std::vector<int>& match = sol.row_to_col;
  std::vector<int> owner(n, -1);
  for (int r = 0; r < n; ++r) owner[match[r]] = r;

  std::vector<char> visited(n, 0);
  std::function<bool(int, int, int)> reroute = [&](int r, int locked_upto, int target) -> bool {
    for (int c = 0; c < n; ++c) {
      if (visited[c] || !tight(r, c)) continue;
      if (c != target && owner[c] <= locked_upto) continue;
      visited[c] = 1;
      if (c == target || reroute(owner[c], locked_upto, target)) {
        match[r] = c;
        owner[c] = r;
        return true;
      }
    }
    return false;
  };

  for (int i = 0; i < rows; ++i) {
    const int current = match[i];
    const int limit = real(i, current) ? current : cols;
    for (int j = 0; j < limit; ++j) {
      if (!real(i, j) || !tight(i, j) || owner[j] < i) continue;
      std::fill(visited.begin(), visited.end(), 0);
      visited[j] = 1;
      const int displaced = owner[j];
      if (reroute(displaced, i, current)) {
        match[i] = j;
        owner[j] = i;
        break;
      }
    }
  }

  for (int r = 0; r < rows; ++r) {
    const int c = match[r];
    if (real(r, c)) {
      result.pairs.emplace_back(r, c);
      result.total_cost += cost(r, c);
    }
  }
  return result;
}

CostMatrix similarity_to_cost(const Eigen::MatrixXd& similarity, double threshold) {
  if (!(threshold >= -1.0 && threshold <= 1.0)) {
    throw InvalidArgument("similarity threshold must lie in [-1, 1]");
  }
  Eigen::MatrixXd c(similarity.rows(), similarity.cols());
  for (Eigen::Index r = 0; r < c.rows(); ++r) {
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
      const double s = similarity(r, k);
      c(r, k) = s >= threshold ? -s : kInfeasible;
    }
  }
  return CostMatrix(std::move(c));
}

}  // namespace mvtrack
