#pragma once

#include <Eigen/Dense>

#include <limits>
#include <utility>
#include <vector>

namespace mvtrack {

inline constexpr double kInfeasible = std::numeric_limits<double>::infinity();

// Rectangular cost table; a cell equal to kInfeasible may never be matched.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(int rows, int cols, double fill = 0.0) : cost_(rows, cols) { cost_.setConstant(fill); }
  explicit CostMatrix(Eigen::MatrixXd cost);

  int rows() const { return static_cast<int>(cost_.rows()); }
  int cols() const { return static_cast<int>(cost_.cols()); }

  double operator()(int r, int c) const { return cost_(r, c); }
  double& operator()(int r, int c) { return cost_(r, c); }
  bool feasible(int r, int c) const { return cost_(r, c) != kInfeasible; }

  const Eigen::MatrixXd& values() const { return cost_; }

 private:
  Eigen::MatrixXd cost_;
};

struct Matching {
  std::vector<std::pair<int, int>> pairs;  // sorted by row
  double total_cost = 0.0;

  // Column matched to `row`, or -1.
  int col_of(int row) const;
  int row_of(int col) const;
};

// Exact Hungarian solver. Among all matchings that use only feasible cells it
// returns one of maximum cardinality, then minimum total cost, then the
// lexicographically smallest (row, col) pair sequence.
Matching solve_assignment(const CostMatrix& cost);

// cost = -s where s >= threshold, infeasible elsewhere.
CostMatrix similarity_to_cost(const Eigen::MatrixXd& similarity, double threshold);

}  // namespace mvtrack
