#pragma once

// Bipartite matching on square sparse graphs: maximum-cardinality matching
// (Hopcroft-Karp) and minimum-cost perfect matching (shortest augmenting
// paths with dual prices, Jonker-Volgenant style, on a sparse cost matrix).

#include <cstddef>
#include <limits>
#include <vector>

namespace nd {

inline constexpr std::size_t kUnmatched = std::numeric_limits<std::size_t>::max();

/// adj[left] lists right-vertex indices in [0, n_right).
/// Returns the matching size; match_left[l] is the matched right vertex or kUnmatched.
std::size_t hopcroft_karp(const std::vector<std::vector<std::size_t>>& adj, std::size_t n_right,
                          std::vector<std::size_t>* match_left = nullptr);

/// Compressed sparse rows: edges of row r are [row_start[r], row_start[r+1]).
struct SparseCostMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_start{0};
  std::vector<std::size_t> col;
  std::vector<double> cost;

  void add_row(const std::vector<std::size_t>& cols, const std::vector<double>& costs);
};

struct LapSolution {
  std::vector<std::size_t> row_to_col;
  std::vector<std::size_t> col_to_row;
  /// Dual prices: cost(r,c) - row_price[r] - col_price[c] >= 0 on every edge,
  /// with equality on matched edges.
  std::vector<double> row_price;
  std::vector<double> col_price;
  double total_cost = 0.0;
};

/// Minimum-cost perfect matching. Throws std::runtime_error if the sparse
/// graph has no perfect matching.
LapSolution solve_sparse_lap(const SparseCostMatrix& m);

/// Among all minimum-cost perfect matchings (edges whose reduced cost is
/// within `tol` of zero), returns col_to_row that is lexicographically
/// smallest when read column by column.
std::vector<std::size_t> lexicographic_min_cost_matching(const SparseCostMatrix& m,
                                                         const LapSolution& sol, double tol);

}  // namespace nd
