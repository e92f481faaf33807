#include "narrative/matching.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace nd {

namespace {

constexpr std::size_t kInfDist = std::numeric_limits<std::size_t>::max();

struct HopcroftKarp {
  const std::vector<std::vector<std::size_t>>& adj;
  std::size_t n_left, n_right;
  std::vector<std::size_t> match_l, match_r, dist;

  HopcroftKarp(const std::vector<std::vector<std::size_t>>& a, std::size_t nr)
      : adj(a), n_left(a.size()), n_right(nr),
        match_l(a.size(), kUnmatched), match_r(nr, kUnmatched), dist(a.size()) {}

  bool bfs() {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t l = 0; l < n_left; ++l) {
      if (match_l[l] == kUnmatched) {
        dist[l] = 0;
        q.push(l);
      } else {
        dist[l] = kInfDist;
      }
    }
    while (!q.empty()) {
      const std::size_t l = q.front();
      q.pop();
      for (std::size_t r : adj[l]) {
        const std::size_t next = match_r[r];
        if (next == kUnmatched) {
          found = true;
        } else if (dist[next] == kInfDist) {
          dist[next] = dist[l] + 1;
          q.push(next);
        }
      }
    }
    return found;
  }

  bool dfs(std::size_t l) {
    for (std::size_t r : adj[l]) {
      const std::size_t next = match_r[r];
      if (next == kUnmatched || (dist[next] == dist[l] + 1 && dfs(next))) {
        match_l[l] = r;
        match_r[r] = l;
        return true;
      }
    }
    dist[l] = kInfDist;
    return false;
  }

  std::size_t run() {
    std::size_t size = 0;
    while (bfs())
      for (std::size_t l = 0; l < n_left; ++l)
        if (match_l[l] == kUnmatched && dfs(l)) ++size;
    return size;
  }
};

}  // namespace

std::size_t hopcroft_karp(const std::vector<std::vector<std::size_t>>& adj, std::size_t n_right,
                          std::vector<std::size_t>* match_left) {
  for (const auto& row : adj)
    for (std::size_t r : row)
      if (r >= n_right) throw std::out_of_range("hopcroft_karp: right vertex out of range");
  HopcroftKarp hk(adj, n_right);
  const std::size_t size = hk.run();
  if (match_left) *match_left = std::move(hk.match_l);
  return size;
}

void SparseCostMatrix::add_row(const std::vector<std::size_t>& cols,
                               const std::vector<double>& costs) {
  if (cols.size() != costs.size()) throw std::invalid_argument("add_row: length mismatch");
  col.insert(col.end(), cols.begin(), cols.end());
  cost.insert(cost.end(), costs.begin(), costs.end());
  row_start.push_back(col.size());
  ++n;
}

LapSolution solve_sparse_lap(const SparseCostMatrix& m) {
  const std::size_t n = m.n;
  if (m.row_start.size() != n + 1) throw std::invalid_argument("sparse LAP: malformed rows");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  LapSolution s;
  s.row_to_col.assign(n, kUnmatched);
  s.col_to_row.assign(n, kUnmatched);
  s.row_price.assign(n, 0.0);
  s.col_price.assign(n, 0.0);
  for (std::size_t e = 0; e < m.col.size(); ++e) {
    if (m.col[e] >= n) throw std::out_of_range("sparse LAP: column out of range");
    if (m.cost[e] < 0.0) throw std::invalid_argument("sparse LAP: negative cost");
  }

  std::vector<double> dist(n, kInf);
  std::vector<std::size_t> pred(n, kUnmatched);
  std::vector<char> done(n, 0);
  std::vector<std::size_t> todo, scanned;

  for (std::size_t root = 0; root < n; ++root) {
    todo.clear();
    scanned.clear();

    auto relax = [&](std::size_t row, double base) {
      for (std::size_t e = m.row_start[row]; e < m.row_start[row + 1]; ++e) {
        const std::size_t c = m.col[e];
        if (done[c]) continue;
        const double d = base + m.cost[e] - s.row_price[row] - s.col_price[c];
        if (d < dist[c]) {
          if (dist[c] == kInf) todo.push_back(c);
          dist[c] = d;
          pred[c] = row;
        }
      }
    };

    relax(root, 0.0);
    std::size_t sink = kUnmatched;
    while (sink == kUnmatched) {
      // Lowest distance wins; ties go to the lowest column index.
      std::size_t best = kUnmatched, best_pos = 0;
      for (std::size_t k = 0; k < todo.size(); ++k) {
        const std::size_t c = todo[k];
        if (best == kUnmatched || dist[c] < dist[best] || (dist[c] == dist[best] && c < best)) {
          best = c;
          best_pos = k;
        }
      }
      if (best == kUnmatched) {
        for (std::size_t c : scanned) dist[c] = kInf, done[c] = 0;
        throw std::runtime_error("sparse LAP: no perfect matching exists");
      }
      todo[best_pos] = todo.back();
      todo.pop_back();
      done[best] = 1;
      scanned.push_back(best);
      if (s.col_to_row[best] == kUnmatched) {
        sink = best;
      } else {
        relax(s.col_to_row[best], dist[best]);
      }
    }

    const double delta = dist[sink];
    s.row_price[root] += delta;
    for (std::size_t c : scanned) {
      const double slack = delta - dist[c];
      s.col_price[c] -= slack;
      if (c != sink) s.row_price[s.col_to_row[c]] += slack;
    }

    for (std::size_t c = sink;;) {
      const std::size_t r = pred[c];
      const std::size_t prev = s.row_to_col[r];
      s.row_to_col[r] = c;
      s.col_to_row[c] = r;
      if (r == root) break;
      c = prev;
    }

    for (std::size_t c : scanned) dist[c] = kInf, done[c] = 0;
    for (std::size_t c : todo) dist[c] = kInf;
  }

  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = m.row_start[r]; e < m.row_start[r + 1]; ++e)
      if (m.col[e] == s.row_to_col[r]) {
        s.total_cost += m.cost[e];
        break;
      }
  return s;
}

std::vector<std::size_t> lexicographic_min_cost_matching(const SparseCostMatrix& m,
                                                         const LapSolution& sol, double tol) {
  const std::size_t n = m.n;
  std::vector<std::vector<std::size_t>> row_cols(n), col_rows(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t e = m.row_start[r]; e < m.row_start[r + 1]; ++e) {
      const std::size_t c = m.col[e];
      if (m.cost[e] - sol.row_price[r] - sol.col_price[c] <= tol) {
        row_cols[r].push_back(c);
        col_rows[c].push_back(r);
      }
    }
  for (auto& rows : col_rows) std::sort(rows.begin(), rows.end());

  std::vector<std::size_t> col_to_row = sol.col_to_row, row_to_col = sol.row_to_col;
  std::vector<char> fixed_row(n, 0), fixed_col(n, 0);
  std::vector<char> seen(n);
  std::vector<std::size_t> parent_row(n);

  // Finds an alternating path over unfixed tight edges from free row `start`
  // to free column `target` and flips it.
  auto augment_path = [&](std::size_t start, std::size_t target) {
    std::fill(seen.begin(), seen.end(), 0);
    std::vector<std::size_t> frontier{start};
    seen[start] = 1;
    parent_row[start] = kUnmatched;
    for (std::size_t head = 0; head < frontier.size(); ++head) {
      const std::size_t r = frontier[head];
      for (std::size_t c : row_cols[r]) {
        if (fixed_col[c]) continue;
        if (c == target) {
          // Walk back: r takes c, its parent takes r's old column, and so on.
          std::size_t row = r, col = c;
          while (row != kUnmatched) {
            const std::size_t old = row_to_col[row];
            row_to_col[row] = col;
            col_to_row[col] = row;
            col = old;
            row = parent_row[row];
          }
          return true;
        }
        const std::size_t next = col_to_row[c];
        if (next == kUnmatched || seen[next] || fixed_row[next]) continue;
        seen[next] = 1;
        parent_row[next] = r;
        frontier.push_back(next);
      }
    }
    return false;
  };

  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t owner = col_to_row[j];
    for (std::size_t i : col_rows[j]) {
      if (i >= owner) break;
      if (fixed_row[i]) continue;
      const std::size_t freed = row_to_col[i];
      // Tentatively give column j to row i; `owner` must now reach `freed`.
      fixed_col[j] = 1;
      fixed_row[i] = 1;
      row_to_col[i] = j;
      col_to_row[j] = i;
      row_to_col[owner] = kUnmatched;
      col_to_row[freed] = kUnmatched;
      if (augment_path(owner, freed)) break;
      row_to_col[i] = freed;
      col_to_row[freed] = i;
      row_to_col[owner] = j;
      col_to_row[j] = owner;
      fixed_row[i] = 0;
      fixed_col[j] = 0;
    }
    fixed_col[j] = 1;
    fixed_row[col_to_row[j]] = 1;
  }
  return col_to_row;
}

}  // namespace nd
