#pragma once

// Scoring template sets against ground-truth orderings, the two baselines,
// and the paired t-test / Holm step-down significance protocol.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "narrative/core.hpp"
#include "narrative/templates.hpp"

namespace nd {

/// Unit-cost edit distance (insertions, deletions, substitutions).
template <class T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t levenshtein(const Ordering& a, const Ordering& b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// max over candidates of 1 / (1 + levenshtein(candidate, truth)).
double string_edit_score(const std::vector<Ordering>& candidates, const Ordering& truth);

struct AlbumEval {
  std::string album_id;
  std::size_t length = 0;
  std::size_t best_template = 0;  // lowest (bottleneck, total deviation) fit
  double learned = 0.0;
  double random_baseline = 0.0;
  double shuffled_baseline = 0.0;
};

struct ConditionSummary {
  std::string condition;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct EvalReport {
  std::vector<AlbumEval> albums;
  std::vector<ConditionSummary> summary;  // learned, random, shuffled
  std::vector<std::string> comparisons;   // names of the tested nulls
  std::vector<double> p_values;
  std::vector<bool> rejections;
  double alpha = 0.05;
  std::uint64_t seed = 0;
};

/// albums: essence per track in ground-truth order (any normalization; they
/// are min-max normalized here). Per album and template the values are fitted
/// and scored against the identity (ground-truth) ordering; baseline 1 scores
/// k random orderings, baseline 2 refits a random shuffle of the values.
/// Fits see the tracks in a seeded random order, so tie-breaking carries no
/// information about the true order.
EvalReport evaluate_templates(const std::vector<EssenceSeries>& albums, const TemplateSet& templates,
                              std::uint64_t seed, double alpha = 0.05, unsigned threads = 1);

/// Two-sided paired t-test p-value. Throws if all differences are zero.
double paired_t_test(std::span<const double> a, std::span<const double> b);

/// Holm step-down rejections, returned in input order.
std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha);

}  // namespace nd
