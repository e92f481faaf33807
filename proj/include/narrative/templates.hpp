#pragma once

// Evolutionary extraction of template curves: a population of template sets
// (k curves x q control values) is evolved to minimize the summed per-album
// best-template mean squared error over albums in ground-truth order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "narrative/core.hpp"
#include "narrative/spline.hpp"

namespace nd {

struct TemplateSet {
  std::vector<double> xs;                      // shared control grid, q entries
  std::vector<std::vector<double>> templates;  // k rows of q control values

  std::size_t k() const { return templates.size(); }
  void validate() const;
};

/// Control values as used for evaluation: min-max renormalized only when
/// some value lies outside [0, 1].
std::vector<double> effective_controls(std::span<const double> ys);

/// Spline of template p built from its effective controls.
TemplateCurve template_curve(const TemplateSet& set, std::size_t p);

/// sum over albums of min over templates of mean_j (v(j) - t_p(j_r))^2.
/// Albums must be min-max normalized with length >= 2.
double template_cost(const TemplateSet& set, const std::vector<EssenceSeries>& albums);

struct GAConfig {
  std::size_t population = 64;  // s
  std::size_t children = 64;    // b
  std::size_t k = 4;
  double crossover_prob = 0.5;  // chance a gene comes from the father
  std::size_t generations = 500;
  std::size_t stagnation_patience = 50;  // 0 disables
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
};

struct EvolveResult {
  TemplateSet best;
  double best_cost = 0.0;
  std::vector<double> history;  // best cost after each completed generation
};

/// `initial` individuals (if any) replace the first members of the random
/// initial population; each must have k templates on the grid `xs`.
EvolveResult evolve_templates(const std::vector<EssenceSeries>& albums, const GAConfig& config,
                              const std::vector<double>& xs = default_grid(),
                              std::span<const TemplateSet> initial = {});

/// Precomputed spline bases per album length; evaluates costs of many
/// template sets against a fixed album list.
class CostEvaluator {
public:
  CostEvaluator(std::vector<double> xs, const std::vector<EssenceSeries>& albums);

  /// genes: k * q control values, template-major.
  double cost(std::span<const double> genes, std::size_t k) const;

private:
  std::vector<double> xs_;
  std::vector<std::vector<double>> values_;
  std::vector<std::size_t> lengths_;
  std::vector<std::vector<double>> basis_;  // indexed by album length
};

}  // namespace nd
