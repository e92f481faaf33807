#include "narrative/templates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "narrative/kernels.hpp"
#include "narrative/parallel.hpp"
#include "narrative/rng.hpp"

namespace nd {

void TemplateSet::validate() const {
  if (xs.size() < 2) throw std::invalid_argument("template set: grid needs at least 2 points");
  if (templates.empty()) throw std::invalid_argument("template set: no templates");
  for (const auto& t : templates) {
    if (t.size() != xs.size())
      throw std::invalid_argument("template set: template length differs from grid length");
    for (double v : t)
      if (!std::isfinite(v)) throw std::invalid_argument("template set: non-finite control value");
  }
  TemplateCurve(xs, templates.front());  // grid validation
}

std::vector<double> effective_controls(std::span<const double> ys) {
  const bool outside = std::any_of(ys.begin(), ys.end(), [](double v) { return v < 0.0 || v > 1.0; });
  return outside ? normalize_minmax(ys) : std::vector<double>(ys.begin(), ys.end());
}

TemplateCurve template_curve(const TemplateSet& set, std::size_t p) {
  return TemplateCurve(set.xs, effective_controls(set.templates.at(p)));
}

CostEvaluator::CostEvaluator(std::vector<double> xs, const std::vector<EssenceSeries>& albums)
    : xs_(std::move(xs)) {
  if (albums.empty()) throw std::invalid_argument("template cost: no albums");
  TemplateCurve(xs_, std::vector<double>(xs_.size(), 0.0));  // grid validation
  basis_.resize(kMaxAlbumLength + 1);
  for (const auto& a : albums) {
    if (a.normalization != Normalization::minmax)
      throw std::invalid_argument("template cost: album '" + a.album_id + "' is not min-max normalized");
    const std::size_t n = a.values.size();
    if (n < 2) throw std::invalid_argument("template cost: album '" + a.album_id + "' is too short");
    if (n >= basis_.size()) basis_.resize(n + 1);
    if (basis_[n].empty()) basis_[n] = spline_basis(xs_, relative_positions(n));
    values_.push_back(a.values);
    lengths_.push_back(n);
  }
}

double CostEvaluator::cost(std::span<const double> genes, std::size_t k) const {
  const std::size_t q = xs_.size();
  if (genes.size() != k * q) throw std::invalid_argument("template cost: gene count mismatch");

  // Template samples per (template, album length), computed on demand.
  std::vector<std::vector<std::vector<double>>> samples(k, std::vector<std::vector<double>>(basis_.size()));
  std::vector<std::vector<double>> controls(k);
  for (std::size_t p = 0; p < k; ++p) controls[p] = effective_controls(genes.subspan(p * q, q));

  double total = 0.0;
  for (std::size_t a = 0; a < values_.size(); ++a) {
    const std::size_t n = lengths_[a];
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < k; ++p) {
      auto& z = samples[p][n];
      if (z.empty()) {
        z.resize(n);
        const auto& b = basis_[n];
        for (std::size_t j = 0; j < n; ++j)
          z[j] = kernels::dot(std::span<const double>(b).subspan(j * q, q), controls[p]);
      }
      best = std::min(best, kernels::sq_dist(values_[a], z) / static_cast<double>(n));
    }
    total += best;
  }
  return total;
}

double template_cost(const TemplateSet& set, const std::vector<EssenceSeries>& albums) {
  set.validate();
  std::vector<double> genes;
  for (const auto& t : set.templates) genes.insert(genes.end(), t.begin(), t.end());
  return CostEvaluator(set.xs, albums).cost(genes, set.k());
}

void GAConfig::validate() const {
  if (population < 2) throw std::invalid_argument("GA: population size must be >= 2");
  if (children < 1) throw std::invalid_argument("GA: children per generation must be >= 1");
  if (k < 1) throw std::invalid_argument("GA: k must be >= 1");
  if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0))
    throw std::invalid_argument("GA: crossover probability must lie in [0, 1]");
}

EvolveResult evolve_templates(const std::vector<EssenceSeries>& albums, const GAConfig& config,
                              const std::vector<double>& xs, std::span<const TemplateSet> initial) {
  config.validate();
  const CostEvaluator eval(xs, albums);
  const std::size_t q = xs.size(), genes = config.k * q;
  const std::size_t s = config.population, b = config.children;

  struct Individual {
    std::vector<double> genes;
    double cost;
  };
  std::vector<Individual> pop(s);
  {
    Rng rng = make_rng(derive_seed(config.seed, "ga-init"));
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& ind : pop) {
      ind.genes.resize(genes);
      for (auto& g : ind.genes) g = normal(rng);
    }
  }
  if (initial.size() > s) throw std::invalid_argument("GA: more initial individuals than population");
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const auto& t = initial[i];
    if (t.k() != config.k || t.xs != xs)
      throw std::invalid_argument("GA: initial individual does not match k or grid");
    pop[i].genes.clear();
    for (const auto& row : t.templates) pop[i].genes.insert(pop[i].genes.end(), row.begin(), row.end());
  }
  parallel_for(s, config.threads, [&](std::size_t i) { pop[i].cost = eval.cost(pop[i].genes, config.k); });
  std::stable_sort(pop.begin(), pop.end(),
                   [](const Individual& x, const Individual& y) { return x.cost < y.cost; });

  EvolveResult result;
  double best = pop.front().cost;
  std::size_t stale = 0;
  for (std::size_t gen = 1; gen <= config.generations; ++gen) {
    Rng rng = make_rng(derive_seed(config.seed, "ga"), gen);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution from_father(config.crossover_prob);
    const double sigma = std::fabs(normal(rng));

    std::vector<Individual> kids(b);
    for (auto& kid : kids) {
      const std::size_t father = std::uniform_int_distribution<std::size_t>(0, s - 1)(rng);
      std::size_t mother = std::uniform_int_distribution<std::size_t>(0, s - 2)(rng);
      if (mother >= father) ++mother;
      kid.genes.resize(genes);
      for (std::size_t g = 0; g < genes; ++g) {
        kid.genes[g] = from_father(rng) ? pop[father].genes[g] : pop[mother].genes[g];
        kid.genes[g] += sigma * normal(rng);
      }
    }
    parallel_for(b, config.threads, [&](std::size_t i) { kids[i].cost = eval.cost(kids[i].genes, config.k); });

    for (auto& kid : kids) pop.push_back(std::move(kid));
    std::stable_sort(pop.begin(), pop.end(),
                     [](const Individual& x, const Individual& y) { return x.cost < y.cost; });
    pop.resize(s);
    result.history.push_back(pop.front().cost);

    if (pop.front().cost < best) {
      best = pop.front().cost;
      stale = 0;
    } else if (config.stagnation_patience > 0 && ++stale >= config.stagnation_patience) {
      break;
    }
  }

  result.best.xs = xs;
  for (std::size_t p = 0; p < config.k; ++p)
    result.best.templates.emplace_back(pop.front().genes.begin() + p * q,
                                       pop.front().genes.begin() + (p + 1) * q);
  result.best_cost = pop.front().cost;
  return result;
}

}  // namespace nd
