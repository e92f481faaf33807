#include "narrative/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

#include "narrative/fitcurve.hpp"
#include "narrative/parallel.hpp"
#include "narrative/rng.hpp"

namespace nd {

std::size_t levenshtein(const Ordering& a, const Ordering& b) {
  return levenshtein<std::size_t>(a.positions(), b.positions());
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein<char>(std::span<const char>(a.data(), a.size()),
                           std::span<const char>(b.data(), b.size()));
}

double string_edit_score(const std::vector<Ordering>& candidates, const Ordering& truth) {
  if (candidates.empty()) throw std::invalid_argument("string_edit_score: no candidates");
  double best = 0.0;
  for (const auto& c : candidates) {
    if (c.size() != truth.size())
      throw std::invalid_argument("string_edit_score: ordering length mismatch");
    best = std::max(best, 1.0 / (1.0 + static_cast<double>(levenshtein(c, truth))));
  }
  return best;
}

namespace {

ConditionSummary summarize(std::string name, const std::vector<double>& v) {
  ConditionSummary s{std::move(name), 0.0, 0.0};
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

bool better_fit(const FitResult& a, const FitResult& b) {
  if (a.bottleneck != b.bottleneck) return a.bottleneck < b.bottleneck;
  return a.total_deviation < b.total_deviation;
}

// Fit under a random presentation order and map back to the caller's track
// indices. Stored order is the ground truth, so fitting it directly would let
// the fit's index-based tie-break favour the true ordering.
Ordering fit_presented(const EssenceSeries& values, const TemplateCurve& curve,
                       const std::vector<std::size_t>& presentation, FitResult* fit_out = nullptr) {
  EssenceSeries shown = values;
  for (std::size_t i = 0; i < presentation.size(); ++i) shown.values[i] = values.values[presentation[i]];
  FitResult fit = fit_ordering(shown, curve);
  std::vector<std::size_t> mapped(presentation.size());
  for (std::size_t j = 0; j < mapped.size(); ++j) mapped[j] = presentation[fit.ordering[j]];
  Ordering out(std::move(mapped));
  if (fit_out) {
    fit.ordering = out;
    *fit_out = std::move(fit);
  }
  return out;
}

std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

EvalReport evaluate_templates(const std::vector<EssenceSeries>& albums, const TemplateSet& templates,
                              std::uint64_t seed, double alpha, unsigned threads) {
  templates.validate();
  if (albums.size() < 2) throw std::invalid_argument("evaluate: need at least 2 albums");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("evaluate: alpha must lie in (0, 1)");
  const std::size_t k = templates.k();
  std::vector<TemplateCurve> curves;
  for (std::size_t p = 0; p < k; ++p) curves.push_back(template_curve(templates, p));

  EvalReport report;
  report.alpha = alpha;
  report.seed = seed;
  report.albums.resize(albums.size());
  parallel_for(albums.size(), threads, [&](std::size_t a) {
    const auto& series = albums[a];
    const std::size_t n = series.values.size();
    if (n < 2) throw std::invalid_argument("evaluate: album '" + series.album_id + "' is too short");
    const EssenceSeries values = to_minmax(series);
    const Ordering truth = Ordering::identity(n);
    Rng rng = make_rng(derive_seed(seed, "eval"), a);

    AlbumEval& out = report.albums[a];
    out.album_id = series.album_id;
    out.length = n;

    const auto presentation = random_permutation(n, rng);
    std::vector<Ordering> learned;
    FitResult best_fit;
    for (std::size_t p = 0; p < k; ++p) {
      FitResult fit;
      learned.push_back(fit_presented(values, curves[p], presentation, &fit));
      if (p == 0 || better_fit(fit, best_fit)) {
        out.best_template = p;
        best_fit = std::move(fit);
      }
    }
    out.learned = string_edit_score(learned, truth);

    std::vector<Ordering> random;
    for (std::size_t p = 0; p < k; ++p) random.emplace_back(random_permutation(n, rng));
    out.random_baseline = string_edit_score(random, truth);

    EssenceSeries shuffled = values;
    std::shuffle(shuffled.values.begin(), shuffled.values.end(), rng);
    const auto shuffled_presentation = random_permutation(n, rng);
    std::vector<Ordering> refit;
    for (std::size_t p = 0; p < k; ++p) refit.push_back(fit_presented(shuffled, curves[p], shuffled_presentation));
    out.shuffled_baseline = string_edit_score(refit, truth);
  });

  std::vector<double> learned, random, shuffled;
  for (const auto& a : report.albums) {
    learned.push_back(a.learned);
    random.push_back(a.random_baseline);
    shuffled.push_back(a.shuffled_baseline);
  }
  report.summary = {summarize("learned", learned), summarize("random_orderings", random),
                    summarize("shuffled_essence", shuffled)};
  report.comparisons = {"learned_vs_random_orderings", "learned_vs_shuffled_essence"};
  auto p_or_one = [](const std::vector<double>& x, const std::vector<double>& y) {
    // Identical score vectors carry no evidence against the null.
    return x == y ? 1.0 : paired_t_test(x, y);
  };
  report.p_values = {p_or_one(learned, random), p_or_one(learned, shuffled)};
  report.rejections = holm_bonferroni(report.p_values, alpha);
  return report;
}

double paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("paired t-test: need at least 2 pairs");
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  if (std::all_of(d.begin(), d.end(), [](double x) { return x == 0.0; }))
    throw std::invalid_argument("paired t-test: all differences are zero");
  const double nn = static_cast<double>(n);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / nn;
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (nn - 1.0));
  if (sd == 0.0) return 0.0;  // constant non-zero difference
  const double t = std::fabs(mean) / (sd / std::sqrt(nn));
  const boost::math::students_t dist(nn - 1.0);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

std::vector<bool> holm_bonferroni(std::span<const double> p_values, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("holm: alpha must lie in (0, 1)");
  for (double p : p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("holm: p-value outside [0, 1]");
  const std::size_t m = p_values.size();
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::vector<bool> reject(m, false);
  for (std::size_t r = 0; r < m; ++r) {
    if (p_values[idx[r]] > alpha / static_cast<double>(m - r)) break;
    reject[idx[r]] = true;
  }
  return reject;
}

}  // namespace nd
