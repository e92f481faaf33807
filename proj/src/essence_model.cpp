#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>

#include "narrative/essence.hpp"
#include "narrative/kernels.hpp"

namespace nd {

namespace {

// Flat parameter layouts.
//   extractor: W1[hidden x input] b1[hidden] W2[output x hidden] b2[output]
//   scorer:    W[hidden x (2d+1)] b[hidden] w[hidden] start[d] end[d]

struct ExtractorView {
  std::span<const double> w1, b1, w2, b2;
  ExtractorView(const ExtractorArch& a, std::span<const double> p)
      : w1(p.subspan(0, a.hidden * a.input)),
        b1(p.subspan(a.hidden * a.input, a.hidden)),
        w2(p.subspan(a.hidden * a.input + a.hidden, a.output * a.hidden)),
        b2(p.subspan(a.hidden * a.input + a.hidden + a.output * a.hidden, a.output)) {}
};

struct ExtractorGrad {
  std::span<double> w1, b1, w2, b2;
  ExtractorGrad(const ExtractorArch& a, std::span<double> p)
      : w1(p.subspan(0, a.hidden * a.input)),
        b1(p.subspan(a.hidden * a.input, a.hidden)),
        w2(p.subspan(a.hidden * a.input + a.hidden, a.output * a.hidden)),
        b2(p.subspan(a.hidden * a.input + a.hidden + a.output * a.hidden, a.output)) {}
};

template <class T>
struct ScorerLayout {
  std::span<T> w, b, out, start, end;
  ScorerLayout(const ScorerArch& a, std::span<T> p) {
    const std::size_t in = a.input(), h = a.hidden, d = a.essence_dim;
    std::size_t off = 0;
    w = p.subspan(off, h * in), off += h * in;
    b = p.subspan(off, h), off += h;
    out = p.subspan(off, h), off += h;
    start = p.subspan(off, d), off += d;
    end = p.subspan(off, d);
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite value");
}

/// Scores the token sequence (start, rows[perm[0]], ..., rows[perm[n-1]], end)
/// and, when upstream != 0 and grads are given, backpropagates `upstream`.
class ScorerPass {
public:
  ScorerPass(const ScorerArch& arch, std::span<const double> params)
      : arch_(arch), p_(arch, params), x_(arch.input()), h_(arch.hidden),
        dx_(arch.input()) {}

  double run(const Matrix& rows, const std::vector<std::size_t>* perm, double upstream,
             std::span<double> param_grad, Matrix* row_grad) {
    const std::size_t n = rows.rows, d = arch_.essence_dim, H = arch_.hidden, I = arch_.input();
    const bool backprop = upstream != 0.0 && (!param_grad.empty() || row_grad);
    std::optional<ScorerLayout<double>> g;
    if (backprop && !param_grad.empty()) g.emplace(arch_, param_grad);

    auto token = [&](std::size_t k) -> std::span<const double> {
      if (k == 0) return p_.start;
      if (k == n + 1) return p_.end;
      return rows.row(perm ? (*perm)[k - 1] : k - 1);
    };

    double score = 0.0;
    const double denom = static_cast<double>(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      auto t0 = token(k), t1 = token(k + 1);
      std::copy(t0.begin(), t0.end(), x_.begin());
      std::copy(t1.begin(), t1.end(), x_.begin() + d);
      x_[2 * d] = static_cast<double>(k) / denom;
      for (std::size_t j = 0; j < H; ++j) {
        double s = p_.b[j];
        for (std::size_t i = 0; i < I; ++i) s += p_.w[j * I + i] * x_[i];
        h_[j] = std::tanh(s);
        score += p_.out[j] * h_[j];
      }
      if (!backprop) continue;

      std::fill(dx_.begin(), dx_.end(), 0.0);
      for (std::size_t j = 0; j < H; ++j) {
        const double da = upstream * p_.out[j] * (1.0 - h_[j] * h_[j]);
        if (g) {
          g->out[j] += upstream * h_[j];
          g->b[j] += da;
          for (std::size_t i = 0; i < I; ++i) g->w[j * I + i] += da * x_[i];
        }
        for (std::size_t i = 0; i < I; ++i) dx_[i] += da * p_.w[j * I + i];
      }
      auto route = [&](std::size_t tk, std::size_t offset) {
        std::span<double> dst;
        if (tk == 0) {
          if (!g) return;
          dst = g->start;
        } else if (tk == n + 1) {
          if (!g) return;
          dst = g->end;
        } else {
          if (!row_grad) return;
          dst = row_grad->row(perm ? (*perm)[tk - 1] : tk - 1);
        }
        for (std::size_t c = 0; c < d; ++c) dst[c] += dx_[offset + c];
      };
      route(k, 0);
      route(k + 1, d);
    }
    return score;
  }

private:
  const ScorerArch& arch_;
  ScorerLayout<const double> p_;
  std::vector<double> x_, h_, dx_;
};

struct Standardized {
  Matrix z;
  std::vector<double> sigma;
};

Standardized zscore_columns(const Matrix& e, double eps) {
  Standardized s{Matrix(e.rows, e.cols), std::vector<double>(e.cols, 1.0)};
  const double n = static_cast<double>(e.rows);
  for (std::size_t c = 0; c < e.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < e.rows; ++r) mean += e(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < e.rows; ++r) var += (e(r, c) - mean) * (e(r, c) - mean);
    var /= n;
    const double sigma = std::sqrt(var + eps);
    s.sigma[c] = sigma;
    for (std::size_t r = 0; r < e.rows; ++r) s.z(r, c) = sigma > 0.0 ? (e(r, c) - mean) / sigma : 0.0;
  }
  return s;
}

}  // namespace

void EssenceModel::validate() const {
  if (extractor_arch.input != kFeatureSize)
    throw std::invalid_argument("model: extractor input must be " + std::to_string(kFeatureSize));
  if (extractor_arch.output == 0 || extractor_arch.hidden == 0 || scorer_arch.hidden == 0)
    throw std::invalid_argument("model: layer sizes must be positive");
  if (scorer_arch.essence_dim != extractor_arch.output)
    throw std::invalid_argument("model: scorer essence_dim differs from extractor output");
  if (extractor_params.size() != extractor_arch.param_count())
    throw std::invalid_argument("model: extractor parameter count does not match architecture");
  if (scorer_params.size() != scorer_arch.param_count())
    throw std::invalid_argument("model: scorer parameter count does not match architecture");
  if (input_mean.size() != kFeatureSize || input_scale.size() != kFeatureSize)
    throw std::invalid_argument("model: standardization vectors have the wrong length");
  if (extractor_arch.dropout < 0.0 || extractor_arch.dropout >= 1.0)
    throw std::invalid_argument("model: dropout must lie in [0, 1)");
  check_finite(extractor_params, "model extractor parameters");
  check_finite(scorer_params, "model scorer parameters");
}

EssenceModel EssenceModel::initialize(const ExtractorArch& ex, const ScorerArch& sc,
                                      std::uint64_t seed) {
  EssenceModel m;
  m.extractor_arch = ex;
  m.scorer_arch = sc;
  m.extractor_params.assign(ex.param_count(), 0.0);
  m.scorer_params.assign(sc.param_count(), 0.0);
  m.input_mean.assign(kFeatureSize, 0.0);
  m.input_scale.assign(kFeatureSize, 1.0);

  Rng rng = make_rng(derive_seed(seed, "init"));
  auto xavier = [&](std::span<double> w, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& v : w) v = u(rng);
  };
  ExtractorGrad e(ex, m.extractor_params);
  xavier(e.w1, ex.input, ex.hidden);
  xavier(e.w2, ex.hidden, ex.output);
  ScorerLayout<double> s(sc, m.scorer_params);
  xavier(s.w, sc.input(), sc.hidden);
  xavier(s.out, sc.hidden, 1);
  std::normal_distribution<double> tok(0.0, 0.1);
  for (auto& v : s.start) v = tok(rng);
  for (auto& v : s.end) v = tok(rng);
  m.validate();
  return m;
}

void fit_standardization(EssenceModel& model, const std::vector<Album>& albums) {
  std::vector<double> sum(kFeatureSize, 0.0), sq(kFeatureSize, 0.0);
  std::size_t count = 0;
  for (const auto& a : albums)
    for (const auto& t : a.tracks) {
      auto s = t.stats();
      for (std::size_t k = 0; k < kFeatureSize; ++k) sum[k] += s[k];
      ++count;
    }
  if (count == 0) throw std::invalid_argument("standardization: no tracks");
  for (std::size_t k = 0; k < kFeatureSize; ++k) sum[k] /= static_cast<double>(count);
  for (const auto& a : albums)
    for (const auto& t : a.tracks) {
      auto s = t.stats();
      for (std::size_t k = 0; k < kFeatureSize; ++k) sq[k] += (s[k] - sum[k]) * (s[k] - sum[k]);
    }
  for (std::size_t k = 0; k < kFeatureSize; ++k) {
    const double sd = std::sqrt(sq[k] / static_cast<double>(count));
    model.input_mean[k] = sum[k];
    model.input_scale[k] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

std::vector<double> standardize(const EssenceModel& model, const TrackFeatures& track) {
  auto s = track.stats();
  if (s.size() != kFeatureSize) throw std::invalid_argument("track has wrong feature count");
  check_finite(s, "track features");
  std::vector<double> x(kFeatureSize);
  for (std::size_t k = 0; k < kFeatureSize; ++k)
    x[k] = (s[k] - model.input_mean[k]) * model.input_scale[k];
  return x;
}

void extractor_forward(const ExtractorArch& arch, std::span<const double> params,
                       std::span<const double> x, std::span<const double> mask,
                       ExtractorTrace& t) {
  const ExtractorView p(arch, params);
  t.input.assign(x.begin(), x.end());
  t.mask.assign(mask.begin(), mask.end());
  t.hidden_raw.resize(arch.hidden);
  t.hidden.resize(arch.hidden);
  t.output.resize(arch.output);
  for (std::size_t j = 0; j < arch.hidden; ++j) {
    const double a = p.b1[j] + kernels::dot(p.w1.subspan(j * arch.input, arch.input), x);
    t.hidden_raw[j] = std::tanh(a);
    t.hidden[j] = mask.empty() ? t.hidden_raw[j] : t.hidden_raw[j] * mask[j];
  }
  for (std::size_t k = 0; k < arch.output; ++k)
    t.output[k] = sigmoid(p.b2[k] + kernels::dot(p.w2.subspan(k * arch.hidden, arch.hidden), t.hidden));
}

void extractor_backward(const ExtractorArch& arch, std::span<const double> params,
                        const ExtractorTrace& t, std::span<const double> output_grad,
                        std::span<double> param_grad) {
  const ExtractorView p(arch, params);
  ExtractorGrad g(arch, param_grad);
  std::vector<double> dhidden(arch.hidden, 0.0);
  for (std::size_t k = 0; k < arch.output; ++k) {
    const double dout = output_grad[k] * t.output[k] * (1.0 - t.output[k]);
    if (dout == 0.0) continue;
    g.b2[k] += dout;
    kernels::axpy(dout, t.hidden, g.w2.subspan(k * arch.hidden, arch.hidden));
    kernels::axpy(dout, p.w2.subspan(k * arch.hidden, arch.hidden), dhidden);
  }
  for (std::size_t j = 0; j < arch.hidden; ++j) {
    double dh = dhidden[j];
    if (!t.mask.empty()) dh *= t.mask[j];
    const double da = dh * (1.0 - t.hidden_raw[j] * t.hidden_raw[j]);
    if (da == 0.0) continue;
    g.b1[j] += da;
    kernels::axpy(da, t.input, g.w1.subspan(j * arch.input, arch.input));
  }
}

std::vector<double> extract_essence(const EssenceModel& model, const TrackFeatures& track) {
  ExtractorTrace t;
  extractor_forward(model.extractor_arch, model.extractor_params, standardize(model, track), {}, t);
  return t.output;
}

Matrix extract_album(const EssenceModel& model, const Album& album) {
  Matrix e(album.length(), model.essence_dim());
  for (std::size_t r = 0; r < album.length(); ++r) {
    const auto v = extract_essence(model, album.tracks[r]);
    std::copy(v.begin(), v.end(), e.row(r).begin());
  }
  return e;
}

double score_sequence(const ScorerArch& arch, std::span<const double> scorer_params,
                      const Matrix& sequence) {
  if (sequence.rows == 0) throw std::invalid_argument("score_sequence: empty sequence");
  if (sequence.cols != arch.essence_dim)
    throw std::invalid_argument("score_sequence: essence dimension mismatch");
  if (scorer_params.size() != arch.param_count())
    throw std::invalid_argument("score_sequence: parameter count mismatch");
  check_finite(sequence.data, "score_sequence input");
  ScorerPass pass(arch, scorer_params);
  return pass.run(sequence, nullptr, 0.0, {}, nullptr);
}

double score_sequence(const EssenceModel& model, const Matrix& sequence) {
  return score_sequence(model.scorer_arch, model.scorer_params, sequence);
}

Matrix normalize_sequence(const Matrix& essence, double eps) {
  return zscore_columns(essence, eps).z;
}

Matrix ContrastiveSet::sequence(std::size_t k) const {
  const auto& perm = permutations.at(k);
  Matrix out(perm.size(), normalized.cols);
  for (std::size_t r = 0; r < perm.size(); ++r) {
    auto src = normalized.row(perm[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

std::vector<std::vector<std::size_t>> sample_permutations(std::size_t n, std::size_t count,
                                                          std::size_t& true_index, Rng& rng) {
  if (n < 2) throw std::invalid_argument("contrastive set: need at least 2 items");
  if (count < 2) throw std::invalid_argument("contrastive set: need N >= 2");
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  true_index = std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  std::vector<std::vector<std::size_t>> perms(count);
  for (std::size_t k = 0; k < count; ++k) {
    perms[k] = identity;
    if (k == true_index) continue;
    do {
      std::shuffle(perms[k].begin(), perms[k].end(), rng);
    } while (perms[k] == identity);
  }
  return perms;
}

ContrastiveSet sample_contrastive_set(const Album& album, const EssenceModel& model,
                                      std::size_t count, Rng& rng) {
  if (album.length() < kMinAlbumLength)
    throw std::invalid_argument("contrastive set: album '" + album.album_id + "' is too short");
  ContrastiveSet set;
  set.normalized = normalize_sequence(extract_album(model, album), kSequenceVarianceFloor);
  set.permutations = sample_permutations(album.length(), count, set.true_index, rng);
  return set;
}

double info_nce_loss(std::span<const double> scores, std::size_t true_index) {
  if (scores.size() < 2) throw std::invalid_argument("info_nce_loss: need at least 2 scores");
  if (true_index >= scores.size()) throw std::out_of_range("info_nce_loss: true_index");
  check_finite(scores, "info_nce_loss");
  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  return std::log(sum) + mx - scores[true_index];
}

double mi_lower_bound(double mean_loss, std::size_t n_candidates) {
  if (n_candidates < 2) throw std::invalid_argument("mi_lower_bound: N must be >= 2");
  return (std::log(static_cast<double>(n_candidates)) - mean_loss) / std::log(2.0);
}

double contrastive_loss(const ScorerArch& arch, std::span<const double> scorer_params,
                        const Matrix& essence,
                        const std::vector<std::vector<std::size_t>>& permutations,
                        std::size_t true_index, std::span<double> scorer_grad,
                        Matrix* essence_grad) {
  const std::size_t count = permutations.size();
  const Standardized st = zscore_columns(essence, kSequenceVarianceFloor);
  ScorerPass pass(arch, scorer_params);

  std::vector<double> scores(count);
  for (std::size_t k = 0; k < count; ++k)
    scores[k] = pass.run(st.z, &permutations[k], 0.0, {}, nullptr);
  const double loss = info_nce_loss(scores, true_index);
  if (scorer_grad.empty() && !essence_grad) return loss;

  const double mx = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) sum += std::exp(s - mx);
  Matrix dz(essence.rows, essence.cols);
  for (std::size_t k = 0; k < count; ++k) {
    const double upstream = std::exp(scores[k] - mx) / sum - (k == true_index ? 1.0 : 0.0);
    pass.run(st.z, &permutations[k], upstream, scorer_grad, essence_grad ? &dz : nullptr);
  }
  if (essence_grad) {
    // Back through the per-column z-score.
    *essence_grad = Matrix(essence.rows, essence.cols);
    const double n = static_cast<double>(essence.rows);
    for (std::size_t c = 0; c < essence.cols; ++c) {
      double mean_dz = 0.0, mean_dz_z = 0.0;
      for (std::size_t r = 0; r < essence.rows; ++r) {
        mean_dz += dz(r, c);
        mean_dz_z += dz(r, c) * st.z(r, c);
      }
      mean_dz /= n;
      mean_dz_z /= n;
      for (std::size_t r = 0; r < essence.rows; ++r)
        (*essence_grad)(r, c) = (dz(r, c) - mean_dz - st.z(r, c) * mean_dz_z) / st.sigma[c];
    }
  }
  return loss;
}

double album_loss(const EssenceModel& model, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& masks,
                  const std::vector<std::vector<std::size_t>>& permutations,
                  std::size_t true_index, std::span<double> extractor_grad,
                  std::span<double> scorer_grad) {
  const std::size_t n = inputs.size(), d = model.essence_dim();
  std::vector<ExtractorTrace> traces(n);
  Matrix essence(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    extractor_forward(model.extractor_arch, model.extractor_params, inputs[r],
                      masks.empty() ? std::span<const double>{} : std::span<const double>(masks[r]),
                      traces[r]);
    std::copy(traces[r].output.begin(), traces[r].output.end(), essence.row(r).begin());
  }
  Matrix de;
  const double loss = contrastive_loss(model.scorer_arch, model.scorer_params, essence, permutations,
                                       true_index, scorer_grad,
                                       extractor_grad.empty() ? nullptr : &de);
  if (!extractor_grad.empty())
    for (std::size_t r = 0; r < n; ++r)
      extractor_backward(model.extractor_arch, model.extractor_params, traces[r], de.row(r),
                         extractor_grad);
  return loss;
}

}  // namespace nd
