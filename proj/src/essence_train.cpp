#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "narrative/essence.hpp"
#include "narrative/kernels.hpp"

namespace nd {

namespace {

class Adam {
public:
  explicit Adam(std::size_t n) : m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t_;
    const double t = static_cast<double>(t_);
    kernels::AdamStep s{lr, kBeta1, kBeta2, kEps, 1.0 / (1.0 - std::pow(kBeta1, t)),
                        1.0 / std::sqrt(1.0 - std::pow(kBeta2, t))};
    kernels::adam_update(params, grad, m_, v_, s);
  }

private:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

std::vector<const Album*> usable(const Dataset& ds, Split split) {
  std::vector<const Album*> out;
  for (const auto& a : ds.albums)
    if (a.split == split && a.length() >= kMinAlbumLength) out.push_back(&a);
  return out;
}

std::vector<std::vector<double>> dropout_masks(std::size_t tracks, std::size_t hidden, double p,
                                               Rng& rng) {
  if (p <= 0.0) return {};
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  std::vector<std::vector<double>> masks(tracks, std::vector<double>(hidden));
  for (auto& m : masks)
    for (auto& v : m) v = keep(rng) ? scale : 0.0;
  return masks;
}

Rng validation_rng(std::uint64_t seed, std::size_t album, std::size_t draw, std::size_t draws) {
  return make_rng(derive_seed(seed, "validation"), album * draws + draw);
}

/// Shared epoch bookkeeping: best-validation tracking and patience.
struct EarlyStopping {
  std::size_t patience;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;

  /// Returns true when this epoch is the new best.
  bool record(std::size_t epoch, double val) {
    if (val < best) {
      best = val;
      best_epoch = epoch;
      return true;
    }
    return false;
  }
  bool exhausted(std::size_t epoch) const { return epoch - best_epoch >= patience; }
};

void check_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss))
    throw std::runtime_error("training diverged: non-finite loss at epoch " + std::to_string(epoch));
}

}  // namespace

void TrainConfig::validate() const {
  if (negatives < 2) throw std::invalid_argument("train: N (negatives) must be >= 2");
  if (batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw std::invalid_argument("train: dropout must lie in [0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw std::invalid_argument("train: learning_rate must be positive");
  if (weight_decay_scorer < 0.0) throw std::invalid_argument("train: weight decay must be >= 0");
  if (essence_dim == 0 || extractor_hidden == 0 || scorer_hidden == 0)
    throw std::invalid_argument("train: layer sizes must be positive");
  if (max_epochs == 0) throw std::invalid_argument("train: max_epochs must be positive");
  if (validation_draws == 0) throw std::invalid_argument("train: validation_draws must be positive");
}

double mean_validation_loss(const EssenceModel& model, const std::vector<Album>& albums,
                            std::size_t negatives, std::uint64_t seed, std::size_t draws) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < albums.size(); ++i) {
    if (albums[i].length() < kMinAlbumLength) continue;
    const Matrix e = extract_album(model, albums[i]);
    for (std::size_t r = 0; r < draws; ++r) {
      Rng rng = validation_rng(seed, i, r, draws);
      std::size_t ti = 0;
      const auto perms = sample_permutations(e.rows, negatives, ti, rng);
      total += contrastive_loss(model.scorer_arch, model.scorer_params, e, perms, ti, {}, nullptr);
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("validation: no usable albums");
  return total / static_cast<double>(count);
}

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  const auto train_albums = usable(dataset, Split::train);
  const auto val_ptrs = usable(dataset, Split::validation);
  if (train_albums.empty()) throw std::invalid_argument("train: empty train split");
  if (val_ptrs.empty()) throw std::invalid_argument("train: empty validation split");
  std::vector<Album> val_albums;
  for (const Album* a : val_ptrs) val_albums.push_back(*a);

  const ExtractorArch ex{kFeatureSize, config.extractor_hidden, config.essence_dim, config.dropout};
  const ScorerArch sc{config.essence_dim, config.scorer_hidden};
  EssenceModel model = EssenceModel::initialize(ex, sc, config.seed);
  {
    std::vector<Album> tr;
    for (const Album* a : train_albums) tr.push_back(*a);
    fit_standardization(model, tr);
  }

  std::vector<std::vector<std::vector<double>>> inputs(train_albums.size());
  for (std::size_t a = 0; a < train_albums.size(); ++a)
    for (const auto& t : train_albums[a]->tracks) inputs[a].push_back(standardize(model, t));

  Adam adam_ex(ex.param_count()), adam_sc(sc.param_count());
  std::vector<double> g_ex(ex.param_count()), g_sc(sc.param_count());
  std::vector<std::size_t> order(train_albums.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.model = model;
  EarlyStopping stop{config.patience};

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng = make_rng(derive_seed(config.seed, "epoch"), epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(g_ex.begin(), g_ex.end(), 0.0);
      std::fill(g_sc.begin(), g_sc.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& in = inputs[order[b]];
        std::size_t ti = 0;
        const auto perms = sample_permutations(in.size(), config.negatives, ti, rng);
        const auto masks = dropout_masks(in.size(), ex.hidden, ex.dropout, rng);
        epoch_loss += album_loss(model, in, masks, perms, ti, g_ex, g_sc);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& g : g_ex) g *= inv;
      for (std::size_t k = 0; k < g_sc.size(); ++k)
        g_sc[k] = g_sc[k] * inv + config.weight_decay_scorer * model.scorer_params[k];
      adam_ex.step(model.extractor_params, g_ex, config.learning_rate);
      adam_sc.step(model.scorer_params, g_sc, config.learning_rate);
    }
    const double train_loss = epoch_loss / static_cast<double>(order.size());
    check_loss(train_loss, epoch);
    const double val_loss =
        mean_validation_loss(model, val_albums, config.negatives, config.seed, config.validation_draws);
    check_loss(val_loss, epoch);

    EpochRecord rec{epoch, train_loss, val_loss, mi_lower_bound(val_loss, config.negatives)};
    result.history.push_back(rec);
    spdlog::debug("epoch {} train {:.5f} val {:.5f} ({:.4f} bits)", epoch, train_loss, val_loss,
                  rec.validation_mi_bits);
    if (stop.record(epoch, val_loss)) {
      result.model = model;
    } else if (stop.exhausted(epoch)) {
      break;
    }
  }
  result.best_epoch = stop.best_epoch;
  result.best_validation_loss = stop.best;
  result.best_validation_mi_bits = mi_lower_bound(stop.best, config.negatives);
  return result;
}

FeatureMap feature_from_scalars(const ScalarTable& table, const std::string& name) {
  const std::size_t col = table.column(name);
  FeatureMap out;
  for (const auto& [id, row] : table.rows)
    if (col < row.size() && row[col]) out.emplace(id, *row[col]);
  return out;
}

FeatureMap negate(const FeatureMap& f) {
  FeatureMap out;
  for (const auto& [id, v] : f) out.emplace(id, -v);
  return out;
}

FeatureMap essence_feature(const EssenceModel& model, const Dataset& dataset, std::size_t dim) {
  if (dim >= model.essence_dim()) throw std::out_of_range("essence_feature: dimension out of range");
  FeatureMap out;
  for (const auto& a : dataset.albums)
    for (const auto& t : a.tracks) out[t.track_id()] = extract_essence(model, t)[dim];
  return out;
}

ProbeResult probe_feature_mi(const Dataset& dataset, const FeatureMap& feature,
                             const TrainConfig& config) {
  config.validate();
  ProbeResult result;
  std::vector<Matrix> train_seqs, val_seqs;
  for (const auto& a : dataset.albums) {
    std::vector<double> values;
    for (const auto& t : a.tracks) {
      auto it = feature.find(t.track_id());
      if (it == feature.end()) {
        ++result.dropped_tracks;
        continue;
      }
      values.push_back(it->second);
    }
    if (values.size() < kMinAlbumLength) continue;
    Matrix m(values.size(), 1);
    m.data = std::move(values);
    if (a.split == Split::train) train_seqs.push_back(std::move(m));
    else if (a.split == Split::validation) val_seqs.push_back(std::move(m));
  }
  if (train_seqs.empty()) throw std::invalid_argument("probe: no train albums carry the feature");
  if (val_seqs.empty()) throw std::invalid_argument("probe: no validation albums carry the feature");

  const ScorerArch sc{1, config.scorer_hidden};
  const ExtractorArch ex{kFeatureSize, 1, 1, 0.0};
  std::vector<double> params = EssenceModel::initialize(ex, sc, config.seed).scorer_params;
  std::vector<double> best_params = params, grad(params.size());
  Adam adam(params.size());

  auto validation = [&](std::span<const double> p) {
    double total = 0.0;
    for (std::size_t i = 0; i < val_seqs.size(); ++i)
      for (std::size_t r = 0; r < config.validation_draws; ++r) {
        Rng rng = validation_rng(config.seed, i, r, config.validation_draws);
        std::size_t ti = 0;
        const auto perms = sample_permutations(val_seqs[i].rows, config.negatives, ti, rng);
        total += contrastive_loss(sc, p, val_seqs[i], perms, ti, {}, nullptr);
      }
    return total / static_cast<double>(val_seqs.size() * config.validation_draws);
  };

  std::vector<std::size_t> order(train_seqs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  EarlyStopping stop{config.patience};
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    Rng rng = make_rng(derive_seed(config.seed, "probe-epoch"), epoch);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const Matrix& seq = train_seqs[order[b]];
        std::size_t ti = 0;
        const auto perms = sample_permutations(seq.rows, config.negatives, ti, rng);
        epoch_loss += contrastive_loss(sc, params, seq, perms, ti, grad, nullptr);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = 0; k < grad.size(); ++k)
        grad[k] = grad[k] * inv + config.weight_decay_scorer * params[k];
      adam.step(params, grad, config.learning_rate);
    }
    const double train_loss = epoch_loss / static_cast<double>(order.size());
    check_loss(train_loss, epoch);
    const double val_loss = validation(params);
    check_loss(val_loss, epoch);
    result.history.push_back({epoch, train_loss, val_loss, mi_lower_bound(val_loss, config.negatives)});
    if (stop.record(epoch, val_loss)) {
      best_params = params;
    } else if (stop.exhausted(epoch)) {
      break;
    }
  }
  result.best_validation_loss = stop.best;
  result.scorer_params = std::move(best_params);
  result.validation_mi_bits = mi_lower_bound(stop.best, config.negatives);
  return result;
}

}  // namespace nd
