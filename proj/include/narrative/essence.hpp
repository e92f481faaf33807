#pragma once

// Contrastive learning of a per-track "essence": an extractor maps each
// track's feature statistics to a d-dimensional vector in (0, 1), and a
// scorer rates sequences of normalized essences. Both are trained so the
// scorer picks the ground-truth ordering out of N candidate permutations;
// the resulting InfoNCE loss gives a lower bound on the mutual information
// between the essences and the ordering.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "narrative/core.hpp"
#include "narrative/ingest.hpp"
#include "narrative/rng.hpp"

namespace nd {

/// Feed-forward extractor: standardized 525-vector -> tanh hidden layer
/// (dropout during training) -> sigmoid output of size essence_dim.
struct ExtractorArch {
  std::size_t input = kFeatureSize;
  std::size_t hidden = 128;
  std::size_t output = 1;
  double dropout = 0.1;

  std::size_t param_count() const { return hidden * input + hidden + output * hidden + output; }
};

/// Position-summed pairwise scorer. For the token sequence
/// (start, e_1, ..., e_n, end), score = sum_k w . tanh(W [t_k, t_{k+1}, k/(n+1)] + b).
/// No output nonlinearity.
struct ScorerArch {
  std::size_t essence_dim = 1;
  std::size_t hidden = 16;

  std::size_t input() const { return 2 * essence_dim + 1; }
  std::size_t param_count() const { return hidden * input() + 2 * hidden + 2 * essence_dim; }
};

struct EssenceModel {
  ExtractorArch extractor_arch;
  ScorerArch scorer_arch;
  std::vector<double> extractor_params;
  std::vector<double> scorer_params;
  /// Per-input standardization, applied before the first layer.
  std::vector<double> input_mean;
  std::vector<double> input_scale;

  std::size_t essence_dim() const { return extractor_arch.output; }
  void validate() const;

  /// Xavier-uniform weights, zero biases, identity standardization.
  static EssenceModel initialize(const ExtractorArch& ex, const ScorerArch& sc, std::uint64_t seed);
};

/// Sets input_mean/input_scale from the given tracks (population statistics;
/// constant inputs get scale 1).
void fit_standardization(EssenceModel& model, const std::vector<Album>& albums);

/// Inference-mode essence (no dropout), entries in (0, 1).
std::vector<double> extract_essence(const EssenceModel& model, const TrackFeatures& track);

/// Essences of an album in ground-truth order, one row per track.
Matrix extract_album(const EssenceModel& model, const Album& album);

/// Score of one sequence of essence vectors (rows of `sequence`), with the
/// learned start/end tokens added around it.
double score_sequence(const ScorerArch& arch, std::span<const double> scorer_params,
                      const Matrix& sequence);
double score_sequence(const EssenceModel& model, const Matrix& sequence);

/// Per-dimension z-score across the rows, with variance floor `eps`.
Matrix normalize_sequence(const Matrix& essence, double eps = 0.0);

/// N candidate sequences over the same normalized rows: sequence k is
/// rows permutations[k][0], permutations[k][1], ...
struct ContrastiveSet {
  Matrix normalized;  // ground-truth order
  std::vector<std::vector<std::size_t>> permutations;
  std::size_t true_index = 0;

  std::size_t size() const { return permutations.size(); }
  Matrix sequence(std::size_t k) const;
};

/// Permutations for one contrastive set: the identity at a random index and
/// N-1 uniformly random non-identity permutations (with replacement).
std::vector<std::vector<std::size_t>> sample_permutations(std::size_t n, std::size_t count,
                                                          std::size_t& true_index, Rng& rng);

ContrastiveSet sample_contrastive_set(const Album& album, const EssenceModel& model,
                                      std::size_t count, Rng& rng);

/// -log softmax(scores)[true_index], in nats.
double info_nce_loss(std::span<const double> scores, std::size_t true_index);

/// (ln N - mean_loss) / ln 2
double mi_lower_bound(double mean_loss, std::size_t n_candidates);

/// Loss of one contrastive set and, optionally, gradients. `essence` holds
/// raw extractor outputs (ground-truth order); normalization happens inside.
/// scorer_grad is accumulated into (may be empty); essence_grad, when given,
/// is overwritten with dLoss/dEssence.
double contrastive_loss(const ScorerArch& arch, std::span<const double> scorer_params,
                        const Matrix& essence,
                        const std::vector<std::vector<std::size_t>>& permutations,
                        std::size_t true_index, std::span<double> scorer_grad,
                        Matrix* essence_grad);

inline constexpr double kSequenceVarianceFloor = 1e-8;

/// Extractor forward/backward on one track. Dropout mask entries are 0 or
/// 1/(1-p); an empty mask means inference mode.
struct ExtractorTrace {
  std::vector<double> input;   // standardized
  std::vector<double> hidden;  // after tanh and dropout
  std::vector<double> hidden_raw;
  std::vector<double> mask;
  std::vector<double> output;  // after sigmoid
};

void extractor_forward(const ExtractorArch& arch, std::span<const double> params,
                       std::span<const double> standardized_input, std::span<const double> mask,
                       ExtractorTrace& trace);
void extractor_backward(const ExtractorArch& arch, std::span<const double> params,
                        const ExtractorTrace& trace, std::span<const double> output_grad,
                        std::span<double> param_grad);

std::vector<double> standardize(const EssenceModel& model, const TrackFeatures& track);

/// Joint loss over one album for a fixed dropout mask set (one mask per track,
/// or none). Gradients are accumulated into the two spans when non-empty.
double album_loss(const EssenceModel& model, const std::vector<std::vector<double>>& inputs,
                  const std::vector<std::vector<double>>& masks,
                  const std::vector<std::vector<std::size_t>>& permutations,
                  std::size_t true_index, std::span<double> extractor_grad,
                  std::span<double> scorer_grad);

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t negatives = 32;  // N: candidates per set, including the true order
  double learning_rate = 1e-4;
  double dropout = 0.1;
  double weight_decay_scorer = 1e-5;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  std::uint64_t seed = 0;
  std::size_t essence_dim = 1;
  std::size_t extractor_hidden = 128;
  std::size_t scorer_hidden = 16;
  std::size_t validation_draws = 4;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;
  double validation_mi_bits = 0.0;
};

struct TrainResult {
  EssenceModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_validation_loss = 0.0;
  double best_validation_mi_bits = 0.0;
};

/// Adam on the mean contrastive loss over mini-batches of train albums, with
/// early stopping on validation loss. Returns the best-validation parameters.
TrainResult train(const Dataset& dataset, const TrainConfig& config);

/// Mean contrastive loss with fixed negatives (seeded per album and draw).
double mean_validation_loss(const EssenceModel& model, const std::vector<Album>& albums,
                            std::size_t negatives, std::uint64_t seed, std::size_t draws);

/// Fixed per-track scalar keyed by track id.
using FeatureMap = std::unordered_map<std::string, double>;

FeatureMap feature_from_scalars(const ScalarTable& table, const std::string& name);
FeatureMap negate(const FeatureMap& f);

struct ProbeResult {
  double validation_mi_bits = 0.0;
  double best_validation_loss = 0.0;
  std::size_t dropped_tracks = 0;
  std::vector<EpochRecord> history;
  std::vector<double> scorer_params;  // best-validation scorer
};

/// Trains only a scorer on sequences of the fixed (z-scored) scalar feature
/// and reports the best validation MI bound. Tracks missing the feature are
/// dropped; albums left with fewer than 3 tracks are skipped.
ProbeResult probe_feature_mi(const Dataset& dataset, const FeatureMap& feature,
                             const TrainConfig& config);

/// Pearson correlation; throws std::domain_error on constant input.
double pearson(std::span<const double> a, std::span<const double> b);

/// Scalar essence per track (first dimension) for every track in the dataset.
FeatureMap essence_feature(const EssenceModel& model, const Dataset& dataset,
                           std::size_t dim = 0);

}  // namespace nd
