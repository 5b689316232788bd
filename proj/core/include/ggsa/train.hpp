#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ggsa/composition.hpp"
#include "ggsa/config.hpp"
#include "ggsa/data.hpp"
#include "ggsa/optimizer.hpp"
#include "ggsa/params.hpp"

namespace ggsa {

enum class LossKind { kPairwise, kPointwise };
enum class Scoring { kCosine, kPointwise };

std::string to_string(LossKind k);
LossKind parse_loss(std::string_view s);
// Pairwise models rank by cosine, pointwise models by the scorer probability.
Scoring scoring_for(LossKind k);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean over training examples
  double dev_p_at_1 = 0.0;
  double dev_mrr = 0.0;
  double seconds = 0.0;
};

struct TrainConfig {
  LossKind loss = LossKind::kPairwise;
  std::size_t epochs = 20;
  std::size_t batch_size = 32;
  std::size_t negatives = 1;  // sampled negatives per question, pairwise only
  double margin = kDefaultMargin;
  RmsPropConfig optimizer;
  std::uint64_t seed = 1;
  bool freeze_embeddings = false;
  // Stop as soon as dev P@1 reaches this value (disabled when > 1).
  double target_dev_p_at_1 = 2.0;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch completed
  double best_dev_p_at_1 = -1.0;
  bool diverged = false;
  std::string divergence;
};

// Seeded epoch loop: shuffle, fresh negatives, dropout on, one optimizer step
// per batch with gradients summed over the batch, then dev evaluation. On
// return `params` hold the best-dev snapshot. A non-finite loss or gradient
// stops training, restores that snapshot and sets `diverged`.
template <typename T>
TrainResult train(const ModelConfig& cfg, EncoderParams<T>& params, const TrainConfig& tc, const Dataset& data);

// Candidate scores of one question, no dropout.
template <typename T>
std::vector<double> score_candidates(const ModelConfig& cfg, EncoderParams<T>& params, const QAExample& ex,
                                     Scoring scoring);

// Throws DataError on an empty example list.
template <typename T>
RankMetrics evaluate(const ModelConfig& cfg, EncoderParams<T>& params, std::span<const QAExample> examples,
                     Scoring scoring);

}  // namespace ggsa
