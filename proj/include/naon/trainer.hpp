#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "naon/config.hpp"
#include "naon/data.hpp"
#include "naon/inference.hpp"
#include "naon/metrics.hpp"
#include "naon/model.hpp"
#include "naon/objective.hpp"

namespace naon {

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-5;
  double dropout = 0.1;
  std::size_t patience = 5;
  std::size_t max_epochs = 30;
  std::size_t batch_size = 32;
  LossKind loss_kind = LossKind::exclusive;
  std::uint64_t seed = 0;
  double grad_clip = 5.0;  // global L2 norm; 0 disables
  ModelConfig model;

  void validate() const;
  // Training keys first, then model keys. Returns false for unknown keys.
  bool apply(const std::string& key, const std::string& value);
  // Applies every entry; throws ConfigError naming the first unknown key.
  void apply_all(const KeyValues& kv);
  std::string to_text() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_lc = 0.0;
  double train_lex = 0.0;
  MetricReport valid;
  double seconds = 0.0;
  bool improved = false;

  // History-log line. Wall-clock time is left out so logs are reproducible.
  std::string to_record() const;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 1-based; 0 before any epoch
  bool stopped_early = false;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One Adam step with bias correction over every parameter's grad buffer.
// Weight decay is decoupled: theta *= (1 - lr * weight_decay) before the
// moment update is applied. Throws ContractError if a gradient is missing or
// mis-shaped.
void adam_step(ParameterStore& params, double lr, double weight_decay);
void adam_step(ParameterStore& params, const TrainConfig& cfg);

// Scales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& params, double max_norm);

struct TrainOutputs {
  // When set, receives best.ckpt and history.jsonl.
  std::optional<std::filesystem::path> directory;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  TrainHistory history;
  Model best;
};

// Mini-batch training with per-epoch shuffling, validation after every epoch
// (greedy decoding), and early stopping once validation PMR has failed to
// beat the best `patience` times in a row. Throws NumericalError on a
// non-finite loss or gradient, naming the epoch and batch.
TrainResult train(const TrainConfig& cfg, const Corpus& train_set, const Corpus& valid_set,
                  const TrainOutputs& outputs = {});

// Eval-mode predictions for every paragraph.
std::vector<OrderPrediction> predict(Model& model, const Corpus& corpus, DecodeMethod method);

MetricReport evaluate(Model& model, const Corpus& corpus, DecodeMethod method);
MetricReport evaluate(const std::filesystem::path& checkpoint, const Corpus& corpus,
                      DecodeMethod method);

}  // namespace naon
