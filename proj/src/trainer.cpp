#include "naon/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "naon/decoder.hpp"
#include "naon/error.hpp"
#include "naon/rng.hpp"

namespace naon {

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be non-negative");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be non-negative");
  model.validate();
}

bool TrainConfig::apply(const std::string& key, const std::string& value) {
  if (key == "lr") {
    lr = parse_double(key, value);
  } else if (key == "weight_decay") {
    weight_decay = parse_double(key, value);
  } else if (key == "dropout") {
    dropout = parse_double(key, value);
  } else if (key == "patience") {
    patience = parse_uint(key, value);
  } else if (key == "max_epochs") {
    max_epochs = parse_uint(key, value);
  } else if (key == "batch_size") {
    batch_size = parse_uint(key, value);
  } else if (key == "loss_kind") {
    if (value == "pointer") {
      loss_kind = LossKind::pointer;
    } else if (value == "exclusive") {
      loss_kind = LossKind::exclusive;
    } else {
      throw ConfigError("loss_kind must be 'pointer' or 'exclusive', got '" + value + "'");
    }
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else if (key == "grad_clip") {
    grad_clip = parse_double(key, value);
  } else {
    return model.apply(key, value);
  }
  return true;
}

void TrainConfig::apply_all(const KeyValues& kv) {
  for (const auto& e : kv.entries()) {
    if (!apply(e.key, e.value)) {
      throw ConfigError("unknown key '" + e.key + "'" +
                        (e.line ? " at line " + std::to_string(e.line) : std::string()));
    }
  }
}

std::string TrainConfig::to_text() const {
  std::ostringstream os;
  os << "lr = " << format_double(lr) << "\n"
     << "weight_decay = " << format_double(weight_decay) << "\n"
     << "dropout = " << format_double(dropout) << "\n"
     << "patience = " << patience << "\n"
     << "max_epochs = " << max_epochs << "\n"
     << "batch_size = " << batch_size << "\n"
     << "loss_kind = " << (loss_kind == LossKind::pointer ? "pointer" : "exclusive") << "\n"
     << "seed = " << seed << "\n"
     << "grad_clip = " << format_double(grad_clip) << "\n"
     << model.to_text();
  return os.str();
}

std::string EpochRecord::to_record() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["train_lc"] = train_lc;
  j["train_lex"] = train_lex;
  j["valid_acc"] = valid.acc;
  j["valid_pmr"] = valid.pmr;
  j["valid_tau"] = valid.tau;
  j["improved"] = improved;
  return j.dump();
}

void adam_step(ParameterStore& params, double lr, double weight_decay) {
  for (auto& [name, t] : params) {
    if (!t.has_grad() || t.grad().size() != t.size()) {
      throw ContractError("adam_step: parameter '" + name + "' has no gradient");
    }
  }
  params.increment_step();
  const double step = static_cast<double>(params.step_count());
  const double c1 = 1.0 - std::pow(kAdamBeta1, step);
  const double c2 = 1.0 - std::pow(kAdamBeta2, step);
  const double shrink = 1.0 - lr * weight_decay;
  for (auto& [name, t] : params) {
    auto& mom = params.moments(name);
    auto theta = t.data();
    const auto g = std::as_const(t).grad();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      mom.first[i] = kAdamBeta1 * mom.first[i] + (1.0 - kAdamBeta1) * g[i];
      mom.second[i] = kAdamBeta2 * mom.second[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
      const double m_hat = mom.first[i] / c1;
      const double v_hat = mom.second[i] / c2;
      theta[i] *= shrink;
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

void adam_step(ParameterStore& params, const TrainConfig& cfg) {
  adam_step(params, cfg.lr, cfg.weight_decay);
}

double clip_grad_norm(ParameterStore& params, double max_norm) {
  double sq = 0.0;
  for (auto& [name, t] : params) {
    if (!t.has_grad()) continue;
    for (double g : std::as_const(t).grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double f = max_norm / norm;
    for (auto& [name, t] : params) {
      if (!t.has_grad()) continue;
      for (double& g : t.grad()) g *= f;
    }
  }
  return norm;
}

namespace {

void check_corpus(const Corpus& corpus, const ModelConfig& model, const char* what) {
  if (corpus.paragraphs.empty()) throw InputError(std::string(what) + " corpus is empty");
  for (std::size_t k = 0; k < corpus.paragraphs.size(); ++k) {
    try {
      validate_paragraph(corpus.paragraphs[k], model.vocab_size);
    } catch (const InputError& e) {
      throw InputError(std::string(what) + " paragraph " + std::to_string(k) + ": " + e.what());
    }
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Corpus& train_set, const Corpus& valid_set,
                  const TrainOutputs& outputs) {
  cfg.validate();
  check_corpus(train_set, cfg.model, "training");
  check_corpus(valid_set, cfg.model, "validation");

  Model model(cfg.model, derive_seed(cfg.seed, 1));
  Rng order_rng(derive_seed(cfg.seed, 2));
  Rng dropout_rng(derive_seed(cfg.seed, 3));
  ParameterStore& params = model.params();

  std::ofstream history_log;
  std::filesystem::path checkpoint_path;
  if (outputs.directory) {
    std::filesystem::create_directories(*outputs.directory);
    history_log.open(*outputs.directory / "history.jsonl", std::ios::binary | std::ios::trunc);
    if (!history_log) throw IoError("cannot write " + (*outputs.directory / "history.jsonl").string());
    checkpoint_path = *outputs.directory / "best.ckpt";
  }

  TrainResult result{TrainHistory{}, model};
  double best_pmr = -1.0;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const auto order = order_rng.permutation(train_set.size());
    double total = 0.0, total_lc = 0.0, total_lex = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double weight = 1.0 / static_cast<double>(stop - start);
      params.zero_grad();
      for (auto& [name, t] : params) t.ensure_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const Paragraph& p = train_set.paragraphs[order[k]];
        Tape tape;
        ForwardPass fp{tape, params, cfg.model, Mode::train, cfg.dropout, &dropout_rng};
        Var omega = forward(fp, p.sentences).omega;
        LossVars lc = pointer_loss(omega, p.gold_order);
        LossVars lex = exclusive_loss(omega, p.gold_order);
        LossVars& target = cfg.loss_kind == LossKind::pointer ? lc : lex;
        const double value = target.value.value().item();
        if (!std::isfinite(value)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                               std::to_string(batch_index));
        }
        total += value;
        total_lc += lc.value.value().item();
        total_lex += lex.value.value().item();
        tape.backward(scale(target.value, weight));
      }
      const double norm = clip_grad_norm(params, cfg.grad_clip);
      if (!std::isfinite(norm)) {
        throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index));
      }
      adam_step(params, cfg);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double n = static_cast<double>(train_set.size());
    rec.train_loss = total / n;
    rec.train_lc = total_lc / n;
    rec.train_lex = total_lex / n;
    rec.valid = evaluate(model, valid_set, DecodeMethod::greedy);
    rec.improved = rec.valid.pmr > best_pmr;
    if (rec.improved) {
      best_pmr = rec.valid.pmr;
      since_best = 0;
      result.history.best_epoch = epoch;
      result.best = model;
      if (!checkpoint_path.empty()) model.save(checkpoint_path);
    } else {
      ++since_best;
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (history_log.is_open()) history_log << rec.to_record() << '\n' << std::flush;
    result.history.epochs.push_back(rec);
    if (outputs.on_epoch) outputs.on_epoch(rec);
    if (since_best >= cfg.patience) {
      result.history.stopped_early = true;
      break;
    }
  }
  return result;
}

std::vector<OrderPrediction> predict(Model& model, const Corpus& corpus, DecodeMethod method) {
  std::vector<OrderPrediction> out;
  out.reserve(corpus.size());
  for (const auto& p : corpus.paragraphs) {
    out.push_back(decode(forward(p.sentences, model.params(), model.config()), method));
  }
  return out;
}

MetricReport evaluate(Model& model, const Corpus& corpus, DecodeMethod method) {
  check_corpus(corpus, model.config(), "evaluation");
  const auto preds = predict(model, corpus, method);
  std::vector<OrderPair> pairs;
  pairs.reserve(preds.size());
  for (std::size_t k = 0; k < preds.size(); ++k) {
    pairs.push_back({preds[k].assignment, corpus.paragraphs[k].gold_order});
  }
  return compute_report(pairs);
}

MetricReport evaluate(const std::filesystem::path& checkpoint, const Corpus& corpus,
                      DecodeMethod method) {
  Model model = Model::load(checkpoint);
  if (const std::size_t bound = corpus.token_bound(); bound > model.config().vocab_size) {
    throw LoadError("corpus uses token id " + std::to_string(bound - 1) +
                    " but the checkpoint vocabulary has " + std::to_string(model.config().vocab_size) +
                    " entries");
  }
  return evaluate(model, corpus, method);
}

}  // namespace naon
