#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>

#include "naon/data.hpp"
#include "naon/decoder.hpp"
#include "naon/error.hpp"
#include "naon/inference.hpp"
#include "naon/trainer.hpp"

namespace naon::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  // train
  std::string train_path;
  std::string valid_path;
  std::string vocab_path;
  // eval / order
  std::string checkpoint;
  std::string corpus;
  std::string decode = "greedy";
  std::string in_path;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty() || !fs::is_regular_file(path)) {
    throw IoError(std::string(what) + " '" + path + "' does not exist");
  }
}

KeyValues gather_config(const Options& o) {
  KeyValues kv;
  if (!o.config.empty()) {
    require_file(o.config, "config file");
    kv = KeyValues::load(o.config);
  }
  for (const auto& ov : o.overrides) kv.add_override(ov);
  if (o.seed) kv.set("seed", std::to_string(*o.seed));
  return kv;
}

std::optional<Vocabulary> maybe_vocab(const Options& o) {
  if (o.vocab_path.empty()) return std::nullopt;
  require_file(o.vocab_path, "vocabulary");
  return Vocabulary::load(o.vocab_path);
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig cfg;
  const KeyValues kv = gather_config(o);
  for (const auto& e : kv.entries()) {
    if (!cfg.apply(e.key, e.value)) {
      throw ConfigError("unknown synth key '" + e.key + "'" +
                        (e.line ? " at line " + std::to_string(e.line) : std::string()));
    }
  }
  const Corpus corpus = synth_generate(cfg);
  write_jsonl(o.out, corpus);
  out << corpus.size() << " paragraphs written to " << o.out << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  TrainConfig cfg;
  cfg.apply_all(gather_config(o));
  cfg.validate();
  require_file(o.train_path, "training corpus");
  require_file(o.valid_path, "validation corpus");
  const auto vocab = maybe_vocab(o);
  const Vocabulary* vp = vocab ? &*vocab : nullptr;
  const Corpus train_set = load_jsonl(o.train_path, vp, Split::train);
  const Corpus valid_set = load_jsonl(o.valid_path, vp, Split::valid);

  fs::create_directories(o.out);
  {
    std::ofstream cfg_out(fs::path(o.out) / "config.txt", std::ios::binary | std::ios::trunc);
    cfg_out << cfg.to_text();
  }
  char line[160];
  std::snprintf(line, sizeof(line), "%5s %10s %10s %10s %8s %8s %8s %8s\n", "epoch", "loss", "L_c",
                "L_ex", "acc", "pmr", "tau", "sec");
  out << line;
  TrainOutputs outputs;
  outputs.directory = fs::path(o.out);
  outputs.on_epoch = [&](const EpochRecord& r) {
    std::snprintf(line, sizeof(line), "%5zu %10.5f %10.5f %10.5f %8.4f %8.4f %8.4f %8.1f%s\n",
                  r.epoch, r.train_loss, r.train_lc, r.train_lex, r.valid.acc, r.valid.pmr,
                  r.valid.tau, r.seconds, r.improved ? " *" : "");
    out << line << std::flush;
  };
  const TrainResult result = train(cfg, train_set, valid_set, outputs);
  out << "best epoch " << result.history.best_epoch << "; checkpoint "
      << (fs::path(o.out) / "best.ckpt").string() << "\n";
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.corpus, "corpus");
  const DecodeMethod method = parse_decode_method(o.decode);
  const auto vocab = maybe_vocab(o);
  const Corpus corpus = load_jsonl(o.corpus, vocab ? &*vocab : nullptr, Split::test);
  const MetricReport report = evaluate(fs::path(o.checkpoint), corpus, method);

  out << "decode: " << to_string(method) << "\n" << report.to_table();
  const fs::path record_path =
      o.out.empty() ? fs::path(o.checkpoint).parent_path() / ("metrics_" + to_string(method) + ".json")
                    : fs::path(o.out);
  std::ofstream rec(record_path, std::ios::binary | std::ios::trunc);
  if (!rec) throw IoError("cannot write " + record_path.string());
  auto j = nlohmann::ordered_json::parse(report.to_record());
  j["decode"] = to_string(method);
  rec << j.dump() << '\n';
  return kOk;
}

int cmd_order(const Options& o, std::ostream& out) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.in_path, "input");
  Model model = Model::load(o.checkpoint);
  const auto vocab = maybe_vocab(o);
  const Vocabulary* vp = vocab ? &*vocab : nullptr;

  std::ifstream in(o.in_path);
  std::ofstream dst(o.out, std::ios::binary | std::ios::trunc);
  if (!dst) throw IoError("cannot write " + o.out);
  std::string line;
  std::size_t line_no = 0, count = 0;
  std::vector<std::string> lines_out;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Paragraph p = parse_record(line, line_no, vp, false);
    for (const auto& s : p.sentences)
      for (TokenId t : s.tokens)
        if (static_cast<std::size_t>(t) >= model.config().vocab_size)
          throw ParseError(line_no, "token id " + std::to_string(t) + " outside the model vocabulary");
    const nlohmann::ordered_json raw = nlohmann::ordered_json::parse(line)["sentences"];
    const OrderPrediction pred =
        greedy_assign(forward(p.sentences, model.params(), model.config()).row_probs);
    nlohmann::ordered_json j;
    j["order"] = pred.assignment;
    j["sentences"] = nlohmann::json::array();
    for (std::size_t idx : pred.assignment) j["sentences"].push_back(raw[idx]);
    lines_out.push_back(j.dump());
    ++count;
  }
  for (const auto& l : lines_out) dst << l << '\n';
  out << count << " paragraphs ordered into " << o.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-autoregressive sentence ordering: synthesize corpora, train, evaluate, order",
               "naon"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Global random seed (overrides the config file)");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic JSONL corpus");
  synth->add_option("--config", o.config, "Synth config file (key = value)");
  synth->add_option("--set", o.overrides, "Override a config key (key=value); repeatable");
  synth->add_option("--out", o.out, "Output JSONL path")->required();

  auto* trn = app.add_subcommand("train", "Train a model; writes best.ckpt and history.jsonl");
  trn->add_option("--config", o.config, "Training config file (key = value)");
  trn->add_option("--set", o.overrides, "Override a config key (key=value); repeatable");
  trn->add_option("--train", o.train_path, "Training corpus (JSONL)")->required();
  trn->add_option("--valid", o.valid_path, "Validation corpus (JSONL)")->required();
  trn->add_option("--vocab", o.vocab_path, "Vocabulary file for text sentences");
  trn->add_option("--out", o.out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  ev->add_option("--corpus", o.corpus, "Corpus (JSONL)")->required();
  ev->add_option("--decode", o.decode, "Decoder")
      ->check(CLI::IsMember({"greedy", "raw", "raw_argmax", "hungarian"}));
  ev->add_option("--vocab", o.vocab_path, "Vocabulary file for text sentences");
  ev->add_option("--out", o.out, "Metric record path (default: next to the checkpoint)");

  auto* ord = app.add_subcommand("order", "Order the sentences of each input record");
  ord->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  ord->add_option("--in", o.in_path, "Input JSONL (sentences only)")->required();
  ord->add_option("--vocab", o.vocab_path, "Vocabulary file for text sentences");
  ord->add_option("--out", o.out, "Output JSONL")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (*synth) return cmd_synth(o, out);
    if (*trn) return cmd_train(o, out);
    if (*ev) return cmd_eval(o, out);
    if (*ord) return cmd_order(o, out);
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace naon::cli
