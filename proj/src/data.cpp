#include "naon/data.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "naon/config.hpp"
#include "naon/error.hpp"
#include "naon/rng.hpp"

namespace naon {

using nlohmann::json;

std::size_t Corpus::token_bound() const {
  std::size_t bound = 0;
  for (const auto& p : paragraphs)
    for (const auto& s : p.sentences)
      for (TokenId t : s.tokens) bound = std::max(bound, static_cast<std::size_t>(t) + 1);
  return bound;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    // First occurrence wins for duplicated lines.
    v.ids_.emplace(v.tokens_[i], static_cast<TokenId>(i));
  }
  return v;
}

std::optional<TokenId> Vocabulary::find(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_of(const std::string& token) const {
  if (auto id = find(token)) return *id;
  if (auto unk = find("<unk>")) return *unk;
  throw InputError("token '" + token + "' is not in the vocabulary");
}

Paragraph parse_record(const std::string& line, std::size_t line_no, const Vocabulary* vocab,
                       bool require_gold) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "record is not a JSON object");
  if (!j.contains("sentences") || !j["sentences"].is_array()) {
    throw ParseError(line_no, "missing \"sentences\" array");
  }
  Paragraph p;
  for (const auto& s : j["sentences"]) {
    Sentence sent;
    if (s.is_array()) {
      for (const auto& tok : s) {
        if (!tok.is_number_integer()) throw ParseError(line_no, "token ids must be integers");
        const auto id = tok.get<std::int64_t>();
        if (id < 0 || id > INT32_MAX) throw ParseError(line_no, "token id out of range");
        sent.tokens.push_back(static_cast<TokenId>(id));
      }
    } else if (s.is_string()) {
      if (!vocab) throw ParseError(line_no, "text sentences need a vocabulary");
      std::istringstream words(s.get<std::string>());
      std::string w;
      try {
        while (words >> w) sent.tokens.push_back(vocab->id_of(w));
      } catch (const InputError& e) {
        throw ParseError(line_no, e.what());
      }
    } else {
      throw ParseError(line_no, "a sentence must be a token-id list or a string");
    }
    if (sent.tokens.empty()) {
      throw ParseError(line_no, "sentence " + std::to_string(p.sentences.size()) + " is empty");
    }
    p.sentences.push_back(std::move(sent));
  }
  if (p.sentences.empty()) throw ParseError(line_no, "paragraph has no sentences");
  if (j.contains("gold_order")) {
    const auto& g = j["gold_order"];
    if (!g.is_array()) throw ParseError(line_no, "\"gold_order\" must be an array");
    for (const auto& v : g) {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ParseError(line_no, "gold_order entries must be non-negative integers");
      }
      p.gold_order.push_back(v.get<std::size_t>());
    }
    if (!is_permutation_of_n(p.gold_order, p.sentences.size())) {
      throw ParseError(line_no, "gold_order is not a permutation of 0.." +
                                    std::to_string(p.sentences.size() - 1));
    }
  } else if (require_gold) {
    throw ParseError(line_no, "missing \"gold_order\"");
  }
  return p;
}

std::string to_record(const Paragraph& p) {
  nlohmann::ordered_json j;
  j["sentences"] = json::array();
  for (const auto& s : p.sentences) j["sentences"].push_back(s.tokens);
  j["gold_order"] = p.gold_order;
  return j.dump();
}

Corpus load_jsonl(const std::filesystem::path& path, const Vocabulary* vocab, Split split) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus " + path.string());
  Corpus corpus;
  corpus.name = path.stem().string();
  corpus.split = split;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    corpus.paragraphs.push_back(parse_record(line, line_no, vocab, true));
  }
  return corpus;
}

void write_jsonl(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& p : corpus.paragraphs) out << to_record(p) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

Paragraph shuffle_paragraph(const Paragraph& p, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<std::size_t> sigma = rng.permutation(p.size());
  std::vector<std::size_t> inverse(p.size());
  Paragraph out;
  out.sentences.reserve(p.size());
  for (std::size_t k = 0; k < sigma.size(); ++k) {
    out.sentences.push_back(p.sentences[sigma[k]]);
    inverse[sigma[k]] = k;
  }
  out.gold_order.reserve(p.gold_order.size());
  for (std::size_t g : p.gold_order) out.gold_order.push_back(inverse[g]);
  return out;
}

void SynthConfig::validate() const {
  if (paragraph_count == 0) throw ConfigError("paragraph_count must be positive");
  if (n_min < 2 || n_max < n_min) {
    throw ConfigError("n_range must satisfy 2 <= min <= max, got [" + std::to_string(n_min) + "," +
                      std::to_string(n_max) + "]");
  }
  if (noise_min < 1 || noise_max < noise_min) {
    throw ConfigError("noise_range must satisfy 1 <= min <= max");
  }
  const std::string need = "vocab too small: vocab_size " + std::to_string(vocab_size);
  if (cue_style == CueStyle::ordinal) {
    if (vocab_size < n_max + 1) {
      throw ConfigError(need + " cannot hold " + std::to_string(n_max) +
                        " cue tokens plus noise (need >= " + std::to_string(n_max + 1) + ")");
    }
  } else {
    const std::size_t bridges = vocab_size >= 1 ? (vocab_size - 1) / 2 : 0;
    if (vocab_size < 3 || bridges < n_max - 1 || vocab_size - 1 - bridges < 1) {
      throw ConfigError(need + " cannot hold " + std::to_string(n_max - 1) +
                        " bridge tokens plus noise (need >= " + std::to_string(2 * (n_max - 1) + 1) +
                        ")");
    }
  }
}

bool SynthConfig::apply(const std::string& key, const std::string& value) {
  if (key == "paragraph_count") {
    paragraph_count = parse_uint(key, value);
  } else if (key == "n_range") {
    auto [lo, hi] = parse_int_range(key, value);
    if (lo < 0 || hi < 0) throw ConfigError("n_range must be non-negative");
    n_min = static_cast<std::size_t>(lo);
    n_max = static_cast<std::size_t>(hi);
  } else if (key == "noise_range") {
    auto [lo, hi] = parse_int_range(key, value);
    if (lo < 0 || hi < 0) throw ConfigError("noise_range must be non-negative");
    noise_min = static_cast<std::size_t>(lo);
    noise_max = static_cast<std::size_t>(hi);
  } else if (key == "vocab_size") {
    vocab_size = parse_uint(key, value);
  } else if (key == "cue_style") {
    if (value == "ordinal") {
      cue_style = CueStyle::ordinal;
    } else if (value == "chain") {
      cue_style = CueStyle::chain;
    } else {
      throw ConfigError("cue_style must be 'ordinal' or 'chain', got '" + value + "'");
    }
  } else if (key == "seed") {
    seed = parse_uint(key, value);
  } else {
    return false;
  }
  return true;
}

namespace {

TokenId draw_from(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<TokenId>(lo + rng.below(hi - lo));
}

Paragraph ordinal_paragraph(const SynthConfig& cfg, std::size_t n, Rng& rng) {
  Paragraph p;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence s;
    const std::size_t noise = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(cfg.noise_min), static_cast<std::int64_t>(cfg.noise_max)));
    for (std::size_t k = 0; k < noise; ++k) s.tokens.push_back(draw_from(rng, cfg.n_max, cfg.vocab_size));
    const auto at = static_cast<std::ptrdiff_t>(rng.below(s.tokens.size() + 1));
    s.tokens.insert(s.tokens.begin() + at, static_cast<TokenId>(i));
    p.sentences.push_back(std::move(s));
    p.gold_order.push_back(i);
  }
  return p;
}

Paragraph chain_paragraph(const SynthConfig& cfg, std::size_t n, Rng& rng) {
  const std::size_t bridge_end = 1 + (cfg.vocab_size - 1) / 2;
  // Distinct bridges via a partial Fisher-Yates over the bridge pool.
  std::vector<TokenId> pool;
  for (std::size_t t = 1; t < bridge_end; ++t) pool.push_back(static_cast<TokenId>(t));
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(rng.below(pool.size() - k));
    std::swap(pool[k], pool[j]);
  }
  Paragraph p;
  for (std::size_t i = 0; i < n; ++i) {
    Sentence s;
    s.tokens.push_back(i == 0 ? TokenId{0} : pool[i - 1]);
    const std::size_t noise = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(cfg.noise_min), static_cast<std::int64_t>(cfg.noise_max)));
    for (std::size_t k = 0; k < noise; ++k) s.tokens.push_back(draw_from(rng, bridge_end, cfg.vocab_size));
    if (i + 1 < n) s.tokens.push_back(pool[i]);
    p.sentences.push_back(std::move(s));
    p.gold_order.push_back(i);
  }
  return p;
}

}  // namespace

Corpus synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.name = cfg.cue_style == CueStyle::ordinal ? "synth-ordinal" : "synth-chain";
  corpus.paragraphs.reserve(cfg.paragraph_count);
  for (std::size_t k = 0; k < cfg.paragraph_count; ++k) {
    Rng rng(derive_seed(cfg.seed, 2 * k));
    const auto n = static_cast<std::size_t>(
        rng.between(static_cast<std::int64_t>(cfg.n_min), static_cast<std::int64_t>(cfg.n_max)));
    Paragraph ordered = cfg.cue_style == CueStyle::ordinal ? ordinal_paragraph(cfg, n, rng)
                                                           : chain_paragraph(cfg, n, rng);
    corpus.paragraphs.push_back(shuffle_paragraph(ordered, derive_seed(cfg.seed, 2 * k + 1)));
  }
  return corpus;
}

}  // namespace naon
