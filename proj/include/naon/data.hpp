#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "naon/paragraph.hpp"

namespace naon {

enum class Split { train, valid, test };

struct Corpus {
  std::vector<Paragraph> paragraphs;
  std::string name;
  Split split = Split::train;

  std::size_t size() const noexcept { return paragraphs.size(); }
  // Largest token id plus one; 0 for an empty corpus.
  std::size_t token_bound() const;
};

// Newline-delimited tokens; a token's id is its 0-based line number.
class Vocabulary {
 public:
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::optional<TokenId> find(const std::string& token) const;
  // Falls back to "<unk>" when present; throws InputError otherwise.
  TokenId id_of(const std::string& token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// One JSONL record: {"sentences": [[int,...],...] | ["text",...], "gold_order": [int,...]}.
// Text sentences are whitespace-tokenized through `vocab`. When
// `require_gold` is false a missing gold_order yields an empty one.
// Throws ParseError naming `line_no`.
Paragraph parse_record(const std::string& line, std::size_t line_no, const Vocabulary* vocab,
                       bool require_gold = true);
std::string to_record(const Paragraph& p);

// Loads and validates a corpus; blank lines are skipped.
Corpus load_jsonl(const std::filesystem::path& path, const Vocabulary* vocab = nullptr,
                  Split split = Split::train);
void write_jsonl(const std::filesystem::path& path, const Corpus& corpus);

// Presents the sentences in a seeded uniformly random order and rewrites
// gold_order so that ordered() is unchanged.
Paragraph shuffle_paragraph(const Paragraph& p, std::uint64_t seed);

enum class CueStyle { ordinal, chain };

// Synthetic corpus parameters.
//
// Token layout, ordinal style: ids [0, n_max) are cues (the sentence at gold
// position i carries cue i); ids [n_max, vocab_size) are noise.
// Chain style: id 0 marks the first sentence; ids [1, 1 + (vocab_size-1)/2)
// are bridge tokens; the rest are noise. Sentence i ends with bridge t_i and
// sentence i+1 begins with it.
struct SynthConfig {
  std::size_t paragraph_count = 1000;
  std::size_t n_min = 3;
  std::size_t n_max = 8;
  std::size_t vocab_size = 64;
  CueStyle cue_style = CueStyle::ordinal;
  std::uint64_t seed = 0;
  std::size_t noise_min = 1;
  std::size_t noise_max = 3;

  void validate() const;
  bool apply(const std::string& key, const std::string& value);
};

Corpus synth_generate(const SynthConfig& cfg);

}  // namespace naon
