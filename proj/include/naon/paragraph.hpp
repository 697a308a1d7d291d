#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace naon {

using TokenId = std::int32_t;

struct Sentence {
  std::vector<TokenId> tokens;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

// Sentences in presentation (shuffled) order. gold_order[i] is the index of
// the sentence that belongs at position i.
struct Paragraph {
  std::vector<Sentence> sentences;
  std::vector<std::size_t> gold_order;

  std::size_t size() const noexcept { return sentences.size(); }
  // Sentences rearranged into gold order.
  std::vector<Sentence> ordered() const;

  friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

bool is_permutation_of_n(std::span<const std::size_t> order, std::size_t n);

// Throws InputError when order is not a bijection on 0..n-1.
void require_permutation(std::span<const std::size_t> order, std::size_t n);

// Checks N >= 1, nonempty sentences, valid gold order, and (when vocab_size
// is nonzero) token bounds. Throws InputError.
void validate_paragraph(const Paragraph& p, std::size_t vocab_size = 0);

}  // namespace naon
