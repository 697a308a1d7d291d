#include "naon/paragraph.hpp"

#include <string>

#include "naon/error.hpp"

namespace naon {

std::vector<Sentence> Paragraph::ordered() const {
  std::vector<Sentence> out;
  out.reserve(gold_order.size());
  for (std::size_t idx : gold_order) out.push_back(sentences.at(idx));
  return out;
}

bool is_permutation_of_n(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t v : order) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

void require_permutation(std::span<const std::size_t> order, std::size_t n) {
  if (!is_permutation_of_n(order, n)) {
    throw InputError("order of length " + std::to_string(order.size()) +
                     " is not a permutation of 0.." + std::to_string(n == 0 ? 0 : n - 1));
  }
}

void validate_paragraph(const Paragraph& p, std::size_t vocab_size) {
  if (p.sentences.empty()) throw InputError("paragraph has no sentences");
  for (std::size_t i = 0; i < p.sentences.size(); ++i) {
    const auto& toks = p.sentences[i].tokens;
    if (toks.empty()) throw InputError("sentence " + std::to_string(i) + " is empty");
    if (vocab_size == 0) continue;
    for (TokenId t : toks) {
      if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
        throw InputError("sentence " + std::to_string(i) + ": token id " + std::to_string(t) +
                         " outside vocabulary of size " + std::to_string(vocab_size));
      }
    }
  }
  if (!is_permutation_of_n(p.gold_order, p.sentences.size())) {
    throw InputError("gold_order is not a permutation");
  }
}

}  // namespace naon
