#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace naon {

// One predicted order against its gold order, both indexed by position.
struct OrderPair {
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> gold;
};

// Fraction of positions whose predicted sentence is the gold sentence.
double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);

// Fraction of paragraphs predicted exactly.
double pmr(std::span<const OrderPair> batch);

// Inversions in `seq` by merge sort, O(N log N).
std::uint64_t count_inversions(std::span<const std::size_t> seq);

// Number of sentence pairs placed in the opposite relative order to gold.
std::uint64_t order_inversions(std::span<const std::size_t> predicted,
                               std::span<const std::size_t> gold);

// tau = 1 - 2 I / C(N, 2); 1.0 when N == 1.
double kendall_tau(std::span<const std::size_t> predicted, std::span<const std::size_t> gold);

// Fractions of paragraphs with the correct first and last sentence.
std::pair<double, double> head_tail_accuracy(std::span<const OrderPair> batch);

// Sentence-level repetition of one raw prediction: (N - distinct) / N.
double sentence_repetition_ratio(std::span<const std::size_t> predicted);

// PRR: percent of paragraphs with any repeated sentence.
// mSRR: mean sentence repetition ratio, in percent.
std::pair<double, double> repetition_ratios(std::span<const std::vector<std::size_t>> raw_predictions);

struct MetricReport {
  double acc = 0.0;
  double pmr = 0.0;
  double tau = 0.0;
  double head_acc = 0.0;
  double tail_acc = 0.0;
  double prr = 0.0;
  double msrr = 0.0;
  std::size_t paragraph_count = 0;

  // Single-line JSON object with exactly the field names above.
  std::string to_record() const;
  static MetricReport from_record(const std::string& line);
  // Human-readable aligned table.
  std::string to_table() const;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

// All metrics over a batch. Acc and tau are averaged per paragraph. The
// repetition ratios are measured on the predictions themselves, so they are
// zero whenever every prediction is a permutation.
MetricReport compute_report(std::span<const OrderPair> batch);

}  // namespace naon
