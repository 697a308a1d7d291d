#include "naon/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "naon/error.hpp"
#include "naon/paragraph.hpp"

namespace naon {

namespace {

void require_batch(std::span<const OrderPair> batch) {
  if (batch.empty()) throw InputError("metric batch is empty");
}

void require_same_length(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) {
    throw InputError("predicted order has " + std::to_string(a.size()) + " positions, gold has " +
                     std::to_string(b.size()));
  }
  if (a.empty()) throw InputError("orders are empty");
}

std::uint64_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& buf,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  require_same_length(predicted, gold);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hits += predicted[i] == gold[i];
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double pmr(std::span<const OrderPair> batch) {
  require_batch(batch);
  std::size_t exact = 0;
  for (const auto& p : batch) {
    require_same_length(p.predicted, p.gold);
    exact += p.predicted == p.gold;
  }
  return static_cast<double>(exact) / static_cast<double>(batch.size());
}

std::uint64_t count_inversions(std::span<const std::size_t> seq) {
  std::vector<std::size_t> v(seq.begin(), seq.end());
  std::vector<std::size_t> buf(v.size());
  return merge_count(v, buf, 0, v.size());
}

std::uint64_t order_inversions(std::span<const std::size_t> predicted,
                               std::span<const std::size_t> gold) {
  require_same_length(predicted, gold);
  const std::size_t n = gold.size();
  require_permutation(gold, n);
  require_permutation(predicted, n);
  // Gold position of every sentence, read along the predicted order.
  std::vector<std::size_t> gold_pos(n);
  for (std::size_t i = 0; i < n; ++i) gold_pos[gold[i]] = i;
  std::vector<std::size_t> seq(n);
  for (std::size_t i = 0; i < n; ++i) seq[i] = gold_pos[predicted[i]];
  return count_inversions(seq);
}

double kendall_tau(std::span<const std::size_t> predicted, std::span<const std::size_t> gold) {
  const std::uint64_t inv = order_inversions(predicted, gold);
  const std::size_t n = gold.size();
  if (n == 1) return 1.0;
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return 1.0 - 2.0 * static_cast<double>(inv) / pairs;
}

std::pair<double, double> head_tail_accuracy(std::span<const OrderPair> batch) {
  require_batch(batch);
  std::size_t head = 0, tail = 0;
  for (const auto& p : batch) {
    require_same_length(p.predicted, p.gold);
    head += p.predicted.front() == p.gold.front();
    tail += p.predicted.back() == p.gold.back();
  }
  const double n = static_cast<double>(batch.size());
  return {static_cast<double>(head) / n, static_cast<double>(tail) / n};
}

double sentence_repetition_ratio(std::span<const std::size_t> predicted) {
  if (predicted.empty()) throw InputError("prediction is empty");
  std::vector<std::size_t> sorted(predicted.begin(), predicted.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<std::size_t>(
      std::unique(sorted.begin(), sorted.end()) - sorted.begin());
  return static_cast<double>(predicted.size() - distinct) / static_cast<double>(predicted.size());
}

std::pair<double, double> repetition_ratios(std::span<const std::vector<std::size_t>> raw_predictions) {
  if (raw_predictions.empty()) throw InputError("metric batch is empty");
  std::size_t repeated = 0;
  double srr_total = 0.0;
  for (const auto& pred : raw_predictions) {
    const double srr = sentence_repetition_ratio(pred);
    repeated += srr > 0.0;
    srr_total += srr;
  }
  const double n = static_cast<double>(raw_predictions.size());
  return {100.0 * static_cast<double>(repeated) / n, 100.0 * srr_total / n};
}

MetricReport compute_report(std::span<const OrderPair> batch) {
  require_batch(batch);
  MetricReport r;
  r.paragraph_count = batch.size();
  std::vector<std::vector<std::size_t>> preds;
  preds.reserve(batch.size());
  double acc_total = 0.0, tau_total = 0.0;
  for (const auto& p : batch) {
    acc_total += accuracy(p.predicted, p.gold);
    preds.push_back(p.predicted);
  }
  r.acc = acc_total / static_cast<double>(batch.size());
  r.pmr = pmr(batch);
  std::tie(r.head_acc, r.tail_acc) = head_tail_accuracy(batch);
  std::tie(r.prr, r.msrr) = repetition_ratios(preds);
  // Raw predictions may repeat sentences: a pair of positions holding the
  // same sentence is neither concordant nor discordant, giving
  // (concordant - discordant) / C(N, 2), which is 1 - 2I / C(N, 2) for
  // permutations.
  for (const auto& p : batch) {
    const std::size_t n = p.gold.size();
    if (n == 1 || is_permutation_of_n(p.predicted, n)) {
      tau_total += kendall_tau(p.predicted, p.gold);
      continue;
    }
    std::vector<std::size_t> gold_pos(n);
    for (std::size_t i = 0; i < n; ++i) gold_pos[p.gold[i]] = i;
    std::int64_t balance = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const std::size_t ga = gold_pos.at(p.predicted[a]), gb = gold_pos.at(p.predicted[b]);
        balance += ga < gb ? 1 : (ga > gb ? -1 : 0);
      }
    }
    tau_total += static_cast<double>(balance) /
                 (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
  }
  r.tau = tau_total / static_cast<double>(batch.size());
  return r;
}

std::string MetricReport::to_record() const {
  nlohmann::ordered_json j;
  j["acc"] = acc;
  j["pmr"] = pmr;
  j["tau"] = tau;
  j["head_acc"] = head_acc;
  j["tail_acc"] = tail_acc;
  j["prr"] = prr;
  j["msrr"] = msrr;
  j["paragraph_count"] = paragraph_count;
  return j.dump();
}

MetricReport MetricReport::from_record(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  MetricReport r;
  r.acc = j.at("acc").get<double>();
  r.pmr = j.at("pmr").get<double>();
  r.tau = j.at("tau").get<double>();
  r.head_acc = j.at("head_acc").get<double>();
  r.tail_acc = j.at("tail_acc").get<double>();
  r.prr = j.at("prr").get<double>();
  r.msrr = j.at("msrr").get<double>();
  r.paragraph_count = j.at("paragraph_count").get<std::size_t>();
  return r;
}

std::string MetricReport::to_table() const {
  std::ostringstream os;
  char line[96];
  const std::pair<const char*, double> rows[] = {
      {"Acc", acc},           {"PMR", pmr},           {"tau", tau},
      {"Head Acc", head_acc}, {"Tail Acc", tail_acc}, {"PRR (%)", prr},
      {"mSRR (%)", msrr},
  };
  for (const auto& [name, value] : rows) {
    std::snprintf(line, sizeof(line), "%-12s %10.4f\n", name, value);
    os << line;
  }
  std::snprintf(line, sizeof(line), "%-12s %10zu\n", "Paragraphs", paragraph_count);
  os << line;
  return os.str();
}

}  // namespace naon
