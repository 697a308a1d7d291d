#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "naon/tensor.hpp"

namespace naon {

class Rng;

// Named trainable tensors plus Adam moment buffers.
//
// Iteration order is lexicographic by name, which fixes the order of every
// reduction over parameters (gradient norms, checkpoint layout).
class ParameterStore {
 public:
  struct Moments {
    std::vector<double> first;
    std::vector<double> second;
  };

  // Throws ContractError if the name is taken.
  Tensor& add(const std::string& name, Shape shape);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  Moments& moments(const std::string& name);

  std::uint64_t step_count() const noexcept { return step_count_; }
  void increment_step() noexcept { ++step_count_; }
  void set_step_count(std::uint64_t steps) noexcept { step_count_ = steps; }

  void zero_grad();
  // Parameters and step counts equal; gradients and moments ignored.
  bool same_values(const ParameterStore& other) const;

 private:
  std::map<std::string, Tensor> entries_;
  std::map<std::string, Moments> moments_;
  std::uint64_t step_count_ = 0;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void init_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Binary checkpoint container; layout documented in docs/formats.md.
// `metadata` is an opaque UTF-8 block (the model configuration).
void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::string& metadata);

struct LoadedCheckpoint {
  ParameterStore params;
  std::string metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace naon
