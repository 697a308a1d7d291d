#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "naon/config.hpp"
#include "naon/parameter_store.hpp"
#include "naon/tape.hpp"

namespace naon {

// Which sentence representation the pointer compares positions against.
enum class PointerSource { basic, contextual };

struct ModelConfig {
  std::size_t vocab_size = 512;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t encoder_blocks = 2;
  std::size_t decoder_blocks = 2;
  std::size_t ffn_dim = 128;
  PointerSource pointer_source = PointerSource::basic;

  std::size_t head_dim() const { return d_model / heads; }

  // Throws ConfigError.
  void validate() const;
  // Consumes recognised keys; returns false for keys it does not own.
  bool apply(const std::string& key, const std::string& value);
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Mode { train, eval };

// Everything one forward pass needs: the tape to record on, the parameters,
// and the dropout state. Dropout draws come from `rng` in train mode only.
struct ForwardPass {
  Tape& tape;
  ParameterStore& params;
  const ModelConfig& config;
  Mode mode = Mode::eval;
  double dropout = 0.0;
  Rng* rng = nullptr;

  Var param(const std::string& name) { return tape.param(params.get(name)); }
  Var drop(Var x);
};

// Allocates and initializes every parameter for `config` from `seed`.
ParameterStore create_parameters(const ModelConfig& config, std::uint64_t seed);

// Throws LoadError unless `params` holds exactly the tensors `config` needs.
void check_parameters(const ModelConfig& config, const ParameterStore& params);

// A configuration plus its parameters.
class Model {
 public:
  Model(ModelConfig config, std::uint64_t seed);
  Model(ModelConfig config, ParameterStore params);

  static Model load(const std::filesystem::path& checkpoint);
  void save(const std::filesystem::path& checkpoint) const;

  const ModelConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return params_; }
  const ParameterStore& params() const noexcept { return params_; }

 private:
  ModelConfig config_;
  ParameterStore params_;
};

}  // namespace naon
