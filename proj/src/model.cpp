#include "naon/model.hpp"

#include <sstream>

#include "naon/error.hpp"
#include "naon/rng.hpp"

namespace naon {

void ModelConfig::validate() const {
  if (vocab_size == 0) throw ConfigError("vocab_size must be positive");
  if (d_model == 0 || heads == 0) throw ConfigError("d_model and heads must be positive");
  if (d_model % heads != 0) {
    throw ConfigError("d_model " + std::to_string(d_model) + " is not divisible by heads " +
                      std::to_string(heads));
  }
  if (d_model % 2 != 0) throw ConfigError("d_model must be even for sinusoidal position codes");
  if (ffn_dim == 0) throw ConfigError("ffn_dim must be positive");
}

bool ModelConfig::apply(const std::string& key, const std::string& value) {
  if (key == "vocab_size") {
    vocab_size = parse_uint(key, value);
  } else if (key == "d_model") {
    d_model = parse_uint(key, value);
  } else if (key == "heads") {
    heads = parse_uint(key, value);
  } else if (key == "encoder_blocks") {
    encoder_blocks = parse_uint(key, value);
  } else if (key == "decoder_blocks") {
    decoder_blocks = parse_uint(key, value);
  } else if (key == "ffn_dim") {
    ffn_dim = parse_uint(key, value);
  } else if (key == "pointer_source") {
    if (value == "basic") {
      pointer_source = PointerSource::basic;
    } else if (value == "contextual") {
      pointer_source = PointerSource::contextual;
    } else {
      throw ConfigError("pointer_source must be 'basic' or 'contextual', got '" + value + "'");
    }
  } else {
    return false;
  }
  return true;
}

std::string ModelConfig::to_text() const {
  std::ostringstream os;
  os << "vocab_size = " << vocab_size << "\n"
     << "d_model = " << d_model << "\n"
     << "heads = " << heads << "\n"
     << "encoder_blocks = " << encoder_blocks << "\n"
     << "decoder_blocks = " << decoder_blocks << "\n"
     << "ffn_dim = " << ffn_dim << "\n"
     << "pointer_source = " << (pointer_source == PointerSource::basic ? "basic" : "contextual")
     << "\n";
  return os.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig cfg;
  const KeyValues kv = KeyValues::parse(text);
  for (const auto& e : kv.entries()) {
    if (!cfg.apply(e.key, e.value)) throw ConfigError("unknown model key '" + e.key + "'");
  }
  cfg.validate();
  return cfg;
}

Var ForwardPass::drop(Var x) {
  if (mode != Mode::train || dropout <= 0.0) return x;
  if (!rng) throw ContractError("train-mode forward pass needs a generator for dropout");
  return naon::dropout(x, this->dropout, true, *rng);
}

namespace {

enum class Init { glorot, zeros, ones };

struct ParamSpec {
  std::string name;
  Shape shape;
  Init init;
};

void add_attention(std::vector<ParamSpec>& out, const std::string& prefix, const ModelConfig& c) {
  const std::size_t d = c.d_model, dk = c.head_dim();
  for (std::size_t h = 0; h < c.heads; ++h) {
    const std::string head = prefix + ".head" + std::to_string(h);
    out.push_back({head + ".query", {d, dk}, Init::glorot});
    out.push_back({head + ".key", {d, dk}, Init::glorot});
    out.push_back({head + ".value", {d, dk}, Init::glorot});
  }
  out.push_back({prefix + ".output", {d, d}, Init::glorot});
}

void add_norm(std::vector<ParamSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gain", {1, d}, Init::ones});
  out.push_back({prefix + ".bias", {1, d}, Init::zeros});
}

std::vector<ParamSpec> parameter_specs(const ModelConfig& c) {
  const std::size_t d = c.d_model;
  std::vector<ParamSpec> out;
  out.push_back({"embed.table", {c.vocab_size, d}, Init::glorot});
  out.push_back({"embed.proj.weight", {d, d}, Init::glorot});
  out.push_back({"embed.proj.bias", {1, d}, Init::zeros});
  for (std::size_t b = 0; b < c.encoder_blocks; ++b) {
    const std::string p = "enc." + std::to_string(b);
    add_attention(out, p + ".attn", c);
    add_norm(out, p + ".norm1", d);
    out.push_back({p + ".ffn.w1", {d, c.ffn_dim}, Init::glorot});
    out.push_back({p + ".ffn.b1", {1, c.ffn_dim}, Init::zeros});
    out.push_back({p + ".ffn.w2", {c.ffn_dim, d}, Init::glorot});
    out.push_back({p + ".ffn.b2", {1, d}, Init::zeros});
    add_norm(out, p + ".norm2", d);
  }
  for (std::size_t b = 0; b < c.decoder_blocks; ++b) {
    const std::string p = "dec." + std::to_string(b);
    add_attention(out, p + ".self", c);
    add_norm(out, p + ".norm1", d);
    add_norm(out, p + ".norm2", d);
  }
  out.push_back({"pointer.wp", {d, d}, Init::glorot});
  out.push_back({"pointer.wb", {d, d}, Init::glorot});
  out.push_back({"pointer.u", {d, 1}, Init::glorot});
  return out;
}

}  // namespace

ParameterStore create_parameters(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ParameterStore store;
  Rng rng(seed);
  for (const auto& spec : parameter_specs(config)) {
    Tensor& t = store.add(spec.name, spec.shape);
    switch (spec.init) {
      case Init::glorot:
        init_uniform(t, spec.shape[0], spec.shape[1], rng);
        break;
      case Init::ones:
        for (double& v : t.storage()) v = 1.0;
        break;
      case Init::zeros:
        break;
    }
  }
  return store;
}

void check_parameters(const ModelConfig& config, const ParameterStore& params) {
  const auto specs = parameter_specs(config);
  if (specs.size() != params.size()) {
    throw LoadError("checkpoint holds " + std::to_string(params.size()) + " tensors, model needs " +
                    std::to_string(specs.size()));
  }
  for (const auto& spec : specs) {
    if (!params.contains(spec.name)) throw LoadError("checkpoint lacks tensor '" + spec.name + "'");
    const Tensor& t = params.get(spec.name);
    if (t.shape() != spec.shape) {
      throw LoadError("tensor '" + spec.name + "' has shape " + shape_string(t.shape()) +
                      ", model needs " + shape_string(spec.shape));
    }
  }
}

Model::Model(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), params_(create_parameters(config_, seed)) {}

Model::Model(ModelConfig config, ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  check_parameters(config_, params_);
}

Model Model::load(const std::filesystem::path& checkpoint) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint);
  ModelConfig config;
  try {
    config = ModelConfig::from_text(loaded.metadata);
  } catch (const std::exception& e) {
    throw LoadError("checkpoint " + checkpoint.string() + ": bad model metadata: " + e.what());
  }
  return Model(std::move(config), std::move(loaded.params));
}

void Model::save(const std::filesystem::path& checkpoint) const {
  save_checkpoint(checkpoint, params_, config_.to_text());
}

}  // namespace naon
