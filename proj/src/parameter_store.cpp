#include "naon/parameter_store.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "naon/error.hpp"
#include "naon/rng.hpp"

namespace naon {

Tensor& ParameterStore::add(const std::string& name, Shape shape) {
  if (contains(name)) throw ContractError("duplicate parameter name '" + name + "'");
  Tensor t(std::move(shape), 0.0);
  t.set_requires_grad(true);
  auto [it, inserted] = entries_.emplace(name, std::move(t));
  moments_[name] = Moments{std::vector<double>(it->second.size(), 0.0),
                           std::vector<double>(it->second.size(), 0.0)};
  return it->second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

ParameterStore::Moments& ParameterStore::moments(const std::string& name) {
  auto it = moments_.find(name);
  if (it == moments_.end()) throw ContractError("unknown parameter '" + name + "'");
  return it->second;
}

void ParameterStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (step_count_ != other.step_count_ || entries_.size() != other.entries_.size()) return false;
  auto it = other.entries_.begin();
  for (const auto& [name, t] : entries_) {
    if (name != it->first || !(t == it->second)) return false;
    ++it;
  }
  return true;
}

void init_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.storage()) v = rng.uniform(-limit, limit);
}

namespace {

constexpr std::array<char, 8> kMagic = {'N', 'A', 'O', 'N', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  template <typename U>
  void uint(U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) os_.put(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
  void f64(double value) { uint(std::bit_cast<std::uint64_t>(value)); }
  void bytes(const std::string& s) {
    uint(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  Reader(std::istream& is, std::string path) : is_(is), path_(std::move(path)) {}
  template <typename U>
  U uint() {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      const int c = is_.get();
      if (c == std::char_traits<char>::eof()) fail("truncated file");
      value |= static_cast<U>(static_cast<unsigned char>(c)) << (8 * i);
    }
    return value;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::string bytes(std::size_t limit) {
    const auto n = uint<std::uint32_t>();
    if (n > limit) fail("string length " + std::to_string(n) + " exceeds limit");
    std::string s(n, '\0');
    is_.read(s.data(), n);
    if (static_cast<std::size_t>(is_.gcount()) != n) fail("truncated file");
    return s;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw LoadError("checkpoint " + path_ + ": " + what);
  }

 private:
  std::istream& is_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParameterStore& store,
                     const std::string& metadata) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  Writer w(os);
  os.write(kMagic.data(), kMagic.size());
  w.uint(kVersion);
  w.uint(store.step_count());
  w.bytes(metadata);
  w.uint(static_cast<std::uint32_t>(store.size()));
  for (const auto& [name, t] : store) {
    w.bytes(name);
    w.uint(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t dim : t.shape()) w.uint(static_cast<std::uint64_t>(dim));
    for (double v : t.data()) w.f64(v);
  }
  if (!os) throw IoError("write failed for " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  Reader r(is, path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) r.fail("bad magic");
  const auto version = r.uint<std::uint32_t>();
  if (version != kVersion) r.fail("unsupported version " + std::to_string(version));

  LoadedCheckpoint out;
  out.params.set_step_count(r.uint<std::uint64_t>());
  out.metadata = r.bytes(1u << 20);
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t e = 0; e < count; ++e) {
    std::string name = r.bytes(4096);
    const auto rank = r.uint<std::uint32_t>();
    if (rank > 8) r.fail("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& dim : shape) dim = static_cast<std::size_t>(r.uint<std::uint64_t>());
    if (shape_size(shape) > (std::size_t{1} << 28)) r.fail("tensor '" + name + "' too large");
    if (out.params.contains(name)) r.fail("duplicate tensor '" + name + "'");
    Tensor& t = out.params.add(name, shape);
    for (double& v : t.storage()) v = r.f64();
  }
  if (is.peek() != std::char_traits<char>::eof()) r.fail("trailing bytes");
  return out;
}

}  // namespace naon
