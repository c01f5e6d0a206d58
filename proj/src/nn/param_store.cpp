#include "snowfuse/nn/param_store.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>

#include "snowfuse/binary_io.hpp"
#include "snowfuse/error.hpp"

namespace snowfuse::nn {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'F', 'U', 'S', 'N', '1', 0, 0, 0};
constexpr const char* kMomentM = "@adam.m/";
constexpr const char* kMomentV = "@adam.v/";
constexpr const char* kStep = "@adam.step";
constexpr const char* kBuffer = "@buffer/";

bool starts_with(const std::string& s, const char* prefix) { return s.rfind(prefix, 0) == 0; }

bool same_bits(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

void write_record(binary::Writer& w, const std::string& name, const Shape& shape, std::span<const double> values) {
  w.u64(name.size());
  w.str(name);
  w.u64(shape.size());
  for (auto d : shape) w.u64(d);
  for (double v : values) w.f64(v);
}

}  // namespace

Tensor& ParamStore::add(const std::string& name, Shape shape) {
  if (name.empty() || name.front() == '@') throw ArgumentError("ParamStore: invalid parameter name '" + name + "'");
  if (params_.count(name)) throw ArgumentError("ParamStore: duplicate parameter '" + name + "'");
  return params_.emplace(name, Tensor::zeros(std::move(shape), true)).first->second;
}

Tensor& ParamStore::add_uniform(const std::string& name, Shape shape, std::size_t fan_in, SeededRng& rng) {
  auto& t = add(name, std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (auto& v : t.mutable_values()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor& ParamStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ArgumentError("ParamStore: unknown parameter '" + name + "'");
  return it->second;
}

void ParamStore::set_buffer(const std::string& name, std::vector<double> values) {
  buffers_.insert_or_assign(name, std::move(values));
}

const std::vector<double>& ParamStore::buffer(const std::string& name) const {
  auto it = buffers_.find(name);
  if (it == buffers_.end()) throw ArgumentError("ParamStore: unknown buffer '" + name + "'");
  return it->second;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  if (!(cfg.lr >= 0.0)) throw ArgumentError("adam_step: lr must be >= 0");
  ++adam_step_;
  const double t = static_cast<double>(adam_step_);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params_) {
    auto& mom = moments_[name];
    if (mom.m.size() != p.size()) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
    }
    auto values = p.mutable_values();
    auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double g = grad[i];
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
      const double mhat = mom.m[i] / c1;
      const double vhat = mom.v[i] / c2;
      values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::vector<std::uint8_t> ParamStore::encode() const {
  binary::Writer w;
  w.bytes(kMagic);
  const std::size_t count = params_.size() + 2 * moments_.size() + 1 + buffers_.size();
  w.u64(count);
  for (const auto& [name, t] : params_) write_record(w, name, t.shape(), t.values());
  for (const auto& [name, mom] : moments_) {
    const auto& shape = params_.at(name).shape();
    write_record(w, kMomentM + name, shape, mom.m);
    write_record(w, kMomentV + name, shape, mom.v);
  }
  const double step = static_cast<double>(adam_step_);
  write_record(w, kStep, {1}, std::span<const double>(&step, 1));
  for (const auto& [name, values] : buffers_) write_record(w, kBuffer + name, {values.size()}, values);
  return std::move(w.buffer());
}

ParamStore ParamStore::decode(std::span<const std::uint8_t> bytes, const std::string& source) {
  binary::Reader rd(bytes, source);
  auto magic = rd.take(kMagic.size(), "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin())) throw ParseError(source + ": bad magic, expected FUSN1");
  const auto count = rd.u64("record count");
  ParamStore store;
  std::map<std::string, std::pair<Shape, std::vector<double>>> pending_m, pending_v;
  for (std::uint64_t r = 0; r < count; ++r) {
    const std::string rec = "record " + std::to_string(r);
    const auto name_len = rd.u64(rec + " name length");
    if (name_len > rd.remaining()) throw ParseError(source + ": truncated while reading " + rec + " name");
    auto nb = rd.take(static_cast<std::size_t>(name_len), rec + " name");
    std::string name(nb.begin(), nb.end());
    const auto ndim = rd.u64(rec + " '" + name + "' rank");
    if (ndim > 16) throw ParseError(source + ": " + rec + " '" + name + "' has implausible rank");
    Shape shape;
    std::size_t n = 1;
    for (std::uint64_t d = 0; d < ndim; ++d) {
      shape.push_back(static_cast<std::size_t>(rd.u64(rec + " '" + name + "' shape")));
      n *= shape.back();
    }
    if (n * 8 > rd.remaining()) throw ParseError(source + ": truncated payload in " + rec + " '" + name + "'");
    std::vector<double> values(n);
    for (auto& v : values) v = rd.f64(rec + " payload");

    if (starts_with(name, kMomentM)) {
      pending_m[name.substr(std::strlen(kMomentM))] = {shape, std::move(values)};
    } else if (starts_with(name, kMomentV)) {
      pending_v[name.substr(std::strlen(kMomentV))] = {shape, std::move(values)};
    } else if (name == kStep) {
      if (values.size() != 1) throw ParseError(source + ": malformed " + std::string(kStep));
      store.adam_step_ = static_cast<std::uint64_t>(values[0]);
    } else if (starts_with(name, kBuffer)) {
      store.buffers_[name.substr(std::strlen(kBuffer))] = std::move(values);
    } else {
      auto& t = store.add(name, shape);
      std::copy(values.begin(), values.end(), t.mutable_values().begin());
    }
  }
  if (rd.remaining() != 0) throw ParseError(source + ": " + std::to_string(rd.remaining()) + " trailing bytes");
  for (auto& [name, mv] : pending_m) {
    if (!store.contains(name) || !pending_v.count(name) || mv.first != store.get(name).shape()) {
      throw ParseError(source + ": optimizer state for '" + name + "' does not match a parameter");
    }
    store.moments_[name] = {std::move(mv.second), std::move(pending_v[name].second)};
  }
  return store;
}

void ParamStore::save(const std::filesystem::path& path) const { binary::write_file(path, encode()); }

ParamStore ParamStore::load(const std::filesystem::path& path) {
  const auto bytes = binary::read_file(path);
  return decode(bytes, path.string());
}

bool ParamStore::bit_identical(const ParamStore& other) const {
  if (adam_step_ != other.adam_step_ || params_.size() != other.params_.size() ||
      moments_.size() != other.moments_.size() || buffers_.size() != other.buffers_.size()) {
    return false;
  }
  for (const auto& [name, t] : params_) {
    auto it = other.params_.find(name);
    if (it == other.params_.end() || it->second.shape() != t.shape() || !same_bits(t.values(), it->second.values())) {
      return false;
    }
  }
  for (const auto& [name, m] : moments_) {
    auto it = other.moments_.find(name);
    if (it == other.moments_.end() || !same_bits(m.m, it->second.m) || !same_bits(m.v, it->second.v)) return false;
  }
  for (const auto& [name, b] : buffers_) {
    auto it = other.buffers_.find(name);
    if (it == other.buffers_.end() || !same_bits(b, it->second)) return false;
  }
  return true;
}

ParamStore::ParamStore(const ParamStore& other)
    : moments_(other.moments_), buffers_(other.buffers_), adam_step_(other.adam_step_) {
  for (const auto& [name, t] : other.params_) params_.emplace(name, t.clone(true));
}

ParamStore& ParamStore::operator=(const ParamStore& other) {
  if (this != &other) {
    ParamStore tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

}  // namespace snowfuse::nn
