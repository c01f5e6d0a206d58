#ifndef SNOWFUSE_NN_PARAM_STORE_HPP
#define SNOWFUSE_NN_PARAM_STORE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "snowfuse/nn/rng.hpp"
#include "snowfuse/nn/tensor.hpp"

namespace snowfuse::nn {

struct AdamMoments {
  std::vector<double> m;
  std::vector<double> v;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/**
 * Named trainable parameters, their Adam moments, and non-trainable
 * buffers (normalisation statistics, training cursor). Iteration is in
 * name order.
 */
class ParamStore {
 public:
  ParamStore() = default;
  /// Copies are deep: the copy owns fresh parameter tensors (gradients are not copied).
  ParamStore(const ParamStore& other);
  ParamStore& operator=(const ParamStore& other);
  ParamStore(ParamStore&&) noexcept = default;
  ParamStore& operator=(ParamStore&&) noexcept = default;

  /// Registers a zero-initialised parameter. Throws ArgumentError on duplicates.
  Tensor& add(const std::string& name, Shape shape);
  /// Registers a parameter initialised uniform in +-1/sqrt(fan_in).
  Tensor& add_uniform(const std::string& name, Shape shape, std::size_t fan_in, SeededRng& rng);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  const std::map<std::string, Tensor>& params() const { return params_; }

  void set_buffer(const std::string& name, std::vector<double> values);
  bool has_buffer(const std::string& name) const { return buffers_.count(name) != 0; }
  const std::vector<double>& buffer(const std::string& name) const;
  const std::map<std::string, std::vector<double>>& buffers() const { return buffers_; }

  std::size_t parameter_count() const;
  void zero_grad();

  /// Bias-corrected Adam update of every parameter from its gradient buffer.
  void adam_step(const AdamConfig& cfg);
  std::uint64_t adam_steps() const { return adam_step_; }
  const std::map<std::string, AdamMoments>& moments() const { return moments_; }

  /// FUSN1 checkpoint encoding (parameters, Adam state, buffers).
  std::vector<std::uint8_t> encode() const;
  static ParamStore decode(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");
  void save(const std::filesystem::path& path) const;
  static ParamStore load(const std::filesystem::path& path);

  /// Bitwise equality of values, moments, step count and buffers.
  bool bit_identical(const ParamStore& other) const;


 private:
  std::map<std::string, Tensor> params_;
  std::map<std::string, AdamMoments> moments_;
  std::map<std::string, std::vector<double>> buffers_;
  std::uint64_t adam_step_ = 0;
};

/// Free-function form used by the training loop.
inline void adam_step(ParamStore& store, const AdamConfig& cfg) { store.adam_step(cfg); }

}  // namespace snowfuse::nn

#endif  // SNOWFUSE_NN_PARAM_STORE_HPP
