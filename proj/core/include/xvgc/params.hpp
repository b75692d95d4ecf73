#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xvgc/tensor.hpp"

namespace xvgc {

// Named, ordered collection of all trainable tensors. Order is the
// registration order and is the checkpoint serialization order.
class ModelParams {
  public:
    TensorPtr add(const std::string& name, TensorPtr t);
    const TensorPtr& get(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) > 0; }

    const std::vector<std::pair<std::string, TensorPtr>>& ordered() const { return ordered_; }
    std::size_t count() const { return ordered_.size(); }
    std::size_t scalar_count() const;

    std::vector<TensorPtr> tensors() const;
    void zero_grads() const;

  private:
    std::vector<std::pair<std::string, TensorPtr>> ordered_;
    std::unordered_map<std::string, TensorPtr> by_name_;
};

// Deterministic seeded RNG for initialization and data shuffling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64();
    double uniform(double lo, double hi);
    std::size_t uniform_index(std::size_t n);  // [0, n)

  private:
    std::uint64_t state_;
};

// Xavier-uniform weight fill: U(-sqrt(6/(fan_in+fan_out)), +...).
void init_xavier(const TensorPtr& w, Rng& rng);

}  // namespace xvgc
