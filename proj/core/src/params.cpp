#include "xvgc/params.hpp"

#include <cmath>

namespace xvgc {

TensorPtr ModelParams::add(const std::string& name, TensorPtr t) {
    if (by_name_.count(name)) throw CheckpointError("duplicate parameter name: " + name);
    t->requires_grad = true;
    ordered_.emplace_back(name, t);
    by_name_.emplace(name, t);
    return t;
}

const TensorPtr& ModelParams::get(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw CheckpointError("missing parameter: " + name);
    return it->second;
}

std::size_t ModelParams::scalar_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : ordered_) n += t->size();
    return n;
}

std::vector<TensorPtr> ModelParams::tensors() const {
    std::vector<TensorPtr> out;
    out.reserve(ordered_.size());
    for (const auto& [name, t] : ordered_) out.push_back(t);
    return out;
}

void ModelParams::zero_grads() const {
    for (const auto& [name, t] : ordered_) t->zero_grad();
}

// splitmix64; stdlib engines are not guaranteed bit-stable across platforms.
std::uint64_t Rng::next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

double Rng::uniform(double lo, double hi) {
    const double u = std::ldexp(static_cast<double>(next_u64() >> 11), -53);
    return lo + u * (hi - lo);
}

std::size_t Rng::uniform_index(std::size_t n) {
    return n ? static_cast<std::size_t>(next_u64() % n) : 0;
}

void init_xavier(const TensorPtr& w, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(w->rows() + w->cols()));
    for (auto& v : w->data) v = rng.uniform(-bound, bound);
}

}  // namespace xvgc
