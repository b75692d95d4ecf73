#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "xvgc/errors.hpp"

namespace xvgc {

// Dense row-major tensor of doubles with an optional gradient slot.
// The autodiff core is 2-D; batching is expressed as leading rows.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until ensure_grad()

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    double& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() { grad.assign(data.size(), 0.0); }

    std::string shape_str() const;
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::size_t rows, std::size_t cols, bool requires_grad = false);
TensorPtr tensor_from(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr identity(std::size_t n);

// Records forward operations so backward() can replay them in reverse.
// A tape and the tensors it references are confined to one logical thread.
class Tape {
  public:
    struct Node {
        std::vector<TensorPtr> inputs;
        TensorPtr output;
        std::function<void()> backward;
    };

    bool recording = true;

    void record(std::vector<TensorPtr> inputs, TensorPtr output, std::function<void()> fn);
    const std::vector<Node>& nodes() const { return nodes_; }
    void clear() { nodes_.clear(); }

  private:
    std::vector<Node> nodes_;
};

enum class Elementwise { Add, Sub, Mul };

// Forward ops. Each records a backward rule on the tape when any input
// requires grad (directly or through an earlier recorded op).
TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose(Tape& tape, const TensorPtr& a);
TensorPtr elementwise(Tape& tape, const TensorPtr& a, const TensorPtr& b, Elementwise kind);
TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(Tape& tape, const TensorPtr& a, double factor);
TensorPtr softmax_rows(Tape& tape, const TensorPtr& x);
// Softmax over columns 0..row only; strictly-upper-triangular entries are
// excluded from the distribution and come out exactly zero.
TensorPtr causal_softmax_rows(Tape& tape, const TensorPtr& x);
TensorPtr layernorm_rows(Tape& tape, const TensorPtr& x, const TensorPtr& gain,
                         const TensorPtr& bias, double eps = 1e-5);
TensorPtr gelu(Tape& tape, const TensorPtr& x);
TensorPtr sum_all(Tape& tape, const TensorPtr& x);
TensorPtr slice_cols(Tape& tape, const TensorPtr& x, std::size_t start, std::size_t count);
TensorPtr concat_cols(Tape& tape, const std::vector<TensorPtr>& parts);
TensorPtr embed_rows(Tape& tape, const TensorPtr& table, const std::vector<int>& ids);
// Mean over non-ignored positions of -log softmax(logits)[target].
TensorPtr cross_entropy(Tape& tape, const TensorPtr& logits, const std::vector<int>& targets,
                        int ignore_id);

// Reverse pass from a scalar loss. Gradients accumulate; callers reset
// between steps.
void backward(Tape& tape, const TensorPtr& loss);

// Central-difference check of autodiff gradients for every entry of every
// parameter. Returns max of |fd - ad| / max(1, |fd|, |ad|).
double finite_diff_check(const std::function<TensorPtr(Tape&)>& f,
                         const std::vector<TensorPtr>& params, double h = 1e-4);

}  // namespace xvgc
