#include "xvgc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace xvgc {

std::string Tensor::shape_str() const {
    std::ostringstream out;
    out << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << "x";
        out << shape[i];
    }
    out << "]";
    return out.str();
}

TensorPtr make_tensor(std::size_t rows, std::size_t cols, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->shape = {rows, cols};
    t->data.assign(rows * cols, 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr tensor_from(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
    if (values.size() != rows * cols)
        throw ShapeError("tensor_from: " + std::to_string(values.size()) + " values for " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    auto t = std::make_shared<Tensor>();
    t->shape = {rows, cols};
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr identity(std::size_t n) {
    auto t = make_tensor(n, n);
    for (std::size_t i = 0; i < n; ++i) t->at(i, i) = 1.0;
    return t;
}

void Tape::record(std::vector<TensorPtr> inputs, TensorPtr output, std::function<void()> fn) {
    if (!recording) return;
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in->requires_grad;
    if (!needs) return;
    output->requires_grad = true;
    nodes_.push_back(Node{std::move(inputs), std::move(output), std::move(fn)});
}

TensorPtr matmul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    if (a->cols() != b->rows())
        throw ShapeError("matmul: inner dimensions disagree, " + a->shape_str() + " vs " +
                         b->shape_str());
    const std::size_t m = a->rows(), k = a->cols(), n = b->cols();
    auto out = make_tensor(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a->at(i, p);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out->at(i, j) += av * b->at(p, j);
        }
    }
    tape.record({a, b}, out, [a, b, out, m, k, n] {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += out->grad[i * n + j] * b->at(p, j);
                a->grad[i * k + p] += acc;
            }
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += a->at(i, p) * out->grad[i * n + j];
                b->grad[p * n + j] += acc;
            }
    });
    return out;
}

TensorPtr transpose(Tape& tape, const TensorPtr& a) {
    const std::size_t m = a->rows(), n = a->cols();
    auto out = make_tensor(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out->at(j, i) = a->at(i, j);
    tape.record({a}, out, [a, out, m, n] {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) a->grad[i * n + j] += out->grad[j * m + i];
    });
    return out;
}

TensorPtr elementwise(Tape& tape, const TensorPtr& a, const TensorPtr& b, Elementwise kind) {
    const bool same = a->rows() == b->rows() && a->cols() == b->cols();
    const bool rowcast = b->rows() == 1 && b->cols() == a->cols();
    if (!same && !rowcast)
        throw ShapeError("elementwise: incompatible shapes " + a->shape_str() + " vs " +
                         b->shape_str());
    const std::size_t m = a->rows(), n = a->cols();
    auto out = make_tensor(m, n);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double bv = same ? b->at(i, j) : b->at(0, j);
            switch (kind) {
                case Elementwise::Add: out->at(i, j) = a->at(i, j) + bv; break;
                case Elementwise::Sub: out->at(i, j) = a->at(i, j) - bv; break;
                case Elementwise::Mul: out->at(i, j) = a->at(i, j) * bv; break;
            }
        }
    tape.record({a, b}, out, [a, b, out, kind, same, m, n] {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double g = out->grad[i * n + j];
                const std::size_t bi = same ? i * n + j : j;
                switch (kind) {
                    case Elementwise::Add:
                        a->grad[i * n + j] += g;
                        b->grad[bi] += g;
                        break;
                    case Elementwise::Sub:
                        a->grad[i * n + j] += g;
                        b->grad[bi] -= g;
                        break;
                    case Elementwise::Mul:
                        a->grad[i * n + j] += g * (same ? b->at(i, j) : b->at(0, j));
                        b->grad[bi] += g * a->at(i, j);
                        break;
                }
            }
    });
    return out;
}

TensorPtr add(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    return elementwise(tape, a, b, Elementwise::Add);
}
TensorPtr sub(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    return elementwise(tape, a, b, Elementwise::Sub);
}
TensorPtr mul(Tape& tape, const TensorPtr& a, const TensorPtr& b) {
    return elementwise(tape, a, b, Elementwise::Mul);
}

TensorPtr scale(Tape& tape, const TensorPtr& a, double factor) {
    auto out = make_tensor(a->rows(), a->cols());
    for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * factor;
    tape.record({a}, out, [a, out, factor] {
        for (std::size_t i = 0; i < a->size(); ++i) a->grad[i] += out->grad[i] * factor;
    });
    return out;
}

namespace {

// dSoftmax: dx = y * (dy - sum_j dy_j y_j) per row; rows with y == 0 (masked
// entries) get zero gradient from the same formula.
void softmax_backward_row(const double* y, const double* dy, double* dx, std::size_t n) {
    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
    for (std::size_t j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
}

}  // namespace

TensorPtr softmax_rows(Tape& tape, const TensorPtr& x) {
    const std::size_t m = x->rows(), n = x->cols();
    auto out = make_tensor(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, x->at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            out->at(i, j) = std::exp(x->at(i, j) - mx);
            sum += out->at(i, j);
        }
        for (std::size_t j = 0; j < n; ++j) out->at(i, j) /= sum;
    }
    tape.record({x}, out, [x, out, m, n] {
        for (std::size_t i = 0; i < m; ++i)
            softmax_backward_row(&out->data[i * n], &out->grad[i * n], &x->grad[i * n], n);
    });
    return out;
}

TensorPtr causal_softmax_rows(Tape& tape, const TensorPtr& x) {
    const std::size_t m = x->rows(), n = x->cols();
    auto out = make_tensor(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t lim = std::min(i + 1, n);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < lim; ++j) mx = std::max(mx, x->at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < lim; ++j) {
            out->at(i, j) = std::exp(x->at(i, j) - mx);
            sum += out->at(i, j);
        }
        for (std::size_t j = 0; j < lim; ++j) out->at(i, j) /= sum;
    }
    tape.record({x}, out, [x, out, m, n] {
        for (std::size_t i = 0; i < m; ++i)
            softmax_backward_row(&out->data[i * n], &out->grad[i * n], &x->grad[i * n], n);
    });
    return out;
}

TensorPtr layernorm_rows(Tape& tape, const TensorPtr& x, const TensorPtr& gain,
                         const TensorPtr& bias, double eps) {
    const std::size_t m = x->rows(), n = x->cols();
    if (gain->rows() != 1 || gain->cols() != n || bias->rows() != 1 || bias->cols() != n)
        throw ShapeError("layernorm: gain/bias must be 1x" + std::to_string(n));
    auto out = make_tensor(m, n);
    auto xhat = std::make_shared<std::vector<double>>(m * n);
    auto inv_sigma = std::make_shared<std::vector<double>>(m);
    for (std::size_t i = 0; i < m; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += x->at(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = x->at(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[i] = is;
        for (std::size_t j = 0; j < n; ++j) {
            (*xhat)[i * n + j] = (x->at(i, j) - mean) * is;
            out->at(i, j) = gain->at(0, j) * (*xhat)[i * n + j] + bias->at(0, j);
        }
    }
    tape.record({x, gain, bias}, out, [x, gain, bias, out, xhat, inv_sigma, m, n] {
        for (std::size_t i = 0; i < m; ++i) {
            double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double dy = out->grad[i * n + j];
                const double dxh = dy * gain->at(0, j);
                mean_dxhat += dxh;
                mean_dxhat_xhat += dxh * (*xhat)[i * n + j];
                gain->grad[j] += dy * (*xhat)[i * n + j];
                bias->grad[j] += dy;
            }
            mean_dxhat /= static_cast<double>(n);
            mean_dxhat_xhat /= static_cast<double>(n);
            for (std::size_t j = 0; j < n; ++j) {
                const double dxh = out->grad[i * n + j] * gain->at(0, j);
                x->grad[i * n + j] +=
                    (*inv_sigma)[i] * (dxh - mean_dxhat - (*xhat)[i * n + j] * mean_dxhat_xhat);
            }
        }
    });
    return out;
}

TensorPtr gelu(Tape& tape, const TensorPtr& x) {
    auto out = make_tensor(x->rows(), x->cols());
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    for (std::size_t i = 0; i < x->size(); ++i) {
        const double v = x->data[i];
        out->data[i] = 0.5 * v * (1.0 + std::erf(v * inv_sqrt2));
    }
    tape.record({x}, out, [x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) {
            const double v = x->data[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * v * v);
            x->grad[i] += out->grad[i] * (cdf + v * pdf);
        }
    });
    return out;
}

TensorPtr sum_all(Tape& tape, const TensorPtr& x) {
    auto out = make_tensor(1, 1);
    out->data[0] = std::accumulate(x->data.begin(), x->data.end(), 0.0);
    tape.record({x}, out, [x, out] {
        for (std::size_t i = 0; i < x->size(); ++i) x->grad[i] += out->grad[0];
    });
    return out;
}

TensorPtr slice_cols(Tape& tape, const TensorPtr& x, std::size_t start, std::size_t count) {
    if (start + count > x->cols())
        throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + count) + ") out of " + x->shape_str());
    const std::size_t m = x->rows(), n = x->cols();
    auto out = make_tensor(m, count);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < count; ++j) out->at(i, j) = x->at(i, start + j);
    tape.record({x}, out, [x, out, start, count, m, n] {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < count; ++j)
                x->grad[i * n + start + j] += out->grad[i * count + j];
    });
    return out;
}

TensorPtr concat_cols(Tape& tape, const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    const std::size_t m = parts[0]->rows();
    std::size_t total = 0;
    for (const auto& p : parts) {
        if (p->rows() != m) throw ShapeError("concat_cols: row counts differ");
        total += p->cols();
    }
    auto out = make_tensor(m, total);
    std::size_t off = 0;
    for (const auto& p : parts) {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < p->cols(); ++j) out->at(i, off + j) = p->at(i, j);
        off += p->cols();
    }
    std::vector<TensorPtr> inputs(parts);
    tape.record(inputs, out, [parts, out, m, total] {
        std::size_t off = 0;
        for (const auto& p : parts) {
            const std::size_t pc = p->cols();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < pc; ++j)
                    p->grad[i * pc + j] += out->grad[i * total + off + j];
            off += pc;
        }
    });
    return out;
}

TensorPtr embed_rows(Tape& tape, const TensorPtr& table, const std::vector<int>& ids) {
    const std::size_t n = table->cols();
    auto out = make_tensor(ids.size(), n);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table->rows())
            throw IndexError("embed_rows: id " + std::to_string(ids[i]) + " out of " +
                             std::to_string(table->rows()));
        for (std::size_t j = 0; j < n; ++j) out->at(i, j) = table->at(ids[i], j);
    }
    tape.record({table}, out, [table, out, ids, n] {
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < n; ++j)
                table->grad[static_cast<std::size_t>(ids[i]) * n + j] += out->grad[i * n + j];
    });
    return out;
}

TensorPtr cross_entropy(Tape& tape, const TensorPtr& logits, const std::vector<int>& targets,
                        int ignore_id) {
    const std::size_t t_len = logits->rows(), v = logits->cols();
    if (targets.size() != t_len)
        throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(t_len) + " logit rows");
    std::size_t active = 0;
    for (int id : targets) {
        if (id == ignore_id) continue;
        if (id < 0 || static_cast<std::size_t>(id) >= v)
            throw IndexError("cross_entropy: target " + std::to_string(id) + " out of vocab " +
                             std::to_string(v));
        ++active;
    }
    if (active == 0) throw ContractError("cross_entropy: all targets are the ignore id");

    auto probs = std::make_shared<std::vector<double>>(t_len * v);
    double loss = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < v; ++j) mx = std::max(mx, logits->at(t, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < v; ++j) {
            (*probs)[t * v + j] = std::exp(logits->at(t, j) - mx);
            sum += (*probs)[t * v + j];
        }
        const double log_sum = std::log(sum) + mx;
        for (std::size_t j = 0; j < v; ++j) (*probs)[t * v + j] /= sum;
        if (targets[t] != ignore_id)
            loss += log_sum - logits->at(t, static_cast<std::size_t>(targets[t]));
    }
    auto out = make_tensor(1, 1);
    out->data[0] = loss / static_cast<double>(active);
    tape.record({logits}, out, [logits, out, probs, targets, ignore_id, t_len, v,
                                active] {
        const double g = out->grad[0] / static_cast<double>(active);
        for (std::size_t t = 0; t < t_len; ++t) {
            if (targets[t] == ignore_id) continue;
            for (std::size_t j = 0; j < v; ++j) {
                double d = (*probs)[t * v + j];
                if (j == static_cast<std::size_t>(targets[t])) d -= 1.0;
                logits->grad[t * v + j] += g * d;
            }
        }
    });
    return out;
}

void backward(Tape& tape, const TensorPtr& loss) {
    if (loss->size() != 1) throw ContractError("backward: loss must be scalar, got " +
                                               loss->shape_str());
    for (const auto& node : tape.nodes()) {
        node.output->ensure_grad();
        for (const auto& in : node.inputs) in->ensure_grad();
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0;
    const auto& nodes = tape.nodes();
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) it->backward();
}

double finite_diff_check(const std::function<TensorPtr(Tape&)>& f,
                         const std::vector<TensorPtr>& params, double h) {
    for (const auto& p : params) p->zero_grad();
    Tape tape;
    auto loss = f(tape);
    backward(tape, loss);
    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        p->ensure_grad();
        analytic.push_back(p->grad);
    }

    auto eval = [&f] {
        Tape t;
        t.recording = false;
        return f(t)->data[0];
    };

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto& p = params[pi];
        for (std::size_t i = 0; i < p->size(); ++i) {
            const double orig = p->data[i];
            p->data[i] = orig + h;
            const double plus = eval();
            p->data[i] = orig - h;
            const double minus = eval();
            p->data[i] = orig;
            const double fd = (plus - minus) / (2.0 * h);
            const double ad = analytic[pi][i];
            const double rel = std::abs(fd - ad) / std::max({1.0, std::abs(fd), std::abs(ad)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace xvgc
