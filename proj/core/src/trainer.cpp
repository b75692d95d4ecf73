#include "xvgc/trainer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace xvgc {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (learning_rate < 0.0) throw ConfigError("learning_rate must be >= 0");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw ConfigError("adam betas must lie in (0,1)");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
}

AdamState make_adam_state(const ModelParams& params) {
    AdamState state;
    for (const auto& [name, t] : params.ordered()) {
        state.m.emplace_back(t->size(), 0.0);
        state.v.emplace_back(t->size(), 0.0);
    }
    return state;
}

void adam_step(const ModelParams& params, AdamState& state, const TrainConfig& config) {
    const auto& ordered = params.ordered();
    if (state.m.size() != ordered.size())
        throw ContractError("adam state does not match the parameter set");

    for (const auto& [name, t] : ordered) {
        t->ensure_grad();
        for (double g : t->grad)
            if (!std::isfinite(g)) throw TrainError("NaN/Inf gradient in parameter " + name);
    }

    if (config.grad_clip > 0.0) {
        double norm_sq = 0.0;
        for (const auto& [name, t] : ordered)
            for (double g : t->grad) norm_sq += g * g;
        const double norm = std::sqrt(norm_sq);
        if (norm > config.grad_clip) {
            const double s = config.grad_clip / norm;
            for (const auto& [name, t] : ordered)
                for (double& g : t->grad) g *= s;
        }
    }

    state.t += 1;
    const double b1 = config.adam_beta1, b2 = config.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t pi = 0; pi < ordered.size(); ++pi) {
        auto& t = ordered[pi].second;
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        for (std::size_t i = 0; i < t->size(); ++i) {
            const double g = t->grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            t->data[i] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps);
        }
    }
}

TrainResult train(const std::vector<TrainSample>& dataset, const EncoderConfig& enc_config,
                  const DecoderConfig& dec_config, const TrainConfig& train_config,
                  ModelParams& params) {
    train_config.validate();
    if (dataset.empty()) throw ConfigError("train: empty dataset");

    AdamState state = make_adam_state(params);
    Rng rng(train_config.seed);
    TrainResult result;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < train_config.epochs; ++epoch) {
        // Fisher-Yates with the deterministic RNG.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng.uniform_index(i)]);

        std::size_t in_batch = 0;
        double batch_loss = 0.0;
        params.zero_grads();
        for (std::size_t oi = 0; oi < order.size(); ++oi) {
            const auto& [image, seq] = dataset[order[oi]];
            if (seq.ids.size() < 2) throw ConfigError("train: caption shorter than [BOS, EOS]");

            // Teacher forcing: input is the BOS-prefixed prefix, targets the
            // sequence shifted left by one.
            std::vector<int> input(seq.ids.begin(), seq.ids.end() - 1);
            std::vector<int> targets(seq.ids.begin() + 1, seq.ids.end());

            Tape tape;
            auto enc = encode(tape, image, enc_config, params);
            auto dec = decoder_forward(tape, input, enc.features, dec_config, params);
            auto loss = cross_entropy(tape, dec.logits, targets, Vocabulary::kPad);
            backward(tape, loss);
            batch_loss += loss->data[0];
            ++in_batch;

            const bool last = oi + 1 == order.size();
            if (in_batch == train_config.batch_size || last) {
                // Average accumulated grads over the batch.
                if (in_batch > 1) {
                    const double s = 1.0 / static_cast<double>(in_batch);
                    for (const auto& [name, t] : params.ordered())
                        for (double& g : t->grad) g *= s;
                }
                adam_step(params, state, train_config);
                ++step;
                const double mean_loss = batch_loss / static_cast<double>(in_batch);
                result.log.push_back({epoch, step, mean_loss});
                result.final_loss = mean_loss;
                params.zero_grads();
                in_batch = 0;
                batch_loss = 0.0;
            }
        }
    }
    return result;
}

std::string loss_log_csv(const TrainResult& result) {
    std::ostringstream out;
    out.precision(17);
    out << "epoch,step,loss\n";
    for (const auto& e : result.log) out << e.epoch << "," << e.step << "," << e.loss << "\n";
    return out.str();
}

}  // namespace xvgc
