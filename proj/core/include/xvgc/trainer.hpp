#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xvgc/decoder.hpp"
#include "xvgc/encoder.hpp"
#include "xvgc/params.hpp"

namespace xvgc {

struct TrainConfig {
    std::size_t epochs = 75;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 4;
    std::uint64_t seed = 1;
    double grad_clip = 0.0;  // 0 = off, otherwise max global L2 norm
    void validate() const;
};

// Per-parameter first/second moment estimates, aligned with the
// registration order of ModelParams.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::size_t t = 0;
};

AdamState make_adam_state(const ModelParams& params);

// Standard Adam with bias correction; reads grads from the parameter
// tensors. Optional global-norm clipping before the update.
void adam_step(const ModelParams& params, AdamState& state, const TrainConfig& config);

struct LossEntry {
    std::size_t epoch;
    std::size_t step;
    double loss;
};

struct TrainResult {
    std::vector<LossEntry> log;
    double final_loss = 0.0;
};

using TrainSample = std::pair<ImageTensor, TokenSequence>;

// Teacher-forced cross-entropy training over the joint encoder-decoder
// model. Shuffles per epoch with the seeded RNG; grads accumulate over
// batch_size samples per optimizer step.
TrainResult train(const std::vector<TrainSample>& dataset, const EncoderConfig& enc_config,
                  const DecoderConfig& dec_config, const TrainConfig& train_config,
                  ModelParams& params);

std::string loss_log_csv(const TrainResult& result);

}  // namespace xvgc
