#pragma once

#include <cstddef>
#include <vector>

#include "xvgc/encoder.hpp"
#include "xvgc/params.hpp"
#include "xvgc/tensor.hpp"
#include "xvgc/tokenizer.hpp"

namespace xvgc {

struct DecoderConfig {
    std::size_t model_dim = 32;  // must equal the encoder width
    std::size_t num_heads = 2;
    std::size_t num_layers = 2;
    std::size_t ff_dim = 64;
    std::size_t vocab_size = 0;
    std::size_t max_len = 16;
    void validate() const;
};

struct DecoderOutput {
    TensorPtr logits;  // T x vocab_size
    std::vector<std::vector<TensorPtr>> self_maps;   // [layer][head], T x T
    std::vector<std::vector<TensorPtr>> cross_maps;  // [layer][head], T x N
};

// Causally masked multi-head self-attention; position t attends to 0..t.
TensorPtr causal_self_attention(Tape& tape, const TensorPtr& x, const TensorPtr& wq,
                                const TensorPtr& wk, const TensorPtr& wv, const TensorPtr& wo,
                                std::size_t num_heads, std::vector<TensorPtr>* maps = nullptr);

// Text queries over image keys/values; no mask, every image position visible.
TensorPtr cross_modal_attention(Tape& tape, const TensorPtr& text, const TensorPtr& image_features,
                                const TensorPtr& wq, const TensorPtr& wk, const TensorPtr& wv,
                                const TensorPtr& wo, std::size_t num_heads,
                                std::vector<TensorPtr>* maps = nullptr);

void register_decoder_params(ModelParams& params, const DecoderConfig& config, Rng& rng);

DecoderOutput decoder_forward(Tape& tape, const std::vector<int>& token_ids,
                              const TensorPtr& encoder_features, const DecoderConfig& config,
                              const ModelParams& params, bool collect_maps = false);

// Softmax of a single logits row.
std::vector<double> next_token_distribution(const TensorPtr& logits, std::size_t row);

// Greedy argmax decoding from [BOS] until EOS or max_len; ties break toward
// the lowest token id.
TokenSequence generate_greedy(const ImageTensor& image, const EncoderConfig& enc_config,
                              const DecoderConfig& dec_config, const ModelParams& params);

}  // namespace xvgc
