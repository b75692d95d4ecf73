#include "xvgc/decoder.hpp"

#include <cmath>
#include <string>

namespace xvgc {

void DecoderConfig::validate() const {
    if (num_heads == 0 || model_dim % num_heads != 0)
        throw ConfigError("decoder model_dim " + std::to_string(model_dim) +
                          " not divisible by num_heads " + std::to_string(num_heads));
    if (model_dim % 2 != 0)
        throw ConfigError("decoder model_dim must be even for sinusoidal encoding");
    if (vocab_size < 4) throw ConfigError("vocab_size must cover the reserved ids");
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
}

namespace {

TensorPtr detach_copy(const TensorPtr& t) {
    return tensor_from(t->rows(), t->cols(), t->data);
}

TensorPtr attention_core(Tape& tape, const TensorPtr& queries, const TensorPtr& keys_values,
                         const TensorPtr& wq, const TensorPtr& wk, const TensorPtr& wv,
                         const TensorPtr& wo, std::size_t num_heads, bool causal,
                         std::vector<TensorPtr>* maps) {
    const std::size_t dim = queries->cols();
    if (keys_values->cols() != dim)
        throw ShapeError("attention widths differ: " + queries->shape_str() + " vs " +
                         keys_values->shape_str());
    if (num_heads == 0 || dim % num_heads != 0)
        throw ShapeError("attention width " + std::to_string(dim) + " not divisible by " +
                         std::to_string(num_heads) + " heads");
    const std::size_t dk = dim / num_heads;
    auto q = matmul(tape, queries, wq);
    auto k = matmul(tape, keys_values, wk);
    auto v = matmul(tape, keys_values, wv);
    std::vector<TensorPtr> heads;
    heads.reserve(num_heads);
    for (std::size_t h = 0; h < num_heads; ++h) {
        auto qh = slice_cols(tape, q, h * dk, dk);
        auto kh = slice_cols(tape, k, h * dk, dk);
        auto vh = slice_cols(tape, v, h * dk, dk);
        auto scores = scale(tape, matmul(tape, qh, transpose(tape, kh)),
                            1.0 / std::sqrt(static_cast<double>(dk)));
        auto weights = causal ? causal_softmax_rows(tape, scores) : softmax_rows(tape, scores);
        if (maps) maps->push_back(detach_copy(weights));
        heads.push_back(matmul(tape, weights, vh));
    }
    return matmul(tape, concat_cols(tape, heads), wo);
}

}  // namespace

TensorPtr causal_self_attention(Tape& tape, const TensorPtr& x, const TensorPtr& wq,
                                const TensorPtr& wk, const TensorPtr& wv, const TensorPtr& wo,
                                std::size_t num_heads, std::vector<TensorPtr>* maps) {
    return attention_core(tape, x, x, wq, wk, wv, wo, num_heads, true, maps);
}

TensorPtr cross_modal_attention(Tape& tape, const TensorPtr& text, const TensorPtr& image_features,
                                const TensorPtr& wq, const TensorPtr& wk, const TensorPtr& wv,
                                const TensorPtr& wo, std::size_t num_heads,
                                std::vector<TensorPtr>* maps) {
    return attention_core(tape, text, image_features, wq, wk, wv, wo, num_heads, false, maps);
}

void register_decoder_params(ModelParams& params, const DecoderConfig& config, Rng& rng) {
    config.validate();
    auto weight = [&](const std::string& name, std::size_t r, std::size_t c) {
        auto t = make_tensor(r, c);
        init_xavier(t, rng);
        params.add(name, t);
    };
    auto ones_row = [&](const std::string& name, std::size_t c) {
        auto t = make_tensor(1, c);
        t->data.assign(c, 1.0);
        params.add(name, t);
    };
    auto zeros_row = [&](const std::string& name, std::size_t c) {
        params.add(name, make_tensor(1, c));
    };

    const std::size_t d = config.model_dim;
    weight("dec.embed.tok", config.vocab_size, d);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::string p = "dec.layer" + std::to_string(l) + ".";
        ones_row(p + "ln1.g", d);
        zeros_row(p + "ln1.b", d);
        weight(p + "self.wq", d, d);
        weight(p + "self.wk", d, d);
        weight(p + "self.wv", d, d);
        weight(p + "self.wo", d, d);
        ones_row(p + "ln2.g", d);
        zeros_row(p + "ln2.b", d);
        weight(p + "cross.wq", d, d);
        weight(p + "cross.wk", d, d);
        weight(p + "cross.wv", d, d);
        weight(p + "cross.wo", d, d);
        ones_row(p + "ln3.g", d);
        zeros_row(p + "ln3.b", d);
        weight(p + "ff.w1", d, config.ff_dim);
        zeros_row(p + "ff.b1", config.ff_dim);
        weight(p + "ff.w2", config.ff_dim, d);
        zeros_row(p + "ff.b2", d);
    }
    weight("dec.head.w", d, config.vocab_size);
    zeros_row("dec.head.b", config.vocab_size);
}

DecoderOutput decoder_forward(Tape& tape, const std::vector<int>& token_ids,
                              const TensorPtr& encoder_features, const DecoderConfig& config,
                              const ModelParams& params, bool collect_maps) {
    config.validate();
    if (encoder_features->cols() != config.model_dim)
        throw ShapeError("encoder width " + std::to_string(encoder_features->cols()) +
                         " != decoder model_dim " + std::to_string(config.model_dim));
    for (int id : token_ids)
        if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size)
            throw IndexError("token id " + std::to_string(id) + " out of vocab " +
                             std::to_string(config.vocab_size));

    auto pe = positional_encoding(token_ids.size(), config.model_dim);
    auto x = add(tape, embed_rows(tape, params.get("dec.embed.tok"), token_ids), pe);

    DecoderOutput out;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::string p = "dec.layer" + std::to_string(l) + ".";
        std::vector<TensorPtr> self_maps, cross_maps;
        auto n1 = layernorm_rows(tape, x, params.get(p + "ln1.g"), params.get(p + "ln1.b"));
        auto self_out = causal_self_attention(
            tape, n1, params.get(p + "self.wq"), params.get(p + "self.wk"),
            params.get(p + "self.wv"), params.get(p + "self.wo"), config.num_heads,
            collect_maps ? &self_maps : nullptr);
        x = add(tape, x, self_out);

        auto n2 = layernorm_rows(tape, x, params.get(p + "ln2.g"), params.get(p + "ln2.b"));
        auto cross_out = cross_modal_attention(
            tape, n2, encoder_features, params.get(p + "cross.wq"), params.get(p + "cross.wk"),
            params.get(p + "cross.wv"), params.get(p + "cross.wo"), config.num_heads,
            collect_maps ? &cross_maps : nullptr);
        x = add(tape, x, cross_out);

        auto n3 = layernorm_rows(tape, x, params.get(p + "ln3.g"), params.get(p + "ln3.b"));
        auto hidden = gelu(tape, add(tape, matmul(tape, n3, params.get(p + "ff.w1")),
                                     params.get(p + "ff.b1")));
        auto ff = add(tape, matmul(tape, hidden, params.get(p + "ff.w2")),
                      params.get(p + "ff.b2"));
        x = add(tape, x, ff);

        if (collect_maps) {
            out.self_maps.push_back(std::move(self_maps));
            out.cross_maps.push_back(std::move(cross_maps));
        }
    }
    out.logits = add(tape, matmul(tape, x, params.get("dec.head.w")), params.get("dec.head.b"));
    return out;
}

std::vector<double> next_token_distribution(const TensorPtr& logits, std::size_t row) {
    if (row >= logits->rows())
        throw IndexError("logits row " + std::to_string(row) + " out of " +
                         std::to_string(logits->rows()));
    Tape tape;
    tape.recording = false;
    auto r = tensor_from(1, logits->cols(),
                         std::vector<double>(logits->data.begin() + row * logits->cols(),
                                             logits->data.begin() + (row + 1) * logits->cols()));
    auto sm = softmax_rows(tape, r);
    return sm->data;
}

TokenSequence generate_greedy(const ImageTensor& image, const EncoderConfig& enc_config,
                              const DecoderConfig& dec_config, const ModelParams& params) {
    Tape tape;
    tape.recording = false;
    auto enc = encode(tape, image, enc_config, params);

    TokenSequence seq;
    seq.max_len = dec_config.max_len;
    seq.ids.push_back(Vocabulary::kBos);
    while (seq.ids.size() < dec_config.max_len) {
        auto dec = decoder_forward(tape, seq.ids, enc.features, dec_config, params);
        const std::size_t last = dec.logits->rows() - 1;
        int best = 0;
        double best_val = dec.logits->at(last, 0);
        for (std::size_t j = 1; j < dec.logits->cols(); ++j)
            if (dec.logits->at(last, j) > best_val) {
                best_val = dec.logits->at(last, j);
                best = static_cast<int>(j);
            }
        seq.ids.push_back(best);
        if (best == Vocabulary::kEos) break;
    }
    return seq;
}

}  // namespace xvgc
