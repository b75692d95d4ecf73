#include "xvgc/encoder.hpp"

#include <cmath>
#include <string>

namespace xvgc {

void EncoderConfig::validate() const {
    if (patch_size == 0 || image_size % patch_size != 0)
        throw ConfigError("image size " + std::to_string(image_size) +
                          " not divisible by patch size " + std::to_string(patch_size));
    if (num_heads == 0 || model_dim % num_heads != 0)
        throw ConfigError("model_dim " + std::to_string(model_dim) +
                          " not divisible by num_heads " + std::to_string(num_heads));
    if (model_dim % 2 != 0) throw ConfigError("model_dim must be even for sinusoidal encoding");
    if (channels != 1 && channels != 3)
        throw ConfigError("channels must be 1 or 3, got " + std::to_string(channels));
}

TensorPtr patchify(const ImageTensor& image, std::size_t patch_size) {
    if (patch_size == 0 || image.height % patch_size != 0 || image.width % patch_size != 0)
        throw ConfigError("image " + std::to_string(image.height) + "x" +
                          std::to_string(image.width) + " not divisible by patch size " +
                          std::to_string(patch_size));
    const std::size_t gy = image.height / patch_size;
    const std::size_t gx = image.width / patch_size;
    const std::size_t pdim = patch_size * patch_size * image.channels;
    auto out = make_tensor(gy * gx, pdim);
    for (std::size_t py = 0; py < gy; ++py)
        for (std::size_t px = 0; px < gx; ++px) {
            const std::size_t row = py * gx + px;
            std::size_t k = 0;
            for (std::size_t y = 0; y < patch_size; ++y)
                for (std::size_t x = 0; x < patch_size; ++x)
                    for (std::size_t c = 0; c < image.channels; ++c)
                        out->at(row, k++) =
                            image.at(py * patch_size + y, px * patch_size + x, c);
        }
    return out;
}

TensorPtr positional_encoding(std::size_t num_positions, std::size_t dim) {
    if (dim % 2 != 0)
        throw ConfigError("positional encoding needs even dim, got " + std::to_string(dim));
    auto pe = make_tensor(num_positions, dim);
    for (std::size_t pos = 0; pos < num_positions; ++pos)
        for (std::size_t i = 0; i < dim / 2; ++i) {
            const double freq =
                std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
            const double angle = static_cast<double>(pos) / freq;
            pe->at(pos, 2 * i) = std::sin(angle);
            pe->at(pos, 2 * i + 1) = std::cos(angle);
        }
    return pe;
}

PatchSequence embed_patches(Tape& tape, const TensorPtr& patches, const TensorPtr& projection,
                            const TensorPtr& pe) {
    PatchSequence seq;
    seq.num_patches = patches->rows();
    seq.patch_dim = patches->cols();
    seq.embeddings = add(tape, matmul(tape, patches, projection), pe);
    return seq;
}

namespace {

TensorPtr detach_copy(const TensorPtr& t) {
    return tensor_from(t->rows(), t->cols(), t->data);
}

}  // namespace

TensorPtr multi_head_self_attention(Tape& tape, const TensorPtr& x, const TensorPtr& wq,
                                    const TensorPtr& wk, const TensorPtr& wv, const TensorPtr& wo,
                                    std::size_t num_heads, std::vector<TensorPtr>* maps) {
    const std::size_t dim = x->cols();
    if (num_heads == 0 || dim % num_heads != 0)
        throw ShapeError("attention width " + std::to_string(dim) + " not divisible by " +
                         std::to_string(num_heads) + " heads");
    const std::size_t dk = dim / num_heads;
    auto q = matmul(tape, x, wq);
    auto k = matmul(tape, x, wk);
    auto v = matmul(tape, x, wv);
    std::vector<TensorPtr> heads;
    heads.reserve(num_heads);
    for (std::size_t h = 0; h < num_heads; ++h) {
        auto qh = slice_cols(tape, q, h * dk, dk);
        auto kh = slice_cols(tape, k, h * dk, dk);
        auto vh = slice_cols(tape, v, h * dk, dk);
        auto scores = scale(tape, matmul(tape, qh, transpose(tape, kh)),
                            1.0 / std::sqrt(static_cast<double>(dk)));
        auto weights = softmax_rows(tape, scores);
        if (maps) maps->push_back(detach_copy(weights));
        heads.push_back(matmul(tape, weights, vh));
    }
    return matmul(tape, concat_cols(tape, heads), wo);
}

void register_encoder_params(ModelParams& params, const EncoderConfig& config, Rng& rng) {
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
    weight("enc.embed.proj", config.patch_dim(), d);
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::string p = "enc.layer" + std::to_string(l) + ".";
        ones_row(p + "ln1.g", d);
        zeros_row(p + "ln1.b", d);
        weight(p + "attn.wq", d, d);
        weight(p + "attn.wk", d, d);
        weight(p + "attn.wv", d, d);
        weight(p + "attn.wo", d, d);
        ones_row(p + "ln2.g", d);
        zeros_row(p + "ln2.b", d);
        weight(p + "ff.w1", d, config.ff_dim);
        zeros_row(p + "ff.b1", config.ff_dim);
        weight(p + "ff.w2", config.ff_dim, d);
        zeros_row(p + "ff.b2", d);
    }
}

EncoderOutput encode(Tape& tape, const ImageTensor& image, const EncoderConfig& config,
                     const ModelParams& params) {
    config.validate();
    auto patches = patchify(image, config.patch_size);
    auto pe = positional_encoding(patches->rows(), config.model_dim);
    auto seq = embed_patches(tape, patches, params.get("enc.embed.proj"), pe);

    EncoderOutput out;
    out.grid_side = config.grid_side();
    auto x = seq.embeddings;
    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const std::string p = "enc.layer" + std::to_string(l) + ".";
        std::vector<TensorPtr> layer_maps;
        auto normed = layernorm_rows(tape, x, params.get(p + "ln1.g"), params.get(p + "ln1.b"));
        auto attn = multi_head_self_attention(tape, normed, params.get(p + "attn.wq"),
                                              params.get(p + "attn.wk"), params.get(p + "attn.wv"),
                                              params.get(p + "attn.wo"), config.num_heads,
                                              &layer_maps);
        x = add(tape, x, attn);
        auto normed2 = layernorm_rows(tape, x, params.get(p + "ln2.g"), params.get(p + "ln2.b"));
        auto hidden = gelu(tape, add(tape, matmul(tape, normed2, params.get(p + "ff.w1")),
                                     params.get(p + "ff.b1")));
        auto ff = add(tape, matmul(tape, hidden, params.get(p + "ff.w2")),
                      params.get(p + "ff.b2"));
        x = add(tape, x, ff);
        out.attention_maps.push_back(std::move(layer_maps));
    }
    out.features = x;
    return out;
}

std::vector<std::vector<double>> attention_heatmap(const EncoderOutput& output, std::size_t layer,
                                                   std::size_t head, std::size_t query_patch) {
    if (layer >= output.attention_maps.size())
        throw IndexError("heatmap layer " + std::to_string(layer) + " out of " +
                         std::to_string(output.attention_maps.size()));
    if (head >= output.attention_maps[layer].size())
        throw IndexError("heatmap head " + std::to_string(head) + " out of " +
                         std::to_string(output.attention_maps[layer].size()));
    const auto& map = output.attention_maps[layer][head];
    if (query_patch >= map->rows())
        throw IndexError("heatmap query patch " + std::to_string(query_patch) + " out of " +
                         std::to_string(map->rows()));
    const std::size_t side = output.grid_side;
    std::vector<std::vector<double>> grid(side, std::vector<double>(side));
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j) grid[i][j] = map->at(query_patch, i * side + j);
    return grid;
}

}  // namespace xvgc
