#pragma once

#include <cstddef>
#include <vector>

#include "xvgc/params.hpp"
#include "xvgc/tensor.hpp"

namespace xvgc {

// Raster image with pixel values normalized to [0,1], channel-interleaved
// row-major order.
struct ImageTensor {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;  // 1 or 3
    std::vector<double> pixels;

    double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return pixels[(y * width + x) * channels + c];
    }
    double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return pixels[(y * width + x) * channels + c];
    }
};

struct EncoderConfig {
    std::size_t image_size = 32;  // square input
    std::size_t channels = 1;
    std::size_t patch_size = 8;
    std::size_t model_dim = 32;
    std::size_t num_heads = 2;
    std::size_t num_layers = 2;
    std::size_t ff_dim = 64;

    std::size_t grid_side() const { return image_size / patch_size; }
    std::size_t num_patches() const { return grid_side() * grid_side(); }
    std::size_t patch_dim() const { return patch_size * patch_size * channels; }
    void validate() const;
};

struct EncoderOutput {
    TensorPtr features;  // num_patches x model_dim
    // attention_maps[layer][head]: num_patches x num_patches, rows sum to 1
    std::vector<std::vector<TensorPtr>> attention_maps;
    std::size_t grid_side = 0;
};

// Splits the image into patch_size x patch_size tiles, row-major over the
// grid; each row of the result is one flattened patch.
TensorPtr patchify(const ImageTensor& image, std::size_t patch_size);

// Sinusoidal encoding: PE(pos, 2i) = sin(pos / 10000^(2i/dim)),
// PE(pos, 2i+1) = cos(pos / 10000^(2i/dim)).
TensorPtr positional_encoding(std::size_t num_positions, std::size_t dim);

struct PatchSequence {
    std::size_t num_patches = 0;
    std::size_t patch_dim = 0;
    TensorPtr embeddings;  // num_patches x model_dim
};

PatchSequence embed_patches(Tape& tape, const TensorPtr& patches, const TensorPtr& projection,
                            const TensorPtr& pe);

// Scaled dot-product multi-head self-attention (heads concatenated then
// projected). Writes one attention map per head into `maps` when non-null.
TensorPtr multi_head_self_attention(Tape& tape, const TensorPtr& x, const TensorPtr& wq,
                                    const TensorPtr& wk, const TensorPtr& wv, const TensorPtr& wo,
                                    std::size_t num_heads, std::vector<TensorPtr>* maps = nullptr);

// Registers all encoder parameters for `config` under the "enc." prefix.
void register_encoder_params(ModelParams& params, const EncoderConfig& config, Rng& rng);

EncoderOutput encode(Tape& tape, const ImageTensor& image, const EncoderConfig& config,
                     const ModelParams& params);

// Query patch's attention row reshaped to the patch grid (side x side).
std::vector<std::vector<double>> attention_heatmap(const EncoderOutput& output, std::size_t layer,
                                                   std::size_t head, std::size_t query_patch);

}  // namespace xvgc
