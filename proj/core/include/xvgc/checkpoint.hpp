#pragma once

#include <filesystem>

#include "xvgc/decoder.hpp"
#include "xvgc/encoder.hpp"
#include "xvgc/params.hpp"
#include "xvgc/tokenizer.hpp"

namespace xvgc {

// Versioned binary container: magic "XVGC", u32 version, configs,
// vocabulary, then length-prefixed (name, shape, f64 data) records.
// All integers and doubles little-endian. Round trips bitwise.
struct Checkpoint {
    EncoderConfig encoder;
    DecoderConfig decoder;
    Vocabulary vocab;
    ModelParams params;

    static constexpr std::uint32_t kVersion = 1;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xvgc
