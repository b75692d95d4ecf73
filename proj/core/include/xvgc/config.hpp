#pragma once

#include <filesystem>

#include "xvgc/decoder.hpp"
#include "xvgc/encoder.hpp"
#include "xvgc/trainer.hpp"

namespace xvgc {

struct RunConfig {
    EncoderConfig encoder;
    DecoderConfig decoder;
    TrainConfig train;
};

// Flat "key = value" file with [encoder], [decoder], [train] sections and
// '#' comments. Unknown sections or keys are errors.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& text);

}  // namespace xvgc
