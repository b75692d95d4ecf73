#pragma once

#include <stdexcept>
#include <string>

namespace xvgc {

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("configuration error: " + msg) {}
};

struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg) : std::runtime_error("contract error: " + msg) {}
};

struct IndexError : std::out_of_range {
    explicit IndexError(const std::string& msg) : std::out_of_range("index error: " + msg) {}
};

struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg) : std::runtime_error("checkpoint error: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error("training error: " + msg) {}
};

}  // namespace xvgc
