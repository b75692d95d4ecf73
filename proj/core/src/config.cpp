#include "xvgc/config.hpp"

#include <fstream>
#include <sstream>

namespace xvgc {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::size_t to_size(const std::string& v, const std::string& key) {
    try {
        return static_cast<std::size_t>(std::stoull(v));
    } catch (const std::exception&) {
        throw ConfigError("bad integer for " + key + ": " + v);
    }
}

double to_real(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw ConfigError("bad number for " + key + ": " + v);
    }
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            if (section != "encoder" && section != "decoder" && section != "train")
                throw ConfigError("unknown config section [" + section + "] at line " +
                                  std::to_string(lineno));
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key = value at line " + std::to_string(lineno));
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("key \"" + key + "\" outside any section at line " +
                              std::to_string(lineno));

        if (section == "encoder") {
            auto& e = cfg.encoder;
            if (key == "image_size") e.image_size = to_size(value, key);
            else if (key == "channels") e.channels = to_size(value, key);
            else if (key == "patch_size") e.patch_size = to_size(value, key);
            else if (key == "model_dim") e.model_dim = to_size(value, key);
            else if (key == "num_heads") e.num_heads = to_size(value, key);
            else if (key == "num_layers") e.num_layers = to_size(value, key);
            else if (key == "ff_dim") e.ff_dim = to_size(value, key);
            else throw ConfigError("unknown key \"" + key + "\" in [encoder]");
        } else if (section == "decoder") {
            auto& d = cfg.decoder;
            if (key == "model_dim") d.model_dim = to_size(value, key);
            else if (key == "num_heads") d.num_heads = to_size(value, key);
            else if (key == "num_layers") d.num_layers = to_size(value, key);
            else if (key == "ff_dim") d.ff_dim = to_size(value, key);
            else if (key == "max_len") d.max_len = to_size(value, key);
            else throw ConfigError("unknown key \"" + key + "\" in [decoder]");
        } else {
            auto& t = cfg.train;
            if (key == "epochs") t.epochs = to_size(value, key);
            else if (key == "learning_rate") t.learning_rate = to_real(value, key);
            else if (key == "adam_beta1") t.adam_beta1 = to_real(value, key);
            else if (key == "adam_beta2") t.adam_beta2 = to_real(value, key);
            else if (key == "adam_eps") t.adam_eps = to_real(value, key);
            else if (key == "batch_size") t.batch_size = to_size(value, key);
            else if (key == "seed") t.seed = to_size(value, key);
            else if (key == "grad_clip") t.grad_clip = to_real(value, key);
            else throw ConfigError("unknown key \"" + key + "\" in [train]");
        }
    }
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace xvgc
