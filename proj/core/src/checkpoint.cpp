#include "xvgc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace xvgc {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; byte swapping not implemented");

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CheckpointError("integrity error: truncated checkpoint file");
    return v;
}
std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CheckpointError("integrity error: truncated checkpoint file");
    return v;
}
double get_f64(std::istream& in) {
    double v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw CheckpointError("integrity error: truncated checkpoint file");
    return v;
}
std::string get_string(std::istream& in) {
    const std::uint32_t len = get_u32(in);
    std::string s(len, '\0');
    if (!in.read(s.data(), len))
        throw CheckpointError("integrity error: truncated checkpoint file");
    return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());

    out.write("XVGC", 4);
    put_u32(out, Checkpoint::kVersion);

    const auto& e = ckpt.encoder;
    for (std::size_t v : {e.image_size, e.channels, e.patch_size, e.model_dim, e.num_heads,
                          e.num_layers, e.ff_dim})
        put_u64(out, v);
    const auto& d = ckpt.decoder;
    for (std::size_t v : {d.model_dim, d.num_heads, d.num_layers, d.ff_dim, d.vocab_size,
                          d.max_len})
        put_u64(out, v);

    put_u64(out, ckpt.vocab.size());
    for (const auto& tok : ckpt.vocab.tokens()) put_string(out, tok);

    put_u64(out, ckpt.params.count());
    for (const auto& [name, t] : ckpt.params.ordered()) {
        put_string(out, name);
        put_u32(out, static_cast<std::uint32_t>(t->shape.size()));
        for (std::size_t dim : t->shape) put_u64(out, dim);
        for (double v : t->data) put_f64(out, v);
    }
    if (!out) throw CheckpointError("write failure on " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot read checkpoint: " + path.string());

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "XVGC", 4) != 0)
        throw CheckpointError("not a checkpoint file (bad magic): " + path.string());
    const std::uint32_t version = get_u32(in);
    if (version != Checkpoint::kVersion)
        throw CheckpointError("version error: file version " + std::to_string(version) +
                              ", supported version " + std::to_string(Checkpoint::kVersion));

    Checkpoint ckpt;
    auto& e = ckpt.encoder;
    e.image_size = get_u64(in);
    e.channels = get_u64(in);
    e.patch_size = get_u64(in);
    e.model_dim = get_u64(in);
    e.num_heads = get_u64(in);
    e.num_layers = get_u64(in);
    e.ff_dim = get_u64(in);
    auto& d = ckpt.decoder;
    d.model_dim = get_u64(in);
    d.num_heads = get_u64(in);
    d.num_layers = get_u64(in);
    d.ff_dim = get_u64(in);
    d.vocab_size = get_u64(in);
    d.max_len = get_u64(in);

    const std::uint64_t vocab_size = get_u64(in);
    std::vector<std::string> tokens;
    tokens.reserve(vocab_size);
    for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(get_string(in));
    ckpt.vocab = Vocabulary(std::move(tokens));

    const std::uint64_t param_count = get_u64(in);
    for (std::uint64_t i = 0; i < param_count; ++i) {
        const std::string name = get_string(in);
        const std::uint32_t ndim = get_u32(in);
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint32_t k = 0; k < ndim; ++k) {
            shape.push_back(get_u64(in));
            total *= shape.back();
        }
        auto t = std::make_shared<Tensor>();
        t->shape = shape;
        t->data.resize(total);
        for (std::size_t k = 0; k < total; ++k) t->data[k] = get_f64(in);
        ckpt.params.add(name, t);
    }

    // Anything left over means the writer and reader disagree.
    char extra;
    if (in.read(&extra, 1))
        throw CheckpointError("integrity error: trailing bytes in " + path.string());
    return ckpt;
}

}  // namespace xvgc
