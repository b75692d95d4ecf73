#include <benchmark/benchmark.h>

#include "xvgc/decoder.hpp"
#include "xvgc/encoder.hpp"
#include "xvgc/metrics.hpp"
#include "xvgc/tokenizer.hpp"

using namespace xvgc;

namespace {

ImageTensor bench_image(std::size_t side) {
    Rng rng(99);
    ImageTensor img;
    img.height = img.width = side;
    img.channels = 1;
    img.pixels.resize(side * side);
    for (auto& p : img.pixels) p = rng.uniform(0, 1);
    return img;
}

void BM_Matmul(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    auto a = make_tensor(n, n);
    auto b = make_tensor(n, n);
    for (auto& v : a->data) v = rng.uniform(-1, 1);
    for (auto& v : b->data) v = rng.uniform(-1, 1);
    Tape tape;
    tape.recording = false;
    for (auto _ : state) benchmark::DoNotOptimize(matmul(tape, a, b));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_EncoderForward(benchmark::State& state) {
    EncoderConfig cfg;
    ModelParams params;
    Rng rng(1);
    register_encoder_params(params, cfg, rng);
    auto img = bench_image(cfg.image_size);
    Tape tape;
    tape.recording = false;
    for (auto _ : state) benchmark::DoNotOptimize(encode(tape, img, cfg, params));
}
BENCHMARK(BM_EncoderForward);

void BM_GreedyDecode(benchmark::State& state) {
    EncoderConfig enc;
    DecoderConfig dec;
    dec.vocab_size = 24;
    dec.max_len = 16;
    ModelParams params;
    Rng rng(1);
    register_encoder_params(params, enc, rng);
    register_decoder_params(params, dec, rng);
    auto img = bench_image(enc.image_size);
    for (auto _ : state) benchmark::DoNotOptimize(generate_greedy(img, enc, dec, params));
}
BENCHMARK(BM_GreedyDecode);

void BM_CorpusBleu(benchmark::State& state) {
    const std::vector<std::string> words = {"heart", "lung", "normal", "clear", "no", "mass"};
    Rng rng(7);
    std::vector<TokenList> cands, refs;
    for (int i = 0; i < 64; ++i) {
        auto sentence = [&] {
            TokenList t;
            for (std::size_t k = 0, n = 4 + rng.uniform_index(8); k < n; ++k)
                t.push_back(words[rng.uniform_index(words.size())]);
            return t;
        };
        cands.push_back(sentence());
        refs.push_back(sentence());
    }
    for (auto _ : state) benchmark::DoNotOptimize(bleu(cands, refs, 4));
}
BENCHMARK(BM_CorpusBleu);

}  // namespace

BENCHMARK_MAIN();
