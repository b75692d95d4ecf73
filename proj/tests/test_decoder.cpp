#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "xvgc/decoder.hpp"

using namespace xvgc;

namespace {

struct Toy {
    EncoderConfig enc_cfg;
    DecoderConfig dec_cfg;
    ModelParams params;
    Rng rng{42};

    Toy(std::size_t vocab = 12, std::size_t dim = 8, std::size_t layers = 1) {
        enc_cfg.image_size = 8;
        enc_cfg.patch_size = 4;
        enc_cfg.model_dim = dim;
        enc_cfg.num_heads = 2;
        enc_cfg.num_layers = 1;
        enc_cfg.ff_dim = dim;
        dec_cfg.model_dim = dim;
        dec_cfg.num_heads = 2;
        dec_cfg.num_layers = layers;
        dec_cfg.ff_dim = dim;
        dec_cfg.vocab_size = vocab;
        dec_cfg.max_len = 8;
        register_encoder_params(params, enc_cfg, rng);
        register_decoder_params(params, dec_cfg, rng);
    }

    TensorPtr features(std::size_t n) {
        auto f = make_tensor(n, dec_cfg.model_dim);
        for (auto& v : f->data) v = rng.uniform(-1, 1);
        return f;
    }

    ImageTensor image() {
        ImageTensor img;
        img.height = img.width = 8;
        img.channels = 1;
        img.pixels.resize(64);
        for (auto& p : img.pixels) p = rng.uniform(0, 1);
        return img;
    }
};

}  // namespace

TEST_CASE("causal self-attention mask structure") {
    Toy toy;
    Tape tape;
    auto x = toy.features(5);
    const std::string p = "dec.layer0.";
    std::vector<TensorPtr> maps;
    auto out = causal_self_attention(tape, x, toy.params.get(p + "self.wq"),
                                     toy.params.get(p + "self.wk"), toy.params.get(p + "self.wv"),
                                     toy.params.get(p + "self.wo"), 2, &maps);
    CHECK(out->rows() == 5);
    for (const auto& m : maps)
        for (std::size_t i = 0; i < 5; ++i) {
            double sum = 0;
            for (std::size_t j = 0; j < 5; ++j) {
                if (j > i) CHECK(m->at(i, j) == 0.0);
                sum += m->at(i, j);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }

    SUBCASE("single token attends only to itself") {
        std::vector<TensorPtr> one;
        causal_self_attention(tape, toy.features(1), toy.params.get(p + "self.wq"),
                              toy.params.get(p + "self.wk"), toy.params.get(p + "self.wv"),
                              toy.params.get(p + "self.wo"), 2, &one);
        for (const auto& m : one) CHECK(m->data == std::vector<double>{1.0});
    }
}

TEST_CASE("cross-modal attention edge cases") {
    Toy toy;
    Tape tape;
    const std::string p = "dec.layer0.";
    auto wq = toy.params.get(p + "cross.wq");
    auto wk = toy.params.get(p + "cross.wk");
    auto wv = toy.params.get(p + "cross.wv");
    auto wo = toy.params.get(p + "cross.wo");

    SUBCASE("single image feature: every text row is its value projection") {
        auto text = toy.features(3);
        auto img = toy.features(1);
        std::vector<TensorPtr> maps;
        auto out = cross_modal_attention(tape, text, img, wq, wk, wv, wo, 2, &maps);
        for (const auto& m : maps)
            for (std::size_t i = 0; i < 3; ++i) CHECK(m->at(i, 0) == 1.0);
        auto vproj = matmul(tape, matmul(tape, img, wv), wo);
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t j = 0; j < 8; ++j)
                CHECK(out->at(i, j) == doctest::Approx(vproj->at(0, j)).epsilon(1e-12));
    }

    SUBCASE("identical image rows give uniform attention") {
        auto text = toy.features(2);
        auto img = make_tensor(4, 8);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 8; ++j) img->at(i, j) = 0.1 * static_cast<double>(j);
        std::vector<TensorPtr> maps;
        cross_modal_attention(tape, text, img, wq, wk, wv, wo, 2, &maps);
        for (const auto& m : maps)
            for (double v : m->data) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
    }

    SUBCASE("hand-computed weights at T = 1, N = 2, d_k = 1") {
        Tape t2;
        auto text = tensor_from(1, 1, {0.8});
        auto img = tensor_from(2, 1, {0.4, -1.2});
        auto one = [](double v) { return tensor_from(1, 1, {v}); };
        std::vector<TensorPtr> maps;
        cross_modal_attention(t2, text, img, one(1.3), one(-0.5), one(0.6), one(1.0), 1, &maps);
        const double q = 0.8 * 1.3;
        const double s0 = q * (0.4 * -0.5), s1 = q * (-1.2 * -0.5);
        const double e0 = std::exp(s0), e1 = std::exp(s1);
        CHECK(maps[0]->at(0, 0) == doctest::Approx(e0 / (e0 + e1)).epsilon(1e-12));
        CHECK(maps[0]->at(0, 1) == doctest::Approx(e1 / (e0 + e1)).epsilon(1e-12));
    }

    SUBCASE("width mismatch rejected") {
        auto text = toy.features(2);
        auto img = make_tensor(3, 6);
        CHECK_THROWS_AS(cross_modal_attention(tape, text, img, wq, wk, wv, wo, 2), ShapeError);
    }
}

TEST_CASE("decoder_forward shape and causality") {
    Toy toy;
    auto feats = toy.features(4);

    Tape tape;
    std::vector<int> ids = {1, 4, 5, 6, 7};
    auto out = decoder_forward(tape, ids, feats, toy.dec_cfg, toy.params);
    CHECK(out.logits->rows() == 5);
    CHECK(out.logits->cols() == 12);

    SUBCASE("logits at prefix positions ignore suffix changes") {
        std::vector<int> perturbed = {1, 4, 5, 9, 10};
        Tape t2;
        auto out2 = decoder_forward(t2, perturbed, feats, toy.dec_cfg, toy.params);
        for (std::size_t t = 0; t < 3; ++t)
            for (std::size_t j = 0; j < 12; ++j)
                CHECK(std::abs(out.logits->at(t, j) - out2.logits->at(t, j)) <= 1e-12);
    }

    SUBCASE("out-of-range token id rejected") {
        Tape t2;
        std::vector<int> bad = {1, 99};
        CHECK_THROWS_AS(decoder_forward(t2, bad, feats, toy.dec_cfg, toy.params), IndexError);
    }

    SUBCASE("cross-attention rows over image positions sum to 1") {
        Tape t2;
        auto out2 = decoder_forward(t2, ids, feats, toy.dec_cfg, toy.params, true);
        REQUIRE_FALSE(out2.cross_maps.empty());
        for (const auto& layer : out2.cross_maps)
            for (const auto& m : layer)
                for (std::size_t i = 0; i < m->rows(); ++i) {
                    double sum = 0;
                    for (std::size_t j = 0; j < m->cols(); ++j) sum += m->at(i, j);
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
                }
    }
}

TEST_CASE("decoder gradient check at toy dims") {
    Toy toy(8, 4, 1);
    auto feats = toy.features(3);
    std::vector<int> ids = {1, 4, 5};

    std::vector<TensorPtr> dec_params;
    for (const auto& [name, t] : toy.params.ordered())
        if (name.rfind("dec.", 0) == 0) dec_params.push_back(t);

    auto f = [&](Tape& t) {
        auto out = decoder_forward(t, ids, feats, toy.dec_cfg, toy.params);
        return sum_all(t, mul(t, out.logits, out.logits));
    };
    CHECK(finite_diff_check(f, dec_params) < 1e-5);
}

TEST_CASE("next_token_distribution") {
    auto logits = tensor_from(2, 3, {0, 0, 0, std::log(3.0), 0, 0});
    auto uniform = next_token_distribution(logits, 0);
    for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    auto skew = next_token_distribution(logits, 1);
    CHECK(skew[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(skew[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(skew[2] == doctest::Approx(0.2).epsilon(1e-12));

    auto dominant = tensor_from(1, 3, {50.0, 0.0, 0.0});
    auto d = next_token_distribution(dominant, 0);
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-12));

    double sum = 0;
    for (double p : skew) sum += p;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("generate_greedy contracts") {
    SUBCASE("rigged EOS wins immediately") {
        Toy toy;
        // Zero everything, then bias the head so EOS always has max logit.
        for (const auto& [name, t] : toy.params.ordered())
            if (name.rfind("dec.", 0) == 0 && name.find("ln") == std::string::npos)
                for (auto& v : t->data) v = 0.0;
        toy.params.get("dec.head.b")->at(0, Vocabulary::kEos) = 5.0;
        auto seq = generate_greedy(toy.image(), toy.enc_cfg, toy.dec_cfg, toy.params);
        CHECK(seq.ids == std::vector<int>{Vocabulary::kBos, Vocabulary::kEos});
    }

    SUBCASE("max_len cap with EOS suppressed") {
        Toy toy;
        toy.dec_cfg.max_len = 5;
        toy.params.get("dec.head.b")->at(0, Vocabulary::kEos) = -1e6;
        auto seq = generate_greedy(toy.image(), toy.enc_cfg, toy.dec_cfg, toy.params);
        CHECK(seq.ids.size() == 5);
        for (std::size_t i = 1; i < seq.ids.size(); ++i) {
            CHECK(seq.ids[i] != Vocabulary::kBos);
            CHECK(seq.ids[i] != Vocabulary::kEos);
        }
    }

    SUBCASE("identical images give bitwise-identical sequences") {
        Toy toy;
        auto img = toy.image();
        auto a = generate_greedy(img, toy.enc_cfg, toy.dec_cfg, toy.params);
        auto b = generate_greedy(img, toy.enc_cfg, toy.dec_cfg, toy.params);
        CHECK(a.ids == b.ids);
    }

}

TEST_CASE("argmax invariance under constant logit shift") {
    Toy toy;
    auto img = toy.image();
    auto base = generate_greedy(img, toy.enc_cfg, toy.dec_cfg, toy.params);
    for (auto& v : toy.params.get("dec.head.b")->data) v += 3.5;
    auto shifted = generate_greedy(img, toy.enc_cfg, toy.dec_cfg, toy.params);
    CHECK(base.ids == shifted.ids);
}
