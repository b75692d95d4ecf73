#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "xvgc/tokenizer.hpp"

using namespace xvgc;

TEST_CASE("tokenize rules") {
    CHECK(tokenize("No pleural effusion.") ==
          std::vector<std::string>{"no", "pleural", "effusion", "."});
    CHECK(tokenize("").empty());
    CHECK(tokenize("X-ray") == std::vector<std::string>{"x-ray"});
    CHECK(tokenize("a,b;c:(d)") ==
          std::vector<std::string>{"a", ",", "b", ";", "c", ":", "(", "d", ")"});
    CHECK(tokenize("heart size 12 mm") == std::vector<std::string>{"heart", "size", "12", "mm"});
}

TEST_CASE("tokenize is idempotent") {
    for (const std::string text :
         {"The heart is normal in size.", "No focal consolidation, no effusion;",
          "(see prior) X-RAY 2:1"}) {
        auto once = tokenize(text);
        CHECK(tokenize(join_tokens(once)) == once);
    }
}

TEST_CASE("build_vocab ordering and thresholds") {
    SUBCASE("frequency then lexicographic") {
        auto vocab = build_vocab({"a a b"}, 1);
        REQUIRE(vocab.size() == 6);
        CHECK(vocab.token_of(4) == "a");
        CHECK(vocab.token_of(5) == "b");
    }
    SUBCASE("min_count excludes rare tokens") {
        auto vocab = build_vocab({"a a b"}, 2);
        CHECK(vocab.size() == 5);
        CHECK(vocab.id_of("b") == Vocabulary::kUnk);
    }
    SUBCASE("empty corpus keeps only reserved ids") {
        auto vocab = build_vocab({}, 1);
        CHECK(vocab.size() == 4);
    }
    SUBCASE("deterministic for a fixed corpus") {
        std::vector<std::string> corpus = {"c b a", "b c", "c"};
        auto v1 = build_vocab(corpus);
        auto v2 = build_vocab(corpus);
        CHECK(v1.tokens() == v2.tokens());
        CHECK(v1.token_of(4) == "c");  // count 3
        CHECK(v1.token_of(5) == "b");  // count 2
        CHECK(v1.token_of(6) == "a");  // count 1
    }
}

TEST_CASE("encode sentinels and truncation") {
    auto vocab = build_vocab({"a b c"});
    SUBCASE("empty caption") {
        auto seq = encode({}, vocab, 8);
        CHECK(seq.ids == std::vector<int>{Vocabulary::kBos, Vocabulary::kEos});
    }
    SUBCASE("single known token") {
        auto seq = encode({"a"}, vocab, 8);
        CHECK(seq.ids == std::vector<int>{Vocabulary::kBos, vocab.id_of("a"), Vocabulary::kEos});
    }
    SUBCASE("truncation keeps EOS final") {
        std::vector<std::string> long_caption(100, "a");
        auto seq = encode(long_caption, vocab, 8);
        CHECK(seq.ids.size() == 8);
        CHECK(seq.ids.front() == Vocabulary::kBos);
        CHECK(seq.ids.back() == Vocabulary::kEos);
    }
    SUBCASE("unknown words map to UNK") {
        auto seq = encode({"zzz"}, vocab, 8);
        CHECK(seq.ids[1] == Vocabulary::kUnk);
    }
    SUBCASE("max_len below 2 rejected") { CHECK_THROWS_AS(encode({}, vocab, 1), ConfigError); }
}

TEST_CASE("decode drops sentinels and round-trips") {
    auto vocab = build_vocab({"no effusion seen"});
    TokenSequence seq;
    seq.ids = {Vocabulary::kBos, vocab.id_of("no"), vocab.id_of("effusion"), Vocabulary::kEos};
    CHECK(decode(seq, vocab) == "no effusion");

    TokenSequence empty;
    empty.ids = {Vocabulary::kBos, Vocabulary::kEos};
    CHECK(decode(empty, vocab) == "");

    TokenSequence bad;
    bad.ids = {99};
    CHECK_THROWS_AS(decode(bad, vocab), IndexError);

    // encode-decode identity on in-vocab text without truncation
    const std::string text = "no effusion seen";
    auto round = decode(encode(tokenize(text), vocab, 16), vocab);
    CHECK(round == text);
}

TEST_CASE("vocabulary persistence round trip") {
    auto vocab = build_vocab({"alpha beta beta gamma"});
    std::stringstream buf;
    vocab.save(buf);
    auto loaded = Vocabulary::load(buf);
    CHECK(loaded.tokens() == vocab.tokens());
    for (std::size_t id = 0; id < vocab.size(); ++id)
        CHECK(loaded.id_of(vocab.token_of(static_cast<int>(id))) == static_cast<int>(id));
}
