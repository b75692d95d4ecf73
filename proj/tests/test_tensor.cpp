#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "xvgc/params.hpp"
#include "xvgc/tensor.hpp"

using namespace xvgc;

TEST_CASE("matmul identity and hand-expanded product") {
    Tape tape;
    auto a = tensor_from(2, 2, {1, 2, 3, 4});
    auto i2 = identity(2);

    auto left = matmul(tape, i2, a);
    CHECK(left->data == std::vector<double>{1, 2, 3, 4});
    auto right = matmul(tape, a, i2);
    CHECK(right->data == std::vector<double>{1, 2, 3, 4});

    auto b = tensor_from(2, 2, {5, 6, 7, 8});
    auto c = matmul(tape, a, b);
    CHECK(c->data == std::vector<double>{19, 22, 43, 50});
}

TEST_CASE("matmul rejects mismatched inner dims") {
    Tape tape;
    auto a = make_tensor(2, 3);
    auto b = make_tensor(2, 3);
    CHECK_THROWS_AS(matmul(tape, a, b), ShapeError);
}

TEST_CASE("softmax_rows values and stability") {
    Tape tape;
    auto uniform = tensor_from(1, 2, {0, 0});
    auto s = softmax_rows(tape, uniform);
    CHECK(s->data[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(s->data[1] == doctest::Approx(0.5).epsilon(1e-14));

    auto skew = tensor_from(1, 2, {std::log(2.0), 0.0});
    auto s2 = softmax_rows(tape, skew);
    CHECK(s2->data[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(s2->data[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    auto big = tensor_from(1, 2, {1000.0, 0.0});
    auto s3 = softmax_rows(tape, big);
    CHECK(std::isfinite(s3->data[0]));
    CHECK(s3->data[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s3->data[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("softmax_rows rows sum to one with entries in (0,1]") {
    Rng rng(7);
    Tape tape;
    auto x = make_tensor(5, 9);
    for (auto& v : x->data) v = rng.uniform(-10, 10);
    auto s = softmax_rows(tape, x);
    for (std::size_t i = 0; i < 5; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < 9; ++j) {
            CHECK(s->at(i, j) > 0.0);
            CHECK(s->at(i, j) <= 1.0);
            sum += s->at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("elementwise add, broadcast, mul") {
    Tape tape;
    auto a = tensor_from(1, 2, {1, 2});
    auto zero = tensor_from(1, 2, {0, 0});
    CHECK(add(tape, a, zero)->data == std::vector<double>{1, 2});

    auto m = tensor_from(2, 3, {1, 2, 3, 4, 5, 6});
    auto row = tensor_from(1, 3, {10, 20, 30});
    auto sum = add(tape, m, row);
    CHECK(sum->data == std::vector<double>{11, 22, 33, 14, 25, 36});

    auto p = mul(tape, tensor_from(1, 2, {2, 3}), tensor_from(1, 2, {4, 5}));
    CHECK(p->data == std::vector<double>{8, 15});

    CHECK_THROWS_AS(add(tape, m, tensor_from(1, 2, {1, 2})), ShapeError);
}

TEST_CASE("backward: linear functional, square, unreachable parameter") {
    Tape tape;
    auto x = tensor_from(2, 2, {1, 2, 3, 4}, true);
    auto loss = sum_all(tape, x);
    backward(tape, loss);
    CHECK(x->grad == std::vector<double>{1, 1, 1, 1});

    Tape tape2;
    auto y = tensor_from(1, 3, {1, 2, 3}, true);
    auto sq = mul(tape2, y, y);
    auto loss2 = sum_all(tape2, sq);
    backward(tape2, loss2);
    CHECK(y->grad == std::vector<double>{2, 4, 6});

    auto unused = tensor_from(1, 2, {5, 5}, true);
    unused->zero_grad();
    CHECK(unused->grad == std::vector<double>{0, 0});
}

TEST_CASE("backward rejects non-scalar loss") {
    Tape tape;
    auto x = tensor_from(1, 2, {1, 2}, true);
    auto y = add(tape, x, x);
    CHECK_THROWS_AS(backward(tape, y), ContractError);
}

TEST_CASE("backward twice after grad reset is bitwise identical") {
    Rng rng(3);
    auto x = make_tensor(3, 3, true);
    for (auto& v : x->data) v = rng.uniform(-1, 1);

    Tape tape;
    auto s = softmax_rows(tape, x);
    auto loss = sum_all(tape, mul(tape, s, x));
    backward(tape, loss);
    auto first = x->grad;
    x->zero_grad();
    for (const auto& node : tape.nodes()) node.output->zero_grad();
    backward(tape, loss);
    CHECK(x->grad == first);
}

TEST_CASE("finite_diff_check: linear, softmax composite, constant") {
    auto x = make_tensor(2, 3, true);
    Rng rng(11);
    for (auto& v : x->data) v = rng.uniform(-1, 1);

    auto linear = [&](Tape& t) { return sum_all(t, x); };
    CHECK(finite_diff_check(linear, {x}) < 1e-9);

    auto composite = [&](Tape& t) { return sum_all(t, mul(t, softmax_rows(t, x), x)); };
    CHECK(finite_diff_check(composite, {x}) < 1e-6);

    auto constant = [&](Tape& t) { return sum_all(t, mul(t, x, make_tensor(2, 3))); };
    CHECK(finite_diff_check(constant, {x}) == 0.0);
}

TEST_CASE("gradients of composed ops match finite differences") {
    Rng rng(5);
    auto x = make_tensor(4, 6, true);
    auto w = make_tensor(6, 6, true);
    auto g = make_tensor(1, 6, true);
    auto b = make_tensor(1, 6, true);
    for (auto& v : x->data) v = rng.uniform(-1, 1);
    for (auto& v : w->data) v = rng.uniform(-1, 1);
    for (auto& v : g->data) v = rng.uniform(0.5, 1.5);
    for (auto& v : b->data) v = rng.uniform(-0.5, 0.5);

    SUBCASE("matmul + gelu") {
        auto f = [&](Tape& t) { return sum_all(t, gelu(t, matmul(t, x, w))); };
        CHECK(finite_diff_check(f, {x, w}) < 1e-5);
    }
    SUBCASE("layernorm") {
        auto f = [&](Tape& t) { return sum_all(t, mul(t, layernorm_rows(t, x, g, b), x)); };
        CHECK(finite_diff_check(f, {x, g, b}) < 1e-5);
    }
    SUBCASE("causal softmax attention core") {
        auto f = [&](Tape& t) {
            auto scores = matmul(t, x, transpose(t, x));
            return sum_all(t, mul(t, causal_softmax_rows(t, scores), scores));
        };
        CHECK(finite_diff_check(f, {x}) < 1e-5);
    }
    SUBCASE("slice and concat") {
        auto f = [&](Tape& t) {
            auto left = slice_cols(t, x, 0, 3);
            auto right = slice_cols(t, x, 3, 3);
            return sum_all(t, mul(t, concat_cols(t, {right, left}), x));
        };
        CHECK(finite_diff_check(f, {x}) < 1e-5);
    }
    SUBCASE("cross entropy") {
        std::vector<int> targets = {1, 3, 0, 5};
        auto f = [&](Tape& t) { return cross_entropy(t, matmul(t, x, w), targets, 0); };
        CHECK(finite_diff_check(f, {x, w}) < 1e-5);
    }
}

TEST_CASE("causal softmax zeroes strictly-upper entries") {
    Tape tape;
    Rng rng(9);
    auto x = make_tensor(4, 4);
    for (auto& v : x->data) v = rng.uniform(-2, 2);
    auto s = causal_softmax_rows(tape, x);
    for (std::size_t i = 0; i < 4; ++i) {
        double sum = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            if (j > i) CHECK(s->at(i, j) == 0.0);
            sum += s->at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("embed_rows gathers and scatters gradients") {
    auto table = tensor_from(3, 2, {1, 2, 3, 4, 5, 6}, true);
    Tape tape;
    auto rows = embed_rows(tape, table, {2, 0, 2});
    CHECK(rows->data == std::vector<double>{5, 6, 1, 2, 5, 6});

    auto loss = sum_all(tape, rows);
    backward(tape, loss);
    CHECK(table->grad == std::vector<double>{1, 1, 0, 0, 2, 2});
}
