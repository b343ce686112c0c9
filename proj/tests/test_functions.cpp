#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "csd/functions.hpp"

using namespace csd;

namespace {
constexpr double kTol = 1e-9;
} // namespace

TEST_CASE("lambda_eval on trivial and constant data") {
    uint32_t p = 5;
    std::vector<Label> idx = {Label{"a"}, Label{"b"}};
    LinearDatum triv = data::trivial(p, idx);
    LinearDatum cons = data::constant(p, idx);

    std::map<Label, FunctionTable> tabs;
    tabs.emplace(Label{"a"}, FunctionTable::random_unimodular(p, 1, 1, 1));
    tabs.emplace(Label{"b"}, FunctionTable::random_unimodular(p, 1, 1, 2));

    // independence: the trivial datum averages to the product of means
    cplx mean_a = 0, mean_b = 0, mean_ab = 0;
    for (size_t i = 0; i < p; ++i) {
        mean_a += tabs.at(Label{"a"}).values[i];
        mean_b += tabs.at(Label{"b"}).values[i];
        mean_ab += tabs.at(Label{"a"}).values[i] * tabs.at(Label{"b"}).values[i];
    }
    mean_a /= p;
    mean_b /= p;
    mean_ab /= p;
    CHECK(std::abs(lambda_eval(triv, tabs, 1) - mean_a * mean_b) < kTol);
    CHECK(std::abs(lambda_eval(cons, tabs, 1) - mean_ab) < kTol);
}

TEST_CASE("lambda_eval on 3-term progressions with point masses") {
    LinearDatum ap3 = data::ap(3, 3);
    std::map<Label, FunctionTable> tabs;
    for (int i = 1; i <= 3; ++i)
        tabs.emplace(Label{std::to_string(i)}, FunctionTable::delta0(3, 1, 1));
    // only (x,h) = (0,0) of the 9 points contributes
    CHECK(std::abs(lambda_eval(ap3, tabs, 1) - cplx(1.0 / 9.0)) < kTol);
}

TEST_CASE("gowers norms") {
    FunctionTable one = FunctionTable::constant(5, 1, 1, 1.0);
    CHECK(std::abs(gowers_norm(one, 2) - 1.0) < kTol);
    CHECK(std::abs(gowers_norm(one, 3) - 1.0) < kTol);

    FunctionTable d0 = FunctionTable::delta0(3, 1, 1);
    CHECK(std::abs(gowers_norm(d0, 2) - std::pow(1.0 / 27.0, 0.25)) < kTol);

    // Lambda_{U^2}(f, fbar, fbar, f) = ||f||_{U^2}^4 for arbitrary f
    for (uint64_t seed = 10; seed < 15; ++seed) {
        FunctionTable f = FunctionTable::random_unimodular(5, 1, 1, seed);
        std::map<Label, FunctionTable> tabs;
        tabs.emplace(Label{"00"}, f);
        tabs.emplace(Label{"01"}, f.conjugated());
        tabs.emplace(Label{"10"}, f.conjugated());
        tabs.emplace(Label{"11"}, f);
        cplx v = lambda_eval(data::uk(5, 2), tabs, 1);
        CHECK(std::abs(v.imag()) < kTol);
        CHECK(v.real() >= -kTol);
        CHECK(std::abs(std::pow(v.real(), 0.25) - gowers_norm(f, 2)) < kTol);
    }
}

TEST_CASE("Gowers-Cauchy-Schwarz sanity") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        std::map<Label, FunctionTable> tabs;
        for (const Label& l : data::cube_labels(2))
            tabs.emplace(l, FunctionTable::random_unimodular(5, 1, 1, 100 + seed * 4 + tabs.size()));
        double lhs = std::abs(lambda_eval(data::uk(5, 2), tabs, 1));
        double rhs = 1.0;
        for (const Label& l : data::cube_labels(2)) rhs *= gowers_norm(tabs.at(l), 2);
        CHECK(lhs <= rhs + kTol);
    }
}

TEST_CASE("three-term averages controlled by U^2") {
    // |Lambda_{3AP}(f1,f2,f3)| <= ||f_1||_{U^2} for 1-bounded inputs
    LinearDatum ap3 = data::ap(5, 3);
    for (uint64_t seed = 0; seed < 30; ++seed) {
        std::map<Label, FunctionTable> tabs;
        for (int i = 1; i <= 3; ++i)
            tabs.emplace(Label{std::to_string(i)},
                         FunctionTable::random_unimodular(5, 1, 1, 900 + seed * 3 + i));
        double lhs = std::abs(lambda_eval(ap3, tabs, 1));
        CHECK(lhs <= gowers_norm(tabs.at(Label{"1"}), 2) + kTol);
    }
}

TEST_CASE("tables: translation and exponent n") {
    FunctionTable f = FunctionTable::random_unimodular(3, 1, 2, 4); // F_3^2 domain
    CHECK(f.values.size() == 9);
    FunctionTable g = f.translated(4); // shift by (1,1)
    // f(x + (1,1)) at x = (0,0) equals f((1,1))
    CHECK(g.values[0] == f.values[4]);
    FunctionTable h = g.translated(4).translated(1); // total shift (0,2)... wraps
    CHECK(h.values.size() == 9);

    // n = 2 evaluation stays within cap and matches a hand computation for
    // the constant function
    LinearDatum cons = data::constant(3, {Label{"a"}});
    std::map<Label, FunctionTable> tabs;
    tabs.emplace(Label{"a"}, FunctionTable::constant(3, 1, 2, cplx(0.5, 0)));
    CHECK(std::abs(lambda_eval(cons, tabs, 2) - cplx(0.5)) < kTol);
}

TEST_CASE("lambda cap") {
    LinearDatum big = data::uk(5, 8); // v_dim 9: 5^9 points, over a small cap
    std::map<Label, FunctionTable> tabs;
    CHECK_THROWS_AS(lambda_eval(big, tabs, 1, 1000), std::length_error);
}
