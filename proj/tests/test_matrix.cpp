#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "csd/matrix.hpp"

using namespace csd;

namespace {

// Exhaustive enumeration of { v : m v = 0 } for tiny instances; independent
// of the rref path used by kernel_basis.
std::vector<std::vector<uint32_t>> brute_kernel(const FpMatrix& m) {
    std::vector<std::vector<uint32_t>> out;
    size_t total = 1;
    for (size_t i = 0; i < m.cols(); ++i) total *= m.p();
    for (size_t idx = 0; idx < total; ++idx) {
        std::vector<uint32_t> v(m.cols());
        size_t t = idx;
        for (size_t i = 0; i < m.cols(); ++i) {
            v[i] = static_cast<uint32_t>(t % m.p());
            t /= m.p();
        }
        bool zero = true;
        for (size_t r = 0; r < m.rows() && zero; ++r) {
            uint64_t s = 0;
            for (size_t c = 0; c < m.cols(); ++c) s += static_cast<uint64_t>(m.at(r, c)) * v[c];
            if (s % m.p() != 0) zero = false;
        }
        if (zero) out.push_back(v);
    }
    return out;
}

std::vector<std::vector<uint32_t>> enumerate_column_span(const FpMatrix& basis) {
    std::vector<std::vector<uint32_t>> out;
    size_t total = 1;
    for (size_t i = 0; i < basis.cols(); ++i) total *= basis.p();
    Fp f(basis.p());
    for (size_t idx = 0; idx < total; ++idx) {
        std::vector<uint32_t> c(basis.cols());
        size_t t = idx;
        for (size_t i = 0; i < basis.cols(); ++i) {
            c[i] = static_cast<uint32_t>(t % basis.p());
            t /= basis.p();
        }
        std::vector<uint32_t> v(basis.rows(), 0);
        for (size_t r = 0; r < basis.rows(); ++r) {
            uint64_t s = 0;
            for (size_t j = 0; j < basis.cols(); ++j)
                s += static_cast<uint64_t>(basis.at(r, j)) * c[j];
            v[r] = static_cast<uint32_t>(s % basis.p());
        }
        out.push_back(v);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace

TEST_CASE("rref basics") {
    // row 2 = 2 * row 1
    auto rr = rref(FpMatrix(5, 2, 2, {1, 2, 2, 4}));
    CHECK(rr.rank == 1);
    CHECK(rr.pivots == std::vector<size_t>{0});

    FpMatrix id3 = FpMatrix::identity(7, 3);
    auto rr2 = rref(id3);
    CHECK(rr2.r == id3);
    CHECK(rr2.rank == 3);

    // hand RREF over F_3: rows reduce to [1,0,2],[0,1,2]
    auto rr3 = rref(FpMatrix(3, 3, 3, {1, 1, 1, 0, 1, 2, 0, 0, 0}));
    CHECK(rr3.rank == 2);
    CHECK(rr3.pivots == std::vector<size_t>{0, 1});
    CHECK(rr3.r == FpMatrix(3, 3, 3, {1, 0, 2, 0, 1, 2, 0, 0, 0}));
}

TEST_CASE("rref idempotence") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        uint32_t p = trial % 2 ? 5 : 7;
        FpMatrix m(p, 3 + trial % 3, 4);
        for (size_t r = 0; r < m.rows(); ++r)
            for (size_t c = 0; c < m.cols(); ++c) m.at(r, c) = rng() % p;
        FpMatrix once = rref(m).r;
        CHECK(rref(once).r == once);
    }
}

TEST_CASE("kernel_basis") {
    FpMatrix z(5, 2, 3);
    CHECK(kernel_basis(z).cols() == 3);

    // stacked maps of the 4-point cube x, x+a, x+b, x+a+b over F_3
    FpMatrix cube(3, 4, 3, {1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1});
    CHECK(kernel_basis(cube).cols() == 0);

    FpMatrix m(5, 1, 3, {1, 2, 0});
    FpMatrix k = kernel_basis(m);
    CHECK(k.cols() == 2);
    CHECK((m * k).is_zero());
    // (3,1,0) lies in the kernel: 3 + 2*1 = 5 = 0 mod 5
    auto c = in_span(FpMatrix::col_vector(5, {3, 1, 0}), {k.col(0), k.col(1)});
    REQUIRE(c.has_value());
}

TEST_CASE("kernel matches brute force on small instances") {
    std::mt19937 rng(11);
    for (uint32_t p : {2u, 3u, 5u}) {
        for (int trial = 0; trial < 20; ++trial) {
            FpMatrix m(p, 1 + trial % 3, 1 + (trial + 1) % 4);
            for (size_t r = 0; r < m.rows(); ++r)
                for (size_t c = 0; c < m.cols(); ++c) m.at(r, c) = rng() % p;
            FpMatrix k = kernel_basis(m);
            CHECK((m * k).is_zero());
            CHECK(rank(m) + k.cols() == m.cols());
            auto brute = brute_kernel(m);
            auto span = enumerate_column_span(k);
            if (k.cols() == 0) span = {std::vector<uint32_t>(m.cols(), 0)};
            std::sort(brute.begin(), brute.end());
            CHECK(brute == span);
        }
    }
}

TEST_CASE("solve") {
    FpMatrix id = FpMatrix::identity(7, 4);
    FpMatrix b = FpMatrix::col_vector(7, {3, 1, 4, 1});
    CHECK(*solve(id, b) == b);

    // the 6x6 system from the worked multilinear-algebra example, transposed,
    // with right-hand side e_1 over F_7; the rational solution
    // (1, -1/5, -14/15, -4/5, 1, -1/15) reduces to (1, 4, 0, 2, 1, 6)
    FpMatrix m(7, 6, 6,
               {1, 1, 1, 1, 1, 4,
                0, 0, 1, 1, 2, 6,
                0, 1, 0, 1, 3, 12,
                0, 0, 1, 1, 4, 9,
                0, 0, 0, 1, 6, 18,
                0, 1, 0, 1, 9, 36});
    FpMatrix mt = m.transposed();
    FpMatrix e1 = FpMatrix::col_vector(7, {1, 0, 0, 0, 0, 0});
    auto x = solve(mt, e1);
    REQUIRE(x.has_value());
    CHECK(*x == FpMatrix::col_vector(7, {1, 4, 0, 2, 1, 6}));
    CHECK(mt * *x == e1);

    // deterministic free-variable rule: [[1,1]] x = (1) over F_2 -> (1,0)
    auto y = solve(FpMatrix(2, 1, 2, {1, 1}), FpMatrix::scalar(2, 1));
    REQUIRE(y.has_value());
    CHECK(*y == FpMatrix::col_vector(2, {1, 0}));

    // inconsistent system
    CHECK_FALSE(solve(FpMatrix(5, 2, 1, {0, 0}), FpMatrix::col_vector(5, {1, 0})).has_value());
}

TEST_CASE("right_inverse") {
    FpMatrix m(5, 1, 3, {1, 0, 0});
    auto r = right_inverse(m);
    REQUIRE(r.has_value());
    CHECK(*r == FpMatrix::col_vector(5, {1, 0, 0}));

    CHECK_FALSE(right_inverse(FpMatrix(5, 2, 1, {1, 2})).has_value());

    FpMatrix a(3, 2, 2, {1, 1, 0, 1});
    auto ra = right_inverse(a);
    REQUIRE(ra.has_value());
    CHECK((a * *ra).is_identity());
    CHECK(*ra == FpMatrix(3, 2, 2, {1, 2, 0, 1}));
}

TEST_CASE("kron_power") {
    FpMatrix v(7, 1, 3, {1, 2, 3});
    CHECK(kron_power(v, 2) == FpMatrix(7, 1, 9, {1, 2, 3, 2, 4, 6, 3, 6, 2}));
    CHECK(kron_power(v, 0) == FpMatrix::identity(7, 1));
    FpMatrix ones(2, 1, 2, {1, 1});
    CHECK(kron_power(ones, 3) == FpMatrix(2, 1, 8, {1, 1, 1, 1, 1, 1, 1, 1}));
    CHECK_THROWS_AS(kron_power(FpMatrix(5, 10, 10), 4, 1000), std::length_error);
}

TEST_CASE("kron_power multiplicativity") {
    FpMatrix m(5, 2, 2, {1, 2, 3, 4});
    for (size_t s = 0; s <= 2; ++s)
        for (size_t t = 0; t <= 2; ++t)
            CHECK(kron_power(m, s + t) == kron(kron_power(m, s), kron_power(m, t)));
}

TEST_CASE("in_span") {
    FpMatrix g1 = FpMatrix::col_vector(5, {1, 2});
    FpMatrix g2 = FpMatrix::col_vector(5, {0, 1});
    auto c = in_span(g1, {g1, g2});
    REQUIRE(c.has_value());
    CHECK(*c == std::vector<uint32_t>{1, 0});

    // 2x+3y+6z over {x, x+z, x+y, x+y+z, x+2y+3z} at F_7:
    // coefficients (-7, 6, 3, 0, 0) = (0, 6, 3, 0, 0)
    auto cols = [](std::vector<int64_t> v) { return FpMatrix::col_vector(7, std::move(v)); };
    auto c2 = in_span(cols({2, 3, 6}),
                      {cols({1, 0, 0}), cols({1, 0, 1}), cols({1, 1, 0}), cols({1, 1, 1}),
                       cols({1, 2, 3})});
    REQUIRE(c2.has_value());
    CHECK(*c2 == std::vector<uint32_t>{0, 6, 3, 0, 0});

    CHECK_FALSE(in_span(FpMatrix::col_vector(5, {0, 0, 1}),
                        {FpMatrix::col_vector(5, {1, 0, 0}), FpMatrix::col_vector(5, {0, 1, 0})})
                    .has_value());
}

TEST_CASE("in_span matches brute force") {
    std::mt19937 rng(3);
    for (uint32_t p : {2u, 3u, 5u}) {
        for (int trial = 0; trial < 15; ++trial) {
            size_t n = 2 + trial % 2, k = 1 + trial % 3;
            std::vector<FpMatrix> gens;
            for (size_t j = 0; j < k; ++j) {
                FpMatrix g(p, n, 1);
                for (size_t i = 0; i < n; ++i) g.at(i, 0) = rng() % p;
                gens.push_back(g);
            }
            FpMatrix t(p, n, 1);
            for (size_t i = 0; i < n; ++i) t.at(i, 0) = rng() % p;
            bool brute = false;
            size_t total = 1;
            for (size_t j = 0; j < k; ++j) total *= p;
            for (size_t idx = 0; idx < total && !brute; ++idx) {
                size_t x = idx;
                std::vector<uint32_t> coef(k);
                for (size_t j = 0; j < k; ++j) {
                    coef[j] = static_cast<uint32_t>(x % p);
                    x /= p;
                }
                bool eq = true;
                for (size_t i = 0; i < n && eq; ++i) {
                    uint64_t s = 0;
                    for (size_t j = 0; j < k; ++j)
                        s += static_cast<uint64_t>(coef[j]) * gens[j].at(i, 0);
                    if (s % p != t.at(i, 0)) eq = false;
                }
                if (eq) brute = true;
            }
            CHECK(in_span(t, gens).has_value() == brute);
        }
    }
}

TEST_CASE("right_inverse soundness on random surjective maps") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        uint32_t p = trial % 2 ? 5 : 13;
        FpMatrix m(p, 2, 4);
        for (size_t r = 0; r < m.rows(); ++r)
            for (size_t c = 0; c < m.cols(); ++c) m.at(r, c) = rng() % p;
        auto r = right_inverse(m);
        if (rank(m) == m.rows()) {
            REQUIRE(r.has_value());
            CHECK((m * *r).is_identity());
        } else {
            CHECK_FALSE(r.has_value());
        }
    }
}
