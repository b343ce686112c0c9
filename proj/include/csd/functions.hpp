#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <vector>

#include "csd/datum.hpp"

namespace csd {

using cplx = std::complex<double>;

inline constexpr size_t kDefaultLambdaCap = 10000000; // points of V^n

// Number of points of F_p^dim, guarded against overflow past the cap.
inline size_t space_size(uint32_t p, size_t dim, size_t cap = kDefaultLambdaCap) {
    size_t n = 1;
    for (size_t i = 0; i < dim; ++i) {
        if (n > cap / p + 1) throw std::length_error("space_size: cap exceeded");
        n *= p;
    }
    return n;
}

// A 1-bounded function W_i^n -> C stored as a dense table.  Points of
// F_p^m are indexed little-endian: index = sum coord_i * p^i.
struct FunctionTable {
    uint32_t p = 2;
    size_t w_dim = 0;
    size_t n = 1;
    std::vector<cplx> values;

    size_t domain_dim() const { return w_dim * n; }

    static FunctionTable constant(uint32_t p, size_t w_dim, size_t n, cplx v = 1.0) {
        FunctionTable t{p, w_dim, n, {}};
        t.values.assign(space_size(p, w_dim * n), v);
        return t;
    }
    // Indicator of zero.
    static FunctionTable delta0(uint32_t p, size_t w_dim, size_t n) {
        FunctionTable t = constant(p, w_dim, n, 0.0);
        t.values[0] = 1.0;
        return t;
    }
    // Unit-modulus values from a seeded PRNG; the mapping from raw 64-bit
    // draws to angles is fixed here so tables are reproducible everywhere.
    static FunctionTable random_unimodular(uint32_t p, size_t w_dim, size_t n, uint64_t seed) {
        FunctionTable t{p, w_dim, n, {}};
        size_t sz = space_size(p, w_dim * n);
        t.values.reserve(sz);
        std::mt19937_64 rng(seed);
        const double two_pi = 6.283185307179586476925286766559;
        for (size_t i = 0; i < sz; ++i) {
            double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            t.values.push_back(cplx(std::cos(two_pi * u), std::sin(two_pi * u)));
        }
        return t;
    }

    FunctionTable conjugated() const {
        FunctionTable t = *this;
        for (cplx& v : t.values) v = std::conj(v);
        return t;
    }
    // x -> f(x + shift), shift a point of W^n given by its index.
    FunctionTable translated(size_t shift_index) const {
        size_t m = domain_dim();
        std::vector<uint32_t> shift(m);
        size_t s = shift_index;
        for (size_t i = 0; i < m; ++i) {
            shift[i] = static_cast<uint32_t>(s % p);
            s /= p;
        }
        FunctionTable t = *this;
        std::vector<uint32_t> x(m, 0);
        for (size_t idx = 0; idx < values.size(); ++idx) {
            size_t jdx = 0, mult = 1;
            for (size_t i = 0; i < m; ++i) {
                uint32_t c = x[i] + shift[i];
                if (c >= p) c -= p;
                jdx += c * mult;
                mult *= p;
            }
            t.values[idx] = values[jdx];
            for (size_t i = 0; i < m; ++i) {
                if (++x[i] < p) break;
                x[i] = 0;
            }
        }
        return t;
    }
};

namespace detail {

// Evaluation plan for one index: row-major phi expanded so that the image
// index in W^n can be accumulated coordinate by coordinate of v in V^n.
struct LambdaTerm {
    const FunctionTable* table;
    FpMatrix phi;
};

} // namespace detail

// Exhaustive multilinear average over v in V^n of the product of
// f_i(phi_i(v)).  Summation runs in a fixed order with long double
// accumulators, which keeps results deterministic and accurate enough for
// the 1e-9 tolerances used by the numeric checks.
inline cplx lambda_eval(const LinearDatum& d, const std::map<Label, FunctionTable>& tables,
                        size_t n, size_t cap = kDefaultLambdaCap) {
    size_t total = space_size(d.p, d.v_dim * n, cap);
    uint32_t p = d.p;

    std::vector<detail::LambdaTerm> terms;
    for (const auto& ix : d.indices) {
        auto it = tables.find(ix.label);
        if (it == tables.end())
            throw std::invalid_argument("lambda_eval: missing table for " + ix.label.str());
        const FunctionTable& t = it->second;
        if (t.p != p || t.w_dim != ix.w_dim || t.n != n)
            throw std::invalid_argument("lambda_eval: table shape mismatch at " + ix.label.str());
        terms.push_back({&t, ix.phi});
    }

    size_t vm = d.v_dim * n;
    std::vector<uint32_t> v(vm, 0);
    // Per-term image index, updated incrementally as v steps through the
    // little-endian counter; recomputed from scratch at each carry.
    std::vector<size_t> powp(vm + 1, 1);
    for (size_t i = 0; i < vm; ++i) powp[i + 1] = powp[i] * p;

    long double acc_re = 0.0L, acc_im = 0.0L;
    for (size_t idx = 0; idx < total; ++idx) {
        cplx prod(1.0, 0.0);
        for (const auto& term : terms) {
            size_t w = term.phi.rows();
            size_t widx = 0, mult = 1;
            // coordinate block e of v is v[e*v_dim .. e*v_dim+v_dim)
            for (size_t e = 0; e < n; ++e) {
                for (size_t r = 0; r < w; ++r) {
                    uint64_t s = 0;
                    for (size_t c = 0; c < d.v_dim; ++c) {
                        uint32_t coef = term.phi.at(r, c);
                        if (coef) s += static_cast<uint64_t>(coef) * v[e * d.v_dim + c];
                    }
                    widx += static_cast<size_t>(s % p) * mult;
                    mult *= p;
                }
            }
            prod *= term.table->values[widx];
        }
        acc_re += prod.real();
        acc_im += prod.imag();
        for (size_t i = 0; i < vm; ++i) {
            if (++v[i] < p) break;
            v[i] = 0;
        }
    }
    return cplx(static_cast<double>(acc_re / total), static_cast<double>(acc_im / total));
}

// Gowers U^k norm of f via the cube datum with alternating conjugation:
// |Lambda_{U^k}((C^|w| f)_w)|^{1/2^k}.
inline double gowers_norm(const FunctionTable& f, size_t k, size_t cap = kDefaultLambdaCap) {
    LinearDatum d = data::uk(f.p, k, f.w_dim);
    FunctionTable fbar = f.conjugated();
    std::map<Label, FunctionTable> tables;
    for (const Label& l : data::cube_labels(k)) {
        size_t ones = 0;
        for (char c : l.toks[0]) ones += c == '1';
        tables.emplace(l, ones % 2 ? fbar : f);
    }
    cplx v = lambda_eval(d, tables, f.n, cap);
    return std::pow(std::abs(v), 1.0 / std::pow(2.0, static_cast<double>(k)));
}

} // namespace csd
