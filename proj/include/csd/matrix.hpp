#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "csd/fp.hpp"

namespace csd {

// Dense row-major matrix over F_p.  Everything downstream (morphism checks,
// limit spaces, tensor-power span tests) reduces to operations on these.
class FpMatrix {
public:
    FpMatrix() : p_(2), rows_(0), cols_(0) {}
    FpMatrix(uint32_t p, size_t rows, size_t cols)
        : p_(p), rows_(rows), cols_(cols), a_(rows * cols, 0) {}
    FpMatrix(uint32_t p, size_t rows, size_t cols, std::vector<int64_t> entries)
        : p_(p), rows_(rows), cols_(cols), a_(rows * cols) {
        if (entries.size() != rows * cols)
            throw std::invalid_argument("FpMatrix: entry count does not match shape");
        Fp f(p);
        for (size_t i = 0; i < entries.size(); ++i) a_[i] = f.reduce(entries[i]);
    }

    static FpMatrix identity(uint32_t p, size_t n) {
        FpMatrix m(p, n, n);
        for (size_t i = 0; i < n; ++i) m.at(i, i) = 1;
        return m;
    }
    static FpMatrix zero(uint32_t p, size_t rows, size_t cols) { return FpMatrix(p, rows, cols); }
    static FpMatrix row_vector(uint32_t p, std::vector<int64_t> v) {
        size_t n = v.size();
        return FpMatrix(p, 1, n, std::move(v));
    }
    static FpMatrix col_vector(uint32_t p, std::vector<int64_t> v) {
        size_t n = v.size();
        return FpMatrix(p, n, 1, std::move(v));
    }
    // 1x1 scalar matrix, handy for one-dimensional maps.
    static FpMatrix scalar(uint32_t p, int64_t c) { return FpMatrix(p, 1, 1, {c}); }

    uint32_t p() const { return p_; }
    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }
    bool empty_shape() const { return rows_ == 0 || cols_ == 0; }

    uint32_t& at(size_t r, size_t c) { return a_[r * cols_ + c]; }
    uint32_t at(size_t r, size_t c) const { return a_[r * cols_ + c]; }
    const std::vector<uint32_t>& entries() const { return a_; }

    bool operator==(const FpMatrix& o) const {
        return p_ == o.p_ && rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
    }
    bool operator!=(const FpMatrix& o) const { return !(*this == o); }

    bool is_zero() const {
        for (uint32_t x : a_)
            if (x) return false;
        return true;
    }
    bool is_identity() const {
        if (rows_ != cols_) return false;
        for (size_t i = 0; i < rows_; ++i)
            for (size_t j = 0; j < cols_; ++j)
                if (at(i, j) != (i == j ? 1u : 0u)) return false;
        return true;
    }

    FpMatrix operator*(const FpMatrix& o) const {
        check_same_p(o);
        if (cols_ != o.rows_) throw std::invalid_argument("FpMatrix: product shape mismatch");
        FpMatrix out(p_, rows_, o.cols_);
        for (size_t i = 0; i < rows_; ++i)
            for (size_t k = 0; k < cols_; ++k) {
                uint64_t aik = at(i, k);
                if (!aik) continue;
                for (size_t j = 0; j < o.cols_; ++j) {
                    uint64_t v = out.at(i, j) + aik * o.at(k, j) % p_;
                    out.at(i, j) = static_cast<uint32_t>(v >= p_ ? v - p_ : v);
                }
            }
        return out;
    }
    FpMatrix operator+(const FpMatrix& o) const {
        check_same_shape(o);
        FpMatrix out(p_, rows_, cols_);
        Fp f(p_);
        for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = f.add(a_[i], o.a_[i]);
        return out;
    }
    FpMatrix operator-(const FpMatrix& o) const {
        check_same_shape(o);
        FpMatrix out(p_, rows_, cols_);
        Fp f(p_);
        for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = f.sub(a_[i], o.a_[i]);
        return out;
    }
    FpMatrix scaled(int64_t c) const {
        Fp f(p_);
        uint32_t cr = f.reduce(c);
        FpMatrix out(p_, rows_, cols_);
        for (size_t i = 0; i < a_.size(); ++i) out.a_[i] = f.mul(a_[i], cr);
        return out;
    }
    FpMatrix transposed() const {
        FpMatrix out(p_, cols_, rows_);
        for (size_t i = 0; i < rows_; ++i)
            for (size_t j = 0; j < cols_; ++j) out.at(j, i) = at(i, j);
        return out;
    }

    FpMatrix hstack(const FpMatrix& o) const {
        check_same_p(o);
        if (rows_ != o.rows_) throw std::invalid_argument("FpMatrix: hstack row mismatch");
        FpMatrix out(p_, rows_, cols_ + o.cols_);
        for (size_t i = 0; i < rows_; ++i) {
            for (size_t j = 0; j < cols_; ++j) out.at(i, j) = at(i, j);
            for (size_t j = 0; j < o.cols_; ++j) out.at(i, cols_ + j) = o.at(i, j);
        }
        return out;
    }
    FpMatrix vstack(const FpMatrix& o) const {
        check_same_p(o);
        if (cols_ != o.cols_) throw std::invalid_argument("FpMatrix: vstack col mismatch");
        FpMatrix out(p_, rows_ + o.rows_, cols_);
        for (size_t i = 0; i < rows_; ++i)
            for (size_t j = 0; j < cols_; ++j) out.at(i, j) = at(i, j);
        for (size_t i = 0; i < o.rows_; ++i)
            for (size_t j = 0; j < cols_; ++j) out.at(rows_ + i, j) = o.at(i, j);
        return out;
    }
    FpMatrix row_slice(size_t r0, size_t r1) const {
        if (r0 > r1 || r1 > rows_) throw std::out_of_range("FpMatrix: row_slice");
        FpMatrix out(p_, r1 - r0, cols_);
        for (size_t i = r0; i < r1; ++i)
            for (size_t j = 0; j < cols_; ++j) out.at(i - r0, j) = at(i, j);
        return out;
    }
    FpMatrix col(size_t j) const {
        FpMatrix out(p_, rows_, 1);
        for (size_t i = 0; i < rows_; ++i) out.at(i, 0) = at(i, j);
        return out;
    }

private:
    void check_same_p(const FpMatrix& o) const {
        if (p_ != o.p_) throw std::invalid_argument("FpMatrix: modulus mismatch");
    }
    void check_same_shape(const FpMatrix& o) const {
        check_same_p(o);
        if (rows_ != o.rows_ || cols_ != o.cols_)
            throw std::invalid_argument("FpMatrix: shape mismatch");
    }

    uint32_t p_;
    size_t rows_, cols_;
    std::vector<uint32_t> a_;
};

struct RrefResult {
    FpMatrix r;
    std::vector<size_t> pivots; // pivot column per pivot row, increasing
    size_t rank = 0;
};

// Reduced row-echelon form with the fixed tie-breaking used everywhere:
// scan columns left to right, take the first nonzero entry in the rows not
// yet used as the pivot.  Deterministic, so downstream bases and witnesses
// are reproducible byte for byte.
inline RrefResult rref(FpMatrix m) {
    Fp f(m.p());
    RrefResult out;
    size_t pr = 0;
    for (size_t c = 0; c < m.cols() && pr < m.rows(); ++c) {
        size_t sel = pr;
        while (sel < m.rows() && m.at(sel, c) == 0) ++sel;
        if (sel == m.rows()) continue;
        if (sel != pr)
            for (size_t j = 0; j < m.cols(); ++j) std::swap(m.at(sel, j), m.at(pr, j));
        uint32_t inv = f.inv(m.at(pr, c));
        for (size_t j = c; j < m.cols(); ++j) m.at(pr, j) = f.mul(m.at(pr, j), inv);
        for (size_t i = 0; i < m.rows(); ++i) {
            if (i == pr || m.at(i, c) == 0) continue;
            uint32_t coef = m.at(i, c);
            for (size_t j = c; j < m.cols(); ++j)
                m.at(i, j) = f.sub(m.at(i, j), f.mul(coef, m.at(pr, j)));
        }
        out.pivots.push_back(c);
        ++pr;
    }
    out.rank = pr;
    out.r = std::move(m);
    return out;
}

inline size_t rank(const FpMatrix& m) { return rref(m).rank; }

// Columns form a basis of { v : m v = 0 }.  Free column j (ascending) gives
// the vector with 1 at j and -R[r][j] at each pivot column.
inline FpMatrix kernel_basis(const FpMatrix& m) {
    RrefResult rr = rref(m);
    Fp f(m.p());
    std::vector<bool> is_pivot(m.cols(), false);
    for (size_t c : rr.pivots) is_pivot[c] = true;
    size_t dim = m.cols() - rr.rank;
    FpMatrix out(m.p(), m.cols(), dim);
    size_t k = 0;
    for (size_t j = 0; j < m.cols(); ++j) {
        if (is_pivot[j]) continue;
        out.at(j, k) = 1;
        for (size_t r = 0; r < rr.rank; ++r) out.at(rr.pivots[r], k) = f.neg(rr.r.at(r, j));
        ++k;
    }
    return out;
}

// Some x with m x = b, or nullopt when inconsistent.  Free variables are
// set to zero, so the answer is unique given the input.
inline std::optional<FpMatrix> solve(const FpMatrix& m, const FpMatrix& b) {
    if (b.rows() != m.rows()) throw std::invalid_argument("solve: rhs length mismatch");
    RrefResult rr = rref(m.hstack(b));
    FpMatrix x(m.p(), m.cols(), b.cols());
    for (size_t r = 0; r < rr.rank; ++r) {
        if (rr.pivots[r] >= m.cols()) return std::nullopt; // pivot in augmented part
        for (size_t j = 0; j < b.cols(); ++j) x.at(rr.pivots[r], j) = rr.r.at(r, m.cols() + j);
    }
    return x;
}

// Right inverse r with m r = identity; exists iff m is surjective.
inline std::optional<FpMatrix> right_inverse(const FpMatrix& m) {
    auto x = solve(m, FpMatrix::identity(m.p(), m.rows()));
    if (!x) return std::nullopt;
    return x;
}

inline FpMatrix kron(const FpMatrix& a, const FpMatrix& b) {
    if (a.p() != b.p()) throw std::invalid_argument("kron: modulus mismatch");
    Fp f(a.p());
    FpMatrix out(a.p(), a.rows() * b.rows(), a.cols() * b.cols());
    for (size_t i = 0; i < a.rows(); ++i)
        for (size_t j = 0; j < a.cols(); ++j) {
            uint32_t aij = a.at(i, j);
            if (!aij) continue;
            for (size_t k = 0; k < b.rows(); ++k)
                for (size_t l = 0; l < b.cols(); ++l)
                    out.at(i * b.rows() + k, j * b.cols() + l) = f.mul(aij, b.at(k, l));
        }
    return out;
}

inline constexpr size_t kDefaultTensorCap = 1000000;

// t-fold Kronecker power; t = 0 is the 1x1 identity.
inline FpMatrix kron_power(const FpMatrix& m, size_t t, size_t size_cap = kDefaultTensorCap) {
    double est = 1.0;
    for (size_t i = 0; i < t; ++i) {
        est *= static_cast<double>(m.rows()) * static_cast<double>(m.cols());
        if (est > static_cast<double>(size_cap))
            throw std::length_error("kron_power: size cap exceeded");
    }
    FpMatrix out = FpMatrix::identity(m.p(), 1);
    for (size_t i = 0; i < t; ++i) out = kron(out, m);
    return out;
}

// Coefficients c with sum_i c_i g_i = target, or nullopt.  Vectors are
// passed as equal-length column matrices.
inline std::optional<std::vector<uint32_t>> in_span(const FpMatrix& target,
                                                    const std::vector<FpMatrix>& generators) {
    FpMatrix a(target.p(), target.rows(), generators.size());
    for (size_t j = 0; j < generators.size(); ++j) {
        if (generators[j].rows() != target.rows() || generators[j].cols() != 1)
            throw std::invalid_argument("in_span: generator length mismatch");
        for (size_t i = 0; i < target.rows(); ++i) a.at(i, j) = generators[j].at(i, 0);
    }
    auto x = solve(a, target);
    if (!x) return std::nullopt;
    std::vector<uint32_t> c(generators.size());
    for (size_t j = 0; j < generators.size(); ++j) c[j] = x->at(j, 0);
    return c;
}

// Deterministic basis of the column space: rref of the transpose, nonzero
// rows transposed back.
inline FpMatrix column_space_basis(const FpMatrix& m) {
    RrefResult rr = rref(m.transposed());
    FpMatrix out(m.p(), m.rows(), rr.rank);
    for (size_t r = 0; r < rr.rank; ++r)
        for (size_t i = 0; i < m.rows(); ++i) out.at(i, r) = rr.r.at(r, i);
    return out;
}

} // namespace csd
