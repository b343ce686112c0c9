#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "csd/diagram.hpp"

namespace csd {

// Witness that a datum has Cauchy-Schwarz complexity at most s at an index:
// a partition of the other indices into s+1 parts and maps mu_r with
// phi_i . mu_r = id and phi_j . mu_r = 0 for j in part r.
struct CsWitness {
    size_t s = 0;
    std::vector<std::vector<Label>> parts; // s+1 parts, possibly empty
    std::vector<FpMatrix> mus;             // s+1 maps W_i -> V
};

inline bool verify_cs_witness(const LinearDatum& d, const Label& i, const CsWitness& w) {
    if (w.parts.size() != w.s + 1 || w.mus.size() != w.s + 1) return false;
    const DatumIndex& ix = d.at(i);
    std::set<Label> seen;
    for (size_t r = 0; r <= w.s; ++r) {
        if (!(ix.phi * w.mus[r]).is_identity()) return false;
        for (const Label& j : w.parts[r]) {
            if (j == i || !seen.insert(j).second) return false;
            if (!(d.at(j).phi * w.mus[r]).is_zero()) return false;
        }
    }
    return seen.size() == d.indices.size() - 1;
}

inline constexpr size_t kCsSearchIndexCap = 22;

// Exact Cauchy-Schwarz complexity by subset dynamic programming: classify
// each subset S of the other indices as good iff phi_i maps the joint kernel
// of (phi_j)_{j in S} onto W_i (goodness is downward closed), then find the
// minimum partition into good parts.  Returns the minimal witness at most
// s_max, or nullopt.
inline std::optional<CsWitness> cs_complexity(const LinearDatum& d, const Label& i, size_t s_max) {
    if (d.indices.size() > kCsSearchIndexCap)
        throw std::invalid_argument("cs_complexity: index set too large for exact search");
    const DatumIndex& target = d.at(i);
    std::vector<const DatumIndex*> rest;
    for (const auto& ix : d.indices)
        if (!(ix.label == target.label)) rest.push_back(&ix);
    size_t m = rest.size();

    auto kernel_of = [&](size_t mask) {
        FpMatrix stack(d.p, 0, d.v_dim);
        for (size_t b = 0; b < m; ++b)
            if (mask & (size_t{1} << b))
                stack = stack.rows() == 0 ? rest[b]->phi : stack.vstack(rest[b]->phi);
        return stack.rows() == 0 ? FpMatrix::identity(d.p, d.v_dim) : kernel_basis(stack);
    };

    if (rank(target.phi) != target.w_dim) return std::nullopt; // never surjective

    size_t full = (size_t{1} << m) - 1;
    std::vector<char> good(full + 1, 0);
    for (size_t mask = 0; mask <= full; ++mask)
        good[mask] = rank(target.phi * kernel_of(mask)) == target.w_dim;

    constexpr size_t kInf = ~size_t{0};
    std::vector<size_t> best(full + 1, kInf), choice(full + 1, 0);
    best[0] = 0;
    for (size_t mask = 1; mask <= full; ++mask) {
        for (size_t t = mask; t; t = (t - 1) & mask) {
            if (!good[t] || best[mask ^ t] == kInf) continue;
            if (best[mask ^ t] + 1 < best[mask]) {
                best[mask] = best[mask ^ t] + 1;
                choice[mask] = t;
            }
        }
    }
    if (best[full] == kInf) return std::nullopt;
    size_t s = best[full] == 0 ? 0 : best[full] - 1;
    if (s > s_max) return std::nullopt;

    CsWitness w;
    w.s = s;
    size_t mask = full;
    while (mask) {
        size_t t = choice[mask];
        std::vector<Label> part;
        for (size_t b = 0; b < m; ++b)
            if (t & (size_t{1} << b)) part.push_back(rest[b]->label);
        w.parts.push_back(std::move(part));
        FpMatrix k = kernel_of(t);
        w.mus.push_back(k * *right_inverse(target.phi * k));
        mask ^= t;
    }
    while (w.parts.size() < s + 1) { // pad with empty parts (monotonicity)
        w.parts.emplace_back();
        w.mus.push_back(*right_inverse(target.phi));
    }
    return w;
}

// The universal morphism gc_s(W_i) -> Phi encoding a witness:
// theta(u_1..u_{s+1}) = sum mu_r(u_r), alpha(i) = ^ and alpha(j) = r on
// part r, with the forced sigma maps.
inline DatumMorphism gc_universal(const LinearDatum& d, const Label& i, const CsWitness& w) {
    if (!verify_cs_witness(d, i, w)) throw std::invalid_argument("gc_universal: witness invalid");
    const DatumIndex& target = d.at(i);
    size_t wd = target.w_dim;
    LinearDatum gc = data::gc(d.p, w.s, wd);

    DatumMorphism m;
    m.source = gc;
    m.target = d;
    FpMatrix theta(d.p, d.v_dim, (w.s + 1) * wd);
    for (size_t r = 0; r <= w.s; ++r)
        for (size_t a = 0; a < d.v_dim; ++a)
            for (size_t b = 0; b < wd; ++b) theta.at(a, r * wd + b) = w.mus[r].at(a, b);
    m.theta = theta;
    m.alpha[target.label] = Label{data::kTriangle};
    m.sigma[target.label] = FpMatrix::identity(d.p, wd);
    for (size_t r = 0; r <= w.s; ++r) {
        for (const Label& j : w.parts[r]) {
            const DatumIndex& jx = d.at(j);
            m.alpha[j] = Label{std::to_string(r + 1)};
            // gc's map r+1 omits block r; columns follow the remaining blocks
            FpMatrix sig(d.p, jx.w_dim, w.s * wd);
            size_t blk = 0;
            for (size_t l = 0; l <= w.s; ++l) {
                if (l == r) continue;
                FpMatrix prod = jx.phi * w.mus[l];
                for (size_t a = 0; a < jx.w_dim; ++a)
                    for (size_t b = 0; b < wd; ++b) sig.at(a, blk * wd + b) = prod.at(a, b);
                ++blk;
            }
            m.sigma[j] = std::move(sig);
        }
    }
    return m;
}

// Inverse direction: recover a witness from a morphism gc_s(W_i) -> Phi by
// composing theta with the block insertions.
inline CsWitness witness_from_gc_morphism(const DatumMorphism& m, const Label& i) {
    const DatumIndex& target = m.target.at(i);
    size_t wd = target.w_dim;
    size_t s1 = m.source.indices.size() - 1; // s+1
    CsWitness w;
    w.s = s1 - 1;
    w.parts.assign(s1, {});
    for (const auto& ix : m.target.indices) {
        if (ix.label == i) continue;
        auto a = m.alpha_of(ix.label);
        if (!a) continue;
        size_t r = std::stoul(a->toks[0]);
        w.parts[r - 1].push_back(ix.label);
    }
    for (size_t r = 0; r < s1; ++r) {
        FpMatrix tau(m.source.p, s1 * wd, wd);
        for (size_t b = 0; b < wd; ++b) tau.at(r * wd + b, b) = 1;
        w.mus.push_back(m.theta * tau);
    }
    return w;
}

struct DiagCsResult {
    size_t s = 0;
    Diagram gc_diagram;
    DiagramMorphism morphism; // gc_diagram -> D
};

// Cauchy-Schwarz complexity of a diagram at a leaf: computed on datum(D),
// with the witness morphism transported through the adjunction.
inline std::optional<DiagCsResult> diag_cs_complexity(const Diagram& d, const Label& i,
                                                      size_t s_max, size_t cap = kDatumOfCap) {
    DiagramDatum dd = datum_of(d, cap);
    Label ci = d.resolve(i);
    auto w = cs_complexity(dd.datum, ci, s_max);
    if (!w) return std::nullopt;
    DatumMorphism m = gc_universal(dd.datum, ci, *w);
    DiagCsResult res;
    res.s = w->s;
    res.gc_diagram = diagram_of(m.source);
    res.morphism = adjunction_to_diagram(m, d, dd);
    return res;
}

// ---------------------------------------------------------------------------
// Tensor powers and true complexity

// Non-decreasing index tuples of length t over [0, d): the coordinates of
// the symmetric reduction of a t-th tensor power.
inline std::vector<std::vector<size_t>> multisets(size_t d, size_t t) {
    std::vector<std::vector<size_t>> out;
    std::vector<size_t> cur(t, 0);
    while (true) {
        out.push_back(cur);
        size_t k = t;
        while (k > 0 && cur[k - 1] == d - 1) --k;
        if (k == 0) break;
        ++cur[k - 1];
        for (size_t l = k; l < t; ++l) cur[l] = cur[k - 1];
    }
    if (t == 0) out.assign(1, {});
    return out;
}

// Orbit coordinates of the t-th tensor power of a linear form: entry
// prod_r a_{m_r} per multiset m.  Tensor powers of forms are constant on
// permutation orbits, so span questions among them reduce exactly to these
// compressed vectors.
inline FpMatrix sym_power(const FpMatrix& form, size_t t,
                          const std::vector<std::vector<size_t>>& omega) {
    if (form.rows() != 1) throw std::invalid_argument("sym_power: expected a 1-row form");
    Fp f(form.p());
    FpMatrix out(form.p(), omega.size(), 1);
    for (size_t k = 0; k < omega.size(); ++k) {
        uint32_t v = 1;
        for (size_t r : omega[k]) v = f.mul(v, form.at(0, r));
        out.at(k, 0) = v;
    }
    return out;
}

struct TrueComplexityResult {
    size_t s = 0;                        // largest degree with span membership
    std::vector<uint32_t> coeffs;        // membership coefficients at degree s, over the other
                                         // indices in datum order
    std::vector<std::vector<size_t>> dual_omega; // multisets at degree s+1
    std::optional<FpMatrix> dual;        // column over dual_omega annihilating the others but
                                         // pairing to 1 with phi_i^{(s+1)}; absent when s = t_max
    bool saw_cap = false;
};

namespace detail {

inline std::optional<std::vector<uint32_t>> membership_at(const LinearDatum& d, const Label& i,
                                                          size_t t, size_t tensor_cap) {
    const DatumIndex& target = d.at(i);
    // full Kronecker when it fits, otherwise the symmetric reduction
    double full = 1;
    for (size_t r = 0; r < t; ++r) full *= static_cast<double>(d.v_dim);
    std::vector<FpMatrix> gens;
    FpMatrix tvec;
    if (full <= static_cast<double>(tensor_cap)) {
        tvec = kron_power(target.phi, t, tensor_cap).transposed();
        for (const auto& ix : d.indices)
            if (!(ix.label == i)) gens.push_back(kron_power(ix.phi, t, tensor_cap).transposed());
    } else {
        auto omega = multisets(d.v_dim, t);
        if (omega.size() > tensor_cap) throw std::length_error("true_complexity: tensor cap exceeded");
        tvec = sym_power(target.phi, t, omega);
        for (const auto& ix : d.indices)
            if (!(ix.label == i)) gens.push_back(sym_power(ix.phi, t, omega));
    }
    return in_span(tvec, gens);
}

} // namespace detail

// Scans every degree t = 0..t_max for the span membership of the i-th tensor
// power among the others (the definition asks for the largest such t, with
// no monotonicity assumed), and produces witnesses both ways: membership
// coefficients at s, and a dual certificate of non-membership at s+1.
inline TrueComplexityResult true_complexity(const LinearDatum& d, const Label& i, size_t t_max,
                                            size_t tensor_cap = kDefaultTensorCap) {
    for (const auto& ix : d.indices)
        if (ix.w_dim != 1)
            throw std::invalid_argument("true_complexity: defined for systems of linear forms");
    if (d.indices.size() < 2)
        throw std::invalid_argument("true_complexity: need at least two forms");

    TrueComplexityResult res;
    bool found = false;
    for (size_t t = 0; t <= t_max; ++t) {
        auto c = detail::membership_at(d, i, t, tensor_cap);
        if (c) {
            res.s = t;
            res.coeffs = *c;
            found = true;
        }
    }
    if (!found) throw std::logic_error("true_complexity: degree 0 membership cannot fail");

    if (res.s < t_max) {
        size_t t = res.s + 1;
        res.dual_omega = multisets(d.v_dim, t);
        // rows: the other forms' compressed powers, then the target's; the
        // dual must annihilate the former and pair to 1 with the latter
        FpMatrix a(d.p, 0, res.dual_omega.size());
        for (const auto& ix : d.indices)
            if (!(ix.label == i)) a = a.rows() == 0
                                          ? sym_power(ix.phi, t, res.dual_omega).transposed()
                                          : a.vstack(sym_power(ix.phi, t, res.dual_omega).transposed());
        a = a.vstack(sym_power(d.at(i).phi, t, res.dual_omega).transposed());
        FpMatrix rhs(d.p, a.rows(), 1);
        rhs.at(a.rows() - 1, 0) = 1;
        auto y = solve(a, rhs);
        if (!y)
            throw std::logic_error("true_complexity: non-membership without a dual certificate");
        res.dual = *y;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Dual tensors in an adapted basis

struct DualTensor {
    FpMatrix basis;                       // columns e_1..e_d; phi_i0(e_l) = 0 for l >= 2
    uint32_t lambda = 1;                  // phi_i0(e_1)
    std::vector<std::vector<size_t>> omega; // degree-s multisets over [0, d)
    std::vector<uint32_t> beta;           // beta_(1..1) * lambda = 1; sum_tau beta_tau
                                          // prod_r phi_j(e_{tau_r}) = 0 for j != i0
};

// Basis adapted to i0 with small integer entries (products of two input
// coefficients), plus coefficients beta over degree-s multisets vanishing
// against every other form and normalized against phi_i0.  Requires
// non-membership at degree s, i.e. s(Phi, i0) <= s-1.
inline DualTensor dual_tensor(const LinearDatum& d, const Label& i0, size_t s,
                              size_t tensor_cap = kDefaultTensorCap) {
    for (const auto& ix : d.indices)
        if (ix.w_dim != 1) throw std::invalid_argument("dual_tensor: expected forms");
    if (detail::membership_at(d, i0, s, tensor_cap))
        throw std::invalid_argument("dual_tensor: hypothesis fails, span membership at degree " +
                                    std::to_string(s));
    const FpMatrix& phi0 = d.at(i0).phi;
    Fp f(d.p);

    size_t c0 = 0;
    while (c0 < d.v_dim && phi0.at(0, c0) == 0) ++c0;
    if (c0 == d.v_dim) throw std::invalid_argument("dual_tensor: zero form at " + i0.str());
    uint32_t lambda = phi0.at(0, c0);

    DualTensor out;
    out.lambda = lambda;
    out.basis = FpMatrix(d.p, d.v_dim, d.v_dim);
    out.basis.at(c0, 0) = 1; // e_1 = eps_c0
    size_t col = 1;
    for (size_t c = 0; c < d.v_dim; ++c) {
        if (c == c0) continue;
        out.basis.at(c, col) = lambda;
        out.basis.at(c0, col) = f.sub(out.basis.at(c0, col), phi0.at(0, c));
        ++col;
    }

    out.omega = multisets(d.v_dim, s);
    // constraints: one row per other form, then the normalization row
    std::vector<FpMatrix> adapted; // phi_j in the adapted basis
    for (const auto& ix : d.indices) adapted.push_back(ix.phi * out.basis);
    FpMatrix a(d.p, 0, out.omega.size());
    for (size_t r = 0; r < d.indices.size(); ++r) {
        if (d.indices[r].label == i0) continue;
        FpMatrix row = sym_power(adapted[r], s, out.omega).transposed();
        a = a.rows() == 0 ? row : a.vstack(row);
    }
    FpMatrix norm_row(d.p, 1, out.omega.size());
    norm_row.at(0, 0) = 1; // multiset (1,...,1) is first in enumeration order
    a = a.vstack(norm_row);
    FpMatrix rhs(d.p, a.rows(), 1);
    rhs.at(a.rows() - 1, 0) = f.inv(lambda);
    auto beta = solve(a, rhs);
    if (!beta) throw std::logic_error("dual_tensor: the adapted system is inconsistent");
    out.beta.resize(out.omega.size());
    for (size_t k = 0; k < out.omega.size(); ++k) out.beta[k] = beta->at(k, 0);
    return out;
}

// ---------------------------------------------------------------------------
// The two-index universal morphism

struct BabyWitness {
    std::vector<Label> part1, part2;
    FpMatrix mu0, mu1, mu2;
    DatumMorphism morphism; // baby_psi(a) -> Phi
};

// Searches for a partition and maps making Phi admit the universal datum of
// the bilinear bound: phi_{i,j} . mu0 = id, phi_{i,j} . mu1 = (a, 1)^T x,
// phi_{i,j} . mu2 = (1, a)^T x, with the part maps vanishing.
inline std::optional<BabyWitness> baby_universal(const LinearDatum& d, const Label& i,
                                                 const Label& j, int64_t a) {
    const DatumIndex& ix = d.at(i);
    const DatumIndex& jx = d.at(j);
    if (ix.w_dim != 1 || jx.w_dim != 1)
        throw std::invalid_argument("baby_universal: i and j must carry one-dimensional spaces");
    std::vector<const DatumIndex*> rest;
    for (const auto& kx : d.indices)
        if (!(kx.label == i) && !(kx.label == j)) rest.push_back(&kx);
    if (rest.size() > 20) throw std::invalid_argument("baby_universal: index set too large");

    FpMatrix pair = ix.phi.vstack(jx.phi);
    auto mu0 = right_inverse(pair);
    if (!mu0) return std::nullopt;

    for (size_t mask = 0; mask < (size_t{1} << rest.size()); ++mask) {
        auto stacked = [&](bool first_part, const FpMatrix& rhs_top) {
            FpMatrix m = pair;
            std::vector<int64_t> rhs = {rhs_top.at(0, 0), rhs_top.at(1, 0)};
            for (size_t b = 0; b < rest.size(); ++b) {
                bool in1 = mask & (size_t{1} << b);
                if (in1 != first_part) continue;
                m = m.vstack(rest[b]->phi);
                for (size_t r = 0; r < rest[b]->w_dim; ++r) rhs.push_back(0);
            }
            return std::make_pair(m, FpMatrix::col_vector(d.p, rhs));
        };
        auto [m1, r1] = stacked(true, FpMatrix::col_vector(d.p, {a, 1}));
        auto mu1 = solve(m1, r1);
        if (!mu1) continue;
        auto [m2, r2] = stacked(false, FpMatrix::col_vector(d.p, {1, a}));
        auto mu2 = solve(m2, r2);
        if (!mu2) continue;

        BabyWitness w;
        w.mu0 = *mu0;
        w.mu1 = *mu1;
        w.mu2 = *mu2;
        for (size_t b = 0; b < rest.size(); ++b)
            (mask & (size_t{1} << b) ? w.part1 : w.part2).push_back(rest[b]->label);

        DatumMorphism& mo = w.morphism;
        mo.source = data::baby_psi(d.p, a);
        mo.target = d;
        mo.theta = FpMatrix(d.p, d.v_dim, 4);
        for (size_t r = 0; r < d.v_dim; ++r) {
            mo.theta.at(r, 0) = mu0->at(r, 0);
            mo.theta.at(r, 1) = mu0->at(r, 1);
            mo.theta.at(r, 2) = mu1->at(r, 0);
            mo.theta.at(r, 3) = mu2->at(r, 0);
        }
        mo.alpha[i] = Label{"1"};
        mo.sigma[i] = FpMatrix::identity(d.p, 1);
        mo.alpha[j] = Label{"2"};
        mo.sigma[j] = FpMatrix::identity(d.p, 1);
        for (size_t b = 0; b < rest.size(); ++b) {
            bool in1 = mask & (size_t{1} << b);
            mo.alpha[rest[b]->label] = Label{in1 ? "3" : "4"};
            // W_3 carries (x, y, w), W_4 carries (x, y, z)
            FpMatrix other = in1 ? *mu2 : *mu1;
            FpMatrix sig(d.p, rest[b]->w_dim, 3);
            FpMatrix c0 = rest[b]->phi * mu0->col(0);
            FpMatrix c1 = rest[b]->phi * mu0->col(1);
            FpMatrix c2 = rest[b]->phi * other;
            for (size_t r = 0; r < rest[b]->w_dim; ++r) {
                sig.at(r, 0) = c0.at(r, 0);
                sig.at(r, 1) = c1.at(r, 0);
                sig.at(r, 2) = c2.at(r, 0);
            }
            mo.sigma[rest[b]->label] = std::move(sig);
        }
        if (verify_datum_morphism(mo).ok) return w;
    }
    return std::nullopt;
}

} // namespace csd
