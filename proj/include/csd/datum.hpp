#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csd/label.hpp"
#include "csd/matrix.hpp"

namespace csd {

// A linear datum: index set I, ambient space V = F_p^v_dim, and a linear map
// phi_i : V -> W_i per index.  The index map to the zero space (ZEROI) is
// never stored; morphisms represent it as an absent alpha value.
struct DatumIndex {
    Label label;
    size_t w_dim = 0;
    FpMatrix phi; // w_dim x v_dim
};

struct LinearDatum {
    uint32_t p = 2;
    size_t v_dim = 0;
    std::vector<DatumIndex> indices; // insertion-ordered

    const DatumIndex* find(const Label& l) const {
        for (const auto& ix : indices)
            if (ix.label == l) return &ix;
        return nullptr;
    }
    const DatumIndex& at(const Label& l) const {
        const DatumIndex* ix = find(l);
        if (!ix) throw std::invalid_argument("LinearDatum: unknown index " + l.str());
        return *ix;
    }
    void add_index(Label l, FpMatrix phi) {
        if (find(l)) throw std::invalid_argument("LinearDatum: duplicate index " + l.str());
        if (phi.cols() != v_dim) throw std::invalid_argument("LinearDatum: phi column mismatch at " + l.str());
        indices.push_back({std::move(l), phi.rows(), std::move(phi)});
    }
    std::vector<Label> labels() const {
        std::vector<Label> out;
        out.reserve(indices.size());
        for (const auto& ix : indices) out.push_back(ix.label);
        return out;
    }
    bool operator==(const LinearDatum& o) const {
        if (p != o.p || v_dim != o.v_dim || indices.size() != o.indices.size()) return false;
        for (size_t i = 0; i < indices.size(); ++i)
            if (indices[i].label != o.indices[i].label || indices[i].phi != o.indices[i].phi) return false;
        return true;
    }
};

// Morphism Theta : source -> target.  alpha maps target indices back to
// source indices (absent value = ZEROI); theta : V^source -> V^target;
// sigma_i : W^source_alpha(i) -> W^target_i (w_i x 0 matrix when ZEROI).
struct DatumMorphism {
    LinearDatum source;
    LinearDatum target;
    std::map<Label, std::optional<Label>> alpha;
    FpMatrix theta;
    std::map<Label, FpMatrix> sigma;

    std::optional<Label> alpha_of(const Label& i) const {
        auto it = alpha.find(i);
        if (it == alpha.end()) return std::nullopt;
        return it->second;
    }
    const FpMatrix& sigma_of(const Label& i) const {
        auto it = sigma.find(i);
        if (it == sigma.end()) throw std::invalid_argument("DatumMorphism: missing sigma at " + i.str());
        return it->second;
    }
};

struct MorphismReport {
    bool ok = false;
    std::vector<Label> respected;
    std::string error;
    Label failed_at;
    std::vector<uint32_t> witness; // source-space vector exhibiting the failure

    explicit operator bool() const { return ok; }
    bool respects(const Label& l) const {
        return std::find(respected.begin(), respected.end(), l) != respected.end();
    }
};

// Checks the commuting square sigma_i . phi^src_alpha(i) = phi^tgt_i . theta
// for every target index, bit-exactly.  Reports the set of respected indices:
// alpha(i) defined, injective at i among target indices, equal W spaces and
// identity sigma.
inline MorphismReport verify_datum_morphism(const DatumMorphism& m) {
    MorphismReport rep;
    if (m.theta.rows() != m.target.v_dim || m.theta.cols() != m.source.v_dim) {
        rep.error = "theta shape mismatch";
        return rep;
    }
    for (const auto& ix : m.target.indices) {
        auto a = m.alpha_of(ix.label);
        const FpMatrix& sig = m.sigma_of(ix.label);
        FpMatrix lhs(m.source.p, 0, 0);
        if (a) {
            const DatumIndex* src = m.source.find(*a);
            if (!src) {
                rep.error = "alpha(" + ix.label.str() + ") refers to unknown source index " + a->str();
                rep.failed_at = ix.label;
                return rep;
            }
            if (sig.rows() != ix.w_dim || sig.cols() != src->w_dim) {
                rep.error = "sigma shape mismatch at " + ix.label.str();
                rep.failed_at = ix.label;
                return rep;
            }
            lhs = sig * src->phi;
        } else {
            if (sig.rows() != ix.w_dim || sig.cols() != 0) {
                rep.error = "sigma at " + ix.label.str() + " must be " + std::to_string(ix.w_dim) + "x0 for ZEROI";
                rep.failed_at = ix.label;
                return rep;
            }
            lhs = FpMatrix::zero(m.source.p, ix.w_dim, m.source.v_dim);
        }
        FpMatrix rhs = ix.phi * m.theta;
        if (lhs != rhs) {
            rep.error = "square does not commute at index " + ix.label.str();
            rep.failed_at = ix.label;
            // witness: first basis vector where the composites differ
            for (size_t j = 0; j < m.source.v_dim; ++j) {
                bool diff = false;
                for (size_t r = 0; r < ix.w_dim; ++r)
                    if (lhs.at(r, j) != rhs.at(r, j)) diff = true;
                if (diff) {
                    rep.witness.assign(m.source.v_dim, 0);
                    rep.witness[j] = 1;
                    break;
                }
            }
            return rep;
        }
    }
    // respected indices
    for (const auto& ix : m.target.indices) {
        auto a = m.alpha_of(ix.label);
        if (!a) continue;
        bool unique = true;
        for (const auto& jx : m.target.indices) {
            if (jx.label == ix.label) continue;
            auto b = m.alpha_of(jx.label);
            if (b && *b == *a) unique = false;
        }
        if (!unique) continue;
        const DatumIndex& src = m.source.at(*a);
        if (src.w_dim != ix.w_dim) continue;
        if (!m.sigma_of(ix.label).is_identity()) continue;
        rep.respected.push_back(ix.label);
    }
    rep.ok = true;
    return rep;
}

inline DatumMorphism identity_morphism(const LinearDatum& d) {
    DatumMorphism m;
    m.source = d;
    m.target = d;
    m.theta = FpMatrix::identity(d.p, d.v_dim);
    for (const auto& ix : d.indices) {
        m.alpha[ix.label] = ix.label;
        m.sigma[ix.label] = FpMatrix::identity(d.p, ix.w_dim);
    }
    return m;
}

// Composite of Theta1 : A -> B and Theta2 : B -> C.
inline DatumMorphism compose(const DatumMorphism& theta2, const DatumMorphism& theta1) {
    if (!(theta1.target == theta2.source))
        throw std::invalid_argument("compose: endpoint mismatch");
    DatumMorphism m;
    m.source = theta1.source;
    m.target = theta2.target;
    m.theta = theta2.theta * theta1.theta;
    for (const auto& ix : m.target.indices) {
        auto mid = theta2.alpha_of(ix.label);
        const FpMatrix& s2 = theta2.sigma_of(ix.label);
        if (!mid) {
            m.alpha[ix.label] = std::nullopt;
            m.sigma[ix.label] = FpMatrix::zero(m.source.p, ix.w_dim, 0);
            continue;
        }
        auto src = theta1.alpha_of(*mid);
        m.alpha[ix.label] = src;
        m.sigma[ix.label] = s2 * theta1.sigma_of(*mid);
    }
    return m;
}

enum class JoinLabels { PrefixBoth, KeepLeft };

// Joining of two data along a partial matching of indices with equal W
// spaces.  V is the fiber product, realized as the kernel of the stacked
// difference map inside V0 (+) V1; the kernel basis from rref fixes the
// coordinates.  Matched indices disappear; the rest survive with fresh
// prefixes (or untouched on the left for KeepLeft).
inline LinearDatum join_data(const LinearDatum& d0, const LinearDatum& d1,
                             const std::vector<std::pair<Label, Label>>& beta,
                             JoinLabels mode = JoinLabels::PrefixBoth,
                             const std::string& ltok = "L", const std::string& rtok = "R") {
    if (d0.p != d1.p) throw std::invalid_argument("join_data: modulus mismatch");
    uint32_t p = d0.p;
    FpMatrix stack(p, 0, d0.v_dim + d1.v_dim);
    for (const auto& [i0, i1] : beta) {
        const DatumIndex& a = d0.at(i0);
        const DatumIndex& b = d1.at(i1);
        if (a.w_dim != b.w_dim)
            throw std::invalid_argument("join_data: matched spaces differ at " + i0.str() + "<->" + i1.str());
        FpMatrix row = a.phi.hstack(b.phi.scaled(-1));
        stack = stack.rows() == 0 ? row : stack.vstack(row);
    }
    FpMatrix k = stack.rows() == 0 ? FpMatrix::identity(p, d0.v_dim + d1.v_dim) : kernel_basis(stack);
    FpMatrix k0 = k.row_slice(0, d0.v_dim);
    FpMatrix k1 = k.row_slice(d0.v_dim, d0.v_dim + d1.v_dim);

    auto matched0 = [&](const Label& l) {
        for (const auto& pr : beta)
            if (pr.first == l) return true;
        return false;
    };
    auto matched1 = [&](const Label& l) {
        for (const auto& pr : beta)
            if (pr.second == l) return true;
        return false;
    };

    LinearDatum out;
    out.p = p;
    out.v_dim = k.cols();
    for (const auto& ix : d0.indices) {
        if (matched0(ix.label)) continue;
        Label l = mode == JoinLabels::PrefixBoth ? ix.label.prefixed(ltok) : ix.label;
        out.add_index(l, ix.phi * k0);
    }
    for (const auto& ix : d1.indices) {
        if (matched1(ix.label)) continue;
        out.add_index(ix.label.prefixed(rtok), ix.phi * k1);
    }
    return out;
}

// Self-joining along the diagonal of S; the Cauchy-Schwarz construction.
inline LinearDatum self_join(const LinearDatum& d, const std::vector<Label>& s) {
    std::vector<std::pair<Label, Label>> beta;
    for (const Label& l : s) beta.emplace_back(l, l);
    return join_data(d, d, beta);
}

inline LinearDatum restrict_datum(const LinearDatum& d, const std::vector<Label>& keep) {
    LinearDatum out;
    out.p = d.p;
    out.v_dim = d.v_dim;
    for (const Label& l : keep) out.add_index(l, d.at(l).phi);
    return out;
}

// The canonical morphism d -> d[keep]: identity shape on the survivors.
inline DatumMorphism restriction_map(const LinearDatum& d, const std::vector<Label>& keep) {
    DatumMorphism m;
    m.source = d;
    m.target = restrict_datum(d, keep);
    m.theta = FpMatrix::identity(d.p, d.v_dim);
    for (const Label& l : keep) {
        m.alpha[l] = l;
        m.sigma[l] = FpMatrix::identity(d.p, d.at(l).w_dim);
    }
    return m;
}

// Co-restriction d<J>: intersect the kernels of the maps in J and drop them.
// Returns the datum together with the canonical inclusion morphism into d.
inline std::pair<LinearDatum, DatumMorphism> corestrict_datum(const LinearDatum& d,
                                                              const std::vector<Label>& j) {
    FpMatrix stack(d.p, 0, d.v_dim);
    for (const Label& l : j) {
        const FpMatrix& phi = d.at(l).phi;
        stack = stack.rows() == 0 ? phi : stack.vstack(phi);
    }
    FpMatrix incl = stack.rows() == 0 ? FpMatrix::identity(d.p, d.v_dim) : kernel_basis(stack);

    LinearDatum out;
    out.p = d.p;
    out.v_dim = incl.cols();
    auto dropped = [&](const Label& l) { return std::find(j.begin(), j.end(), l) != j.end(); };
    for (const auto& ix : d.indices)
        if (!dropped(ix.label)) out.add_index(ix.label, ix.phi * incl);

    DatumMorphism m;
    m.source = out;
    m.target = d;
    m.theta = incl;
    for (const auto& ix : d.indices) {
        if (dropped(ix.label)) {
            m.alpha[ix.label] = std::nullopt;
            m.sigma[ix.label] = FpMatrix::zero(d.p, ix.w_dim, 0);
        } else {
            m.alpha[ix.label] = ix.label;
            m.sigma[ix.label] = FpMatrix::identity(d.p, ix.w_dim);
        }
    }
    return {out, m};
}

struct NormalizeResult {
    LinearDatum quotient;        // V/K, same index spaces
    DatumMorphism quotient_map;  // d -> quotient, respects every index
    DatumMorphism section_map;   // quotient -> d, respects every index
    LinearDatum normalized;      // quotient with each W_i shrunk to im phi_i
    DatumMorphism inclusion_map; // normalized -> quotient, respects indices already surjective
};

// Quotient by the joint kernel, then shrink every W_i to the image of phi_i.
// The complement of K is spanned by the standard basis vectors away from the
// pivot columns of rref(K^T), which keeps everything deterministic.
inline NormalizeResult normalize(const LinearDatum& d) {
    uint32_t p = d.p;
    FpMatrix stack(p, 0, d.v_dim);
    for (const auto& ix : d.indices)
        stack = stack.rows() == 0 ? ix.phi : stack.vstack(ix.phi);
    FpMatrix k = stack.rows() == 0 ? FpMatrix::identity(p, d.v_dim) : kernel_basis(stack);

    RrefResult kt = rref(k.transposed());
    std::vector<bool> in_k_support(d.v_dim, false);
    for (size_t c : kt.pivots) in_k_support[c] = true;

    size_t qdim = d.v_dim - k.cols();
    FpMatrix section(p, d.v_dim, qdim); // embeds the complement
    {
        size_t col = 0;
        for (size_t i = 0; i < d.v_dim; ++i)
            if (!in_k_support[i]) section.at(i, col++) = 1;
    }
    // Projection along K onto the complement: last qdim rows of M^{-1} where
    // M = [K | section].
    FpMatrix m = k.cols() == 0 ? section : k.hstack(section);
    FpMatrix minv = *solve(m, FpMatrix::identity(p, d.v_dim));
    FpMatrix proj = minv.row_slice(k.cols(), d.v_dim);

    NormalizeResult res;
    res.quotient.p = p;
    res.quotient.v_dim = qdim;
    for (const auto& ix : d.indices) res.quotient.add_index(ix.label, ix.phi * section);

    res.quotient_map.source = d;
    res.quotient_map.target = res.quotient;
    res.quotient_map.theta = proj;
    res.section_map.source = res.quotient;
    res.section_map.target = d;
    res.section_map.theta = section;
    for (const auto& ix : d.indices) {
        res.quotient_map.alpha[ix.label] = ix.label;
        res.quotient_map.sigma[ix.label] = FpMatrix::identity(p, ix.w_dim);
        res.section_map.alpha[ix.label] = ix.label;
        res.section_map.sigma[ix.label] = FpMatrix::identity(p, ix.w_dim);
    }

    res.normalized.p = p;
    res.normalized.v_dim = qdim;
    res.inclusion_map.target = res.quotient;
    res.inclusion_map.theta = FpMatrix::identity(p, qdim);
    for (const auto& ix : res.quotient.indices) {
        FpMatrix basis = column_space_basis(ix.phi);
        // coordinates of phi in the image basis
        FpMatrix coord = basis.cols() == 0 ? FpMatrix::zero(p, 0, qdim) : *solve(basis, ix.phi);
        res.normalized.add_index(ix.label, coord);
        res.inclusion_map.alpha[ix.label] = ix.label;
        res.inclusion_map.sigma[ix.label] = basis;
    }
    res.inclusion_map.source = res.normalized;
    return res;
}

// Strong isomorphism search between data with identical index labels and W
// dimensions: solve the stacked system phi^b . theta = phi^a for theta and
// check invertibility.  Used to operationalize "equal up to canonical
// isomorphism" claims.
inline std::optional<DatumMorphism> find_strong_iso(const LinearDatum& a, const LinearDatum& b) {
    if (a.p != b.p || a.v_dim != b.v_dim || a.indices.size() != b.indices.size()) return std::nullopt;
    uint32_t p = a.p;
    FpMatrix lhs(p, 0, b.v_dim), rhs(p, 0, a.v_dim);
    for (const auto& ix : a.indices) {
        const DatumIndex* jx = b.find(ix.label);
        if (!jx || jx->w_dim != ix.w_dim) return std::nullopt;
        lhs = lhs.rows() == 0 ? jx->phi : lhs.vstack(jx->phi);
        rhs = rhs.rows() == 0 ? ix.phi : rhs.vstack(ix.phi);
    }
    auto theta = solve(lhs, rhs);
    if (!theta) return std::nullopt;
    if (rank(*theta) != a.v_dim) return std::nullopt;

    DatumMorphism m;
    m.source = a;
    m.target = b;
    m.theta = *theta;
    for (const auto& ix : b.indices) {
        m.alpha[ix.label] = ix.label;
        m.sigma[ix.label] = FpMatrix::identity(p, ix.w_dim);
    }
    if (!verify_datum_morphism(m).ok) return std::nullopt;
    return m;
}

// ---------------------------------------------------------------------------
// Standard linear data.

namespace data {

inline LinearDatum trivial(uint32_t p, const std::vector<std::pair<Label, size_t>>& spaces) {
    LinearDatum d;
    d.p = p;
    for (const auto& [l, w] : spaces) d.v_dim += w;
    size_t off = 0;
    for (const auto& [l, w] : spaces) {
        FpMatrix phi(p, w, d.v_dim);
        for (size_t r = 0; r < w; ++r) phi.at(r, off + r) = 1;
        d.add_index(l, phi);
        off += w;
    }
    return d;
}

inline LinearDatum trivial(uint32_t p, const std::vector<Label>& labels) {
    std::vector<std::pair<Label, size_t>> spaces;
    for (const Label& l : labels) spaces.emplace_back(l, 1);
    return trivial(p, spaces);
}

inline LinearDatum constant(uint32_t p, const std::vector<Label>& labels, size_t w = 1) {
    LinearDatum d;
    d.p = p;
    d.v_dim = w;
    for (const Label& l : labels) d.add_index(l, FpMatrix::identity(p, w));
    return d;
}

inline std::vector<Label> cube_labels(size_t k) {
    std::vector<Label> out;
    for (size_t x = 0; x < (size_t{1} << k); ++x) {
        std::string s;
        for (size_t b = 0; b < k; ++b) s += ((x >> (k - 1 - b)) & 1) ? '1' : '0';
        out.push_back(Label{s});
    }
    return out;
}

// U^k(W): index set {0,1}^k, V = W^{k+1}, phi_w(x, h_1..h_k) = x + sum w_i h_i.
inline LinearDatum uk(uint32_t p, size_t k, size_t w = 1) {
    LinearDatum d;
    d.p = p;
    d.v_dim = (k + 1) * w;
    for (const Label& l : cube_labels(k)) {
        const std::string& bits = l.toks[0];
        FpMatrix phi(p, w, d.v_dim);
        for (size_t r = 0; r < w; ++r) phi.at(r, r) = 1;
        for (size_t b = 0; b < k; ++b)
            if (bits[b] == '1')
                for (size_t r = 0; r < w; ++r) phi.at(r, (b + 1) * w + r) = 1;
        d.add_index(l, phi);
    }
    return d;
}

inline const char* kTriangle = "^"; // the distinguished "sum" index of gc_s

// Generalized convolution datum gc_s(U), U = F_p^u: V = U^{s+1},
// phi_^ sums the blocks and phi_i omits block i.
inline LinearDatum gc(uint32_t p, size_t s, size_t u = 1) {
    LinearDatum d;
    d.p = p;
    d.v_dim = (s + 1) * u;
    FpMatrix tri(p, u, d.v_dim);
    for (size_t b = 0; b <= s; ++b)
        for (size_t r = 0; r < u; ++r) tri.at(r, b * u + r) = 1;
    d.add_index(Label{kTriangle}, tri);
    for (size_t i = 1; i <= s + 1; ++i) {
        FpMatrix phi(p, s * u, d.v_dim);
        size_t rr = 0;
        for (size_t b = 0; b <= s; ++b) {
            if (b == i - 1) continue;
            for (size_t r = 0; r < u; ++r) phi.at(rr * u + r, b * u + r) = 1;
            ++rr;
        }
        d.add_index(Label{std::to_string(i)}, phi);
    }
    return d;
}

// k-term arithmetic progressions x, x+h, ..., x+(k-1)h.
inline LinearDatum ap(uint32_t p, size_t k) {
    LinearDatum d;
    d.p = p;
    d.v_dim = 2;
    for (size_t i = 1; i <= k; ++i)
        d.add_index(Label{std::to_string(i)}, FpMatrix(p, 1, 2, {1, static_cast<int64_t>(i - 1)}));
    return d;
}

inline LinearDatum sum(uint32_t p) { return uk(p, 2); }

// Sum(P): the co-restriction of U^2 to P.
inline LinearDatum sum_p(uint32_t p, const std::vector<Label>& keep) {
    std::vector<Label> drop;
    for (const Label& l : cube_labels(2))
        if (std::find(keep.begin(), keep.end(), l) == keep.end()) drop.push_back(l);
    return corestrict_datum(sum(p), drop).first;
}

// crs^tau: pairs (00, tau) and (tau', 11) carry equal values.
inline LinearDatum crs(uint32_t p, const std::string& tau) {
    if (tau != "01" && tau != "10") throw std::invalid_argument("crs: tau must be 01 or 10");
    std::string tau2 = tau == "01" ? "10" : "01";
    LinearDatum d;
    d.p = p;
    d.v_dim = 2;
    d.add_index(Label{"00"}, FpMatrix(p, 1, 2, {1, 0}));
    FpMatrix x(p, 1, 2, {1, 0}), y(p, 1, 2, {0, 1});
    if (tau == "01") {
        d.add_index(Label{"01"}, x);
        d.add_index(Label{"10"}, y);
    } else {
        d.add_index(Label{"01"}, y);
        d.add_index(Label{"10"}, x);
    }
    d.add_index(Label{"11"}, y);
    return d;
}

// crs^tau with index eta forced to zero (co-restriction) ...
inline LinearDatum crs_zeroed(uint32_t p, const std::string& tau, const Label& eta) {
    return corestrict_datum(crs(p, tau), {eta}).first;
}
// ... or simply deleted (restriction).
inline LinearDatum crs_dropped(uint32_t p, const std::string& tau, const Label& eta) {
    LinearDatum c = crs(p, tau);
    std::vector<Label> keep;
    for (const auto& ix : c.indices)
        if (!(ix.label == eta)) keep.push_back(ix.label);
    return restrict_datum(c, keep);
}

// BigSum(m): m values with alternating-sign sum zero.  Uses labels X0..X(m-1);
// plain "0" would collide with the reserved ZEROI encoding in serialized form.
inline LinearDatum bigsum(uint32_t p, size_t m) {
    FpMatrix row(p, 1, m);
    Fp f(p);
    for (size_t i = 0; i < m; ++i) row.at(0, i) = (i % 2 == 0) ? 1 : f.neg(1);
    FpMatrix k = kernel_basis(row);
    LinearDatum d;
    d.p = p;
    d.v_dim = k.cols();
    for (size_t i = 0; i < m; ++i) d.add_index(Label{"X" + std::to_string(i)}, k.row_slice(i, i + 1));
    return d;
}

// lag(a, A): X = a x, Y = x;  lag(a, B): X = x, Y = a x.
inline LinearDatum lag(uint32_t p, int64_t a, char side) {
    LinearDatum d;
    d.p = p;
    d.v_dim = 1;
    if (side == 'A') {
        d.add_index(Label{"X"}, FpMatrix::scalar(p, a));
        d.add_index(Label{"Y"}, FpMatrix::scalar(p, 1));
    } else if (side == 'B') {
        d.add_index(Label{"X"}, FpMatrix::scalar(p, 1));
        d.add_index(Label{"Y"}, FpMatrix::scalar(p, a));
    } else {
        throw std::invalid_argument("lag: side must be A or B");
    }
    return d;
}

// The four two-dimensional data ag(i, A/B) on pins {X1, X2, Y1, Y2}.
inline LinearDatum ag(uint32_t p, int i, char side) {
    if ((i != 0 && i != 1) || (side != 'A' && side != 'B'))
        throw std::invalid_argument("ag: bad parameters");
    LinearDatum d;
    d.p = p;
    d.v_dim = 2;
    auto row = [&](int64_t cx, int64_t cy) { return FpMatrix(p, 1, 2, {cx, cy}); };
    if (side == 'A') {
        d.add_index(Label{"X1"}, row(1, 0));
        d.add_index(Label{"X2"}, i == 0 ? row(0, 2) : row(-2, 2));
        d.add_index(Label{"Y1"}, row(1, 0));
        d.add_index(Label{"Y2"}, row(0, 1));
    } else {
        d.add_index(Label{"X1"}, row(1, 0));
        d.add_index(Label{"X2"}, row(0, 1));
        d.add_index(Label{"Y1"}, i == 0 ? row(1, 0) : row(1, 2));
        d.add_index(Label{"Y2"}, row(0, 2));
    }
    return d;
}

// ag(i, j, sign, A/B) for the initial block: pins {X1, Y1, Y2}.
inline LinearDatum ag_initial(uint32_t p, int i, int j, int sign, char side) {
    if ((i != 0 && i != 1) || (j != 0 && j != 1) || (sign != 1 && sign != -1) ||
        (side != 'A' && side != 'B'))
        throw std::invalid_argument("ag_initial: bad parameters");
    LinearDatum d;
    d.p = p;
    int64_t c = i + 2 * j;
    if (side == 'A') {
        d.v_dim = 2;
        d.add_index(Label{"X1"}, FpMatrix(p, 1, 2, {sign * c, -2 * sign}));
        d.add_index(Label{"Y1"}, FpMatrix(p, 1, 2, {1, 0}));
        d.add_index(Label{"Y2"}, FpMatrix(p, 1, 2, {0, 1}));
    } else {
        d.v_dim = 1;
        d.add_index(Label{"X1"}, FpMatrix::scalar(p, 1));
        d.add_index(Label{"Y1"}, FpMatrix::scalar(p, sign * c));
        d.add_index(Label{"Y2"}, FpMatrix::scalar(p, 2 * sign));
    }
    return d;
}

// Final-block variants: the A side forces Y2 to zero, the B side drops it.
inline LinearDatum ag_final(uint32_t p, int i, char side) {
    if (side == 'A') return corestrict_datum(ag(p, i, 'A'), {Label{"Y2"}}).first;
    return restrict_datum(ag(p, i, 'B'), {Label{"X1"}, Label{"X2"}, Label{"Y1"}});
}
inline LinearDatum ag_initial_final(uint32_t p, int i, int j, int sign, char side) {
    if (side == 'A') return corestrict_datum(ag_initial(p, i, j, sign, 'A'), {Label{"Y2"}}).first;
    return restrict_datum(ag_initial(p, i, j, sign, 'B'), {Label{"X1"}, Label{"Y1"}});
}

// The universal datum for the two-index bilinear bound: V = F_p^4 on
// coordinates (x, y, z, w), with phi_1 = x + a z + w and phi_2 = y + z + a w.
inline LinearDatum baby_psi(uint32_t p, int64_t a) {
    LinearDatum d;
    d.p = p;
    d.v_dim = 4;
    d.add_index(Label{"1"}, FpMatrix(p, 1, 4, {1, 0, a, 1}));
    d.add_index(Label{"2"}, FpMatrix(p, 1, 4, {0, 1, 1, a}));
    FpMatrix phi3(p, 3, 4);
    phi3.at(0, 0) = 1;
    phi3.at(1, 1) = 1;
    phi3.at(2, 3) = 1;
    d.add_index(Label{"3"}, phi3);
    FpMatrix phi4(p, 3, 4);
    phi4.at(0, 0) = 1;
    phi4.at(1, 1) = 1;
    phi4.at(2, 2) = 1;
    d.add_index(Label{"4"}, phi4);
    return d;
}

// System of forms given as integer coefficient rows over F_p^d.
inline LinearDatum forms(uint32_t p, size_t d_dim, const std::vector<std::vector<int64_t>>& rows,
                         const std::vector<Label>& labels = {}) {
    LinearDatum d;
    d.p = p;
    d.v_dim = d_dim;
    for (size_t i = 0; i < rows.size(); ++i) {
        Label l = labels.empty() ? Label{std::to_string(i + 1)} : labels[i];
        std::vector<int64_t> row = rows[i];
        d.add_index(l, FpMatrix(p, 1, d_dim, std::move(row)));
    }
    return d;
}

// The six-form model system x, x+z, x+y, x+y+z, x+2y+3z, 2x+3y+6z.
inline LinearDatum gw_example(uint32_t p) {
    return forms(p, 3,
                 {{1, 0, 0}, {1, 0, 1}, {1, 1, 0}, {1, 1, 1}, {1, 2, 3}, {2, 3, 6}});
}
// Variant with the last form replaced by 13x+12y+9z.
inline LinearDatum gw_variant(uint32_t p) {
    return forms(p, 3,
                 {{1, 0, 0}, {1, 0, 1}, {1, 1, 0}, {1, 1, 1}, {1, 2, 3}, {13, 12, 9}});
}
// Nine forms y+z and rx+r^2y+z for r = 0..7.
inline LinearDatum asym_example(uint32_t p) {
    std::vector<std::vector<int64_t>> rows = {{0, 1, 1}};
    for (int64_t r = 0; r <= 7; ++r) rows.push_back({r, r * r, 1});
    return forms(p, 3, rows);
}

} // namespace data

} // namespace csd
