#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "csd/datum.hpp"

namespace csd {

inline const char* kDiamond = "<>"; // the single non-leaf of diagram(Phi)

// A Cauchy-Schwarz diagram: a singly-connected DAG of F_p-spaces and maps
// with a designated set of leaves (in-degree 1, out-degree 0).  Vertices
// carry hierarchical labels; joining operations canonicalize fused vertices
// to the lexicographically least label and keep the others as aliases.
struct Diagram {
    struct Vertex {
        Label label;
        size_t dim = 0;
        bool leaf = false;
    };
    struct Edge {
        size_t from = 0, to = 0;
        FpMatrix phi; // dim(to) x dim(from)
    };

    uint32_t p = 2;
    std::vector<Vertex> vertices;
    std::vector<Edge> edges;
    std::map<Label, Label> aliases; // alias path -> canonical path

    size_t add_vertex(Label l, size_t dim, bool leaf) {
        if (index_.count(l)) throw std::invalid_argument("Diagram: duplicate vertex " + l.str());
        index_[l] = vertices.size();
        vertices.push_back({std::move(l), dim, leaf});
        return vertices.size() - 1;
    }
    void add_edge(const Label& from, const Label& to, FpMatrix phi) {
        size_t f = at(from), t = at(to);
        if (phi.rows() != vertices[t].dim || phi.cols() != vertices[f].dim)
            throw std::invalid_argument("Diagram: edge map shape mismatch " + from.str() + "->" + to.str());
        edges.push_back({f, t, std::move(phi)});
    }
    void add_alias(const Label& alias, const Label& canonical) {
        aliases[alias] = resolve(canonical);
    }

    // Canonical label for any known label (resolving aliases).
    Label resolve(const Label& l) const {
        auto it = aliases.find(l);
        return it == aliases.end() ? l : it->second;
    }
    bool has_vertex(const Label& l) const { return index_.count(resolve(l)) > 0; }
    size_t at(const Label& l) const {
        Label c = resolve(l);
        auto it = index_.find(c);
        if (it == index_.end()) throw std::invalid_argument("Diagram: unknown vertex " + l.str());
        return it->second;
    }
    const Vertex& vertex(const Label& l) const { return vertices[at(l)]; }
    size_t dim_of(const Label& l) const { return vertex(l).dim; }
    bool is_leaf(const Label& l) const { return vertex(l).leaf; }

    std::vector<Label> leaves() const {
        std::vector<Label> out;
        for (const auto& v : vertices)
            if (v.leaf) out.push_back(v.label);
        return out;
    }
    std::vector<Label> nonleaves() const {
        std::vector<Label> out;
        for (const auto& v : vertices)
            if (!v.leaf) out.push_back(v.label);
        return out;
    }
    // Unique parent of a leaf, with the connecting map.
    std::pair<Label, const FpMatrix*> parent_of(const Label& leaf) const {
        size_t t = at(leaf);
        for (const auto& e : edges)
            if (e.to == t) return {vertices[e.from].label, &e.phi};
        throw std::invalid_argument("Diagram: vertex has no parent: " + leaf.str());
    }

    void rebuild_index() {
        index_.clear();
        for (size_t i = 0; i < vertices.size(); ++i) index_[vertices[i].label] = i;
    }

    // Structural equality: same vertices (label, dim, leaf flag) and same
    // edge maps, regardless of storage order or aliases.
    bool operator==(const Diagram& o) const {
        if (p != o.p || vertices.size() != o.vertices.size() || edges.size() != o.edges.size())
            return false;
        auto vkey = [](const Diagram& d) {
            std::vector<std::tuple<Label, size_t, bool>> k;
            for (const auto& v : d.vertices) k.emplace_back(v.label, v.dim, v.leaf);
            std::sort(k.begin(), k.end());
            return k;
        };
        if (vkey(*this) != vkey(o)) return false;
        auto ekey = [](const Diagram& d) {
            std::vector<std::tuple<Label, Label, std::vector<uint32_t>>> k;
            for (const auto& e : d.edges)
                k.emplace_back(d.vertices[e.from].label, d.vertices[e.to].label, e.phi.entries());
            std::sort(k.begin(), k.end());
            return k;
        };
        return ekey(*this) == ekey(o);
    }
    bool operator!=(const Diagram& o) const { return !(*this == o); }

private:
    std::map<Label, size_t> index_;
};

struct DiagramReport {
    bool ok = true;
    std::string error;
    explicit operator bool() const { return ok; }
};

// Checks acyclicity, single-connectedness, leaf degree rules and edge map
// shapes.  For the layered diagrams produced by joinings (every vertex a
// source or a sink) single-connectedness reduces to the absence of parallel
// edges; general diagrams fall back to path counting.
inline DiagramReport validate(const Diagram& d) {
    DiagramReport rep;
    auto fail = [&](std::string e) {
        rep.ok = false;
        rep.error = std::move(e);
        return rep;
    };
    size_t n = d.vertices.size();
    std::vector<size_t> indeg(n, 0), outdeg(n, 0);
    std::set<std::pair<size_t, size_t>> seen;
    for (const auto& e : d.edges) {
        if (e.from == e.to) return fail("self-loop at " + d.vertices[e.from].label.str());
        if (!seen.insert({e.from, e.to}).second)
            return fail("parallel edges " + d.vertices[e.from].label.str() + " -> " +
                        d.vertices[e.to].label.str());
        if (e.phi.rows() != d.vertices[e.to].dim || e.phi.cols() != d.vertices[e.from].dim)
            return fail("edge map shape mismatch at " + d.vertices[e.from].label.str() + " -> " +
                        d.vertices[e.to].label.str());
        ++outdeg[e.from];
        ++indeg[e.to];
    }
    for (size_t i = 0; i < n; ++i) {
        if (!d.vertices[i].leaf) continue;
        if (indeg[i] != 1 || outdeg[i] != 0)
            return fail("leaf degree violation at " + d.vertices[i].label.str());
    }

    // topological order (Kahn), also detects cycles
    std::vector<size_t> order, deg = indeg;
    std::vector<std::vector<size_t>> succ(n);
    for (const auto& e : d.edges) succ[e.from].push_back(e.to);
    for (size_t i = 0; i < n; ++i)
        if (deg[i] == 0) order.push_back(i);
    for (size_t head = 0; head < order.size(); ++head)
        for (size_t t : succ[order[head]])
            if (--deg[t] == 0) order.push_back(t);
    if (order.size() != n) return fail("cycle detected");

    bool layered = true;
    for (size_t i = 0; i < n && layered; ++i)
        if (indeg[i] > 0 && outdeg[i] > 0) layered = false;
    if (layered) return rep; // no parallel edges + two layers => singly connected

    // path counting from each source, capped at 2
    std::vector<size_t> pos(n);
    for (size_t i = 0; i < n; ++i) pos[order[i]] = i;
    for (size_t s = 0; s < n; ++s) {
        std::vector<uint8_t> cnt(n, 0);
        cnt[s] = 1;
        for (size_t i = pos[s]; i < n; ++i) {
            size_t v = order[i];
            if (!cnt[v]) continue;
            for (size_t t : succ[v]) {
                cnt[t] = static_cast<uint8_t>(std::min<size_t>(2, cnt[t] + cnt[v]));
                if (cnt[t] > 1)
                    return fail("two paths " + d.vertices[s].label.str() + " -> " +
                                d.vertices[t].label.str());
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// datum(-) and diagram(-)

inline constexpr size_t kDatumOfCap = 40000000; // constraint matrix entries

struct DiagramDatum {
    LinearDatum datum;
    // kernel basis of the edge constraints: block rows per vertex, in the
    // order listed below; datum coordinates are columns of this matrix
    FpMatrix basis;
    std::vector<Label> order;
    std::map<Label, size_t> offset;

    // block of the basis giving the projection to a vertex
    FpMatrix projection(const Label& l) const {
        size_t off = offset.at(l);
        size_t dim = 0;
        for (size_t i = 0; i < order.size(); ++i)
            if (order[i] == l) {
                size_t next = i + 1 < order.size() ? offset.at(order[i + 1]) : basis.rows();
                dim = next - off;
            }
        return basis.row_slice(off, off + dim);
    }
};

// The limit space: compatible tuples (v_x) with phi_xy(v_x) = v_y, cut out
// of the direct sum by one row block per edge.  Vertex blocks are ordered by
// sorted label so coordinates do not depend on construction history.
inline DiagramDatum datum_of(const Diagram& d, size_t cap = kDatumOfCap) {
    DiagramDatum out;
    out.order.reserve(d.vertices.size());
    for (const auto& v : d.vertices) out.order.push_back(v.label);
    std::sort(out.order.begin(), out.order.end());

    size_t total = 0;
    for (const Label& l : out.order) {
        out.offset[l] = total;
        total += d.dim_of(l);
    }
    size_t crows = 0;
    for (const auto& e : d.edges) crows += d.vertices[e.to].dim;
    if (crows * total > cap) throw std::length_error("datum_of: constraint matrix over cap");

    FpMatrix c(d.p, crows, total);
    size_t r = 0;
    Fp f(d.p);
    for (const auto& e : d.edges) {
        const auto& vf = d.vertices[e.from];
        const auto& vt = d.vertices[e.to];
        size_t fo = out.offset.at(vf.label), to = out.offset.at(vt.label);
        for (size_t i = 0; i < vt.dim; ++i) {
            for (size_t j = 0; j < vf.dim; ++j) c.at(r + i, fo + j) = e.phi.at(i, j);
            c.at(r + i, to + i) = f.sub(c.at(r + i, to + i), 1);
        }
        r += vt.dim;
    }
    out.basis = crows == 0 ? FpMatrix::identity(d.p, total) : kernel_basis(c);

    out.datum.p = d.p;
    out.datum.v_dim = out.basis.cols();
    for (const auto& v : d.vertices) {
        if (!v.leaf) continue;
        size_t off = out.offset.at(v.label);
        out.datum.add_index(v.label, out.basis.row_slice(off, off + v.dim));
    }
    return out;
}

// The star diagram of a linear datum: one non-leaf plus a leaf per index.
inline Diagram diagram_of(const LinearDatum& phi) {
    Diagram d;
    d.p = phi.p;
    d.add_vertex(Label{kDiamond}, phi.v_dim, false);
    for (const auto& ix : phi.indices) {
        d.add_vertex(ix.label, ix.w_dim, true);
        d.add_edge(Label{kDiamond}, ix.label, ix.phi);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Diagram morphisms

// Morphism data for Theta : C -> D.  alpha maps vertices of the target D
// back to vertices of the source C (absent value = ZEROI, allowed only on
// leaves); theta_x : V^C_alpha(x) -> V^D_x.  The owning diagrams are passed
// separately so certificates and assignments can share them.
struct DiagramMorphism {
    std::map<Label, std::optional<Label>> alpha;
    std::map<Label, FpMatrix> theta;

    std::optional<Label> alpha_of(const Label& x) const {
        auto it = alpha.find(x);
        if (it == alpha.end()) return std::nullopt;
        return it->second;
    }
    const FpMatrix& theta_of(const Label& x) const {
        auto it = theta.find(x);
        if (it == theta.end())
            throw std::invalid_argument("DiagramMorphism: missing theta at " + x.str());
        return it->second;
    }
};

struct DiagramMorphismReport {
    bool ok = false;
    std::vector<Label> respected; // leaves
    std::string error;
    Label failed_from, failed_to;
    std::vector<uint32_t> witness;

    explicit operator bool() const { return ok; }
    bool respects(const Label& l) const {
        return std::find(respected.begin(), respected.end(), l) != respected.end();
    }
};

// Per-edge check of the commuting squares, with the zero-space and self-loop
// conventions: alpha(x) = ZEROI contributes zero maps, alpha(x) = alpha(y)
// an identity edge.  Reports the respected leaves.
inline DiagramMorphismReport verify_diagram_morphism(const DiagramMorphism& m, const Diagram& src,
                                                     const Diagram& tgt) {
    DiagramMorphismReport rep;
    auto fail = [&](std::string e) {
        rep.ok = false;
        rep.error = std::move(e);
        return rep;
    };

    for (const auto& v : tgt.vertices) {
        auto it = m.alpha.find(v.label);
        if (it == m.alpha.end()) return fail("alpha missing at " + v.label.str());
        const std::optional<Label>& a = it->second;
        if (!a && !v.leaf) return fail("alpha may be ZEROI only on leaves: " + v.label.str());
        if (a) {
            if (!src.has_vertex(*a)) return fail("alpha target unknown: " + a->str());
            const auto& sv = src.vertex(*a);
            if (v.leaf && !sv.leaf) return fail("leaf " + v.label.str() + " mapped to non-leaf");
            if (!v.leaf && sv.leaf) return fail("non-leaf " + v.label.str() + " mapped to leaf");
        }
        const FpMatrix& th = m.theta_of(v.label);
        size_t want_cols = a ? src.dim_of(*a) : 0;
        if (th.rows() != v.dim || th.cols() != want_cols)
            return fail("theta shape mismatch at " + v.label.str());
    }

    // alpha must preserve edges (up to the conventions)
    std::set<std::pair<Label, Label>> src_edges;
    for (const auto& e : src.edges)
        src_edges.insert({src.vertices[e.from].label, src.vertices[e.to].label});

    for (const auto& e : tgt.edges) {
        const auto& vf = tgt.vertices[e.from];
        const auto& vt = tgt.vertices[e.to];
        auto af = m.alpha_of(vf.label);
        auto at2 = m.alpha_of(vt.label);
        FpMatrix lhs(src.p, 0, 0), rhs(src.p, 0, 0);
        if (af && at2 && *af != *at2) {
            if (!src_edges.count({src.resolve(*af), src.resolve(*at2)}))
                return fail("alpha does not preserve edge " + vf.label.str() + " -> " + vt.label.str());
            // find the source edge map
            const FpMatrix* phi = nullptr;
            for (const auto& se : src.edges)
                if (src.vertices[se.from].label == src.resolve(*af) &&
                    src.vertices[se.to].label == src.resolve(*at2))
                    phi = &se.phi;
            lhs = m.theta_of(vt.label) * *phi;
        } else if (af && at2 && *af == *at2) {
            lhs = m.theta_of(vt.label); // implicit identity self-loop
        } else if (!af) {
            // theta_from is dim x 0; both composites are dim(to) x 0
            continue;
        } else { // at2 == ZEROI: target leaf forced to zero
            lhs = FpMatrix::zero(src.p, vt.dim, src.dim_of(*af));
        }
        rhs = e.phi * m.theta_of(vf.label);
        if (lhs != rhs) {
            rep.failed_from = vf.label;
            rep.failed_to = vt.label;
            for (size_t j = 0; j < lhs.cols(); ++j) {
                bool diff = false;
                for (size_t r = 0; r < lhs.rows(); ++r)
                    if (lhs.at(r, j) != rhs.at(r, j)) diff = true;
                if (diff) {
                    rep.witness.assign(lhs.cols(), 0);
                    rep.witness[j] = 1;
                    break;
                }
            }
            return fail("square does not commute on edge " + vf.label.str() + " -> " + vt.label.str());
        }
    }

    for (const auto& v : tgt.vertices) {
        if (!v.leaf) continue;
        auto a = m.alpha_of(v.label);
        if (!a) continue;
        bool unique = true;
        for (const auto& w : tgt.vertices) {
            if (!w.leaf || w.label == v.label) continue;
            auto b = m.alpha_of(w.label);
            if (b && src.resolve(*b) == src.resolve(*a)) unique = false;
        }
        if (!unique) continue;
        if (src.dim_of(*a) != v.dim) continue;
        if (!m.theta_of(v.label).is_identity()) continue;
        rep.respected.push_back(v.label);
    }
    rep.ok = true;
    return rep;
}

inline DiagramMorphism identity_diagram_morphism(const Diagram& d) {
    DiagramMorphism m;
    for (const auto& v : d.vertices) {
        m.alpha[v.label] = v.label;
        m.theta[v.label] = FpMatrix::identity(d.p, v.dim);
    }
    return m;
}

// Composite of Theta1 : D0 -> D1 and Theta2 : D1 -> D2; vertices of D2 pull
// back through alpha2 then alpha1.
inline DiagramMorphism compose_diagram_morphisms(const DiagramMorphism& theta2,
                                                 const DiagramMorphism& theta1, const Diagram& d2,
                                                 uint32_t p) {
    DiagramMorphism m;
    for (const auto& v : d2.vertices) {
        auto mid = theta2.alpha_of(v.label);
        const FpMatrix& t2 = theta2.theta_of(v.label);
        if (!mid) {
            m.alpha[v.label] = std::nullopt;
            m.theta[v.label] = FpMatrix::zero(p, v.dim, 0);
            continue;
        }
        auto a = theta1.alpha_of(*mid);
        m.alpha[v.label] = a;
        m.theta[v.label] = t2 * theta1.theta_of(*mid);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Functorial dictionary between datum morphisms and diagram morphisms.

// datum(Theta) for a diagram morphism Theta : C -> D, using the stored limit
// coordinates of both sides: theta is solved from the per-vertex maps, and
// sigma_i = theta_i on leaves.
inline DatumMorphism datum_of_morphism(const DiagramMorphism& m, const Diagram& src,
                                       const Diagram& tgt, const DiagramDatum& src_datum,
                                       const DiagramDatum& tgt_datum) {
    DatumMorphism out;
    out.source = src_datum.datum;
    out.target = tgt_datum.datum;
    // stack theta_x . (projection of source limit space to alpha(x)) in the
    // target's block order, then express in the target limit coordinates
    FpMatrix stacked(src.p, 0, src_datum.datum.v_dim);
    for (const Label& l : tgt_datum.order) {
        auto a = m.alpha_of(l);
        FpMatrix rows = a ? m.theta_of(l) * src_datum.projection(*a)
                          : FpMatrix::zero(src.p, tgt.dim_of(l), src_datum.datum.v_dim);
        stacked = stacked.rows() == 0 ? rows : stacked.vstack(rows);
    }
    auto theta = solve(tgt_datum.basis, stacked);
    if (!theta) throw std::logic_error("datum_of_morphism: transported tuples not compatible");
    out.theta = *theta;
    for (const auto& ix : tgt_datum.datum.indices) {
        auto a = m.alpha_of(ix.label);
        if (a && src.is_leaf(*a)) {
            out.alpha[ix.label] = src.resolve(*a);
            out.sigma[ix.label] = m.theta_of(ix.label);
        } else if (a) {
            throw std::logic_error("datum_of_morphism: leaf mapped to non-leaf");
        } else {
            out.alpha[ix.label] = std::nullopt;
            out.sigma[ix.label] = FpMatrix::zero(src.p, ix.w_dim, 0);
        }
    }
    return out;
}

// diagram(Theta) for a datum morphism: the star-to-star morphism with
// alpha(<>) = <>, theta_<> = theta, theta_j = sigma_j.
inline DiagramMorphism diagram_of_morphism(const DatumMorphism& m) {
    DiagramMorphism out;
    out.alpha[Label{kDiamond}] = Label{kDiamond};
    out.theta[Label{kDiamond}] = m.theta;
    for (const auto& ix : m.target.indices) {
        out.alpha[ix.label] = m.alpha_of(ix.label);
        out.theta[ix.label] = m.sigma_of(ix.label);
    }
    return out;
}

// The adjunction: morphisms diagram(Phi) -> D correspond to morphisms
// Phi -> datum(D).  Both directions are exact on representations.
inline DiagramMorphism adjunction_to_diagram(const DatumMorphism& m, const Diagram& d,
                                             const DiagramDatum& dd) {
    DiagramMorphism out;
    for (const auto& v : d.vertices) {
        if (v.leaf) {
            auto it = m.alpha.find(v.label);
            if (it == m.alpha.end())
                throw std::invalid_argument("adjunction: datum morphism missing index " + v.label.str());
            out.alpha[v.label] = it->second;
            out.theta[v.label] = m.sigma_of(v.label);
        } else {
            out.alpha[v.label] = Label{kDiamond};
            out.theta[v.label] = dd.projection(v.label) * m.theta;
        }
    }
    return out;
}

inline DatumMorphism adjunction_to_datum(const DiagramMorphism& m, const LinearDatum& phi,
                                         const Diagram& d, const DiagramDatum& dd) {
    DatumMorphism out;
    out.source = phi;
    out.target = dd.datum;
    FpMatrix stacked(phi.p, 0, phi.v_dim);
    for (const Label& l : dd.order) {
        auto a = m.alpha_of(l);
        FpMatrix rows(phi.p, d.dim_of(l), phi.v_dim);
        if (a) {
            if (*a == Label{kDiamond}) {
                rows = m.theta_of(l);
            } else {
                rows = m.theta_of(l) * phi.at(*a).phi;
            }
        }
        stacked = stacked.rows() == 0 ? rows : stacked.vstack(rows);
    }
    auto theta = solve(dd.basis, stacked);
    if (!theta) throw std::logic_error("adjunction_to_datum: tuples not compatible");
    out.theta = *theta;
    for (const auto& ix : dd.datum.indices) {
        auto a = m.alpha_of(ix.label);
        out.alpha[ix.label] = a;
        out.sigma[ix.label] = a ? m.theta_of(ix.label) : FpMatrix::zero(phi.p, ix.w_dim, 0);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Joinings, restrictions, leaf toggles, prefixing, relabelling

inline Diagram prefix_diagram(const Diagram& d, const std::string& tok) {
    Diagram out;
    out.p = d.p;
    for (const auto& v : d.vertices) out.add_vertex(v.label.prefixed(tok), v.dim, v.leaf);
    for (const auto& e : d.edges)
        out.add_edge(d.vertices[e.from].label.prefixed(tok), d.vertices[e.to].label.prefixed(tok),
                     e.phi);
    for (const auto& [a, c] : d.aliases) out.aliases[a.prefixed(tok)] = c.prefixed(tok);
    return out;
}

// Renames canonical vertices through `map` (identity where absent); aliases
// are carried along, also renamed when the map covers them.  Any bijective
// renaming is a strong isomorphism.
inline Diagram relabel_diagram(const Diagram& d, const std::map<Label, Label>& map) {
    auto ren = [&](const Label& l) {
        auto it = map.find(l);
        return it == map.end() ? l : it->second;
    };
    Diagram out;
    out.p = d.p;
    for (const auto& v : d.vertices) out.add_vertex(ren(v.label), v.dim, v.leaf);
    for (const auto& e : d.edges)
        out.add_edge(ren(d.vertices[e.from].label), ren(d.vertices[e.to].label), e.phi);
    for (const auto& [a, c] : d.aliases) {
        Label na = ren(a), nc = ren(c);
        if (na != nc) out.aliases[na] = nc;
    }
    return out;
}

// Joining of two diagrams along a matching of equal-dimensional leaves.
// Matched pairs are fused into a single non-leaf whose canonical label is
// the lexicographically least of the two, the other kept as an alias; for
// self-joins where both sides carry the same path, a "#"-prefixed alias is
// added to match the usual notation.
inline Diagram join_diagrams(const Diagram& d0, const Diagram& d1,
                             const std::vector<std::pair<Label, Label>>& beta,
                             JoinLabels mode = JoinLabels::PrefixBoth,
                             const std::string& ltok = "L", const std::string& rtok = "R") {
    if (d0.p != d1.p) throw std::invalid_argument("join_diagrams: modulus mismatch");
    for (const auto& [a, b] : beta) {
        if (!d0.is_leaf(a)) throw std::invalid_argument("join_diagrams: " + a.str() + " is not a leaf");
        if (!d1.is_leaf(b)) throw std::invalid_argument("join_diagrams: " + b.str() + " is not a leaf");
        if (d0.dim_of(a) != d1.dim_of(b))
            throw std::invalid_argument("join_diagrams: dimension mismatch at " + a.str() + "<->" + b.str());
    }
    auto lrename = [&](const Label& l) {
        return mode == JoinLabels::PrefixBoth ? l.prefixed(ltok) : l;
    };
    auto rrename = [&](const Label& l) { return l.prefixed(rtok); };

    // canonical label of each fused pair
    std::map<Label, Label> fuse_l, fuse_r; // resolved local label -> canonical joined label
    std::vector<std::pair<Label, Label>> extra_aliases;
    for (const auto& [a, b] : beta) {
        Label la = lrename(d0.resolve(a)), rb = rrename(d1.resolve(b));
        Label canon = la < rb ? la : rb;
        fuse_l[d0.resolve(a)] = canon;
        fuse_r[d1.resolve(b)] = canon;
        extra_aliases.emplace_back(la < rb ? rb : la, canon);
        if (mode == JoinLabels::PrefixBoth && d0.resolve(a) == d1.resolve(b))
            extra_aliases.emplace_back(d0.resolve(a).prefixed("#"), canon);
    }

    Diagram out;
    out.p = d0.p;
    for (const auto& v : d0.vertices) {
        auto it = fuse_l.find(v.label);
        if (it != fuse_l.end())
            out.add_vertex(it->second, v.dim, false);
        else
            out.add_vertex(lrename(v.label), v.dim, v.leaf);
    }
    for (const auto& v : d1.vertices) {
        auto it = fuse_r.find(v.label);
        if (it != fuse_r.end()) {
            if (!out.has_vertex(it->second)) out.add_vertex(it->second, v.dim, false);
        } else {
            out.add_vertex(rrename(v.label), v.dim, v.leaf);
        }
    }
    auto lmap = [&](const Label& l) {
        auto it = fuse_l.find(l);
        return it != fuse_l.end() ? it->second : lrename(l);
    };
    auto rmap = [&](const Label& l) {
        auto it = fuse_r.find(l);
        return it != fuse_r.end() ? it->second : rrename(l);
    };
    for (const auto& e : d0.edges)
        out.add_edge(lmap(d0.vertices[e.from].label), lmap(d0.vertices[e.to].label), e.phi);
    for (const auto& e : d1.edges)
        out.add_edge(rmap(d1.vertices[e.from].label), rmap(d1.vertices[e.to].label), e.phi);

    for (const auto& [a, c] : d0.aliases) out.add_alias(lrename(a), lmap(c));
    for (const auto& [a, c] : d1.aliases) out.add_alias(rrename(a), rmap(c));
    for (const auto& [a, c] : extra_aliases) out.add_alias(a, c);
    return out;
}

// Induced sub-diagram on `keep`; legal only if every surviving leaf keeps
// its parent.
inline Diagram restrict_diagram(const Diagram& d, const std::vector<Label>& keep) {
    std::set<Label> keepset;
    for (const Label& l : keep) keepset.insert(d.resolve(l));
    for (const Label& l : keepset)
        if (d.is_leaf(l)) {
            Label parent = d.parent_of(l).first;
            if (!keepset.count(d.resolve(parent)))
                throw std::invalid_argument("restrict_diagram: leaf " + l.str() + " would lose its parent");
        }
    Diagram out;
    out.p = d.p;
    for (const auto& v : d.vertices)
        if (keepset.count(v.label)) out.add_vertex(v.label, v.dim, v.leaf);
    for (const auto& e : d.edges) {
        const Label& f = d.vertices[e.from].label;
        const Label& t = d.vertices[e.to].label;
        if (keepset.count(f) && keepset.count(t)) out.add_edge(f, t, e.phi);
    }
    for (const auto& [a, c] : d.aliases)
        if (keepset.count(c)) out.aliases[a] = c;
    return out;
}

// Convenience: keep all non-leaves plus the listed leaves.
inline Diagram restrict_to_leaves(const Diagram& d, const std::vector<Label>& leaves) {
    std::vector<Label> keep = d.nonleaves();
    for (const Label& l : leaves) keep.push_back(l);
    return restrict_diagram(d, keep);
}

// Flip leaf status.  Leaves become non-leaves freely; the reverse direction
// requires the degree conditions to hold and is validated.
inline Diagram toggle_leaves(const Diagram& d, const std::vector<Label>& ys) {
    Diagram out = d;
    for (const Label& y : ys) {
        size_t i = out.at(y);
        out.vertices[i].leaf = !out.vertices[i].leaf;
    }
    DiagramReport rep = validate(out);
    if (!rep.ok) throw std::invalid_argument("toggle_leaves: " + rep.error);
    return out;
}

// ---------------------------------------------------------------------------
// Patching (gluing morphisms along a cover)

struct PatchPart {
    std::vector<Label> cover;  // target vertices this part is defined on
    DiagramMorphism morphism;  // C -> D[cover]
};

// Reassembles a single morphism C -> D from morphisms into restrictions
// covering all vertices and edges, requiring exact agreement on overlaps.
inline DiagramMorphism patch_morphisms(const std::vector<PatchPart>& parts, const Diagram& src,
                                       const Diagram& tgt) {
    DiagramMorphism out;
    std::set<Label> covered;
    for (const auto& part : parts) {
        for (const Label& raw : part.cover) {
            Label l = tgt.resolve(raw);
            auto a = part.morphism.alpha_of(l);
            const FpMatrix& th = part.morphism.theta_of(l);
            auto it = out.alpha.find(l);
            if (it == out.alpha.end()) {
                out.alpha[l] = a;
                out.theta[l] = th;
            } else {
                bool same_alpha = (!a && !it->second) ||
                                  (a && it->second && src.resolve(*a) == src.resolve(*it->second));
                if (!same_alpha || out.theta[l] != th)
                    throw std::invalid_argument("patch_morphisms: parts disagree at " + l.str());
            }
            covered.insert(l);
        }
    }
    for (const auto& v : tgt.vertices)
        if (!covered.count(v.label))
            throw std::invalid_argument("patch_morphisms: vertex not covered: " + v.label.str());
    for (const auto& e : tgt.edges) {
        const Label& f = tgt.vertices[e.from].label;
        const Label& t = tgt.vertices[e.to].label;
        bool edge_covered = false;
        for (const auto& part : parts) {
            std::set<Label> cv;
            for (const Label& raw : part.cover) cv.insert(tgt.resolve(raw));
            if (cv.count(f) && cv.count(t)) edge_covered = true;
        }
        if (!edge_covered)
            throw std::invalid_argument("patch_morphisms: edge not covered: " + f.str() + " -> " + t.str());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Surjectivity sections

// Witness that D is surjective at a vertex j: a compatible family of maps
// psi_x : V_j -> V_x with psi_j = id.  Equivalently a linear section of the
// limit-space projection, but representable without the limit space, which
// is what makes large-scale stash discarding possible.
struct SectionAt {
    Label at;
    std::map<Label, FpMatrix> comp;

    const FpMatrix& of(const Label& l) const {
        auto it = comp.find(l);
        if (it == comp.end()) throw std::invalid_argument("SectionAt: missing component " + l.str());
        return it->second;
    }
};

inline bool verify_section(const SectionAt& s, const Diagram& d) {
    Label j = d.resolve(s.at);
    size_t w = d.dim_of(j);
    for (const auto& v : d.vertices) {
        auto it = s.comp.find(v.label);
        if (it == s.comp.end()) return false;
        if (it->second.rows() != v.dim || it->second.cols() != w) return false;
    }
    if (!s.of(j).is_identity()) return false;
    for (const auto& e : d.edges) {
        const Label& f = d.vertices[e.from].label;
        const Label& t = d.vertices[e.to].label;
        if (e.phi * s.of(f) != s.of(t)) return false;
    }
    return true;
}

// Direct computation via the limit space: right inverse of the projection.
inline std::optional<SectionAt> section_direct(const Diagram& d, const Label& at,
                                               size_t cap = kDatumOfCap) {
    DiagramDatum dd = datum_of(d, cap);
    Label j = d.resolve(at);
    FpMatrix proj = dd.projection(j);
    auto psi = right_inverse(proj);
    if (!psi) return std::nullopt;
    FpMatrix tuple = dd.basis * *psi;
    SectionAt s;
    s.at = j;
    for (const Label& l : dd.order) {
        size_t off = dd.offset.at(l);
        s.comp[l] = tuple.row_slice(off, off + d.dim_of(l));
    }
    return s;
}

// Morphism-transported section: if Theta : C -> D, C has a section at
// alpha(x0) and theta_x0 is surjective, then D has a section at x0.
inline std::optional<SectionAt> section_via_morphism(const SectionAt& src_section,
                                                     const DiagramMorphism& m, const Diagram& src,
                                                     const Diagram& tgt, const Label& x0) {
    Label t0 = tgt.resolve(x0);
    auto a0 = m.alpha_of(t0);
    if (!a0 || src.resolve(*a0) != src.resolve(src_section.at)) return std::nullopt;
    auto rho = right_inverse(m.theta_of(t0));
    if (!rho) return std::nullopt;
    SectionAt out;
    out.at = t0;
    for (const auto& v : tgt.vertices) {
        auto a = m.alpha_of(v.label);
        FpMatrix n = a ? m.theta_of(v.label) * src_section.of(src.resolve(*a))
                       : FpMatrix::zero(tgt.p, v.dim, src.dim_of(src_section.at));
        out.comp[v.label] = n * *rho;
    }
    if (!verify_section(out, tgt)) return std::nullopt;
    return out;
}

// Extends a section defined on a sub-diagram missing some leaves: each
// absent leaf takes phi_parent,leaf composed with the parent's component.
inline SectionAt extend_section_over_leaves(const SectionAt& s, const Diagram& d) {
    SectionAt out = s;
    for (const auto& v : d.vertices) {
        if (out.comp.count(v.label)) continue;
        if (!v.leaf) throw std::invalid_argument("extend_section_over_leaves: missing non-leaf " + v.label.str());
        auto [parent, phi] = d.parent_of(v.label);
        out.comp[v.label] = *phi * out.of(d.resolve(parent));
    }
    return out;
}

struct SurjectivityResult {
    enum class Status { Surjective, NotSurjective, Undecided } status;
    std::optional<SectionAt> section;
    std::string note;
};

// Decides surjectivity at a vertex: by direct limit-space computation when
// the diagram is small enough, else undecided unless a structural section is
// supplied by the caller.
inline SurjectivityResult surjective_at(const Diagram& d, const Label& x,
                                        size_t cap = kDatumOfCap) {
    SurjectivityResult res{SurjectivityResult::Status::Undecided, std::nullopt, ""};
    try {
        auto s = section_direct(d, x, cap);
        if (s) {
            res.status = SurjectivityResult::Status::Surjective;
            res.section = std::move(s);
            res.note = "direct limit-space computation";
        } else {
            res.status = SurjectivityResult::Status::NotSurjective;
            res.note = "projection rank deficient";
        }
    } catch (const std::length_error&) {
        res.note = "diagram too large for direct computation; supply a structural section";
    }
    return res;
}

} // namespace csd
