#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "csd/entail.hpp"

namespace csd {

// A gate: a diagram with modes {1..num_modes} and a partition of its leaves
// into pins (the interface) and toggles (to be distributed over the modes).
struct Gate {
    Diagram d;
    size_t num_modes = 0;
    std::vector<Label> pins;    // canonical labels
    std::vector<Label> toggles; // canonical labels

    bool is_pin(const Label& l) const {
        Label c = d.resolve(l);
        for (const Label& q : pins)
            if (q == c) return true;
        return false;
    }
};

// Verifies the pins/toggles partition of the gate itself.
inline void check_gate(const Gate& g) {
    std::set<Label> leaves;
    for (const Label& l : g.d.leaves()) leaves.insert(l);
    std::set<Label> seen;
    for (const Label& l : g.pins)
        if (!leaves.count(g.d.resolve(l)) || !seen.insert(g.d.resolve(l)).second)
            throw std::invalid_argument("gate: bad pin " + l.str());
    for (const Label& l : g.toggles)
        if (!leaves.count(g.d.resolve(l)) || !seen.insert(g.d.resolve(l)).second)
            throw std::invalid_argument("gate: bad toggle " + l.str());
    if (seen.size() != leaves.size())
        throw std::invalid_argument("gate: pins and toggles do not partition the leaves");
    if (g.num_modes == 0) throw std::invalid_argument("gate: no modes");
}

// Mode data of an assignment: the domain diagram D_r with a leaf-to-pin
// bijection, and the morphism into the restricted gate diagram.
struct ModeAssignment {
    Diagram domain;
    std::map<Label, Label> pin_of_leaf; // domain leaf -> gate pin
    DiagramMorphism m;                  // domain -> D[nonleaves + pins (+ S_r)]
};

struct GateAssignment {
    std::map<Label, size_t> toggle_mode;  // toggle -> mode in [1..num_modes]
    std::vector<ModeAssignment> modes;    // index 0 = M_0, index r = M_r
};

struct AssignmentReport {
    bool ok = false;
    std::string error;
    explicit operator bool() const { return ok; }
};

inline std::vector<Label> assignment_part(const Gate& g, const GateAssignment& a, size_t r) {
    std::vector<Label> out;
    for (const Label& t : g.toggles) {
        auto it = a.toggle_mode.find(g.d.resolve(t));
        if (it != a.toggle_mode.end() && it->second == r) out.push_back(g.d.resolve(t));
    }
    return out;
}

// Checks the partition, the shapes, and all morphism conditions: M_r
// verifies into D[nonleaves + pins + S_r], respects every pin under the
// leaf bijection, and sends every toggle of S_r to ZEROI.
inline AssignmentReport verify_assignment(const Gate& g, const GateAssignment& a) {
    AssignmentReport rep;
    auto fail = [&](std::string e) {
        rep.ok = false;
        rep.error = std::move(e);
        return rep;
    };
    try {
        check_gate(g);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (a.modes.size() != g.num_modes + 1) return fail("assignment: wrong number of modes");
    for (const Label& t : g.toggles) {
        auto it = a.toggle_mode.find(g.d.resolve(t));
        if (it == a.toggle_mode.end() || it->second < 1 || it->second > g.num_modes)
            return fail("assignment: toggle " + t.str() + " not assigned a mode");
    }
    if (a.toggle_mode.size() != g.toggles.size())
        return fail("assignment: partition keys do not match the toggles");

    for (size_t r = 0; r <= g.num_modes; ++r) {
        const ModeAssignment& ma = a.modes[r];
        std::vector<Label> keep = g.pins;
        std::vector<Label> part = r == 0 ? std::vector<Label>{} : assignment_part(g, a, r);
        for (const Label& l : part) keep.push_back(l);
        Diagram restricted = restrict_to_leaves(g.d, keep);

        DiagramMorphismReport mr = verify_diagram_morphism(ma.m, ma.domain, restricted);
        if (!mr.ok)
            return fail("mode " + std::to_string(r) + ": morphism rejected: " + mr.error +
                        (mr.failed_to.empty() ? "" : " at " + mr.failed_to.str()));
        // leaf bijection covers the pins exactly
        std::set<Label> hit;
        for (const auto& [leaf, pin] : ma.pin_of_leaf) {
            if (!ma.domain.is_leaf(leaf)) return fail("mode " + std::to_string(r) + ": bad bijection leaf");
            if (!g.is_pin(pin)) return fail("mode " + std::to_string(r) + ": bijection misses pin set");
            if (!hit.insert(g.d.resolve(pin)).second)
                return fail("mode " + std::to_string(r) + ": bijection not injective");
        }
        if (hit.size() != g.pins.size() || ma.pin_of_leaf.size() != ma.domain.leaves().size())
            return fail("mode " + std::to_string(r) + ": bijection is not a leaf-pin matching");
        for (const auto& [leaf, pin] : ma.pin_of_leaf) {
            Label q = g.d.resolve(pin);
            auto alpha = ma.m.alpha_of(q);
            if (!alpha || !(ma.domain.resolve(*alpha) == ma.domain.resolve(leaf)))
                return fail("mode " + std::to_string(r) + ": pin " + q.str() +
                            " does not pull back to its leaf");
            if (!mr.respects(q))
                return fail("mode " + std::to_string(r) + ": pin " + q.str() + " not respected");
        }
        for (const Label& l : part) {
            if (ma.m.alpha_of(l)) return fail("mode " + std::to_string(r) + ": toggle " + l.str() +
                                              " must map to ZEROI");
        }
    }
    rep.ok = true;
    return rep;
}

// Reindexes the modes through a permutation perm (new mode = perm[old]);
// toggles and the mode list move together.
inline GateAssignment permute_assignment(const GateAssignment& a,
                                         const std::map<size_t, size_t>& perm) {
    GateAssignment out;
    out.modes.resize(a.modes.size());
    out.modes[0] = a.modes[0];
    for (size_t r = 1; r < a.modes.size(); ++r) out.modes.at(perm.at(r)) = a.modes[r];
    for (const auto& [t, r] : a.toggle_mode) out.toggle_mode[t] = perm.at(r);
    return out;
}

// The transposition permutation swapping 1 <-> r.
inline std::map<size_t, size_t> swap_modes(size_t num_modes, size_t a, size_t b) {
    std::map<size_t, size_t> p;
    for (size_t r = 1; r <= num_modes; ++r) p[r] = r;
    p[a] = b;
    p[b] = a;
    return p;
}

// ---------------------------------------------------------------------------
// Builder for composite diagrams assembled from prefixed copies with fused
// leaves, keeping per-copy views (local canonical label -> global label).

class DiagramBuilder {
public:
    explicit DiagramBuilder(uint32_t p) : p_(p) {}

    void add_sub(const std::string& prefix, const Diagram& sub) {
        if (sub.p != p_) throw std::invalid_argument("DiagramBuilder: modulus mismatch");
        subs_.emplace_back(prefix, sub);
    }
    // Fuse two leaves (global labels); the result is a non-leaf.
    void fuse(const Label& a, const Label& b) { fusions_.emplace_back(a, b); }
    void add_alias(const Label& alias, const Label& target) { extra_aliases_.emplace_back(alias, target); }

    struct Built {
        Diagram d;
        std::map<std::string, std::map<Label, Label>> views; // prefix -> local -> global
    };

    Built build() const {
        // collect prefixed vertices
        struct Entry {
            Label global;
            size_t dim;
            bool leaf;
        };
        std::vector<Entry> entries;
        std::map<Label, size_t> pos;
        std::map<Label, Label> local_resolved; // prefixed raw -> prefixed canonical
        for (const auto& [prefix, sub] : subs_) {
            for (const auto& v : sub.vertices) {
                Label g = v.label.prefixed(prefix);
                pos[g] = entries.size();
                entries.push_back({g, v.dim, v.leaf});
            }
            for (const auto& [al, ca] : sub.aliases)
                local_resolved[al.prefixed(prefix)] = ca.prefixed(prefix);
        }
        auto canon_prefixed = [&](const Label& l) {
            auto it = local_resolved.find(l);
            return it == local_resolved.end() ? l : it->second;
        };

        // union-find over fused vertices
        std::map<Label, Label> up;
        std::function<Label(const Label&)> find = [&](const Label& l) -> Label {
            auto it = up.find(l);
            if (it == up.end() || it->second == l) return l;
            Label root = find(it->second);
            up[l] = root;
            return root;
        };
        for (const auto& [a, b] : fusions_) {
            Label ca = find(canon_prefixed(a)), cb = find(canon_prefixed(b));
            if (!pos.count(ca) || !pos.count(cb))
                throw std::invalid_argument("DiagramBuilder: fusing unknown vertex " + a.str());
            if (!entries[pos.at(ca)].leaf || !entries[pos.at(cb)].leaf)
                throw std::invalid_argument("DiagramBuilder: fusions must join leaves: " + a.str() +
                                            " <-> " + b.str());
            if (entries[pos.at(ca)].dim != entries[pos.at(cb)].dim)
                throw std::invalid_argument("DiagramBuilder: fusion dimension mismatch at " + a.str());
            if (ca == cb) continue;
            Label root = ca < cb ? ca : cb;
            Label other = ca < cb ? cb : ca;
            up[other] = root;
            up[root] = root;
        }
        std::set<Label> fused_roots;
        for (const auto& [a, b] : fusions_) {
            (void)b;
            fused_roots.insert(find(canon_prefixed(a)));
        }

        Built out;
        out.d.p = p_;
        for (const auto& e : entries) {
            Label root = find(e.global);
            if (root == e.global)
                out.d.add_vertex(root, e.dim, e.leaf && !fused_roots.count(root));
        }
        for (const auto& e : entries) {
            Label root = find(e.global);
            if (root != e.global) out.d.add_alias(e.global, root);
        }
        for (const auto& [prefix, sub] : subs_) {
            for (const auto& ed : sub.edges) {
                Label f = find(canon_prefixed(sub.vertices[ed.from].label.prefixed(prefix)));
                Label t = find(canon_prefixed(sub.vertices[ed.to].label.prefixed(prefix)));
                out.d.add_edge(f, t, ed.phi);
            }
            std::map<Label, Label>& view = out.views[prefix];
            for (const auto& v : sub.vertices) view[v.label] = find(v.label.prefixed(prefix));
            for (const auto& [al, ca] : sub.aliases) {
                view[al] = find(ca.prefixed(prefix));
                out.d.add_alias(al.prefixed(prefix), view[al]);
            }
        }
        for (const auto& [al, tgt] : extra_aliases_) out.d.add_alias(al, out.d.resolve(tgt));
        return out;
    }

private:
    uint32_t p_;
    std::vector<std::pair<std::string, Diagram>> subs_;
    std::vector<std::pair<Label, Label>> fusions_;
    std::vector<std::pair<Label, Label>> extra_aliases_;
};

// ---------------------------------------------------------------------------
// Composition of assignments over sub-gates

// One sub-gate of a composite: its local gate structure (on the intact local
// diagram), its chosen assignment, and the view into the global diagram.
struct SubAssignment {
    std::string name;
    const Gate* gate = nullptr;
    const GateAssignment* assignment = nullptr;
    const std::map<Label, Label>* view = nullptr; // local canonical -> global canonical
};

// Per-mode wire tables: for every global vertex that is a fused sub-pin (or
// a big pin, where it may be omitted), the value map V^{D_r} -> V_vertex.
using WireTable = std::map<Label, FpMatrix>;

// Assembles the big assignment: each sub-morphism is specialized through a
// morphism bigD_r -> D_r^sub determined by the wire values at the sub's
// pins, translated into global labels, and all parts are patched.  The big
// domains must be single-center star diagrams.
inline GateAssignment compose_gate_assignment(const Gate& big,
                                              const std::vector<Diagram>& domains,
                                              const std::vector<std::map<Label, Label>>& pin_bijections,
                                              const std::vector<SubAssignment>& subs,
                                              const std::vector<WireTable>& wires) {
    if (domains.size() != big.num_modes + 1 || wires.size() != domains.size() ||
        pin_bijections.size() != domains.size())
        throw std::invalid_argument("compose_gate_assignment: mode count mismatch");
    uint32_t p = big.d.p;

    GateAssignment out;
    out.modes.resize(domains.size());

    // the toggle partition is the union of the sub partitions
    for (const SubAssignment& sub : subs) {
        for (const auto& [t, r] : sub.assignment->toggle_mode) {
            Label g = big.d.resolve(sub.view->at(sub.gate->d.resolve(t)));
            auto it = out.toggle_mode.find(g);
            if (it != out.toggle_mode.end() && it->second != r)
                throw std::invalid_argument("compose_gate_assignment: toggle " + g.str() +
                                            " claimed by two sub-gates");
            out.toggle_mode[g] = r;
        }
    }

    for (size_t r = 0; r < domains.size(); ++r) {
        const Diagram& dom = domains[r];
        if (dom.nonleaves().size() != 1)
            throw std::invalid_argument("compose_gate_assignment: domain must be a star");
        Label center = dom.nonleaves()[0];
        size_t vdim = dom.dim_of(center);

        // wire value at a global vertex; big-pin values default to the
        // domain's own leaf maps through the bijection
        auto wire_at = [&](const Label& g) -> std::optional<FpMatrix> {
            auto it = wires[r].find(g);
            if (it != wires[r].end()) return it->second;
            for (const auto& [leaf, pin] : pin_bijections[r])
                if (big.d.resolve(pin) == g) return *dom.parent_of(leaf).second;
            return std::nullopt;
        };

        DiagramMorphism assembled;
        std::set<Label> covered;
        for (const SubAssignment& sub : subs) {
            const ModeAssignment& sma = sub.assignment->modes[r];
            if (sma.domain.nonleaves().size() != 1)
                throw std::invalid_argument("compose_gate_assignment: sub domain must be a star");
            Label scenter = sma.domain.nonleaves()[0];

            // specialization theta for the sub-domain center: solve the
            // stacked pin equations against the wire values
            FpMatrix lhs(p, 0, sma.domain.dim_of(scenter));
            FpMatrix rhs(p, 0, vdim);
            std::map<Label, FpMatrix> leaf_values;
            for (const auto& [leaf, pin] : sma.pin_of_leaf) {
                Label g = big.d.resolve(sub.view->at(sub.gate->d.resolve(pin)));
                auto val = wire_at(g);
                if (!val)
                    throw std::invalid_argument("compose_gate_assignment: missing wire value at " +
                                                g.str());
                const FpMatrix& phi = *sma.domain.parent_of(leaf).second;
                lhs = lhs.rows() == 0 ? phi : lhs.vstack(phi);
                rhs = rhs.rows() == 0 ? *val : rhs.vstack(*val);
                leaf_values[sma.domain.resolve(leaf)] = *val;
            }
            auto sp_theta = solve(lhs, rhs);
            if (!sp_theta)
                throw std::invalid_argument("compose_gate_assignment: wire values inconsistent for " +
                                            sub.name + " mode " + std::to_string(r));

            // composite part morphism on the sub's slice of the big diagram
            for (const auto& [tgt_local, alpha_local] : sma.m.alpha) {
                Label g = big.d.resolve(sub.view->at(sub.gate->d.resolve(tgt_local)));
                std::optional<Label> alpha_big;
                FpMatrix theta_big(p, 0, 0);
                if (!alpha_local) {
                    theta_big = FpMatrix::zero(p, big.d.dim_of(g), 0);
                } else if (sma.domain.is_leaf(*alpha_local)) {
                    Label leaf = sma.domain.resolve(*alpha_local);
                    Label bigpin;
                    for (const auto& [dleaf, dpin] : pin_bijections[r]) {
                        Label gq = big.d.resolve(dpin);
                        // this sub-pin survives as a big pin exactly when the
                        // wire source is a domain leaf
                        if (big.d.is_leaf(gq) && gq == g) bigpin = dom.resolve(dleaf);
                    }
                    if (!bigpin.empty() && big.d.is_leaf(g)) {
                        alpha_big = bigpin;
                        theta_big = sma.m.theta_of(tgt_local);
                    } else {
                        alpha_big = center;
                        theta_big = sma.m.theta_of(tgt_local) * leaf_values.at(leaf);
                    }
                } else {
                    alpha_big = center;
                    theta_big = sma.m.theta_of(tgt_local) * *sp_theta;
                }
                auto prev_a = assembled.alpha.find(g);
                if (prev_a != assembled.alpha.end()) {
                    bool same = (!prev_a->second && !alpha_big) ||
                                (prev_a->second && alpha_big && *prev_a->second == *alpha_big);
                    if (!same || assembled.theta.at(g) != theta_big)
                        throw std::invalid_argument("compose_gate_assignment: parts disagree at " +
                                                    g.str());
                } else {
                    assembled.alpha[g] = alpha_big;
                    assembled.theta[g] = std::move(theta_big);
                }
                covered.insert(g);
            }
        }

        ModeAssignment ma;
        ma.domain = dom;
        ma.pin_of_leaf = pin_bijections[r];
        ma.m = std::move(assembled);
        out.modes[r] = std::move(ma);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural surjectivity and the universal morphism out of an assignment

// Section at a pin extracted from the mode-0 morphism: compose with the
// domain slot of the pin and extend over the missing toggle leaves.
inline SectionAt section_from_assignment(const Gate& g, const GateAssignment& a, const Label& pin) {
    const ModeAssignment& m0 = a.modes[0];
    Label q = g.d.resolve(pin);
    Label dleaf;
    for (const auto& [leaf, p] : m0.pin_of_leaf)
        if (g.d.resolve(p) == q) dleaf = leaf;
    if (dleaf.empty()) throw std::invalid_argument("section_from_assignment: unknown pin " + pin.str());

    // slot map V_q -> V^{D_0} hitting the leaf coordinate
    const FpMatrix& phi_leaf = *m0.domain.parent_of(dleaf).second;
    auto slot = right_inverse(phi_leaf);
    if (!slot) throw std::logic_error("section_from_assignment: domain leaf map not surjective");

    SectionAt s;
    s.at = q;
    // component at x = theta_x composed with the slot value at alpha(x)
    for (const auto& [tgt, alpha] : m0.m.alpha) {
        if (!alpha) throw std::logic_error("section_from_assignment: mode 0 uses ZEROI");
        Label src = m0.domain.resolve(*alpha);
        if (m0.domain.is_leaf(src)) {
            FpMatrix leafval = *m0.domain.parent_of(src).second * *slot;
            s.comp[tgt] = m0.m.theta_of(tgt) * leafval;
        } else {
            s.comp[tgt] = m0.m.theta_of(tgt) * *slot;
        }
    }
    s.comp[q] = FpMatrix::identity(g.d.p, g.d.dim_of(q));
    SectionAt full = extend_section_over_leaves(s, g.d);
    if (!verify_section(full, g.d))
        throw std::logic_error("section_from_assignment: assembled section fails verification");
    return full;
}

// For a single-pin gate with modes [s], the assignment with trivial domains
// yields the universal morphism gc_{s-1}(V_pin) -> D: block r of the gc
// coordinates flows through the extended mode-r family.
inline DiagramMorphism gc_morphism_from_assignment(const Gate& g, const GateAssignment& a,
                                                   const Diagram& gc_diag) {
    if (g.pins.size() != 1)
        throw std::invalid_argument("gc_morphism_from_assignment: expected a single pin");
    Label pin = g.d.resolve(g.pins[0]);
    size_t w = g.d.dim_of(pin);
    size_t s = g.num_modes;

    // extended per-mode family: maps V_pin -> V_x for every vertex
    std::vector<std::map<Label, FpMatrix>> fam(s + 1);
    for (size_t r = 1; r <= s; ++r) {
        const ModeAssignment& ma = a.modes[r];
        Label dleaf;
        for (const auto& [leaf, q] : ma.pin_of_leaf)
            if (g.d.resolve(q) == pin) dleaf = leaf;
        const FpMatrix& phi_leaf = *ma.domain.parent_of(dleaf).second;
        auto slot = right_inverse(phi_leaf);
        if (!slot) throw std::logic_error("gc_morphism_from_assignment: domain pin map not onto");
        SectionAt part;
        part.at = pin;
        for (const auto& [tgt, alpha] : ma.m.alpha) {
            if (!alpha) {
                part.comp[tgt] = FpMatrix::zero(g.d.p, g.d.dim_of(tgt), w);
            } else if (ma.domain.is_leaf(*alpha)) {
                FpMatrix leafval = *ma.domain.parent_of(ma.domain.resolve(*alpha)).second * *slot;
                part.comp[tgt] = ma.m.theta_of(tgt) * leafval;
            } else {
                part.comp[tgt] = ma.m.theta_of(tgt) * *slot;
            }
        }
        // extend over leaves missing from the mode-r restriction
        for (const auto& v : g.d.vertices) {
            if (part.comp.count(v.label)) continue;
            auto [parent, phi] = g.d.parent_of(v.label);
            part.comp[v.label] = *phi * part.comp.at(g.d.resolve(parent));
        }
        fam[r] = std::move(part.comp);
    }

    DiagramMorphism out;
    for (const auto& v : g.d.vertices) {
        Label dest;
        if (v.label == pin) {
            dest = Label{data::kTriangle};
        } else if (v.leaf) {
            size_t r = a.toggle_mode.at(v.label);
            dest = Label{std::to_string(r)};
        } else {
            dest = Label{kDiamond};
        }
        out.alpha[v.label] = dest;
        size_t cols = gc_diag.dim_of(dest);
        FpMatrix th(g.d.p, v.dim, cols);
        if (v.label == pin) {
            th = FpMatrix::identity(g.d.p, w);
        } else if (v.leaf) {
            size_t r0 = a.toggle_mode.at(v.label);
            // gc leaf r0 omits block r0-1; columns follow remaining blocks
            size_t blk = 0;
            for (size_t r = 1; r <= s; ++r) {
                if (r == r0) continue;
                const FpMatrix& c = fam[r].at(v.label);
                for (size_t i = 0; i < v.dim; ++i)
                    for (size_t j = 0; j < w; ++j) th.at(i, blk * w + j) = c.at(i, j);
                ++blk;
            }
        } else {
            for (size_t r = 1; r <= s; ++r) {
                const FpMatrix& c = fam[r].at(v.label);
                for (size_t i = 0; i < v.dim; ++i)
                    for (size_t j = 0; j < w; ++j) th.at(i, (r - 1) * w + j) = c.at(i, j);
            }
        }
        out.theta[v.label] = std::move(th);
    }
    return out;
}

} // namespace csd
