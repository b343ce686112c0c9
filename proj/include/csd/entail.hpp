#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "csd/diagram.hpp"

namespace csd {

// Conjugation-aware leaf correspondence: gamma(j) = (i, b) records that the
// function at j is a translate (b = 0) or conjugate translate (b = 1) of the
// function at i.  Bits add mod 2 under composition.
struct Gamma {
    std::map<Label, std::pair<Label, int>> map;

    std::optional<std::pair<Label, int>> of(const Label& l) const {
        auto it = map.find(l);
        if (it == map.end()) return std::nullopt;
        return it->second;
    }
    void set(const Label& j, const Label& i, int bit) { map[j] = {i, bit & 1}; }

    static Gamma identity_on(const std::vector<Label>& leaves) {
        Gamma g;
        for (const Label& l : leaves) g.set(l, l, 0);
        return g;
    }
    // step after prev (rule (c)): follow step entries through prev.
    static Gamma composed(const Gamma& prev, const Gamma& step) {
        Gamma g;
        for (const auto& [j, v] : step.map) {
            auto up = prev.of(v.first);
            if (up) g.set(j, up->first, up->second + v.second);
        }
        return g;
    }
    // true if every entry of `sub` appears identically here
    bool extends(const Gamma& sub) const {
        for (const auto& [j, v] : sub.map) {
            auto mine = of(j);
            if (!mine || mine->first != v.first || mine->second != v.second) return false;
        }
        return true;
    }
};

// One Cauchy-Schwarz step: the self-joining along the diagonal of S, with
// L/R copies and the step gamma (L;i) -> (i,0), (R;i) -> (i,1).
inline std::pair<Diagram, Gamma> cs_step(const Diagram& d, const std::vector<Label>& s) {
    for (const Label& l : s)
        if (!d.is_leaf(l)) throw std::invalid_argument("cs_step: " + l.str() + " is not a leaf");
    std::vector<std::pair<Label, Label>> beta;
    for (const Label& l : s) beta.emplace_back(l, l);
    Diagram joined = join_diagrams(d, d, beta);
    Gamma g;
    std::set<Label> excluded;
    for (const Label& l : s) excluded.insert(d.resolve(l));
    for (const Label& l : d.leaves()) {
        if (excluded.count(l)) continue;
        g.set(l.prefixed("L"), l, 0);
        g.set(l.prefixed("R"), l, 1);
    }
    return {std::move(joined), std::move(g)};
}

// ---------------------------------------------------------------------------
// Certificates

struct CsStepData {
    std::vector<Label> leaves;
};
struct MorphStepData {
    Diagram next;        // the new diagram (morphism source)
    DiagramMorphism m;   // next -> current
};
struct RelabelStepData {
    std::map<Label, Label> map; // canonical renames; identity where absent
};
struct WeakenStepData {
    std::vector<Label> keep; // gamma domain to retain
    int k = 0;               // declared step-count floor (may only weaken up)
};
using ProofStep = std::variant<CsStepData, MorphStepData, RelabelStepData, WeakenStepData>;

struct EntailmentCertificate {
    Diagram initial;
    std::vector<ProofStep> steps;
    int claimed_k = 0;
    Gamma claimed_gamma;
    Diagram final;
};

struct ReplayReport {
    bool accepted = false;
    int k = 0; // number of CS steps (with weaken floors applied)
    Gamma gamma;
    Diagram final;
    std::string error;
    size_t failed_step = 0;
    std::vector<uint64_t> step_hashes;

    explicit operator bool() const { return accepted; }
};

// FNV-1a over the canonical (sorted) description; lets large replays be
// spot-checked against stored step digests without keeping intermediates.
inline uint64_t diagram_hash(const Diagram& d) {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    };
    std::vector<std::string> keys;
    for (const auto& v : d.vertices)
        keys.push_back("v:" + v.label.str() + ":" + std::to_string(v.dim) + (v.leaf ? ":L" : ":N"));
    for (const auto& e : d.edges) {
        std::string s = "e:" + d.vertices[e.from].label.str() + ">" + d.vertices[e.to].label.str();
        for (uint32_t x : e.phi.entries()) s += "," + std::to_string(x);
        keys.push_back(std::move(s));
    }
    std::sort(keys.begin(), keys.end());
    mix(std::to_string(d.p));
    for (const auto& k : keys) mix(k);
    return h;
}

// Runs the steps from the initial diagram, recomputing every intermediate
// diagram, counting CS steps and composing gamma.  Does not yet judge the
// claims; replay() below adds the acceptance checks.
inline ReplayReport run_steps(const Diagram& initial, const std::vector<ProofStep>& steps) {
    ReplayReport rep;
    auto fail = [&](size_t at, std::string e) {
        rep.accepted = false;
        rep.failed_step = at;
        rep.error = std::move(e);
        return rep;
    };

    DiagramReport v0 = validate(initial);
    if (!v0.ok) return fail(0, "initial diagram invalid: " + v0.error);
    Diagram current = initial;
    rep.gamma = Gamma::identity_on(current.leaves());
    rep.k = 0;

    for (size_t t = 0; t < steps.size(); ++t) {
        const ProofStep& step = steps[t];
        try {
            if (std::holds_alternative<CsStepData>(step)) {
                const auto& cs = std::get<CsStepData>(step);
                auto [next, g] = cs_step(current, cs.leaves);
                rep.gamma = Gamma::composed(rep.gamma, g);
                current = std::move(next);
                ++rep.k;
            } else if (std::holds_alternative<MorphStepData>(step)) {
                const auto& ms = std::get<MorphStepData>(step);
                DiagramReport vr = validate(ms.next);
                if (!vr.ok) return fail(t, "morph step: next diagram invalid: " + vr.error);
                DiagramMorphismReport mr = verify_diagram_morphism(ms.m, ms.next, current);
                if (!mr.ok) return fail(t, "morph step rejected: " + mr.error);
                Gamma g;
                for (const Label& i : mr.respected) {
                    auto a = ms.m.alpha_of(current.resolve(i));
                    g.set(ms.next.resolve(*a), current.resolve(i), 0);
                }
                rep.gamma = Gamma::composed(rep.gamma, g);
                current = ms.next;
            } else if (std::holds_alternative<RelabelStepData>(step)) {
                const auto& rs = std::get<RelabelStepData>(step);
                Diagram next = relabel_diagram(current, rs.map);
                Gamma g;
                auto ren = [&](const Label& l) {
                    auto it = rs.map.find(l);
                    return it == rs.map.end() ? l : it->second;
                };
                for (const Label& l : current.leaves()) g.set(ren(l), l, 0);
                rep.gamma = Gamma::composed(rep.gamma, g);
                current = std::move(next);
            } else {
                const auto& ws = std::get<WeakenStepData>(step);
                Gamma g;
                for (const Label& l : ws.keep) {
                    auto v = rep.gamma.of(current.resolve(l));
                    if (v) g.set(current.resolve(l), v->first, v->second);
                }
                rep.gamma = std::move(g);
                rep.k = std::max(rep.k, ws.k);
            }
        } catch (const std::exception& e) {
            return fail(t, std::string("step failed: ") + e.what());
        }
        rep.step_hashes.push_back(diagram_hash(current));
    }

    rep.final = std::move(current);
    rep.accepted = true;
    return rep;
}

// Full verification.  Accepts iff the steps replay, the final diagram
// matches, and the claimed (k, gamma) only weaken the computed ones:
// claimed_k may overstate the CS count, never understate it, and
// claimed_gamma must be a sub-function of the replayed gamma.
inline ReplayReport replay(const EntailmentCertificate& cert) {
    ReplayReport rep = run_steps(cert.initial, cert.steps);
    if (!rep.accepted) return rep;
    auto fail = [&](std::string e) {
        rep.accepted = false;
        rep.failed_step = cert.steps.size();
        rep.error = std::move(e);
        return rep;
    };
    if (rep.final != cert.final) return fail("final diagram mismatch");
    if (cert.claimed_k < rep.k) return fail("claimed k understates the CS step count");
    if (!rep.gamma.extends(cert.claimed_gamma))
        return fail("claimed gamma is not a sub-function of the replayed gamma");
    return rep;
}

// Replays the steps to fill in final, k, and the full gamma; use when
// constructing certificates programmatically.
inline EntailmentCertificate seal(Diagram initial, std::vector<ProofStep> steps) {
    EntailmentCertificate cert;
    cert.initial = std::move(initial);
    cert.steps = std::move(steps);
    ReplayReport rep = run_steps(cert.initial, cert.steps);
    if (!rep.accepted)
        throw std::logic_error("seal: constructed certificate does not replay: " + rep.error +
                               " (step " + std::to_string(rep.failed_step) + ")");
    cert.final = rep.final;
    cert.claimed_k = rep.k;
    cert.claimed_gamma = rep.gamma;
    return cert;
}

// Rule (c): certificates compose by concatenating steps.
inline EntailmentCertificate compose_certificates(const EntailmentCertificate& first,
                                                  const EntailmentCertificate& second) {
    if (first.final != second.initial)
        throw std::invalid_argument("compose_certificates: endpoint mismatch");
    std::vector<ProofStep> steps = first.steps;
    steps.insert(steps.end(), second.steps.begin(), second.steps.end());
    return seal(first.initial, std::move(steps));
}

// ---------------------------------------------------------------------------
// Stashing

// C joined with a dual copy D at leaf i <-> j, keep-left labels: C keeps its
// labels and the copy of D lives under the anchor token of i.
inline Diagram stash_join(const Diagram& c, const Diagram& d, const Label& i, const Label& j) {
    return join_diagrams(c, d, {{i, j}}, JoinLabels::KeepLeft, "", c.resolve(i).as_anchor_token());
}

// The collapsing morphism of a stashed copy: a verified morphism
// C -> C +_{i<->j} D requiring a section of D at j, realizing
// (C +_{i<->j} D) entails^0 C.  Every leaf of C except i is respected.
inline DiagramMorphism discard_stash_morphism(const Diagram& c, const Diagram& d, const Label& i,
                                              const Label& j, const SectionAt& section) {
    if (!verify_section(section, d) || d.resolve(section.at) != d.resolve(j))
        throw std::invalid_argument("discard_stash_morphism: invalid section at " + j.str());
    Diagram joined = stash_join(c, d, i, j);
    Label ci = c.resolve(i);
    auto [z, phi_zi] = c.parent_of(ci);
    std::string anchor = ci.as_anchor_token();

    DiagramMorphism m;
    for (const auto& v : joined.vertices) {
        if (v.label.has_prefix(anchor)) {
            Label x = v.label.without_prefix(); // vertex of D
            if (v.leaf) {
                m.alpha[v.label] = ci;
                m.theta[v.label] = section.of(d.resolve(x));
            } else {
                m.alpha[v.label] = c.resolve(z);
                m.theta[v.label] = section.of(d.resolve(x)) * *phi_zi;
            }
            continue;
        }
        // the fused anchor keeps the left label; it maps through the parent
        if (joined.resolve(v.label) == joined.resolve(ci)) {
            m.alpha[v.label] = c.resolve(z);
            m.theta[v.label] = *phi_zi;
            continue;
        }
        m.alpha[v.label] = v.label;
        m.theta[v.label] = FpMatrix::identity(c.p, v.dim);
    }
    return m;
}

// Specification of one stashed copy for the reveal transformer.
struct StashSpec {
    Diagram d;
    Label j;           // leaf of d the copies are anchored at
    SectionAt section; // surjectivity witness of d at j
};

namespace detail {

// Aligned labels travelling through reveal_stash: stash vertices are
// "anchor-token; x", everything else belongs to the main diagram.
inline std::optional<std::pair<Label, Label>> split_anchor(const Label& l,
                                                           const std::set<Label>& anchors) {
    if (l.toks.empty() || l.toks[0].empty() || l.toks[0][0] != '@') return std::nullopt;
    for (const Label& a : anchors)
        if (l.toks[0] == a.as_anchor_token())
            return std::make_pair(a, l.without_prefix());
    return std::nullopt;
}

} // namespace detail

// The certificate transformer realizing "reveal": given cert : C1 |= C2 and
// a stashed copy of D at each leaf in Z, produces a replaying certificate
//   (C1 (+)_{i in Z} D)  |=  (C2 (+)_{r in Y} D)
// with the same CS count.  Morph steps lift by patching identity maps over
// the stashed parts, CS steps lift verbatim followed by a relabel, and
// stashed copies that a step does not propagate are discarded first via the
// collapsing morphism.  Y must be contained in gamma^{-1}(Z x {0,1}).
inline EntailmentCertificate reveal_stash(const EntailmentCertificate& cert, const StashSpec& stash,
                                          const std::vector<Label>& z_in,
                                          const std::vector<Label>& y_in) {
    ReplayReport base = replay(cert);
    if (!base.accepted) throw std::invalid_argument("reveal_stash: input certificate rejected");

    // resolved anchor sets
    std::set<Label> z;
    for (const Label& l : z_in) z.insert(cert.initial.resolve(l));
    std::set<Label> y_requested;
    for (const Label& l : y_in) y_requested.insert(cert.final.resolve(l));
    for (const Label& r : y_requested) {
        auto g = base.gamma.of(r);
        if (!g || !z.count(g->first))
            throw std::invalid_argument("reveal_stash: requested leaf " + r.str() +
                                        " does not trace back to the stash set");
    }
    for (const Label& i : z)
        if (!cert.initial.is_leaf(i) ||
            cert.initial.dim_of(i) != stash.d.dim_of(stash.j))
            throw std::invalid_argument("reveal_stash: bad anchor " + i.str());

    auto augment = [&](const Diagram& c, const std::set<Label>& anchors) {
        Diagram out = c;
        for (const Label& i : anchors) out = stash_join(out, stash.d, i, stash.j);
        return out;
    };

    // walk the original replay, maintaining the current core diagram, the
    // current anchor set, and the lifted steps
    Diagram core = cert.initial;
    std::set<Label> anchors = z;
    std::vector<ProofStep> out_steps;
    Diagram aug = augment(core, anchors);

    auto discard_to = [&](const std::set<Label>& target_anchors) {
        std::set<Label> cur = anchors;
        for (const Label& i : anchors) {
            if (target_anchors.count(i)) continue;
            cur.erase(i);
            Diagram smaller = augment(core, cur);
            // smaller is "C" of the collapse; it still carries the other
            // stashed copies, and i is one of its leaves
            DiagramMorphism m = discard_stash_morphism(smaller, stash.d, i, stash.j, stash.section);
            out_steps.push_back(MorphStepData{smaller, std::move(m)});
        }
        anchors = std::move(cur);
        aug = augment(core, anchors);
    };

    Gamma gamma_so_far = Gamma::identity_on(core.leaves());
    for (size_t t = 0; t < cert.steps.size(); ++t) {
        const ProofStep& step = cert.steps[t];
        if (std::holds_alternative<WeakenStepData>(step))
            throw std::invalid_argument("reveal_stash: weaken steps are not transformable");

        if (std::holds_alternative<CsStepData>(step)) {
            const auto& cs = std::get<CsStepData>(step);
            // anchors hit by the CS set will not propagate: discard them
            std::set<Label> keep = anchors;
            for (const Label& l : cs.leaves) keep.erase(core.resolve(l));
            discard_to(keep);

            auto [next_core, g] = cs_step(core, cs.leaves);
            out_steps.push_back(CsStepData{cs.leaves});

            std::set<Label> next_anchors;
            for (const Label& i : anchors) {
                next_anchors.insert(next_core.resolve(i.prefixed("L")));
                next_anchors.insert(next_core.resolve(i.prefixed("R")));
            }
            Diagram target = augment(next_core, next_anchors);

            // rename the doubled stash labels P;@i;x -> @(P;i);x
            Diagram cs_form = join_diagrams(aug, aug, [&] {
                std::vector<std::pair<Label, Label>> beta;
                for (const Label& l : cs.leaves) beta.emplace_back(l, l);
                return beta;
            }());
            std::map<Label, Label> ren;
            for (const auto& v : cs_form.vertices) {
                Label l = v.label;
                std::string side = l.toks[0];
                Label rest = l.without_prefix();
                Label naive = l;
                auto sp = detail::split_anchor(rest, anchors);
                if ((side == "L" || side == "R") && sp) {
                    Label new_anchor = next_core.resolve(sp->first.prefixed(side));
                    naive = sp->second.prefixed(new_anchor.as_anchor_token());
                }
                Label to = target.resolve(naive);
                if (to != l) ren[l] = to;
            }
            out_steps.push_back(RelabelStepData{std::move(ren)});

            core = std::move(next_core);
            anchors = std::move(next_anchors);
            aug = std::move(target);
            gamma_so_far = Gamma::composed(gamma_so_far, g);
        } else if (std::holds_alternative<MorphStepData>(step)) {
            const auto& ms = std::get<MorphStepData>(step);
            // anchors not respected by the morphism cannot propagate
            DiagramMorphismReport mr = verify_diagram_morphism(ms.m, ms.next, core);
            if (!mr.ok) throw std::logic_error("reveal_stash: inner morph step no longer verifies");
            std::set<Label> keep;
            Gamma g;
            for (const Label& i : mr.respected) {
                Label ci = core.resolve(i);
                Label r = ms.next.resolve(*ms.m.alpha_of(ci));
                g.set(r, ci, 0);
                if (anchors.count(ci)) keep.insert(ci);
            }
            discard_to(keep);

            std::set<Label> next_anchors;
            for (const Label& i : anchors) next_anchors.insert(ms.next.resolve(*ms.m.alpha_of(i)));
            Diagram target = augment(ms.next, next_anchors);

            DiagramMorphism lifted;
            for (const auto& v : aug.vertices) {
                auto sp = detail::split_anchor(v.label, anchors);
                if (sp) {
                    Label new_anchor = ms.next.resolve(*ms.m.alpha_of(sp->first));
                    lifted.alpha[v.label] =
                        target.resolve(sp->second.prefixed(new_anchor.as_anchor_token()));
                    lifted.theta[v.label] = FpMatrix::identity(aug.p, v.dim);
                    continue;
                }
                // core part (including fused anchors canonicalized on the core side)
                auto a = ms.m.alpha_of(core.resolve(v.label));
                if (a) {
                    lifted.alpha[v.label] = target.resolve(*a);
                    lifted.theta[v.label] = ms.m.theta_of(core.resolve(v.label));
                } else {
                    lifted.alpha[v.label] = std::nullopt;
                    lifted.theta[v.label] = FpMatrix::zero(aug.p, v.dim, 0);
                }
            }
            DiagramMorphismReport lr = verify_diagram_morphism(lifted, target, aug);
            if (!lr.ok)
                throw std::logic_error("reveal_stash: lifted morphism failed to verify: " + lr.error);
            out_steps.push_back(MorphStepData{target, std::move(lifted)});

            core = ms.next;
            anchors = std::move(next_anchors);
            aug = augment(core, anchors);
            gamma_so_far = Gamma::composed(gamma_so_far, g);
        } else {
            const auto& rs = std::get<RelabelStepData>(step);
            auto ren_core = [&](const Label& l) {
                auto it = rs.map.find(l);
                return it == rs.map.end() ? l : it->second;
            };
            Diagram next_core = relabel_diagram(core, rs.map);
            std::set<Label> next_anchors;
            for (const Label& i : anchors) next_anchors.insert(next_core.resolve(ren_core(i)));
            Diagram target = augment(next_core, next_anchors);

            std::map<Label, Label> ren;
            for (const auto& v : aug.vertices) {
                auto sp = detail::split_anchor(v.label, anchors);
                Label naive = sp ? sp->second.prefixed(
                                       next_core.resolve(ren_core(sp->first)).as_anchor_token())
                                 : ren_core(v.label);
                Label to = target.resolve(naive);
                if (to != v.label) ren[v.label] = to;
            }
            out_steps.push_back(RelabelStepData{std::move(ren)});

            Gamma g;
            for (const Label& l : core.leaves()) g.set(next_core.resolve(ren_core(l)), l, 0);
            core = std::move(next_core);
            anchors = std::move(next_anchors);
            aug = std::move(target);
            gamma_so_far = Gamma::composed(gamma_so_far, g);
        }
    }

    // drop the stashed copies the caller did not ask to reveal
    discard_to(y_requested);

    return seal(augment(cert.initial, z), std::move(out_steps));
}

inline EntailmentCertificate identity_certificate(const Diagram& d) { return seal(d, {}); }

// D |=^1 (D +_{i<->^} gc) given a morphism gc -> D witnessing Cauchy-Schwarz
// complexity at i: one CS step at i, a reveal of the stashed right copy, and
// a final relabel that makes the revealed copy the main diagram.  The
// resulting gamma sends every remaining leaf j of D to (j, 1).
inline EntailmentCertificate cs_dual(const Diagram& d, const Label& i, const Diagram& gc_diag,
                                     const DiagramMorphism& gc_to_d) {
    DiagramMorphismReport mr = verify_diagram_morphism(gc_to_d, gc_diag, d);
    if (!mr.ok || !mr.respects(d.resolve(i)))
        throw std::invalid_argument("cs_dual: morphism does not verify or respect " + i.str());
    Label ci = d.resolve(i);
    Label y0 = gc_diag.resolve(*gc_to_d.alpha_of(ci));

    // section of D at i, transported through the universal morphism
    auto gc_section = section_direct(gc_diag, y0);
    if (!gc_section) throw std::logic_error("cs_dual: gc diagram not surjective at its sum index");
    auto d_section = section_via_morphism(*gc_section, gc_to_d, gc_diag, d, ci);
    if (!d_section) throw std::logic_error("cs_dual: could not transport the section");

    std::vector<ProofStep> steps;
    steps.push_back(CsStepData{{ci}});

    // rename the CS form L;x / R;x into the keep-left stash form
    Diagram cs_form = join_diagrams(d, d, {{ci, ci}});
    Diagram stashed = stash_join(d, d, ci, ci);
    std::map<Label, Label> ren1;
    for (const auto& v : cs_form.vertices) {
        Label naive = v.label.has_prefix("L")
                          ? v.label.without_prefix()
                          : v.label.without_prefix().prefixed(ci.as_anchor_token());
        Label to = stashed.resolve(naive);
        if (to != v.label) ren1[v.label] = to;
    }
    steps.push_back(RelabelStepData{std::move(ren1)});

    EntailmentCertificate cert0 = seal(d, {MorphStepData{gc_diag, gc_to_d}});
    EntailmentCertificate rev = reveal_stash(cert0, StashSpec{d, ci, *d_section}, {ci}, {y0});
    for (const ProofStep& s : rev.steps) steps.push_back(s);

    // swap perspective: the revealed copy of D becomes the main diagram and
    // the gc copy is the stashed one
    Diagram current = rev.final; // gc_diag with a D copy anchored at y0
    Diagram target = stash_join(d, gc_diag, ci, y0);
    std::string a_y0 = y0.as_anchor_token();
    std::map<Label, Label> ren2;
    for (const auto& v : current.vertices) {
        Label naive = v.label.has_prefix(a_y0) ? v.label.without_prefix()
                                               : v.label.prefixed(ci.as_anchor_token());
        Label to = target.resolve(naive);
        if (to != v.label) ren2[v.label] = to;
    }
    steps.push_back(RelabelStepData{std::move(ren2)});

    return seal(d, std::move(steps));
}

} // namespace csd
