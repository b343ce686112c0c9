#include <catch2/catch_amalgamated.hpp>

#include "csd/entail.hpp"

using namespace csd;

namespace {

Diagram ap3_diagram(uint32_t p) { return diagram_of(data::ap(p, 3)); }

DiagramMorphism u2_to_d2_morphism(uint32_t p) {
    Fp f(p);
    int64_t half = f.inv(2);
    DiagramMorphism m;
    auto mat = [&](std::vector<int64_t> v, size_t rows) {
        return FpMatrix(p, rows, 3, std::move(v));
    };
    m.alpha[Label{"L;L;1"}] = Label{"00"};
    m.alpha[Label{"L;R;1"}] = Label{"01"};
    m.alpha[Label{"R;L;1"}] = Label{"10"};
    m.alpha[Label{"R;R;1"}] = Label{"11"};
    for (const char* l : {"L;L;1", "L;R;1", "R;L;1", "R;R;1"})
        m.theta[Label{l}] = FpMatrix::identity(p, 1);
    for (const char* l : {"L;L;<>", "L;R;<>", "R;L;<>", "R;R;<>", "L;L;2", "L;R;2", "L;L;3", "R;L;3"})
        m.alpha[Label{l}] = Label{kDiamond};
    m.theta[Label{"L;L;<>"}] = mat({1, 0, 0, 0, 0, 0}, 2);
    m.theta[Label{"L;R;<>"}] = mat({1, 0, 1, 0, 0, -half}, 2);
    m.theta[Label{"R;L;<>"}] = mat({1, 1, 0, 0, -1, 0}, 2);
    m.theta[Label{"R;R;<>"}] = mat({1, 1, 1, 0, -1, -half}, 2);
    m.theta[Label{"L;L;2"}] = mat({1, 0, 0}, 1);
    m.theta[Label{"L;R;2"}] = mat({1, 0, half}, 1);
    m.theta[Label{"L;L;3"}] = mat({1, 0, 0}, 1);
    m.theta[Label{"R;L;3"}] = mat({1, -1, 0}, 1);
    return m;
}

// Universal morphism gc_1 -> diagram(3-AP) respecting leaf 1.
DiagramMorphism gc1_to_ap3(uint32_t p) {
    Fp f(p);
    int64_t half = f.inv(2);
    DiagramMorphism m;
    m.alpha[Label{kDiamond}] = Label{kDiamond};
    m.theta[Label{kDiamond}] = FpMatrix(p, 2, 2, {1, 1, -1, -half});
    m.alpha[Label{"1"}] = Label{"^"};
    m.theta[Label{"1"}] = FpMatrix::identity(p, 1);
    m.alpha[Label{"2"}] = Label{"1"};
    m.theta[Label{"2"}] = FpMatrix::scalar(p, half);
    m.alpha[Label{"3"}] = Label{"2"};
    m.theta[Label{"3"}] = FpMatrix::scalar(p, -1);
    return m;
}

} // namespace

TEST_CASE("cs_step") {
    Diagram gc2 = diagram_of(data::gc(5, 2));
    auto [bridge, g] = cs_step(gc2, {Label{"3"}});
    CHECK(bridge.vertices.size() == 2 * 5 - 1);
    CHECK(bridge.leaves().size() == 2 * 3);
    CHECK_FALSE(bridge.is_leaf(Label{"#;3"}));
    auto g_l1 = g.of(Label{"L;1"});
    REQUIRE(g_l1.has_value());
    CHECK(g_l1->first == Label{"1"});
    CHECK(g_l1->second == 0);
    auto g_r1 = g.of(Label{"R;1"});
    CHECK(g_r1->second == 1);

    auto [disjoint, g2] = cs_step(gc2, {});
    CHECK(disjoint.vertices.size() == 10);

    CHECK_THROWS(cs_step(bridge, {Label{"#;3"}})); // not a leaf any more

    // 3-AP twice gives the two-step shape with 4 surviving leaves
    Diagram d0 = ap3_diagram(5);
    auto [d1, g3] = cs_step(d0, {Label{"3"}});
    auto [d2, g4] = cs_step(d1, {Label{"L;2"}, Label{"R;2"}});
    CHECK(d2.leaves().size() == 4);
    CHECK(validate(d2).ok);
}

TEST_CASE("replay accepts the two-step certificate into the cube") {
    uint32_t p = 5;
    Diagram d0 = ap3_diagram(p);
    Diagram u2 = diagram_of(data::uk(p, 2));

    std::vector<ProofStep> steps;
    steps.push_back(CsStepData{{Label{"3"}}});
    steps.push_back(CsStepData{{Label{"L;2"}, Label{"R;2"}}});
    steps.push_back(MorphStepData{u2, u2_to_d2_morphism(p)});

    EntailmentCertificate cert = seal(d0, steps);
    CHECK(cert.claimed_k == 2);
    auto g00 = cert.claimed_gamma.of(Label{"00"});
    REQUIRE(g00.has_value());
    CHECK(g00->first == Label{"1"});
    CHECK(g00->second == 0);
    CHECK(cert.claimed_gamma.of(Label{"01"})->second == 1);
    CHECK(cert.claimed_gamma.of(Label{"10"})->second == 1);
    CHECK(cert.claimed_gamma.of(Label{"11"})->second == 0);

    ReplayReport rep = replay(cert);
    REQUIRE(rep.accepted);
    CHECK(rep.k == 2);

    // claiming fewer CS steps than replay counts is rejected
    EntailmentCertificate lied = cert;
    lied.claimed_k = 1;
    CHECK_FALSE(replay(lied).accepted);

    // claiming a gamma entry the replay cannot justify is rejected
    EntailmentCertificate lied2 = cert;
    lied2.claimed_gamma.set(Label{"01"}, Label{"1"}, 0);
    CHECK_FALSE(replay(lied2).accepted);

    // tampered final diagram is rejected
    EntailmentCertificate lied3 = cert;
    lied3.final = d0;
    CHECK_FALSE(replay(lied3).accepted);
}

TEST_CASE("empty certificate") {
    Diagram d = ap3_diagram(5);
    EntailmentCertificate cert = identity_certificate(d);
    ReplayReport rep = replay(cert);
    REQUIRE(rep.accepted);
    CHECK(rep.k == 0);
    CHECK(rep.gamma.of(Label{"2"})->first == Label{"2"});
}

TEST_CASE("replay determinism") {
    Diagram d0 = ap3_diagram(5);
    std::vector<ProofStep> steps = {CsStepData{{Label{"3"}}},
                                    CsStepData{{Label{"L;2"}, Label{"R;2"}}}};
    EntailmentCertificate cert = seal(d0, steps);
    ReplayReport a = replay(cert), b = replay(cert);
    CHECK(a.step_hashes == b.step_hashes);
    CHECK(a.gamma.map == b.gamma.map);
}

TEST_CASE("certificate composition matches concatenated replay") {
    Diagram d0 = ap3_diagram(5);
    EntailmentCertificate c1 = seal(d0, {CsStepData{{Label{"3"}}}});
    EntailmentCertificate c2 = seal(c1.final, {CsStepData{{Label{"L;2"}, Label{"R;2"}}}});
    EntailmentCertificate both = compose_certificates(c1, c2);
    EntailmentCertificate direct =
        seal(d0, {CsStepData{{Label{"3"}}}, CsStepData{{Label{"L;2"}, Label{"R;2"}}}});
    CHECK(both.final == direct.final);
    CHECK(both.claimed_k == direct.claimed_k);
    CHECK(both.claimed_gamma.map == direct.claimed_gamma.map);
}

TEST_CASE("weaken steps") {
    Diagram d0 = ap3_diagram(5);
    std::vector<ProofStep> steps = {CsStepData{{Label{"3"}}},
                                    WeakenStepData{{Label{"L;1"}}, 3}};
    EntailmentCertificate cert = seal(d0, steps);
    CHECK(cert.claimed_k == 3);
    CHECK(cert.claimed_gamma.map.size() == 1);
}

TEST_CASE("discard_stash") {
    uint32_t p = 5;
    Diagram c = ap3_diagram(p);
    Diagram d = diagram_of(data::gc(p, 1));

    auto surj = surjective_at(d, Label{"^"});
    REQUIRE(surj.status == SurjectivityResult::Status::Surjective);
    DiagramMorphism m = discard_stash_morphism(c, d, Label{"3"}, Label{"^"}, *surj.section);
    Diagram joined = stash_join(c, d, Label{"3"}, Label{"^"});
    DiagramMorphismReport rep = verify_diagram_morphism(m, c, joined);
    REQUIRE(rep.ok);
    CHECK(rep.respects(Label{"1"}));
    CHECK(rep.respects(Label{"2"}));
    // every leaf of the stashed copy collapses onto the anchor
    CHECK(*m.alpha_of(joined.resolve(Label{"@3;1"})) == Label{"3"});
    CHECK(*m.alpha_of(joined.resolve(Label{"@3;2"})) == Label{"3"});

    // a diagram collapsed onto itself at a leaf
    auto ssec = surjective_at(c, Label{"1"});
    REQUIRE(ssec.status == SurjectivityResult::Status::Surjective);
    DiagramMorphism m2 = discard_stash_morphism(c, c, Label{"1"}, Label{"1"}, *ssec.section);
    CHECK(verify_diagram_morphism(m2, c, stash_join(c, c, Label{"1"}, Label{"1"})).ok);

    // sections at non-surjective vertices do not exist
    LinearDatum bad;
    bad.p = p;
    bad.v_dim = 1;
    bad.add_index(Label{"a"}, FpMatrix::zero(p, 1, 1));
    CHECK(surjective_at(diagram_of(bad), Label{"a"}).status ==
          SurjectivityResult::Status::NotSurjective);
}

TEST_CASE("reveal of the identity certificate") {
    uint32_t p = 5;
    Diagram c = ap3_diagram(p);
    Diagram d = diagram_of(data::gc(p, 1));
    auto surj = surjective_at(d, Label{"^"});
    REQUIRE(surj.section.has_value());

    EntailmentCertificate cert = identity_certificate(c);
    EntailmentCertificate lifted =
        reveal_stash(cert, StashSpec{d, Label{"^"}, *surj.section}, {Label{"3"}}, {Label{"3"}});
    ReplayReport rep = replay(lifted);
    REQUIRE(rep.accepted);
    CHECK(rep.k == 0);
    CHECK(lifted.initial == stash_join(c, d, Label{"3"}, Label{"^"}));
    CHECK(lifted.final == lifted.initial);

    // asking to reveal nothing appends a discard
    EntailmentCertificate dropped =
        reveal_stash(cert, StashSpec{d, Label{"^"}, *surj.section}, {Label{"3"}}, {});
    ReplayReport rep2 = replay(dropped);
    REQUIRE(rep2.accepted);
    CHECK(dropped.final == c);
    CHECK(rep2.gamma.of(Label{"1"})->first == Label{"1"});
}

TEST_CASE("reveal through a CS step") {
    uint32_t p = 5;
    Diagram c = ap3_diagram(p);
    Diagram d = diagram_of(data::gc(p, 1));
    auto surj = surjective_at(d, Label{"^"});

    EntailmentCertificate cert = seal(c, {CsStepData{{Label{"2"}}}});
    EntailmentCertificate lifted =
        reveal_stash(cert, StashSpec{d, Label{"^"}, *surj.section}, {Label{"3"}},
                     {Label{"L;3"}, Label{"R;3"}});
    ReplayReport rep = replay(lifted);
    REQUIRE(rep.accepted);
    CHECK(rep.k == 1);
    // both copies carry their stashed gc, with the stash leaves traced back
    Label l1 = lifted.final.resolve(Label{"@L,3;1"});
    auto g = rep.gamma.of(l1);
    REQUIRE(g.has_value());
    CHECK(g->first == lifted.initial.resolve(Label{"@3;1"}));
    CHECK(g->second == 0);
    auto gr = rep.gamma.of(lifted.final.resolve(Label{"@R,3;1"}));
    REQUIRE(gr.has_value());
    CHECK(gr->second == 1);
}

TEST_CASE("cs_dual realizes the one-step dual-function bound") {
    uint32_t p = 5;
    Diagram d = ap3_diagram(p);
    Diagram gc1 = diagram_of(data::gc(p, 1));
    DiagramMorphism m = gc1_to_ap3(p);
    REQUIRE(verify_diagram_morphism(m, gc1, d).ok);

    EntailmentCertificate cert = cs_dual(d, Label{"1"}, gc1, m);
    ReplayReport rep = replay(cert);
    REQUIRE(rep.accepted);
    CHECK(rep.k == 1);
    CHECK(cert.initial == d);
    CHECK(cert.final == stash_join(d, gc1, Label{"1"}, Label{"^"}));
    // gamma sends every remaining leaf j to (j, 1)
    for (const char* l : {"2", "3"}) {
        auto g = rep.gamma.of(Label{l});
        REQUIRE(g.has_value());
        CHECK(g->first == Label{l});
        CHECK(g->second == 1);
    }
}
