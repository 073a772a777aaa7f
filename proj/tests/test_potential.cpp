#include <doctest.h>

#include <cmath>
#include <set>

#include "glimmlab/errors.hpp"
#include "glimmlab/potential.hpp"

using namespace glimmlab;

namespace {

Vec sc(double x) { return Vec::Constant(1, x); }

GlimmConfig scalar_config(const std::string& model, double eps, double horizon,
                          std::vector<double> xs, std::vector<double> us) {
    GlimmConfig cfg;
    cfg.model_name = model;
    cfg.eps = eps;
    cfg.horizon = horizon;
    cfg.with_ledgers = true;
    cfg.datum.xs = std::move(xs);
    for (double u : us) cfg.datum.vals.push_back(sc(u));
    return cfg;
}

struct TwoShockRun {
    GlimmTrace tr;
    LagrangianRep rep;
    PotentialRep pot;
    int a = -1, b = -1;        // the two threads at layer 0, wave order
    std::size_t i_merge = 0;   // first layer with a single occupied node
};

// two approaching down-shocks (speeds 0.75 and 0.3), merging inside the horizon
TwoShockRun two_shock_run() {
    TwoShockRun r;
    r.tr = glimm_run(
        scalar_config("burgers", 1.0 / 16, 1.0, {0.0, 0.25}, {1.0, 0.5, 0.1}));
    r.rep = build_lagrangian(r.tr);
    r.pot = build_threads(r.rep);
    auto ids0 = r.pot.alive(0, 1);
    REQUIRE(ids0.size() == 2);
    // negative waves: wave order (left to right in space) is descending Phi
    r.a = ids0[1];
    r.b = ids0[0];
    for (std::size_t i = 0; i < r.tr.layers.size(); ++i) {
        std::set<long> nodes;
        for (int id : r.pot.alive(i, 1))
            nodes.insert(r.pot.threads[id].node_at(i));
        if (nodes.size() == 1) {
            r.i_merge = i;
            break;
        }
    }
    REQUIRE(r.i_merge > 0);
    return r;
}

}  // namespace

TEST_CASE("threads refine packages and preserve the wave measure") {
    GlimmConfig cfg;
    cfg.model_name = "psystem";
    cfg.eps = 1.0 / 16;
    cfg.horizon = 1.0;
    cfg.with_ledgers = true;
    cfg.datum.xs = {0.0, 0.25, 0.5};
    for (double v : {1.0, 1.03, 0.97, 1.0}) {
        Vec u(2);
        u << v, 0.01 * (v - 1.0);
        cfg.datum.vals.push_back(u);
    }
    auto tr = glimm_run(cfg);
    auto rep = build_lagrangian(tr);
    auto pot = build_threads(rep);
    REQUIRE(!pot.threads.empty());

    for (std::size_t i = 0; i < tr.layers.size(); ++i) {
        for (int k = 1; k <= 2; ++k) {
            const auto& fin = rep.info[i][k - 1];
            double total = 0.0;
            double prev_hi = -1e300;
            for (int id : pot.alive(i, k)) {
                const WaveThread& t = pot.threads[id];
                total += t.len;
                // disjoint, ordered
                CHECK(t.lo_at(i) >= prev_hi - 1e-9);
                prev_hi = t.hi_at(i);
                // contained in a package of the same family, sign and node
                bool inside = false;
                for (int pid : rep.alive(i, k)) {
                    const WaveRecord* rc = rep.packages[pid].rec_at(i);
                    if (!rc) continue;
                    if (rc->node == t.node_at(i) &&
                        t.lo_at(i) >= rc->phi_lo - 1e-9 &&
                        t.hi_at(i) <= rc->phi_hi + 1e-9) {
                        CHECK(rep.packages[pid].sign == t.sign);
                        inside = true;
                        break;
                    }
                }
                CHECK(inside);
            }
            CHECK(total ==
                  doctest::Approx(fin.L_plus - fin.L_minus).epsilon(1e-7));
        }
    }
}

TEST_CASE("pair classification across a two-shock merge") {
    auto r = two_shock_run();
    const std::size_t im = r.i_merge;

    auto pc0 = classify_pair(r.pot, 0, r.a, r.b);
    CHECK(pc0.status == PairClassification::never_interacted);
    CHECK(pc0.divided);
    CHECK(!pc0.has_split);
    REQUIRE(pc0.has_int);
    CHECK(pc0.i_int == im);

    for (std::size_t i = 1; i < im; ++i) {
        auto pc = classify_pair(r.pot, i, r.a, r.b);
        CHECK(pc.status == PairClassification::never_interacted);
        CHECK(pc.divided);
        CHECK(pc.i_int == im);
    }
    // from the merge on the pair shares the position for good
    for (std::size_t i = im; i < r.tr.layers.size(); ++i) {
        if (!r.pot.threads[r.a].alive_at(i) || !r.pot.threads[r.b].alive_at(i))
            break;
        auto pc = classify_pair(r.pot, i, r.a, r.b);
        CHECK(pc.status == PairClassification::interacting_now);
        if (i + 1 < r.tr.layers.size()) CHECK(!pc.divided);
        CHECK(pc.i_split == i);
        CHECK(pc.node_split == r.pot.threads[r.a].node_at(i));
    }
}

TEST_CASE("characteristic interval of a fresh pair follows the package rule") {
    auto r = two_shock_run();
    Potential pf(r.pot);
    // both created at layer 0: everything from the start of the wave order up
    // to the end of the second wave's package; for negative waves that is
    // [phi_lo of the package, 0)
    auto ci = pf.characteristic_interval(0, r.a, r.b);
    const auto& fin = r.rep.info[0][0];
    CHECK(ci.hi == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ci.lo == doctest::Approx(fin.L_minus).epsilon(1e-9));
    REQUIRE(ci.elements.size() == 1);
    CHECK(ci.elements[0].atomic);
    CHECK(ci.elements[0].lo == doctest::Approx(ci.lo));
    CHECK(ci.elements[0].hi == doctest::Approx(ci.hi));
}

TEST_CASE("partition of a spread rarefaction") {
    auto tr = glimm_run(
        scalar_config("burgers", 1.0 / 16, 1.0, {0.0}, {0.1, 0.9}));
    auto rep = build_lagrangian(tr);
    auto pot = build_threads(rep);
    Potential pf(pot);

    // find a divided pair that shares its history (split off one rarefaction)
    const std::size_t last = tr.layers.size() - 1;
    int a = -1, b = -1;
    std::size_t layer = 0;
    for (std::size_t i = last + 1; i-- > 1 && a < 0;) {
        auto ids = pot.alive(i, 1);
        for (std::size_t p = 0; p < ids.size() && a < 0; ++p)
            for (std::size_t q = p + 1; q < ids.size() && a < 0; ++q) {
                auto pc = classify_pair(pot, i, ids[p], ids[q]);
                if (pc.divided && pc.has_split &&
                    pc.status != PairClassification::never_interacted) {
                    a = ids[p];
                    b = ids[q];
                    layer = i;
                }
            }
    }
    REQUIRE(a >= 0);
    auto pc = classify_pair(pot, layer, a, b);

    // at the splitting layer the interval is the whole node strength
    auto ci0 = pf.characteristic_interval(pc.i_split, a, b);
    double s = tr.layers[pc.i_split].fans[pc.node_split].strengths[0];
    double off = rep.info[pc.i_split][0].offset[pc.node_split];
    CHECK(ci0.lo == doctest::Approx(off + std::min(0.0, s)).epsilon(1e-9));
    CHECK(ci0.hi == doctest::Approx(off + std::max(0.0, s)).epsilon(1e-9));

    // at every later layer: ordered tiling of the interval, covering both
    // threads, with nondecreasing envelope slopes on the positive side
    for (std::size_t i = pc.i_split; i <= layer; ++i) {
        auto pci = classify_pair(pot, i, a, b);
        if (!pci.divided) continue;
        auto ci = pf.characteristic_interval(i, a, b);
        REQUIRE(!ci.elements.empty());
        CHECK(ci.elements.front().lo == doctest::Approx(ci.lo));
        CHECK(ci.elements.back().hi == doctest::Approx(ci.hi));
        for (std::size_t e = 0; e + 1 < ci.elements.size(); ++e)
            CHECK(ci.elements[e].hi ==
                  doctest::Approx(ci.elements[e + 1].lo).epsilon(1e-9));
        const WaveThread& A = pot.threads[a];
        const WaveThread& B = pot.threads[b];
        CHECK(A.lo_at(i) >= ci.lo - 1e-9);
        CHECK(A.hi_at(i) <= ci.hi + 1e-9);
        CHECK(B.lo_at(i) >= ci.lo - 1e-9);
        CHECK(B.hi_at(i) <= ci.hi + 1e-9);
    }

    // same wave group, same interval: replacing a thread by a companion with
    // the identical position history must not change the result
    for (int a2 = 0; a2 < static_cast<int>(pot.threads.size()); ++a2) {
        if (a2 == a || a2 == b) continue;
        const WaveThread& T = pot.threads[a2];
        const WaveThread& A = pot.threads[a];
        if (T.family != A.family || T.sign != A.sign) continue;
        if (!T.alive_at(layer)) continue;
        auto pc2 = classify_pair(pot, layer, a2, b);
        if (!pc2.divided || pc2.status == PairClassification::never_interacted)
            continue;
        if (pc2.i_split != pc.i_split || pc2.node_split != pc.node_split)
            continue;
        auto ci = pf.characteristic_interval(layer, a, b);
        auto ci2 = pf.characteristic_interval(layer, a2, b);
        CHECK(ci2.lo == doctest::Approx(ci.lo).epsilon(1e-12));
        CHECK(ci2.hi == doctest::Approx(ci.hi).epsilon(1e-12));
        CHECK(ci2.elements.size() == ci.elements.size());
    }
}

TEST_CASE("two-shock weight: constant curvature gives Q = c |s1||s2|") {
    auto r = two_shock_run();
    Potential pf(r.pot);

    double s1 = std::fabs(r.pot.threads[r.a].len);
    double s2 = std::fabs(r.pot.threads[r.b].len);
    const WeightField& wf0 = pf.weight_field(0, 1);
    REQUIRE(wf0.curvature_bound > 0.0);
    double c = wf0.curvature_bound;

    // before the merge every pair weight equals the curvature, so the
    // functional is exactly c * s1 * s2; afterwards it vanishes
    for (std::size_t i = 0; i < r.i_merge; ++i) {
        auto q = pf.functional_Q(i, 1);
        CHECK(q.plus == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(q.minus == doctest::Approx(c * s1 * s2).epsilon(5e-3));
        const WeightField& wf = pf.weight_field(i, 1);
        CHECK(wf.q_max <= wf.curvature_bound * 1.05 + 1e-9);
    }
    auto qm = pf.functional_Q(r.i_merge, 1);
    CHECK(qm.total() <= 1e-6);

    // the drop at the merge pays for the quadratic amount
    auto report = pf.verify_decay();
    const auto& st = report.steps[r.i_merge - 1];
    REQUIRE(st.i == r.i_merge);
    double aq = st.a_quadr[0];
    CHECK(aq > 0.0);
    CHECK(-st.dQ[0] >= aq - 5e-3 - 0.5 * report.tv0 * st.a_total);
    CHECK(report.unexplained == 0);
    CHECK(report.q0_over_tv2 <= c);
}

TEST_CASE("linear system carries no quadratic potential") {
    GlimmConfig cfg;
    cfg.model_name = "linear";
    cfg.eps = 1.0 / 16;
    cfg.horizon = 1.0;
    cfg.with_ledgers = true;
    cfg.datum.xs = {0.0, 0.25};
    Vec u0 = Vec::Zero(2), u1(2), u2(2);
    u1 << 0.4, 0.1;
    u2 << 0.1, 0.4;
    cfg.datum.vals = {u0, u1, u2};
    auto tr = glimm_run(cfg);
    auto rep = build_lagrangian(tr);
    auto pot = build_threads(rep);
    Potential pf(pot);
    auto report = pf.verify_decay();
    CHECK(report.curvature_bound <= 1e-10);
    CHECK(report.max_q <= 1e-10);
    CHECK(report.fitted_c <= 1e-10);
    for (const auto& row : report.Q)
        for (double q : row) CHECK(q <= 1e-10);
    for (const auto& st : report.steps)
        for (double aq : st.a_quadr) CHECK(aq <= 1e-10);
}

TEST_CASE("approach speeds ignore affine gauge changes of the flux") {
    SampledFunction g;
    for (int i = 0; i <= 16; ++i) {
        double x = -1.0 + 2.0 * i / 16;
        g.nodes.push_back(x);
        g.values.push_back(std::sin(x) + 0.3 * x * x);
    }
    SampledFunction h = g;
    for (std::size_t i = 0; i < h.size(); ++i)
        h.values[i] += 0.7 - 1.9 * h.nodes[i];
    double dg = sigma_rh(g, -0.8, -0.1) - sigma_rh(g, 0.2, 0.9);
    double dh = sigma_rh(h, -0.8, -0.1) - sigma_rh(h, 0.2, 0.9);
    CHECK(dg == doctest::Approx(dh).epsilon(1e-12));
}

TEST_CASE("opposite signs never classify as already interacted") {
    // a down-shock chasing a rarefaction: partial cancellation
    auto tr = glimm_run(
        scalar_config("burgers", 1.0 / 16, 1.0, {0.0, 0.25}, {0.9, 0.1, 0.7}));
    auto rep = build_lagrangian(tr);
    auto pot = build_threads(rep);
    for (std::size_t i = 0; i < tr.layers.size(); ++i) {
        auto ids = pot.alive(i, 1);
        for (std::size_t p = 0; p < ids.size(); ++p)
            for (std::size_t q = p + 1; q < ids.size(); ++q) {
                if (pot.threads[ids[p]].sign == pot.threads[ids[q]].sign)
                    continue;
                auto pc = classify_pair(pot, i, ids[p], ids[q]);
                CHECK(pc.status == PairClassification::never_interacted);
            }
    }
}

TEST_CASE("weights stay below the curvature bound on a mixed run") {
    auto tr = glimm_run(
        scalar_config("burgers", 1.0 / 16, 1.0, {0.0, 0.25}, {0.9, 0.1, 0.7}));
    auto rep = build_lagrangian(tr);
    auto pot = build_threads(rep);
    Potential pf(pot);
    auto report = pf.verify_decay();
    CHECK(report.max_q <= report.curvature_bound * 1.05 + 1e-9);
    CHECK(report.unexplained == 0);
}
