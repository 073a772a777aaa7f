// Acceptance suite: ten end-to-end checks, one printed PASS/FAIL line each.
// Every tolerance and calibration constant is pinned here in code.

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "glimmlab/io.hpp"

using namespace glimmlab;

namespace {

double now_s() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

void line(int id, const char* desc, bool ok, const std::string& detail) {
    std::printf("[%s] A%02d %-46s %s\n", ok ? "PASS" : "FAIL", id, desc,
                detail.c_str());
    std::fflush(stdout);
    CHECK_MESSAGE(ok, "criterion ", id, ": ", desc, " -- ", detail);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

GlimmConfig run_config(const std::string& model, double eps, double horizon,
                       const std::vector<double>& xs,
                       const std::vector<std::vector<double>>& vals,
                       bool ledgers = true) {
    GlimmConfig cfg;
    cfg.model_name = model;
    cfg.eps = eps;
    cfg.horizon = horizon;
    cfg.sequence = "vdc";
    cfg.with_ledgers = ledgers;
    cfg.datum.xs = xs;
    for (const auto& v : vals) {
        Vec u(static_cast<Eigen::Index>(v.size()));
        for (std::size_t i = 0; i < v.size(); ++i)
            u[static_cast<Eigen::Index>(i)] = v[i];
        cfg.datum.vals.push_back(u);
    }
    return cfg;
}

Vec scalar1(double x) {
    Vec u(1);
    u << x;
    return u;
}

// ---- criterion 1: envelope vs brute force ---------------------------------

// convex minorant of the node set, evaluated at every node: the largest value
// at x_j over all secant lines lying below every node
std::vector<double> brute_minorant(const SampledFunction& g) {
    const std::size_t n = g.size();
    std::vector<double> out(n, -1e300);
    out.front() = g.values.front();
    out.back() = g.values.back();
    for (std::size_t a = 0; a + 1 < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            double slope =
                (g.values[b] - g.values[a]) / (g.nodes[b] - g.nodes[a]);
            bool below = true;
            for (std::size_t i = 0; i < n && below; ++i)
                below = g.values[a] + slope * (g.nodes[i] - g.nodes[a]) <=
                        g.values[i] + 1e-12;
            if (!below) continue;
            for (std::size_t j = a; j <= b; ++j)
                out[j] = std::max(
                    out[j], g.values[a] + slope * (g.nodes[j] - g.nodes[a]));
        }
    return out;
}

void criterion_1() {
    double t0 = now_s();
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int bad_hull = 0, bad_mono = 0;
    for (int it = 0; it < 500; ++it) {
        std::size_t n = 2 + rng() % 11;  // up to 12 nodes
        SampledFunction g;
        double x = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            g.nodes.push_back(x);
            g.values.push_back(2.0 * U(rng) - 1.0);
            x += 0.05 + U(rng);
        }
        EnvelopeResult env = convex_envelope(g);
        std::vector<double> ref = brute_minorant(g);
        for (std::size_t j = 0; j < n; ++j)
            if (std::fabs(env.hull[j] - ref[j]) > 1e-9) ++bad_hull;
        for (std::size_t j = 1; j < env.slopes.size(); ++j)
            if (env.slopes[j] < env.slopes[j - 1] - 1e-12) ++bad_mono;

        // mirrored check through the concave side
        EnvelopeResult cav = concave_envelope(g);
        for (std::size_t j = 1; j < cav.slopes.size(); ++j)
            if (cav.slopes[j] > cav.slopes[j - 1] + 1e-12) ++bad_mono;
    }
    double dt = now_s() - t0;
    line(1, "envelope equals brute-force minorant",
         bad_hull == 0 && bad_mono == 0 && dt < 5.0,
         fmt("hull mismatches %g, slope violations %g, %.2fs", bad_hull,
             bad_mono, dt));
}

// ---- criterion 2: scalar Riemann exactness --------------------------------

double oleinik(const FluxModel& m, double uL, double uR, double xi) {
    // entropy solution value at speed xi: extremizer of f(u) - xi u over the
    // interval between the data (minimum when uL < uR, maximum otherwise)
    const int N = 2000;
    double best_u = uL, best_v = 1e300;
    double sgn = uL < uR ? 1.0 : -1.0;
    Vec w(1);
    for (int i = 0; i <= N; ++i) {
        double u = uL + (uR - uL) * i / N;
        w[0] = u;
        double v = sgn * (m.flux(w)[0] - xi * u);
        if (v < best_v - 1e-14) {
            best_v = v;
            best_u = u;
        }
    }
    return best_u;
}

void criterion_2() {
    double t0 = now_s();
    std::mt19937 rng(22);
    double worst_l1 = 0.0;
    for (const char* name : {"burgers", "cubic"}) {
        FluxModel m = make_model(name);
        double lo = m.domain[0].first, hi = m.domain[0].second;
        std::uniform_real_distribution<double> U(lo, hi);
        for (int it = 0; it < 20; ++it) {
            double uL = U(rng), uR = U(rng);
            if (std::fabs(uL - uR) < 0.05) uR = lo + hi - uR;
            RiemannFan fan = solve_riemann(m, scalar1(uL), scalar1(uR));
            double l1 = 0.0;
            const int K = 400;
            for (int i = 0; i <= K; ++i) {
                double xi = -0.05 + 1.1 * i / K;
                l1 += std::fabs(fan.sample(xi)[0] - oleinik(m, uL, uR, xi)) *
                      (1.1 / K);
            }
            worst_l1 = std::max(worst_l1, l1);
        }
    }

    // composite fixture: cubic flux, -1 -> 1; shock of speed 1/4 tangent to
    // the rarefaction at u = 1/2
    FluxModel cub = make_model("cubic");
    RiemannFan fan = solve_riemann(cub, scalar1(-1.0), scalar1(1.0));
    const ElementaryCurve& c = fan.curves[0];
    double shock_speed = c.sigma.front();
    std::size_t j = 0;
    while (j + 1 < c.sigma.size() &&
           std::fabs(c.sigma[j + 1] - shock_speed) < 1e-9)
        ++j;
    double tangency = c.u[j + 1][0];
    double worst_profile = 0.0;
    for (int i = 0; i < 257; ++i) {
        double xi = static_cast<double>(i) / 256.0;
        double exact = xi < 0.25 ? -1.0 : std::min(1.0, std::sqrt(xi));
        worst_profile =
            std::max(worst_profile, std::fabs(fan.sample(xi)[0] - exact));
    }

    double dt = now_s() - t0;
    bool ok = worst_l1 < 0.02 && std::fabs(shock_speed - 0.25) < 1e-6 &&
              std::fabs(tangency - 0.5) < 1e-6 && worst_profile < 6e-3 &&
              dt < 5.0;
    line(2, "scalar Riemann matches Oleinik construction", ok,
         fmt("L1 gap %.2e, |speed-1/4| %.1e, |tangency-1/2| %.1e", worst_l1,
             std::fabs(shock_speed - 0.25), std::fabs(tangency - 0.5)) +
             fmt(", profile gap %.1e, %.2fs", worst_profile, dt));
}

// ---- criterion 3: first-order tangency of the curve map -------------------

double tangency_constant(const FluxModel& m, const GeneralizedField& field,
                         double s, std::mt19937& rng) {
    std::uniform_real_distribution<double> Ux(0.85, 1.15), Uy(-0.15, 0.15);
    double worst = 0.0;
    for (int it = 0; it < 100; ++it) {
        Vec u(2);
        u << Ux(rng), Uy(rng);
        int k = 1 + static_cast<int>(rng() % 2);
        double ss = (rng() % 2 ? s : -s);
        Vec r = eigen_frame(m, u).right.col(k - 1);
        Vec Tu = elementary_curve(m, field, u, ss, k).u_end();
        worst = std::max(worst, (Tu - u - ss * r).norm() / (ss * ss));
    }
    return worst;
}

void criterion_3() {
    FluxModel m = make_model("psystem");
    GeneralizedField field = default_generalized_field(m);
    std::mt19937 rng(33);
    double c2 = tangency_constant(m, field, 1e-2, rng);
    double c3 = tangency_constant(m, field, 1e-3, rng);
    double ratio = c3 / c2;
    bool ok = ratio > 0.5 && ratio < 2.0;
    line(3, "curve map is first-order tangent to r_k", ok,
         fmt("C(1e-2)=%.4g, C(1e-3)=%.4g, ratio %.3f", c2, c3, ratio));
}

// ---- criterion 4: uniform total-variation bound ---------------------------

void criterion_4() {
    double t0 = now_s();
    bool ok = true;
    std::string detail;
    for (const char* name : {"psystem", "temple"}) {
        // base state plus three jumps with total variation 0.05 (L1 norm)
        std::vector<std::vector<double>> vals;
        if (std::string(name) == "psystem")
            vals = {{1.0, 0.0},
                    {1.0 + 1.0 / 90, 0.5 / 90},
                    {1.0 - 0.5 / 90, -0.25 / 90},
                    {1.0, 0.0}};
        else
            vals = {{0.0, 0.0},
                    {1.0 / 90, 0.5 / 90},
                    {-0.5 / 90, -0.25 / 90},
                    {0.0, 0.0}};
        double sup_lo = 1e300, sup_hi = 0.0;
        for (int p = 4; p <= 7; ++p) {
            GlimmConfig cfg = run_config(name, std::pow(0.5, p), 1.0,
                                         {0.0, 0.25, 0.5}, vals, false);
            GlimmTrace tr = glimm_run(cfg);
            double v0 = tr.layers.front().V, sup = 0.0;
            for (const GlimmLayer& l : tr.layers) sup = std::max(sup, l.V / v0);
            sup_lo = std::min(sup_lo, sup);
            sup_hi = std::max(sup_hi, sup);
        }
        ok = ok && sup_hi <= 3.0 && sup_hi / sup_lo <= 1.10;
        detail += std::string(name) +
                  fmt(" sup V/V0 in [%.4f,%.4f]  ", sup_lo, sup_hi);
    }
    double dt = now_s() - t0;
    ok = ok && dt < 120.0;
    line(4, "TV bound uniform across grids", ok, detail + fmt("%.1fs", dt));
}

// ---- shared corpus for criteria 5, 9, 10 ----------------------------------

struct CorpusRun {
    const char* tag;
    GlimmTrace trace;
};

std::vector<CorpusRun>& corpus() {
    static std::vector<CorpusRun> runs = [] {
        std::vector<CorpusRun> r;
        r.push_back({"burgers shock+raref",
                     glimm_run(run_config("burgers", 1.0 / 16, 1.0, {0.0, 0.25},
                                          {{0.8}, {0.2}, {0.6}}))});
        r.push_back({"burgers two shocks",
                     glimm_run(run_config("burgers", 1.0 / 16, 1.0, {0.0, 0.25},
                                          {{1.0}, {0.5}, {0.1}}))});
        r.push_back({"cubic shock merge",
                     glimm_run(run_config("cubic", 1.0 / 16, 4.0, {0.0, 0.125},
                                          {{0.9}, {0.5}, {0.2}}))});
        r.push_back(
            {"psystem three jumps",
             glimm_run(run_config("psystem", 1.0 / 16, 1.0, {0.0, 0.25, 0.5},
                                  {{1.0, 0.0},
                                   {1.03, 0.01},
                                   {0.97, -0.005},
                                   {1.0, 0.0}}))});
        r.push_back(
            {"temple three jumps",
             glimm_run(run_config("temple", 1.0 / 16, 1.0, {0.0, 0.25},
                                  {{0.05, 0.05}, {-0.05, 0.02}, {0.02, -0.05}}))});
        return r;
    }();
    return runs;
}

void criterion_5() {
    int violations = 0;
    double worst = 0.0;
    for (const CorpusRun& run : corpus()) {
        const GlimmTrace& tr = run.trace;
        double tol = 1e-9 * std::max(1.0, tr.layers.front().Q_known);
        for (std::size_t i = 1; i < tr.layers.size(); ++i) {
            double amounts = 0.0;
            for (const InteractionLedger& led : tr.layers[i].ledgers) {
                amounts += led.a_trans;
                for (std::size_t k = 0; k < led.a_canc.size(); ++k)
                    amounts += led.a_canc[k] + led.a_cubic[k];
            }
            double drop =
                tr.layers[i - 1].Q_known - tr.layers[i].Q_known;
            if (drop < amounts - tol) {
                ++violations;
                worst = std::max(worst, amounts - drop);
            }
        }
    }
    line(5, "Q_known drop dominates the interaction amounts", violations == 0,
         fmt("violations %g, worst shortfall %.2e", violations, worst));
}

// ---- criterion 6: local estimate on random merges -------------------------

// calibration frozen after the first run of this suite (measured 11.72; the
// large values come from weakly interacting pairs where A is much smaller
// than the strengths, and the ratio stays put when all strengths are halved)
constexpr double MAX_DSIGMA_OVER_A = 13.0;

double max_ratio(const FluxModel& m, double cap, std::mt19937& rng, int count) {
    std::uniform_real_distribution<double> Ux(0.9, 1.1), Uy(-0.1, 0.1),
        Us(-cap, cap);
    double worst = 0.0;
    for (int it = 0; it < count; ++it) {
        Vec uL(2);
        uL << Ux(rng), Uy(rng);
        std::vector<double> s1 = {Us(rng), Us(rng)}, s2 = {Us(rng), Us(rng)};
        Vec uM = riemann_T(m, default_generalized_field(m), uL, s1);
        Vec uR = riemann_T(m, default_generalized_field(m), uM, s2);
        InteractionLedger led = interaction_ledger(m, uL, uM, uR);
        if (led.total < 1e-12) continue;
        for (double ds : led.dsigma) worst = std::max(worst, ds / led.total);
    }
    return worst;
}

void criterion_6() {
    FluxModel m = make_model("psystem");
    std::mt19937 rng1(66), rng2(66);  // same draws, halved strengths
    double r_full = max_ratio(m, 0.05, rng1, 1000);
    double r_half = max_ratio(m, 0.025, rng2, 1000);
    double change = r_half / r_full;
    bool ok = std::isfinite(r_full) && r_full <= MAX_DSIGMA_OVER_A &&
              change <= 1.5 && change >= 1.0 / 1.5;
    line(6, "max dsigma/A bounded and scale-stable", ok,
         fmt("max %.4f (cap %.1f), halved/full %.3f", r_full,
             MAX_DSIGMA_OVER_A, change));
}

void criterion_7() {
    FluxModel m = make_model("cubic");
    Vec uL = scalar1(-1.0), uM = scalar1(-0.2), uR = scalar1(0.6);
    InteractionLedger led = interaction_ledger(m, uL, uM, uR);
    double got = led.a_quadr[0];
    bool ok = std::fabs(got - 0.130666) < 1e-3;
    line(7, "quadratic amount fixture reproduced", ok,
         fmt("A_quadr %.6f vs 0.130666", got));
}

// ---- criterion 8: headline quadratic scaling ------------------------------

void criterion_8() {
    double t0 = now_s();
    std::vector<double> tvs, dss;
    for (double th : {1.0, 0.5, 0.25, 0.125}) {
        GlimmConfig cfg =
            run_config("cubic", std::pow(0.5, 6), 8.0, {0.0, 0.125, 0.25},
                       {{0.6},
                        {0.6 + 0.3 * th},
                        {0.6 - 0.3 * th},
                        {0.6 + 0.1 * th}});
        GlimmTrace tr = glimm_run(cfg);
        double ds = 0.0;
        for (std::size_t i = 1; i < tr.layers.size(); ++i)
            for (const InteractionLedger& led : tr.layers[i].ledgers)
                ds += led.dsigma_total;
        tvs.push_back(tr.layers.front().tot_var());
        dss.push_back(ds);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < tvs.size(); ++i) {
        double x = std::log(tvs[i]), y = std::log(dss[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(tvs.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double dt = now_s() - t0;
    bool ok = slope >= 1.7 && slope <= 2.3 && dt < 300.0;
    line(8, "total speed change scales like TV^2", ok,
         fmt("log-log slope %.3f, %.1fs", slope, dt));
}

// ---- criteria 9 & 10: decay functional and wave bookkeeping ---------------

// one constant for the whole corpus, frozen after the first calibration
// (measured: fitted C 0.0, Q(0)/TV^2 0.257)
constexpr double DECAY_CONSTANT = 1.0;

void criteria_9_10() {
    double worst_c = 0.0, worst_q0 = 0.0;
    int unexplained = 0;
    int order = 0, affine = 0;
    double balance = 0.0;
    for (const CorpusRun& run : corpus()) {
        LagrangianRep rep = build_lagrangian(run.trace);
        LagrangianCheck chk = check_lagrangian(rep);
        order += chk.order_violations;
        affine += chk.affine_violations;
        balance = std::max(balance, chk.max_balance_residual);

        PotentialRep pot = build_threads(rep);
        Potential P(pot);
        DecayReport dr = P.verify_decay();
        worst_c = std::max(worst_c, dr.fitted_c);
        worst_q0 = std::max(worst_q0, dr.q0_over_tv2);
        unexplained += dr.unexplained;
    }
    bool ok9 = worst_c <= DECAY_CONSTANT && worst_q0 <= DECAY_CONSTANT &&
               unexplained == 0;
    line(9, "pair potential dominates the quadratic amounts", ok9,
         fmt("fitted C %.3f, Q(0)/TV^2 %.3f (cap %.0f)", worst_c, worst_q0,
             DECAY_CONSTANT) +
             fmt(", unexplained steps %g", unexplained));
    bool ok10 = order == 0 && affine == 0 && balance <= 1e-9;
    line(10, "wave bookkeeping balances to 1e-9", ok10,
         fmt("order %g, affine %g, balance residual %.2e", order, affine,
             balance));
}

}  // namespace

TEST_CASE("acceptance criteria") {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criteria_9_10();
}
