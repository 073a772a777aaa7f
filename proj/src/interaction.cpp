#include "glimmlab/interaction.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "glimmlab/errors.hpp"

namespace glimmlab {

namespace {

constexpr double kJunctionTol = 1e-10;

// sorted union of breakpoints clipped to [a, b], endpoints included
std::vector<double> union_nodes(std::initializer_list<const std::vector<double>*> grids,
                                double a, double b) {
    std::vector<double> xs{a, b};
    for (const auto* g : grids)
        for (double x : *g)
            if (x > a && x < b) xs.push_back(x);
    std::sort(xs.begin(), xs.end());
    const double tol = 1e-13 * (1.0 + b - a);
    std::vector<double> out;
    for (double x : xs)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    if (out.back() < b) out.back() = b;
    return out;
}

// exact integral of (p - q) over [a, b] for piecewise-linear p, q
double integrate_diff(const SampledFunction& p, const SampledFunction& q, double a,
                      double b) {
    if (b - a < 1e-14) return 0.0;
    auto xs = union_nodes({&p.nodes, &q.nodes}, a, b);
    double tot = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double fa = p(xs[i]) - q(xs[i]);
        double fb = p(xs[i + 1]) - q(xs[i + 1]);
        tot += 0.5 * (fa + fb) * (xs[i + 1] - xs[i]);
    }
    return tot;
}

// restriction of g to [a, b] with interpolated endpoints inserted
SampledFunction restrict_grid(const SampledFunction& g, double a, double b) {
    const double tol = 1e-13 * (1.0 + b - a);
    SampledFunction r;
    r.nodes.push_back(a);
    r.values.push_back(g(a));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.nodes[i] > a + tol && g.nodes[i] < b - tol) {
            r.nodes.push_back(g.nodes[i]);
            r.values.push_back(g.values[i]);
        }
    r.nodes.push_back(b);
    r.values.push_back(g(b));
    return r;
}

SampledFunction env_fn(const SampledFunction& g, bool convex) {
    EnvelopeResult e = convex ? convex_envelope(g) : concave_envelope(g);
    SampledFunction r;
    r.nodes = g.nodes;
    r.values = e.hull;
    return r;
}

// tau -> -tau, f -> -f: swaps convex and concave cases, preserves all the
// integral amounts, and maps strengths (s1, s2) to (-s1, -s2)
SampledFunction reflect_neg(const SampledFunction& g) {
    SampledFunction r;
    const std::size_t n = g.size();
    r.nodes.resize(n);
    r.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.nodes[i] = -g.nodes[n - 1 - i];
        r.values[i] = -g.values[n - 1 - i];
    }
    return r;
}

// second derivative of the reduced flux (slope of the eigenvalue samples),
// piecewise constant per tau segment
double d2_at(const ElementaryCurve& c, double t) {
    if (c.degenerate()) return 0.0;
    std::size_t j = 0;
    if (t > c.tau.front()) {
        auto it = std::upper_bound(c.tau.begin(), c.tau.end(), t);
        j = static_cast<std::size_t>(it - c.tau.begin());
        j = std::min(j > 0 ? j - 1 : 0, c.tau.size() - 2);
    }
    return (c.lam[j + 1] - c.lam[j]) / (c.tau[j + 1] - c.tau[j]);
}

// merged incoming data of one family: cup for equal signs (first curve on
// I(s1), second at x - s1), triangle for mixed signs (the longer wave)
struct MergedIncoming {
    const ElementaryCurve* c1;
    const ElementaryCurve* c2;
    double s1, s2;

    bool use_first(double x) const {
        if (s1 * s2 < 0) return std::fabs(s1) >= std::fabs(s2);
        if (s1 >= 0) return x <= s1 + 1e-15 && s1 > 0;
        return x >= s1 - 1e-15;
    }
    double sigma(double x) const {
        return use_first(x) ? c1->sigma_at(x) : c2->sigma_at(x - s1);
    }
    Vec state(double x) const {
        return use_first(x) ? c1->state_at(x) : c2->state_at(x - s1);
    }
    double d2(double x) const {
        return use_first(x) ? d2_at(*c1, x) : d2_at(*c2, x - s1);
    }
};

// I(s1+s2) /\ I(s_out) as an interval [a, b]; false if empty
bool common_interval(double ssum, double sout, double& a, double& b) {
    if (ssum >= 0 && sout >= 0) {
        a = 0.0;
        b = std::min(ssum, sout);
    } else if (ssum < 0 && sout < 0) {
        a = std::max(ssum, sout);
        b = 0.0;
    } else {
        return false;
    }
    return b - a > 1e-14;
}

// cubic amount for s1 > 0; F1 on [0, s1], F2 translated to s1 + I(s2)
double cubic_positive(const SampledFunction& F1, double s1, const SampledFunction& F2,
                      double s2) {
    if (s2 >= 0) {
        SampledFunction M = merge_cup(F1, s1, F2, s2);
        SampledFunction E = env_fn(M, true);
        double t1 = integrate_diff(env_fn(F1, true), E, 0.0, s1);
        double t2 = integrate_diff(env_fn(F2, true), E, s1, s1 + s2);
        return t1 + t2;
    }
    double m = s1 + s2;
    if (m >= 0) {  // partial cancellation: only F1 enters
        SampledFunction Eb = env_fn(F1, true);
        double t1 = 0.0;
        if (m > 1e-14) t1 = integrate_diff(env_fn(restrict_grid(F1, 0.0, m), true), Eb, 0.0, m);
        double t2 =
            integrate_diff(env_fn(restrict_grid(F1, m, s1), false), Eb, m, s1);
        return t1 + t2;
    }
    // full cancellation and overshoot: only F2 (it spans [s1+s2, s1], and 0)
    SampledFunction Ed = env_fn(F2, false);
    double t1 = integrate_diff(Ed, env_fn(restrict_grid(F2, m, 0.0), false), m, 0.0);
    double t2 = integrate_diff(Ed, env_fn(restrict_grid(F2, 0.0, s1), true), 0.0, s1);
    return t1 + t2;
}

double clamp_amount(double a) { return (a < 0 && a > -1e-12) ? 0.0 : a; }

}  // namespace

SampledFunction MergeCase::f_in1(int k) const { return in1.curves[k - 1].reduced_flux(); }

SampledFunction MergeCase::f_in2(int k) const {
    const ElementaryCurve& c1 = in1.curves[k - 1];
    SampledFunction g = in2.curves[k - 1].reduced_flux();
    double sp = s1(k);
    double base = c1.degenerate() ? 0.0 : c1.f[c1.end_index()];
    for (double& x : g.nodes) x += sp;
    for (double& y : g.values) y += base;
    return g;
}

SampledFunction MergeCase::f_out(int k) const { return out.curves[k - 1].reduced_flux(); }

SampledFunction MergeCase::f_tilde1(int k) const { return tilde1[k - 1].reduced_flux(); }

SampledFunction MergeCase::f_tilde2(int k) const {
    const ElementaryCurve& c1 = tilde1[k - 1];
    SampledFunction g = tilde2[k - 1].reduced_flux();
    double sp = s1(k);
    double base = c1.degenerate() ? 0.0 : c1.f[c1.end_index()];
    for (double& x : g.nodes) x += sp;
    for (double& y : g.values) y += base;
    return g;
}

MergeCase build_merge_case(const FluxModel& model, const Vec& uL, const Vec& uM,
                           const Vec& uR, int grid_mult) {
    MergeCase c;
    c.model = model;
    c.field = default_generalized_field(model);
    c.uL = uL;
    c.uM = uM;
    c.uR = uR;
    c.grid_mult = grid_mult;
    c.in1 = solve_riemann(model, c.field, uL, uM, grid_mult);
    c.in2 = solve_riemann(model, c.field, uM, uR, grid_mult);
    c.out = solve_riemann(model, c.field, uL, uR, grid_mult);

    // post-transversal chain: both waves of each family, in family order
    Vec u = uL;
    for (int k = 1; k <= model.dim; ++k) {
        ElementaryCurve t1 = elementary_curve(model, c.field, u, c.s1(k), k, grid_mult);
        Vec um = t1.u_end();
        ElementaryCurve t2 = elementary_curve(model, c.field, um, c.s2(k), k, grid_mult);
        u = t2.u_end();
        c.tilde1.push_back(std::move(t1));
        c.tilde2.push_back(std::move(t2));
    }
    return c;
}

SampledFunction merge_cup(const SampledFunction& f1, double s1,
                          const SampledFunction& f2, double s2) {
    if ((s1 > 0 && s2 < 0) || (s1 < 0 && s2 > 0))
        throw ModuleError("interaction", "merge_cup: opposite-sign strengths");
    if (s2 == 0.0 || f2.size() < 2) return f1;
    if (s1 == 0.0 || f1.size() < 2) return f2;

    double v1 = f1(s1), v2 = f2(s1);
    if (std::fabs(v1 - v2) > kJunctionTol)
        throw ModuleError("interaction", "merge_cup: value mismatch at the junction");
    const double shift = v1 - v2;
    const double tol = 1e-12 * (1.0 + std::fabs(s1) + std::fabs(s2));

    SampledFunction r;
    if (s1 > 0) {  // f1 on [0, s1], f2 on [s1, s1+s2]
        r = f1;
        for (std::size_t i = 0; i < f2.size(); ++i)
            if (f2.nodes[i] > s1 + tol) {
                r.nodes.push_back(f2.nodes[i]);
                r.values.push_back(f2.values[i] + shift);
            }
    } else {  // f2 on [s1+s2, s1], f1 on [s1, 0]
        for (std::size_t i = 0; i < f2.size(); ++i)
            if (f2.nodes[i] < s1 - tol) {
                r.nodes.push_back(f2.nodes[i]);
                r.values.push_back(f2.values[i] + shift);
            }
        r.nodes.insert(r.nodes.end(), f1.nodes.begin(), f1.nodes.end());
        r.values.insert(r.values.end(), f1.values.begin(), f1.values.end());
    }
    return r;
}

SampledFunction merge_triangle(const SampledFunction& f1, double s1,
                               const SampledFunction& f2, double s2) {
    if (!(s1 * s2 < 0))
        throw ModuleError("interaction", "merge_triangle: needs opposite signs");
    const double m = s1 + s2;
    const SampledFunction& src = (std::fabs(s1) >= std::fabs(s2)) ? f1 : f2;
    double a = std::min(0.0, m), b = std::max(0.0, m);
    if (b - a < 1e-14) {  // I(0) is empty
        SampledFunction r;
        r.nodes = {0.0};
        r.values = {src(0.0)};
        return r;
    }
    return restrict_grid(src, a, b);
}

double amount_trans(const MergeCase& c) {
    double a = 0.0;
    for (int k = 2; k <= c.model.dim; ++k)
        for (int h = 1; h < k; ++h) a += std::fabs(c.s1(k)) * std::fabs(c.s2(h));
    return a;
}

double amount_cubic(const MergeCase& c, int k) {
    double s1 = c.s1(k), s2 = c.s2(k);
    if (std::fabs(s1) < 1e-14 || std::fabs(s2) < 1e-14) return 0.0;
    SampledFunction F1 = c.f_in1(k), F2 = c.f_in2(k);
    if (s1 < 0) {  // mirror case: concave envelopes <-> convex after reflection
        F1 = reflect_neg(F1);
        F2 = reflect_neg(F2);
        s1 = -s1;
        s2 = -s2;
    }
    return clamp_amount(cubic_positive(F1, s1, F2, s2));
}

std::pair<double, double> amount_canc_cr(const MergeCase& c, int k) {
    double s1 = c.s1(k), s2 = c.s2(k), s = c.s_out(k);
    double canc = (s1 * s2 < 0) ? std::min(std::fabs(s1), std::fabs(s2)) : 0.0;
    double cr = std::max(0.0, std::fabs(s) - std::fabs(s1 + s2));
    return {canc, cr};
}

double amount_quadr(const MergeCase& c, int k) {
    double s1 = c.s1(k), s2 = c.s2(k);
    if (s1 * s2 <= 0 || std::fabs(s1) < 1e-14 || std::fabs(s2) < 1e-14) return 0.0;
    SampledFunction M = merge_cup(c.f_tilde1(k), s1, c.f_tilde2(k), s2);
    SampledFunction E = env_fn(M, s1 > 0);
    double ft1_end = c.f_tilde1(k)(s1);
    double a = (s1 > 0) ? ft1_end - E(s1) : E(s1) - ft1_end;
    return clamp_amount(a);
}

double delta_sigma(const MergeCase& c, int k) {
    double a, b;
    if (!common_interval(c.s1(k) + c.s2(k), c.s_out(k), a, b)) return 0.0;
    MergedIncoming in{&c.in1.curves[k - 1], &c.in2.curves[k - 1], c.s1(k), c.s2(k)};
    const ElementaryCurve& oc = c.out.curves[k - 1];

    std::vector<double> t2 = c.in2.curves[k - 1].tau;
    for (double& x : t2) x += c.s1(k);
    auto xs = union_nodes({&c.in1.curves[k - 1].tau, &t2, &oc.tau}, a, b);
    double tot = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double mid = 0.5 * (xs[i] + xs[i + 1]);
        tot += std::fabs(in.sigma(mid) - oc.sigma_at(mid)) * (xs[i + 1] - xs[i]);
    }
    return tot;
}

InteractionLedger compute_ledger(const MergeCase& c) {
    InteractionLedger led;
    const int n = c.model.dim;
    led.a_trans = amount_trans(c);
    led.total = led.a_trans;
    for (int k = 1; k <= n; ++k) {
        led.a_cubic.push_back(amount_cubic(c, k));
        auto [canc, cr] = amount_canc_cr(c, k);
        led.a_canc.push_back(canc);
        led.a_cr.push_back(cr);
        led.a_quadr.push_back(amount_quadr(c, k));
        led.dsigma.push_back(delta_sigma(c, k));
        led.s1.push_back(c.s1(k));
        led.s2.push_back(c.s2(k));
        led.s_out.push_back(c.s_out(k));
        led.total += led.a_quadr.back() + led.a_canc.back() + led.a_cubic.back();
        led.dsigma_total += led.dsigma.back();
    }
    return led;
}

InteractionLedger interaction_ledger(const FluxModel& model, const Vec& uL,
                                     const Vec& uM, const Vec& uR, bool with_drift) {
    InteractionLedger led = compute_ledger(build_merge_case(model, uL, uM, uR, 1));
    if (with_drift) {
        InteractionLedger fine = compute_ledger(build_merge_case(model, uL, uM, uR, 2));
        auto rel = [](double x, double y) {
            double m = std::max(std::fabs(x), std::fabs(y));
            return m < 1e-12 ? 0.0 : std::fabs(x - y) / m;
        };
        led.refinement_drift = std::max(rel(led.total, fine.total),
                                        rel(led.dsigma_total, fine.dsigma_total));
    }
    return led;
}

LocalEstimateReport check_local_estimates(const MergeCase& c) {
    LocalEstimateReport rep;
    rep.ledger = compute_ledger(c);
    const int n = c.model.dim;
    for (int k = 1; k <= n; ++k) {
        double a, b;
        double gap_u = 0.0, gap_d2 = 0.0;
        if (common_interval(c.s1(k) + c.s2(k), c.s_out(k), a, b)) {
            MergedIncoming in{&c.in1.curves[k - 1], &c.in2.curves[k - 1], c.s1(k),
                              c.s2(k)};
            const ElementaryCurve& oc = c.out.curves[k - 1];
            std::vector<double> t2 = c.in2.curves[k - 1].tau;
            for (double& x : t2) x += c.s1(k);
            auto xs = union_nodes({&c.in1.curves[k - 1].tau, &t2, &oc.tau}, a, b);
            for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
                double mid = 0.5 * (xs[i] + xs[i + 1]);
                double len = xs[i + 1] - xs[i];
                gap_u = std::max(gap_u, (in.state(mid) - oc.state_at(mid)).norm());
                gap_d2 += std::fabs(in.d2(mid) - d2_at(oc, mid)) * len;
            }
        }
        rep.u_gap_inf.push_back(gap_u);
        rep.d2f_gap_l1.push_back(gap_d2);
        rep.strength_defect += std::fabs(c.s_out(k) - (c.s1(k) + c.s2(k)));
    }
    double denom_a = rep.ledger.total;
    double denom_b = rep.ledger.a_trans;
    for (double x : rep.ledger.a_cubic) denom_b += x;
    double cr_max = 0.0;
    for (double x : rep.ledger.a_cr) cr_max = std::max(cr_max, x);
    rep.ratio_dsigma = denom_a > 1e-15 ? rep.ledger.dsigma_total / denom_a : 0.0;
    rep.ratio_defect = denom_b > 1e-15 ? rep.strength_defect / denom_b : 0.0;
    rep.ratio_cr = denom_b > 1e-15 ? cr_max / denom_b : 0.0;
    return rep;
}

}  // namespace glimmlab
