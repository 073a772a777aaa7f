#include "glimmlab/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "glimmlab/errors.hpp"

namespace glimmlab {

void SampledFunction::validate(const char* who) const {
    if (nodes.size() < 2)
        throw ModuleError("envelope", std::string(who) + ": need at least 2 nodes");
    if (nodes.size() != values.size())
        throw ModuleError("envelope", std::string(who) + ": nodes/values size mismatch");
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
        if (!(nodes[i] < nodes[i + 1]))
            throw ModuleError("envelope", std::string(who) + ": nodes not strictly increasing");
    for (double v : values)
        if (!std::isfinite(v))
            throw ModuleError("envelope", std::string(who) + ": non-finite value");
}

double SampledFunction::operator()(double x) const {
    if (x <= nodes.front()) return values.front();
    if (x >= nodes.back()) return values.back();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
    std::size_t j = static_cast<std::size_t>(it - nodes.begin()) - 1;
    double t = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
    return values[j] + t * (values[j + 1] - values[j]);
}

namespace {

// Monotone-chain lower hull on nodes [lo, hi]; sign = +1 for convex (lower),
// -1 for concave (upper, computed as the lower hull of -g).
EnvelopeResult hull_impl(const SampledFunction& g, std::size_t lo, std::size_t hi, double sign) {
    g.validate("envelope");
    if (hi >= g.size() || lo >= hi)
        throw ModuleError("envelope", "degenerate or out-of-range node interval");

    const std::size_t n = hi - lo + 1;
    std::vector<std::size_t> stack;  // indices of hull vertices (absolute)
    stack.reserve(n);
    for (std::size_t i = lo; i <= hi; ++i) {
        double y = sign * g.values[i];
        while (stack.size() >= 2) {
            std::size_t a = stack[stack.size() - 2], b = stack.back();
            double cross = (g.nodes[b] - g.nodes[a]) * (y - sign * g.values[a]) -
                           (g.nodes[i] - g.nodes[a]) * (sign * g.values[b] - sign * g.values[a]);
            // pop b when it lies on or above the chord a--i
            if (cross <= 0.0)
                stack.pop_back();
            else
                break;
        }
        stack.push_back(i);
    }

    EnvelopeResult r;
    r.lo = lo;
    r.hi = hi;
    r.hull.resize(n);
    r.slopes.resize(n - 1);
    r.contact.assign(n, 0);

    double vmin = g.values[lo], vmax = g.values[lo];
    for (std::size_t i = lo; i <= hi; ++i) {
        vmin = std::min(vmin, g.values[i]);
        vmax = std::max(vmax, g.values[i]);
    }
    const double ctol = 1e-10 * std::max(vmax - vmin, 0.0);

    // fill hull values segment by segment between consecutive hull vertices
    for (std::size_t v = 0; v + 1 < stack.size(); ++v) {
        std::size_t a = stack[v], b = stack[v + 1];
        double slope = (g.values[b] - g.values[a]) / (g.nodes[b] - g.nodes[a]);
        for (std::size_t i = a; i < b; ++i) {
            r.hull[i - lo] = g.values[a] + slope * (g.nodes[i] - g.nodes[a]);
            r.slopes[i - lo] = slope;
        }
    }
    r.hull[n - 1] = g.values[hi];

    for (std::size_t i = 0; i < n; ++i)
        r.contact[i] = (sign * (g.values[lo + i] - r.hull[i]) <= ctol) ? 1 : 0;
    return r;
}

}  // namespace

EnvelopeResult convex_envelope(const SampledFunction& g, std::size_t lo, std::size_t hi) {
    return hull_impl(g, lo, hi, +1.0);
}
EnvelopeResult convex_envelope(const SampledFunction& g) {
    return hull_impl(g, 0, g.size() - 1, +1.0);
}

EnvelopeResult concave_envelope(const SampledFunction& g, std::size_t lo, std::size_t hi) {
    EnvelopeResult r = hull_impl(g, lo, hi, -1.0);
    // hull_impl computed the lower hull of -g in "sign space": hull values and
    // slopes are already in g's units because we never negated the outputs —
    // check: values/slopes were filled from g.values directly, so nothing to flip.
    return r;
}
EnvelopeResult concave_envelope(const SampledFunction& g) {
    return concave_envelope(g, 0, g.size() - 1);
}

double sigma_rh(const SampledFunction& g, double a, double b) {
    g.validate("sigma_rh");
    if (a > b) throw ModuleError("envelope", "sigma_rh: a > b");
    if (a < b) return (g(b) - g(a)) / (b - a);
    // singleton: derivative convention
    if (g.has_end_derivs && a <= g.x_min()) return g.deriv_left;
    if (g.has_end_derivs && a >= g.x_max()) return g.deriv_right;
    // right-segment slope, left-segment at the final node
    std::size_t j = 0;
    while (j + 2 < g.size() && g.nodes[j + 1] <= a) ++j;
    return (g.values[j + 1] - g.values[j]) / (g.nodes[j + 1] - g.nodes[j]);
}

EnvelopeDistanceReport envelope_distance_checks(const SampledFunction& g,
                                                const SampledFunction& h) {
    g.validate("envelope_distance_checks");
    h.validate("envelope_distance_checks");
    if (g.nodes != h.nodes)
        throw ModuleError("envelope", "envelope_distance_checks: grid mismatch");

    EnvelopeResult cg = convex_envelope(g), ch = convex_envelope(h);
    EnvelopeDistanceReport rep;
    for (std::size_t j = 0; j + 1 < g.size(); ++j) {
        double len = g.nodes[j + 1] - g.nodes[j];
        double de = std::fabs(cg.slopes[j] - ch.slopes[j]);
        double dr = std::fabs((g.values[j + 1] - g.values[j]) / len -
                              (h.values[j + 1] - h.values[j]) / len);
        rep.denv_inf = std::max(rep.denv_inf, de);
        rep.draw_inf = std::max(rep.draw_inf, dr);
        rep.denv_l1 += de * len;
        rep.draw_l1 += dr * len;
    }
    double span = g.x_max() - g.x_min();
    double tol_inf = 1e-9 * (1.0 + rep.draw_inf);
    double tol_l1 = 1e-9 * (1.0 + rep.draw_l1) * (1.0 + span);
    rep.inf_inequality_holds = rep.denv_inf <= rep.draw_inf + tol_inf;
    rep.l1_inequality_holds = rep.denv_l1 <= rep.draw_l1 + tol_l1;
    return rep;
}

}  // namespace glimmlab
