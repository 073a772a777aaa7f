#pragma once

// Convex/concave envelopes of sampled scalar functions and secant-slope
// utilities. Everything downstream (curve decomposition, interaction amounts,
// effective fluxes) sits on top of these few functions.

#include <cstddef>
#include <vector>

namespace glimmlab {

// A scalar function sampled on a strictly increasing grid. The optional
// endpoint derivatives are used by sigma_rh when asked for a singleton
// interval at the domain boundary of an analytically known function.
struct SampledFunction {
    std::vector<double> nodes;   // strictly increasing
    std::vector<double> values;  // same size as nodes
    bool has_end_derivs = false;
    double deriv_left = 0.0;
    double deriv_right = 0.0;

    std::size_t size() const { return nodes.size(); }
    double x_min() const { return nodes.front(); }
    double x_max() const { return nodes.back(); }

    // piecewise-linear evaluation, clamped to the domain
    double operator()(double x) const;

    void validate(const char* who) const;  // throws ModuleError on bad data
};

struct EnvelopeResult {
    std::size_t lo = 0, hi = 0;      // node index range [lo, hi] of the input
    std::vector<double> hull;        // hull values at nodes lo..hi
    std::vector<double> slopes;      // per-segment slope, size hi-lo
    std::vector<char> contact;       // per node: hull touches the data

    // hull derivative at node j (relative index): right-segment slope,
    // left-segment slope at the final node
    double slope_at(std::size_t j) const {
        return j < slopes.size() ? slopes[j] : slopes.back();
    }
};

// Lower convex hull of the nodes in [lo, hi] (inclusive). Requires at least
// two nodes in range. Slopes are nondecreasing, hull <= values, equality at
// both endpoints.
EnvelopeResult convex_envelope(const SampledFunction& g, std::size_t lo, std::size_t hi);
EnvelopeResult convex_envelope(const SampledFunction& g);

// Upper concave hull; mirror of convex_envelope.
EnvelopeResult concave_envelope(const SampledFunction& g, std::size_t lo, std::size_t hi);
EnvelopeResult concave_envelope(const SampledFunction& g);

// Rankine-Hugoniot speed given by g to [a,b]: the secant slope for a < b,
// the derivative for a == b (endpoint derivative if provided, otherwise the
// right-segment slope convention).
double sigma_rh(const SampledFunction& g, double a, double b);

// Distances between envelope derivatives and raw derivatives of two
// functions on the same grid, plus the two contraction inequalities
// (envelope-derivative distance <= raw-derivative distance, in both the
// sup and the L1 norm) evaluated up to discretization tolerance.
struct EnvelopeDistanceReport {
    double denv_inf = 0, denv_l1 = 0;  // ||(conv g)' - (conv h)'||
    double draw_inf = 0, draw_l1 = 0;  // ||g' - h'||
    bool inf_inequality_holds = false;
    bool l1_inequality_holds = false;
};
EnvelopeDistanceReport envelope_distance_checks(const SampledFunction& g,
                                                const SampledFunction& h);

}  // namespace glimmlab
