#pragma once

// Riemann solver: elementary curves per family (fixed point of the envelope
// decomposition), the composite strength solve, and self-similar sampling.

#include <vector>

#include "glimmlab/envelope.hpp"
#include "glimmlab/flux_model.hpp"

namespace glimmlab {

// Discretized elementary curve gamma = (u, v, sigma) of one family, with its
// reduced flux f. Samples are stored on an ascending tau grid covering
// [min(0,s), max(0,s)]; i0 is the index of tau = 0 (the left state). For
// s < 0 the curve parameter runs from index i0 = N down to 0.
struct ElementaryCurve {
    int family = 1;
    Vec u_left;
    double s = 0.0;

    std::vector<double> tau;     // ascending
    std::vector<Vec> u;          // states
    std::vector<double> v;       // f - envelope(f)
    std::vector<double> sigma;   // envelope slope, node convention: right
                                 // segment, left segment at the last node
    std::vector<double> f;       // reduced flux, f(0) = 0
    std::vector<double> lam;     // generalized eigenvalue samples (= f')
    std::size_t i0 = 0;

    int iterations = 0;
    double residual = 0.0;

    bool degenerate() const { return tau.size() < 2; }
    std::size_t end_index() const { return s >= 0 ? tau.size() - 1 : 0; }
    const Vec& u_end() const { return u[end_index()]; }

    // sigma as a function of tau (piecewise constant per segment; value on
    // [tau_j, tau_{j+1}) is the segment slope of the envelope)
    double sigma_at(double t) const;
    Vec state_at(double t) const;  // linear interpolation of u

    SampledFunction reduced_flux() const;   // nodes tau, values f
    SampledFunction lambda_along() const;   // nodes tau, values lam (df/dtau)
};

// Fixed point of the curve transformation to 1e-10 in the dagger norm
// (sup on u and v, discrete L1 on sigma). Grid: max(16, ceil(256|s|))
// segments, times grid_mult for refinement studies. Throws on
// non-convergence within 100 iterations or domain exit.
ElementaryCurve elementary_curve(const FluxModel& model, const GeneralizedField& field,
                                 const Vec& u_L, double s, int k, int grid_mult = 1);

struct RiemannFan {
    std::vector<Vec> states;             // u_0 = u_L ... u_n = u_R
    std::vector<double> strengths;       // s_1 ... s_n
    std::vector<ElementaryCurve> curves; // one per family
    double residual = 0.0;
    int iterations = 0;

    // right-continuous self-similar profile at xi = x/t
    Vec sample(double xi) const;
};

// Composite map u_L -> T^n_{s_n} ... T^1_{s_1} u_L; fills curves if asked.
Vec riemann_T(const FluxModel& model, const GeneralizedField& field, const Vec& u_L,
              const std::vector<double>& s, std::vector<ElementaryCurve>* curves = nullptr,
              int grid_mult = 1);

// Quasi-Newton strength solve: s <- s + R(u_L)^{-1} (u_R - T(s)), residual
// tolerance 1e-10, at most 200 iterations.
RiemannFan solve_riemann(const FluxModel& model, const GeneralizedField& field,
                         const Vec& u_L, const Vec& u_R, int grid_mult = 1);
RiemannFan solve_riemann(const FluxModel& model, const Vec& u_L, const Vec& u_R,
                         int grid_mult = 1);

}  // namespace glimmlab
