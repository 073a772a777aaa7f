#pragma once

// Interaction amounts for two merging Riemann problems: the merge operators
// on reduced fluxes, the transversal/cubic/cancellation/creation/quadratic
// amounts, the speed-difference norm per family, and the local-estimate
// report used to calibrate the global constants.

#include <utility>
#include <vector>

#include "glimmlab/riemann.hpp"

namespace glimmlab {

// Two contiguous Riemann problems (u_L, u_M) and (u_M, u_R) together with the
// merged problem (u_L, u_R). tilde1/tilde2 are the per-family curves obtained
// after commuting all transversal families: u settles on the chain
// u -> T^k_{s1_k} u -> T^k_{s2_k} (.), so both waves of family k start from
// adjacent states and the quadratic amount compares like with like.
struct MergeCase {
    FluxModel model;
    GeneralizedField field;
    Vec uL, uM, uR;
    RiemannFan in1, in2, out;
    std::vector<ElementaryCurve> tilde1, tilde2;
    int grid_mult = 1;

    double s1(int k) const { return in1.strengths[k - 1]; }
    double s2(int k) const { return in2.strengths[k - 1]; }
    double s_out(int k) const { return out.strengths[k - 1]; }

    // reduced fluxes of family k; the second one translated so that it lives
    // on s1 + I(s2) with f2(s1) = f1(s1) exactly
    SampledFunction f_in1(int k) const;
    SampledFunction f_in2(int k) const;
    SampledFunction f_out(int k) const;
    SampledFunction f_tilde1(int k) const;
    SampledFunction f_tilde2(int k) const;  // translated like f_in2
};

MergeCase build_merge_case(const FluxModel& model, const Vec& uL, const Vec& uM,
                           const Vec& uR, int grid_mult = 1);

// Piecewise concatenation of f1 on I(s1) and f2 on s1 + I(s2) (f2 already
// translated). Requires s1*s2 >= 0 and |f1(s1) - f2(s1)| <= 1e-10; the small
// mismatch is absorbed into f2 so the result is continuous.
SampledFunction merge_cup(const SampledFunction& f1, double s1,
                          const SampledFunction& f2, double s2);

// Mixed-sign merge: the longer wave's function restricted to I(s1+s2); for
// |s1| < |s2| this is the translated f2 read at the same abscissa. A result
// with fewer than 2 nodes means the domain I(s1+s2) is empty.
SampledFunction merge_triangle(const SampledFunction& f1, double s1,
                               const SampledFunction& f2, double s2);

double amount_trans(const MergeCase& c);
double amount_cubic(const MergeCase& c, int k);
std::pair<double, double> amount_canc_cr(const MergeCase& c, int k);  // (canc, cr)
double amount_quadr(const MergeCase& c, int k);

// L1 norm over I(s1+s2) /\ I(s_out) of the merged incoming speed minus the
// outgoing speed (cup for equal signs, triangle for mixed signs).
double delta_sigma(const MergeCase& c, int k);

struct InteractionLedger {
    double a_trans = 0.0;
    std::vector<double> a_cubic, a_canc, a_cr, a_quadr, dsigma;
    std::vector<double> s1, s2, s_out;  // per-family incoming/outgoing strengths
    double total = 0.0;         // a_trans + sum (quadr + canc + cubic)
    double dsigma_total = 0.0;
    double refinement_drift = -1.0;  // relative change under grid doubling; <0 if skipped
};

InteractionLedger compute_ledger(const MergeCase& c);

// Convenience: build the case and its ledger; with_drift rebuilds everything
// at doubled curve resolution and stores the relative change of the totals.
InteractionLedger interaction_ledger(const FluxModel& model, const Vec& uL,
                                     const Vec& uM, const Vec& uR,
                                     bool with_drift = false);

struct LocalEstimateReport {
    InteractionLedger ledger;
    std::vector<double> u_gap_inf;    // sup |(u1 cup/tri u2) - u_out| per family
    std::vector<double> d2f_gap_l1;   // L1 of the second-derivative gap per family
    double strength_defect = 0.0;     // sum_k |s_k - (s1_k + s2_k)|
    double ratio_dsigma = 0.0;        // sum dsigma / total A
    double ratio_defect = 0.0;        // strength defect / (A_trans + sum A_cubic)
    double ratio_cr = 0.0;            // max A_cr / (A_trans + sum A_cubic)
};

LocalEstimateReport check_local_estimates(const MergeCase& c);

}  // namespace glimmlab
