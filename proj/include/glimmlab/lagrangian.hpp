#pragma once

// Lagrangian wave tracking on a finished Glimm trace: wave packages (maximal
// sets of waves sharing their whole position history), their Phi strength
// coordinates, creation/cancellation bookkeeping per restart node, and the
// effective flux of each family per layer.

#include <cstddef>
#include <limits>
#include <vector>

#include "glimmlab/glimm.hpp"

namespace glimmlab {

// One layer in the life of a package. lo/hi is the node-local tau interval,
// a subinterval of [min(0,s), max(0,s)) for the node strength s; phi_lo/phi_hi
// is the same interval in the global Phi coordinate of the layer.
struct WaveRecord {
    std::size_t layer = 0;
    long node = 0;
    double lo = 0.0, hi = 0.0;
    double phi_lo = 0.0, phi_hi = 0.0;
    char origin = 'I';  // 'I' initial datum, 'C' created, 'S' stayed, 'M' moved
    // for 'S'/'M': the branch piece in the previous node's local coordinates,
    // before the slope-1 shift and the survivor trim
    double src_lo = 0.0, src_hi = 0.0;
};

struct WavePackage {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    int id = -1;
    int parent = -1;  // package this one split from, -1 for a root
    int family = 1;   // 1-based
    int sign = +1;
    std::size_t i_cr = 0;    // creation layer of the ancestral waves
    long node_cr = 0;        // node where the ancestral waves were created
    std::size_t i_canc = npos;  // first layer the package no longer exists
    bool split_out = false;     // ended by splitting into children, not cancelled
    std::vector<WaveRecord> recs;  // consecutive layers, recs.front().layer first

    std::size_t first_layer() const { return recs.front().layer; }
    std::size_t last_layer() const { return recs.back().layer; }
    const WaveRecord* rec_at(std::size_t layer) const;
    double measure_at(std::size_t layer) const;
};

// Per restart node and family: the strengths used for the split and the
// resulting measure bookkeeping. defect is the tiling mismatch
// |s1(node+1)| + |s2(node)| - |s_prev(node)| of the previous node's split
// (zero for scalar models).
struct NodeTransition {
    double s1 = 0.0, s2 = 0.0, s_out = 0.0;
    double created = 0.0;    // measure of J(s_out) \ J(s1+s2)
    double cancelled = 0.0;  // incoming fragment measure that did not survive
    double extra = 0.0;      // [|s1+s2| - |s_out|]^+ when the signs agree
    double defect = 0.0;
    bool sign_flip = false;  // sign(s_out) != sign(s1+s2), both nonzero
};

// Per layer and family: total positive/negative wave measure and the Phi
// offset of every node (cumulative same-sign strengths to the left).
struct FamilyLayerInfo {
    double L_minus = 0.0, L_plus = 0.0;
    std::vector<double> offset;
};

struct LagrangianRep {
    const GlimmTrace* trace = nullptr;  // not owned; must outlive the rep
    int n = 0;
    std::vector<WavePackage> packages;
    // info[i][k-1]; transitions[i-1][k-1][node] for i >= 1
    std::vector<std::vector<FamilyLayerInfo>> info;
    std::vector<std::vector<std::vector<NodeTransition>>> transitions;

    // ids of packages of family k alive at the layer, in Phi order
    std::vector<int> alive(std::size_t layer, int k) const;
};

// Strengths below the Riemann solver tolerance are re-solve noise and are
// treated as zero throughout the wave tracking.
double floored_strength(double s);

// Requires a trace run with ledgers (the split uses the per-node incoming
// strengths). Throws ModuleError on a bookkeeping failure.
LagrangianRep build_lagrangian(const GlimmTrace& trace);

// Packages located at the given node at the given layer, every family, each
// family's list in Phi order. Throws ModuleError if two packages of the same
// family and location carry different signs.
std::vector<const WavePackage*> packages_at(const LagrangianRep& rep,
                                            std::size_t layer, long node);

// Effective flux of family k at the layer: piecewise-quadratic function on
// [L_minus, L_plus] whose second derivative on each node's Phi interval is
// the curvature of that node's reduced flux; gauge f(L_minus) = 0,
// f'(L_minus) = 0. Node values are exact; interpolation is linear.
SampledFunction effective_flux(const LagrangianRep& rep, int k, std::size_t layer);

struct LagrangianCheck {
    int order_violations = 0;    // Phi intervals out of order / overlapping
    int affine_violations = 0;   // transition shifts not constant per branch
    int ode_violations = 0;      // moved/stayed flags inconsistent with sigma
    int sign_violations = 0;     // mixed signs at one location
    int flip_nodes = 0;          // sign_flip transitions (excluded from balance)
    double max_balance_residual = 0.0;  // created/cancelled vs ledger amounts
    double max_tiling_gap = 0.0;        // Phi tiling of [L-,0) u (0,L+]
    double max_defect = 0.0;
};

LagrangianCheck check_lagrangian(const LagrangianRep& rep);

}  // namespace glimmlab
