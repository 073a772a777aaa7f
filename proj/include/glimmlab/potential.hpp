#pragma once

// Second pass over a finished trace + wave tracking: threads (finest sets of
// waves sharing one whole trajectory), pair classification from position
// histories, characteristic intervals with their partitions, the pair weight
// q = pi / d, the functional Q built from it, and the per-step decay report.
// Everything here needs future data (the next meeting time of a pair), so it
// only runs on completed traces.

#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "glimmlab/lagrangian.hpp"

namespace glimmlab {

// A maximal set of waves sharing the entire trajectory, creation and death.
// Threads refine packages: a package splits a thread off whenever part of it
// takes another branch or is cancelled, so a thread's interval keeps a fixed
// length for its whole life and moves rigidly (slope-1) through the Phi
// coordinate of each layer.
struct WaveThread {
    int id = -1;
    int family = 1;
    int sign = +1;
    std::size_t i_cr = 0;        // layer the waves were created
    std::vector<long> node;      // node per layer, index (layer - i_cr)
    std::vector<double> phi_lo;  // Phi of the lower end per layer
    double len = 0.0;
    bool cancelled = false;  // dies arriving at canc_node at layer last+1
    long canc_node = 0;

    std::size_t last_layer() const { return i_cr + node.size() - 1; }
    bool alive_at(std::size_t i) const { return i >= i_cr && i <= last_layer(); }
    long node_at(std::size_t i) const { return node[i - i_cr]; }
    double lo_at(std::size_t i) const { return phi_lo[i - i_cr]; }
    double hi_at(std::size_t i) const { return phi_lo[i - i_cr] + len; }
    // position at layer i including the arrival node of a cancellation;
    // returns false if the thread has no position there
    bool pos_at(std::size_t i, long& out) const;
};

struct PotentialRep {
    const LagrangianRep* rep = nullptr;  // not owned; must outlive this
    std::vector<WaveThread> threads;

    // ids of threads of family k alive at the layer, ascending in Phi
    std::vector<int> alive(std::size_t layer, int k) const;
};

PotentialRep build_threads(const LagrangianRep& rep);

struct PairClassification {
    enum Status { interacting_now, already_interacted, never_interacted };
    Status status = never_interacted;
    bool divided = false;  // positions differ at some time right after the layer
    bool has_split = false, has_int = false;
    std::size_t i_split = 0, i_int = 0;  // last/next meeting layer
    long node_split = 0, node_int = 0;   // node of those meetings
};

// threads a, b of the same family, both alive at layer i
PairClassification classify_pair(const PotentialRep& pot, std::size_t i, int a,
                                 int b);

// One element of the partition of a characteristic interval: a Phi interval
// at the layer. atomic means every wave inside is its own class (waves
// created after the last splitting of the pair).
struct PartElement {
    double lo = 0.0, hi = 0.0;
    bool atomic = false;
};

struct CharacteristicInterval {
    double lo = 0.0, hi = 0.0;           // Phi interval at the layer
    std::vector<PartElement> elements;   // partition, ascending in Phi
};

// The weight on one block of ordered wave pairs: [a_lo,a_hi) x [b_lo,b_hi)
// in the Phi coordinate of the layer, a on the left in wave order. pi is the
// approach speed of the two wave groups; the denominator is d0 for a pair of
// fixed groups, d0 + (Phi distance of the two waves) when the groups
// degenerate to the waves themselves (pairs that never interacted).
struct WeightCell {
    double a_lo = 0, a_hi = 0, b_lo = 0, b_hi = 0;
    double pi = 0.0;
    double d0 = 0.0;
    bool moving = false;

    double area() const { return (a_hi - a_lo) * (b_hi - b_lo); }
    double q() const;         // weight at the block midpoint
    double integral() const;  // exact integral of the weight over the block
};

struct WeightField {
    std::size_t layer = 0;
    int family = 1;
    std::vector<WeightCell> cells;
    double q_max = 0.0;            // largest midpoint weight
    double curvature_bound = 0.0;  // max |second derivative| of the
                                   // effective flux at the layer
    double Q_plus = 0.0, Q_minus = 0.0;
    double Q() const { return Q_plus + Q_minus; }
};

struct DecayStep {
    std::size_t i = 0;            // transition from layer i-1 to layer i
    std::vector<double> dQ;       // per family: Q_k(i) - Q_k(i-1)
    std::vector<double> a_quadr;  // per family: quadratic amount, all nodes
    double a_total = 0.0;         // total interaction amount, all nodes
};

struct DecayReport {
    double tv0 = 0.0;                    // total variation of the datum
    std::vector<std::vector<double>> Q;  // Q[layer][family-1]
    std::vector<DecayStep> steps;
    // smallest C with dQ_k <= -sum A^quadr_k + C * tv0 * sum A on every step
    double fitted_c = 0.0;
    // steps where the left side is positive but no interaction amount exists
    int unexplained = 0;
    double q0_total = 0.0;  // sum_k Q_k(0)
    double q0_over_tv2 = 0.0;
    double dsigma_total = 0.0;  // speed change of all restarts, all families
    double dsigma_over_tv2 = 0.0;
    double max_q = 0.0;
    double curvature_bound = 0.0;
};

// Memoized evaluator over an immutable thread representation. The partition
// chains depend only on (family, split layer, split node), so they are shared
// between all pairs with the same last splitting; the memo table is guarded
// by a mutex so independent pair evaluations may run concurrently.
class Potential {
  public:
    explicit Potential(const PotentialRep& pot);

    // pair must be divided at layer i and share the sign
    CharacteristicInterval characteristic_interval(std::size_t i, int a, int b);
    std::vector<PartElement> partition(std::size_t i, int a, int b);

    const WeightField& weight_field(std::size_t i, int k);
    struct QValue {
        double plus = 0, minus = 0;
        double total() const { return plus + minus; }
    };
    QValue functional_Q(std::size_t i, int k);

    DecayReport verify_decay();

    // merging tolerance for equal-slope runs of the effective flux; 0 keeps
    // every genuine slope change
    void set_slope_merge_tol(double t) { slope_merge_tol_ = t; }

  private:
    struct SlopeProfile {
        std::vector<double> x;  // run boundaries, ascending, size runs+1
        std::vector<double> s;  // slope per run
        double slope_at(double t) const;
    };

    const CharacteristicInterval& chain_at(int k, std::size_t i_split,
                                           long node_split, std::size_t i);
    const SampledFunction& feff(std::size_t i, int k);
    const SlopeProfile& profile(std::size_t i, int k);
    // Phi span at layer i of the waves of [lo,hi] at layer L >= i
    bool pull_back(std::size_t L, std::size_t i, int k, int sign, double lo,
                   double hi, double& out_lo, double& out_hi) const;
    void pair_cells(std::size_t i, int k, int sign, int a, int b,
                    std::vector<WeightCell>& out);
    // package interval of family k containing phi at the layer
    bool package_span(std::size_t i, int k, double phi, double& lo,
                      double& hi) const;

    const PotentialRep& pot_;
    const LagrangianRep& rep_;
    const GlimmTrace& tr_;
    double slope_merge_tol_ = 0.0;
    std::vector<std::vector<std::vector<int>>> alive_;  // [layer][family-1]
    std::map<std::pair<std::size_t, int>, SampledFunction> feff_;
    std::map<std::pair<std::size_t, int>, SlopeProfile> prof_;
    std::map<std::tuple<int, std::size_t, long>,
             std::vector<CharacteristicInterval>>
        chains_;
    std::map<std::pair<std::size_t, int>, WeightField> fields_;
    std::recursive_mutex mu_;
};

}  // namespace glimmlab
