#pragma once

// Glimm scheme driver: square grid with unit CFL (speeds normalized into
// [0,1]), sampling-based restart, per-node interaction ledgers, and the
// classical functionals V, Q_trans, Q_cubic, Q_known.

#include <cstddef>
#include <string>
#include <vector>

#include "glimmlab/interaction.hpp"
#include "glimmlab/riemann.hpp"

namespace glimmlab {

// base-2 radical inverse of i (i >= 1): 1 -> 0.5, 2 -> 0.25, 3 -> 0.75, ...
double vdc_sequence(std::size_t i);

// deterministic sampling sequence: "vdc" or "random:<seed>"
class ThetaSequence {
  public:
    explicit ThetaSequence(const std::string& spec);
    double operator()(std::size_t i);  // i >= 1

  private:
    bool random_ = false;
    std::uint64_t seed_ = 0;
    std::vector<double> cache_;
};

// right-continuous piecewise-constant function of x
struct PiecewiseConstant {
    std::vector<double> xs;  // jump points, strictly increasing
    std::vector<Vec> vals;   // size xs.size()+1; vals[0] left of xs[0]

    Vec operator()(double x) const;
    void validate(int dim) const;  // throws ConfigError
};

struct GlimmConfig {
    std::string model_name = "burgers";
    nlohmann::json model_params;
    double eps = 1.0 / 16;
    double horizon = 1.0;
    std::string sequence = "vdc";
    PiecewiseConstant datum;
    bool with_ledgers = true;
    double c1 = 0, c2 = 0, c3 = 0;  // 0 means: use the per-model defaults
    double blowup_factor = 10.0;
};

GlimmConfig glimm_config_from_json(const nlohmann::json& j);

// functional constants used for Q_known, calibrated per model
struct FunctionalConstants {
    double c1 = 1.0, c2 = 5.0, c3 = 5.0;
};
FunctionalConstants default_functional_constants(const std::string& model_name);

// One time layer: states on cells [x_m, x_{m+1}), the Riemann fans of the
// strip above it (fans[j] sits at node j, between cells j-1 and j), the theta
// used to create the layer, and per-node ledgers of the restart that made it.
struct GlimmLayer {
    std::vector<Vec> u;
    std::vector<RiemannFan> fans;
    double theta = 0.0;
    double V = 0.0, Q_trans = 0.0, Q_cubic = 0.0, Q_known = 0.0;
    std::vector<InteractionLedger> ledgers;  // empty when ledgers are off

    double tot_var() const;  // sum over cells of |u_j - u_{j-1}|_1
};

struct GlimmTrace {
    GlimmConfig config;
    FluxModel model;
    FunctionalConstants constants;
    long m_lo = 0;  // global grid index of cell 0
    std::vector<GlimmLayer> layers;

    double x_of(std::size_t j) const { return (m_lo + static_cast<long>(j)) * config.eps; }
};

// V, Q_trans, Q_cubic from the layer's fans, Q_known from the constants
void compute_functionals(const FluxModel& model, const FunctionalConstants& c,
                         GlimmLayer& layer);

// one restart: sample every fan of prev at theta, re-solve the new jumps,
// and (optionally) attach the per-node merge ledgers
GlimmLayer advance_layer(const FluxModel& model, const GeneralizedField& field,
                         const GlimmLayer& prev, double theta, bool with_ledgers);

// full run; throws ModuleError if V exceeds blowup_factor * V(0)
GlimmTrace glimm_run(const GlimmConfig& cfg);

}  // namespace glimmlab
