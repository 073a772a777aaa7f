#pragma once

// The hyperbolic system under study: flux, Jacobian, eigen-structure,
// uniform-hyperbolicity separation constants, and the generalized field
// (r~_k, lambda~_k) used by the curve fixed point.

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace glimmlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct EigenFrame {
    Vec lambda;  // sorted ascending
    Mat right;   // columns r_k, |r_k| = 1, orientation fixed
    Mat left;    // rows l_k, <l_k, r_h> = delta_kh
};

struct FluxModel {
    std::string name;
    nlohmann::json params;
    int dim = 1;
    std::function<Vec(const Vec&)> flux;
    std::function<Mat(const Vec&)> jacobian;  // analytic if provided, else FD
    std::vector<std::pair<double, double>> domain;  // box around the reference state
    std::vector<double> lambda_hat;  // separation constants, size dim+1
    double strength_cap = 0.2;

    // affine speed normalization folded into the stored flux:
    // normalized speed = (original + speed_shift) / speed_scale
    double speed_shift = 0.0;
    double speed_scale = 1.0;
    double denormalize_speed(double s) const { return s * speed_scale - speed_shift; }

    // orientation anchor (computed at construction)
    Vec ref_state;
    Mat ref_right;

    bool contains(const Vec& u, double slack = 0.0) const;
    Vec clamp_to_domain(const Vec& u) const;
};

// Ordered, normalized, orientation-fixed frame at u. Throws ModuleError on an
// eigenvalue collision within 1e-9 (hyperbolicity violation).
EigenFrame eigen_frame(const FluxModel& model, const Vec& u);

// The generalized field (r~_k, lambda~_k) as functions of (u, v_k, sigma_k, k).
// Families are numbered 1..n.
struct GeneralizedField {
    std::function<Vec(const Vec& u, double v, double sigma, int k)> r;
    std::function<double(const Vec& u, double v, double sigma, int k)> lambda;
};

// First-order default: r~_k(u,v,sigma) = r_k(u), lambda~_k(u,v,sigma) = lambda_k(u).
GeneralizedField default_generalized_field(const FluxModel& model);

// Built-in systems, all with speeds normalized into [0,1]:
//   burgers  - scalar f(u)=u^2/2 on [0,1] (identity normalization)
//   cubic    - scalar f(u)=u^3/3 on [-1,1] (identity normalization)
//   temple   - 2x2 triangular system u_t + g(u,v)_x = 0, v_t - v_x = 0
//   psystem  - 2x2 isentropic gas (gamma = 2) in conserved variables
//   linear   - diagonal linear system (test helper)
std::vector<std::string> builtin_models();
FluxModel make_model(const std::string& name, const nlohmann::json& params = {});

}  // namespace glimmlab
