#include "glimmlab/flux_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "glimmlab/errors.hpp"

namespace glimmlab {

bool FluxModel::contains(const Vec& u, double slack) const {
    for (int i = 0; i < dim; ++i)
        if (u[i] < domain[i].first - slack || u[i] > domain[i].second + slack) return false;
    return true;
}

Vec FluxModel::clamp_to_domain(const Vec& u) const {
    Vec v = u;
    for (int i = 0; i < dim; ++i)
        v[i] = std::clamp(v[i], domain[i].first, domain[i].second);
    return v;
}

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& u) {
    const int n = static_cast<int>(u.size());
    Mat J(n, n);
    for (int j = 0; j < n; ++j) {
        double h = 1e-6 * (1.0 + std::fabs(u[j]));
        Vec up = u, um = u;
        up[j] += h;
        um[j] -= h;
        J.col(j) = (f(up) - f(um)) / (2 * h);
    }
    return J;
}

std::string state_str(const Vec& u) {
    std::ostringstream os;
    os << "(";
    for (int i = 0; i < u.size(); ++i) os << (i ? ", " : "") << u[i];
    os << ")";
    return os.str();
}

// frame without orientation fixing (used to bootstrap the reference frame)
EigenFrame raw_frame(const FluxModel& model, const Vec& u) {
    const int n = model.dim;
    Mat A = model.jacobian(u);
    EigenFrame fr;
    fr.lambda.resize(n);
    fr.right.resize(n, n);

    if (n == 1) {
        fr.lambda[0] = A(0, 0);
        fr.right(0, 0) = 1.0;
    } else if (n == 2) {
        // closed form: the Glimm driver calls this in a hot loop
        double a = A(0, 0), b = A(0, 1), c = A(1, 0), d = A(1, 1);
        double mean = 0.5 * (a + d), disc = 0.25 * (a - d) * (a - d) + b * c;
        if (disc < 0)
            throw ModuleError("flux_model", "complex eigenvalue at state " + state_str(u));
        double root = std::sqrt(disc);
        if (2.0 * root < 1e-9)
            throw ModuleError("flux_model", "eigenvalue collision at state " + state_str(u));
        fr.lambda[0] = mean - root;
        fr.lambda[1] = mean + root;
        for (int k = 0; k < 2; ++k) {
            Vec r(2);
            if (std::fabs(b) >= std::fabs(c) && std::fabs(b) > 1e-14)
                r << b, fr.lambda[k] - a;
            else if (std::fabs(c) > 1e-14)
                r << fr.lambda[k] - d, c;
            else if ((k == 0) == (a < d))  // diagonal matrix
                r << 1.0, 0.0;
            else
                r << 0.0, 1.0;
            fr.right.col(k) = r / r.norm();
        }
    } else {
        Eigen::EigenSolver<Mat> es(A);
        std::vector<int> order(n);
        for (int i = 0; i < n; ++i) {
            if (std::fabs(es.eigenvalues()[i].imag()) > 1e-9)
                throw ModuleError("flux_model",
                                  "complex eigenvalue at state " + state_str(u));
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return es.eigenvalues()[a].real() < es.eigenvalues()[b].real();
        });
        for (int k = 0; k < n; ++k) {
            fr.lambda[k] = es.eigenvalues()[order[k]].real();
            Vec r = es.eigenvectors().col(order[k]).real();
            fr.right.col(k) = r / r.norm();
        }
        for (int k = 0; k + 1 < n; ++k)
            if (fr.lambda[k + 1] - fr.lambda[k] < 1e-9)
                throw ModuleError("flux_model", "eigenvalue collision at state " +
                                                    state_str(u));
    }
    return fr;
}

void fix_first_nonzero_positive(Mat& R) {
    for (int k = 0; k < R.cols(); ++k) {
        for (int i = 0; i < R.rows(); ++i) {
            if (std::fabs(R(i, k)) > 1e-12) {
                if (R(i, k) < 0) R.col(k) = -R.col(k);
                break;
            }
        }
    }
}

}  // namespace

EigenFrame eigen_frame(const FluxModel& model, const Vec& u) {
    EigenFrame fr = raw_frame(model, u);
    // orientation: sign-match the reference frame (which itself is fixed by
    // the first-nonzero-positive rule at the reference state)
    for (int k = 0; k < model.dim; ++k) {
        double d = fr.right.col(k).dot(model.ref_right.col(k));
        if (d < 0) fr.right.col(k) = -fr.right.col(k);
    }
    fr.left = fr.right.inverse();
    return fr;
}

GeneralizedField default_generalized_field(const FluxModel& model) {
    // own a copy so the field stays valid past the caller's model
    auto m = std::make_shared<FluxModel>(model);
    GeneralizedField gf;
    gf.r = [m](const Vec& u, double, double, int k) -> Vec {
        return eigen_frame(*m, u).right.col(k - 1);
    };
    gf.lambda = [m](const Vec& u, double, double, int k) -> double {
        return eigen_frame(*m, u).lambda[k - 1];
    };
    return gf;
}

std::vector<std::string> builtin_models() {
    return {"burgers", "cubic", "temple", "psystem", "linear"};
}

namespace {

void finish_model(FluxModel& m) {
    if (!m.jacobian) {
        auto f = m.flux;
        m.jacobian = [f](const Vec& u) { return fd_jacobian(f, u); };
    }
    FluxModel probe = m;  // ref frame not needed by raw_frame
    EigenFrame fr = raw_frame(probe, m.ref_state);
    fix_first_nonzero_positive(fr.right);
    m.ref_right = fr.right;
    if (static_cast<int>(m.lambda_hat.size()) != m.dim + 1)
        throw ModuleError("flux_model", "bad separation constants for " + m.name);
}

double jget(const nlohmann::json& j, const char* key, double dflt) {
    return j.contains(key) ? j.at(key).get<double>() : dflt;
}

}  // namespace

FluxModel make_model(const std::string& name, const nlohmann::json& params) {
    FluxModel m;
    m.name = name;
    m.params = params;

    if (name == "burgers") {
        m.dim = 1;
        m.flux = [](const Vec& u) { return Vec::Constant(1, 0.5 * u[0] * u[0]); };
        m.jacobian = [](const Vec& u) { return Mat::Constant(1, 1, u[0]); };
        m.domain = {{0.0, 1.0}};
        m.lambda_hat = {-0.1, 1.1};
        m.strength_cap = 1.2;  // scalar curves are exact; allow unit jumps
        m.ref_state = Vec::Constant(1, 0.5);
    } else if (name == "cubic") {
        m.dim = 1;
        m.flux = [](const Vec& u) { return Vec::Constant(1, u[0] * u[0] * u[0] / 3.0); };
        m.jacobian = [](const Vec& u) { return Mat::Constant(1, 1, u[0] * u[0]); };
        m.domain = {{-1.0, 1.0}};
        m.lambda_hat = {-0.01, 1.2};
        m.strength_cap = 2.5;  // scalar curves are exact; allow domain-wide jumps
        m.ref_state = Vec::Zero(1);
    } else if (name == "temple") {
        // u_t + g(u,v)_x = 0, v_t - v_x = 0 with dg/du > -1; the stored flux
        // is the normalized one, F = (orig + a*U)/b with speeds in (0,1)
        double c = jget(params, "coupling", 0.3);
        double a = 1.2, b = 2.4;
        m.dim = 2;
        m.flux = [c, a, b](const Vec& U) {
            Vec F(2);
            double u = U[0], v = U[1];
            F[0] = (0.5 * u * u + c * u * v + a * u) / b;
            F[1] = (-v + a * v) / b;
            return F;
        };
        m.jacobian = [c, a, b](const Vec& U) {
            Mat J(2, 2);
            double u = U[0], v = U[1];
            J << (u + c * v + a) / b, c * u / b, 0.0, (a - 1.0) / b;
            return J;
        };
        m.domain = {{-0.5, 0.5}, {-0.5, 0.5}};
        m.lambda_hat = {0.0, 0.15, 0.95};
        m.speed_shift = a;
        m.speed_scale = b;
        m.ref_state = Vec::Zero(2);
    } else if (name == "psystem") {
        // isentropic gas, p(rho) = kappa*rho^2, in conserved (rho, momentum);
        // normalized flux F = (orig + a*U)/b
        double kappa = jget(params, "kappa", 0.25);
        double a = 1.5, b = 3.0;
        m.dim = 2;
        m.flux = [kappa, a, b](const Vec& U) {
            Vec F(2);
            double rho = U[0], mom = U[1];
            F[0] = (mom + a * rho) / b;
            F[1] = (mom * mom / rho + kappa * rho * rho + a * mom) / b;
            return F;
        };
        m.jacobian = [kappa, a, b](const Vec& U) {
            Mat J(2, 2);
            double rho = U[0], mom = U[1];
            double v = mom / rho;
            J << a / b, 1.0 / b, (-v * v + 2 * kappa * rho) / b, (2 * v + a) / b;
            return J;
        };
        m.domain = {{0.7, 1.3}, {-0.3, 0.3}};
        m.lambda_hat = {0.0, 0.5, 1.0};
        m.speed_shift = a;
        m.speed_scale = b;
        m.ref_state = Vec(2);
        m.ref_state << 1.0, 0.0;
    } else if (name == "linear") {
        double a1 = jget(params, "l1", 0.2), a2 = jget(params, "l2", 0.8);
        m.dim = 2;
        Mat A(2, 2);
        A << a1, 0.0, 0.0, a2;
        m.flux = [A](const Vec& u) -> Vec { return A * u; };
        m.jacobian = [A](const Vec&) { return A; };
        m.domain = {{-1.0, 1.0}, {-1.0, 1.0}};
        m.lambda_hat = {a1 - 0.1, 0.5 * (a1 + a2), a2 + 0.1};
        m.strength_cap = 2.5;  // linear curves are exact at any strength
        m.ref_state = Vec::Zero(2);
    } else {
        throw ConfigError("unknown model '" + name + "'");
    }

    finish_model(m);
    return m;
}

}  // namespace glimmlab
