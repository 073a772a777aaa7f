#include "glimmlab/riemann.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glimmlab/errors.hpp"

namespace glimmlab {

namespace {

constexpr double kCurveTol = 1e-10;
constexpr int kCurveMaxIter = 100;
constexpr double kSolveTol = 1e-10;
constexpr int kSolveMaxIter = 200;
constexpr double kDomainSlack = 0.05;

// Cumulative integral of samples y on a uniform grid, 4th order (cumulative
// Simpson with one-sided end formulas). out[0] = 0.
template <typename T>
void cumint(double h, const std::vector<T>& y, std::vector<T>& out) {
    const std::size_t P = y.size();
    out.resize(P);
    out[0] = 0.0 * y[0];
    if (P < 4) {  // fall back to trapezoid on tiny grids
        for (std::size_t j = 1; j < P; ++j)
            out[j] = out[j - 1] + 0.5 * h * (y[j] + y[j - 1]);
        return;
    }
    out[1] = out[0] + (h / 24.0) * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3]);
    for (std::size_t j = 1; j + 2 < P; ++j)
        out[j + 1] = out[j] + (h / 24.0) * (-1.0 * y[j - 1] + 13.0 * y[j] +
                                            13.0 * y[j + 1] - y[j + 2]);
    const std::size_t e = P - 1;
    out[e] = out[e - 1] + (h / 24.0) * (9.0 * y[e] + 19.0 * y[e - 1] -
                                        5.0 * y[e - 2] + y[e - 3]);
}

std::size_t locate_segment(const std::vector<double>& x, double t) {
    if (t <= x.front()) return 0;
    if (t >= x[x.size() - 2]) return x.size() - 2;
    auto it = std::upper_bound(x.begin(), x.end(), t);
    return static_cast<std::size_t>(it - x.begin()) - 1;
}

}  // namespace

double ElementaryCurve::sigma_at(double t) const {
    if (degenerate()) return sigma[0];
    return sigma[locate_segment(tau, t)];
}

Vec ElementaryCurve::state_at(double t) const {
    if (degenerate()) return u[0];
    std::size_t j = locate_segment(tau, t);
    double w = (t - tau[j]) / (tau[j + 1] - tau[j]);
    w = std::clamp(w, 0.0, 1.0);
    return u[j] + w * (u[j + 1] - u[j]);
}

SampledFunction ElementaryCurve::reduced_flux() const {
    SampledFunction g;
    g.nodes = tau;
    g.values = f;
    return g;
}

SampledFunction ElementaryCurve::lambda_along() const {
    SampledFunction g;
    g.nodes = tau;
    g.values = lam;
    return g;
}

ElementaryCurve elementary_curve(const FluxModel& model, const GeneralizedField& field,
                                 const Vec& u_L, double s, int k, int grid_mult) {
    ElementaryCurve c;
    c.family = k;
    c.u_left = u_L;
    c.s = s;

    if (std::fabs(s) > model.strength_cap + 1e-12)
        throw ModuleError("riemann", "strength " + std::to_string(s) +
                                         " exceeds the model cap");
    if (!model.contains(u_L, kDomainSlack))
        throw ModuleError("riemann", "left state outside the model domain");

    const double lam0 = field.lambda(u_L, 0.0, 0.0, k);
    if (s == 0.0) {
        c.tau = {0.0};
        c.u = {u_L};
        c.v = {0.0};
        c.sigma = {lam0};
        c.f = {0.0};
        c.lam = {lam0};
        return c;
    }

    const double mult = std::max(1, grid_mult);
    const std::size_t N = static_cast<std::size_t>(
        std::max(16.0 * mult, std::ceil(256.0 * mult * std::fabs(s))));
    const std::size_t P = N + 1;
    c.tau.resize(P);
    for (std::size_t j = 0; j < P; ++j)
        c.tau[j] = (s > 0) ? s * double(j) / double(N) : s * double(N - j) / double(N);
    c.i0 = (s > 0) ? 0 : N;

    // initial guess: straight line along r_k(u_L), speed lambda_k(u_L)
    Vec r0 = field.r(u_L, 0.0, 0.0, k);
    c.u.resize(P);
    c.v.assign(P, 0.0);
    c.sigma.assign(P, lam0);
    c.f.assign(P, 0.0);
    c.lam.assign(P, lam0);
    for (std::size_t j = 0; j < P; ++j) c.u[j] = u_L + c.tau[j] * r0;

    std::vector<double> f_new(P), v_new(P), sig_new(P);
    std::vector<Vec> u_new(P);
    SampledFunction red;
    red.nodes = c.tau;
    red.values.resize(P);

    for (int it = 1; it <= kCurveMaxIter; ++it) {
        // reduced flux = integral of the generalized eigenvalue along gamma
        for (std::size_t j = 0; j < P; ++j)
            c.lam[j] = field.lambda(c.u[j], c.v[j], c.sigma[j], k);
        cumint(c.tau[1] - c.tau[0], c.lam, f_new);
        const double f0 = f_new[c.i0];
        for (std::size_t j = 0; j < P; ++j) f_new[j] -= f0;

        red.values = f_new;
        EnvelopeResult env = (s > 0) ? convex_envelope(red) : concave_envelope(red);
        for (std::size_t j = 0; j < P; ++j) {
            v_new[j] = f_new[j] - env.hull[j];
            sig_new[j] = env.slope_at(j);
        }

        // state = u_L + integral of the generalized eigenvector
        std::vector<Vec> R(P);
        for (std::size_t j = 0; j < P; ++j)
            R[j] = field.r(c.u[j], v_new[j], sig_new[j], k);
        cumint(c.tau[1] - c.tau[0], R, u_new);
        const Vec base = u_new[c.i0];
        for (std::size_t j = 0; j < P; ++j) u_new[j] = u_L + (u_new[j] - base);

        // dagger-norm residual: sup on u and v, discrete L1 on sigma
        double ru = 0, rv = 0, rs = 0;
        for (std::size_t j = 0; j < P; ++j) {
            ru = std::max(ru, (u_new[j] - c.u[j]).cwiseAbs().maxCoeff());
            rv = std::max(rv, std::fabs(v_new[j] - c.v[j]));
            double w = 0.0;
            if (j > 0) w += 0.5 * (c.tau[j] - c.tau[j - 1]);
            if (j + 1 < P) w += 0.5 * (c.tau[j + 1] - c.tau[j]);
            rs += w * std::fabs(sig_new[j] - c.sigma[j]);
        }
        c.u = u_new;
        c.v = v_new;
        c.sigma = sig_new;
        c.f = f_new;
        c.iterations = it;
        c.residual = ru + rv + rs;

        for (std::size_t j = 0; j < P; ++j)
            if (!model.contains(c.u[j], kDomainSlack))
                throw ModuleError("riemann", "curve left the model domain (family " +
                                                 std::to_string(k) + ")");
        if (c.residual <= kCurveTol) return c;
    }
    std::ostringstream os;
    os << "elementary curve fixed point did not converge (family " << k
       << ", s = " << s << ", last residual " << c.residual << ")";
    throw ModuleError("riemann", os.str());
}

Vec riemann_T(const FluxModel& model, const GeneralizedField& field, const Vec& u_L,
              const std::vector<double>& s, std::vector<ElementaryCurve>* curves,
              int grid_mult) {
    Vec u = u_L;
    if (curves) curves->clear();
    for (int k = 1; k <= model.dim; ++k) {
        ElementaryCurve c = elementary_curve(model, field, u, s[k - 1], k, grid_mult);
        u = c.u_end();
        if (curves) curves->push_back(std::move(c));
    }
    return u;
}

RiemannFan solve_riemann(const FluxModel& model, const GeneralizedField& field,
                         const Vec& u_L, const Vec& u_R, int grid_mult) {
    const int n = model.dim;
    Mat R0 = eigen_frame(model, u_L).right;
    Eigen::PartialPivLU<Mat> lu(R0);

    RiemannFan fan;
    std::vector<double> s(n, 0.0);
    for (int it = 0; it <= kSolveMaxIter; ++it) {
        Vec T = riemann_T(model, field, u_L, s, &fan.curves, grid_mult);
        Vec d = u_R - T;
        fan.residual = d.norm();
        fan.iterations = it;
        if (fan.residual <= kSolveTol) {
            fan.strengths = s;
            fan.states.resize(n + 1);
            fan.states[0] = u_L;
            for (int k = 0; k < n; ++k) fan.states[k + 1] = fan.curves[k].u_end();
            return fan;
        }
        Vec ds = lu.solve(d);
        for (int k = 0; k < n; ++k) s[k] += ds[k];
    }
    std::ostringstream os;
    os << "riemann solve diverged (residual " << fan.residual << " after "
       << kSolveMaxIter << " iterations)";
    throw ModuleError("riemann", os.str());
}

RiemannFan solve_riemann(const FluxModel& model, const Vec& u_L, const Vec& u_R,
                         int grid_mult) {
    return solve_riemann(model, default_generalized_field(model), u_L, u_R, grid_mult);
}

Vec RiemannFan::sample(double xi) const {
    const std::size_t n = strengths.size();
    for (std::size_t k = 0; k < n; ++k) {
        const ElementaryCurve& c = curves[k];
        if (c.degenerate() || c.s == 0.0) continue;
        const std::size_t N = c.tau.size() - 1;
        // node speeds in curve-parameter order (upstream -> downstream);
        // q_j for j >= 1 is the slope of the parameter segment (j-1, j)
        auto q = [&](std::size_t j) -> double {
            if (j == 0) j = 1;
            return (c.s > 0) ? c.sigma[j - 1] : c.sigma[N - j];
        };
        auto pu = [&](std::size_t j) -> const Vec& {
            return (c.s > 0) ? c.u[j] : c.u[N - j];
        };
        auto pp = [&](std::size_t j) -> double {
            return (c.s > 0) ? c.tau[j] : -c.tau[N - j];
        };
        if (xi < q(0)) return states[k];
        if (xi >= q(N)) continue;  // entirely slower than xi; at least u_{k+1}
        // largest node j with q_j <= xi (q is nondecreasing)
        std::size_t lo = 0, hi = N;
        while (lo + 1 < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (q(mid) <= xi)
                lo = mid;
            else
                hi = mid;
        }
        // q_j is the secant over the parameter segment (j-1, j), i.e. sigma at
        // the segment midpoint up to O(h^2). Invert between midpoints in smooth
        // (rarefaction) runs; anchor exactly on the node when the neighboring
        // segment shares the same hull chord (shock edge), which keeps the
        // profile right continuous across shocks.
        double w = (xi - q(lo)) / (q(lo + 1) - q(lo));
        double h2 = 0.5 * (pp(lo + 1) - pp(lo));
        double left = (lo >= 2 && q(lo - 1) == q(lo)) ? pp(lo) : pp(lo) - h2;
        double right = (lo + 2 <= N && q(lo + 1) == q(lo + 2)) ? pp(lo + 1)
                                                               : pp(lo + 1) - h2;
        double p = left + w * (right - left);
        // evaluate u by linear interpolation in parameter
        p = std::clamp(p, pp(0), pp(N));
        std::size_t j = lo;
        while (j > 0 && p < pp(j)) --j;
        while (j + 1 < N && p >= pp(j + 1)) ++j;
        double t = (pp(j + 1) > pp(j)) ? (p - pp(j)) / (pp(j + 1) - pp(j)) : 1.0;
        return pu(j) + t * (pu(j + 1) - pu(j));
    }
    return states.back();
}

}  // namespace glimmlab
