#include "glimmlab/glimm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "glimmlab/errors.hpp"

namespace glimmlab {

double vdc_sequence(std::size_t i) {
    double x = 0.0, base = 0.5;
    while (i) {
        if (i & 1) x += base;
        i >>= 1;
        base *= 0.5;
    }
    return x;
}

ThetaSequence::ThetaSequence(const std::string& spec) {
    if (spec == "vdc") return;
    if (spec.rfind("random:", 0) == 0) {
        random_ = true;
        seed_ = std::stoull(spec.substr(7));
        return;
    }
    throw ConfigError("unknown sampling sequence '" + spec + "'");
}

double ThetaSequence::operator()(std::size_t i) {
    if (i == 0) throw ConfigError("sampling index starts at 1");
    if (!random_) return vdc_sequence(i);
    if (cache_.size() < i) {
        std::mt19937_64 rng(seed_);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        cache_.clear();
        for (std::size_t j = 0; j < i + 64; ++j) cache_.push_back(U(rng));
    }
    return cache_[i - 1];
}

Vec PiecewiseConstant::operator()(double x) const {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    return vals[static_cast<std::size_t>(it - xs.begin())];
}

void PiecewiseConstant::validate(int dim) const {
    if (vals.size() != xs.size() + 1)
        throw ConfigError("datum: need one more value than jump points");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1])) throw ConfigError("datum: jump points not increasing");
    for (const Vec& v : vals)
        if (v.size() != dim) throw ConfigError("datum: wrong state dimension");
}

GlimmConfig glimm_config_from_json(const nlohmann::json& j) {
    GlimmConfig cfg;
    try {
        cfg.model_name = j.at("model").get<std::string>();
        if (j.contains("params")) cfg.model_params = j.at("params");
        if (j.contains("eps")) cfg.eps = j.at("eps").get<double>();
        if (j.contains("horizon")) cfg.horizon = j.at("horizon").get<double>();
        if (j.contains("sequence")) cfg.sequence = j.at("sequence").get<std::string>();
        if (j.contains("with_ledgers")) cfg.with_ledgers = j.at("with_ledgers").get<bool>();
        if (j.contains("blowup_factor"))
            cfg.blowup_factor = j.at("blowup_factor").get<double>();
        if (j.contains("constants")) {
            cfg.c1 = j.at("constants").value("c1", 0.0);
            cfg.c2 = j.at("constants").value("c2", 0.0);
            cfg.c3 = j.at("constants").value("c3", 0.0);
        }
        const auto& d = j.at("datum");
        cfg.datum.xs = d.at("xs").get<std::vector<double>>();
        for (const auto& row : d.at("values")) {
            auto v = row.get<std::vector<double>>();
            Vec u(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) u[i] = v[i];
            cfg.datum.vals.push_back(u);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad run config: ") + e.what());
    }
    if (cfg.eps <= 0) throw ConfigError("eps must be positive");
    if (cfg.horizon < 0) throw ConfigError("horizon must be nonnegative");
    return cfg;
}

FunctionalConstants default_functional_constants(const std::string&) {
    // one conservative set works for every bundled model on the acceptance
    // corpora; see the functional-decay tests for the calibration runs
    return FunctionalConstants{2.0, 10.0, 10.0};
}

double GlimmLayer::tot_var() const {
    double tv = 0.0;
    for (std::size_t j = 1; j < u.size(); ++j)
        tv += (u[j] - u[j - 1]).cwiseAbs().sum();
    return tv;
}

void compute_functionals(const FluxModel& model, const FunctionalConstants& c,
                         GlimmLayer& layer) {
    const int n = model.dim;
    const std::size_t M = layer.fans.size();

    layer.V = 0.0;
    for (const auto& fan : layer.fans)
        for (double s : fan.strengths) layer.V += std::fabs(s);

    // approaching pairs: family k at m', family h < k at m > m'
    layer.Q_trans = 0.0;
    for (int k = 1; k < n; ++k)
        for (int h = 0; h < k; ++h) {
            double cum_k = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
                layer.Q_trans += std::fabs(layer.fans[j].strengths[h]) * cum_k;
                cum_k += std::fabs(layer.fans[j].strengths[k]);
            }
        }

    // Q_cubic: double integral of |sigma - sigma'| over all same-family wave
    // pairs (including a wave against itself), i.e. int int |x-y| dnu dnu for
    // the merged speed measure nu, evaluated as 2 int F (W - F) with F the
    // cumulative function of nu. Shock chords contribute atoms at the chord
    // slope; contact (rarefaction) segments spread their mass uniformly
    // between the eigenvalue samples at the segment ends. The latter keeps the
    // functional invariant when a restart splits a fan across cells (the bin
    // masses of the underlying measure are preserved exactly), which is what
    // the decay inequality needs at the 1e-9 level.
    layer.Q_cubic = 0.0;
    for (int k = 0; k < n; ++k) {
        // (a, b, w): mass w spread over [a, b]; a == b is an atom
        struct Piece {
            double a, b, w;
        };
        std::vector<Piece> pieces;
        for (const auto& fan : layer.fans) {
            const ElementaryCurve& cur = fan.curves[k];
            if (cur.degenerate()) continue;
            const double vtol = 1e-9;
            for (std::size_t j = 0; j + 1 < cur.tau.size(); ++j) {
                double w = cur.tau[j + 1] - cur.tau[j];
                double a = std::min(cur.lam[j], cur.lam[j + 1]);
                double b = std::max(cur.lam[j], cur.lam[j + 1]);
                bool contact = std::fabs(cur.v[j]) <= vtol &&
                               std::fabs(cur.v[j + 1]) <= vtol &&
                               cur.sigma[j] >= a - 1e-9 && cur.sigma[j] <= b + 1e-9;
                if (contact && b - a > 1e-14)
                    pieces.push_back({a, b, w});
                else
                    pieces.push_back({cur.sigma[j], cur.sigma[j], w});
            }
        }
        if (pieces.empty()) continue;

        // sweep: F is piecewise linear with jumps at atoms
        std::map<double, std::pair<double, double>> ev;  // x -> (jump, slope delta)
        double W = 0.0;
        for (const auto& p : pieces) {
            W += p.w;
            if (p.a == p.b) {
                ev[p.a].first += p.w;
            } else {
                double s = p.w / (p.b - p.a);
                ev[p.a].second += s;
                ev[p.b].second -= s;
            }
        }
        double F = 0.0, slope = 0.0, q = 0.0;
        for (auto it = ev.begin(); it != ev.end(); ++it) {
            F += it->second.first;
            slope += it->second.second;
            auto nx = std::next(it);
            if (nx == ev.end()) break;
            double L = nx->first - it->first;
            double Fm = F + 0.5 * slope * L;
            q += 2.0 * (L * Fm * (W - Fm) - slope * slope * L * L * L / 12.0);
            F += slope * L;
        }
        layer.Q_cubic += q;
    }

    layer.Q_known = c.c1 * layer.V + c.c2 * layer.Q_trans + c.c3 * layer.Q_cubic;
}

namespace {

void solve_layer_fans(const FluxModel& model, const GeneralizedField& field,
                      GlimmLayer& layer) {
    const std::size_t M = layer.u.size();
    layer.fans.resize(M);
    for (std::size_t j = 0; j < M; ++j) {
        const Vec& uL = (j == 0) ? layer.u[0] : layer.u[j - 1];
        layer.fans[j] = solve_riemann(model, field, uL, layer.u[j]);
    }
}

// ledger of a merge with one trivial side: all amounts vanish, and the wave
// strengths are known without extra Riemann solves (the nontrivial incoming
// problem coincides with the outgoing fan)
InteractionLedger zero_ledger(const RiemannFan& out, bool left_trivial) {
    const int n = static_cast<int>(out.strengths.size());
    InteractionLedger led;
    led.a_cubic.assign(n, 0.0);
    led.a_canc.assign(n, 0.0);
    led.a_cr.assign(n, 0.0);
    led.a_quadr.assign(n, 0.0);
    led.dsigma.assign(n, 0.0);
    led.s_out = out.strengths;
    if (left_trivial) {
        led.s1.assign(n, 0.0);
        led.s2 = out.strengths;
    } else {
        led.s1 = out.strengths;
        led.s2.assign(n, 0.0);
    }
    return led;
}

}  // namespace

GlimmLayer advance_layer(const FluxModel& model, const GeneralizedField& field,
                         const GlimmLayer& prev, double theta, bool with_ledgers) {
    const std::size_t M = prev.u.size();
    GlimmLayer next;
    next.theta = theta;
    next.u.resize(M);
    for (std::size_t j = 0; j < M; ++j) next.u[j] = prev.fans[j].sample(theta);
    solve_layer_fans(model, field, next);

    if (with_ledgers) {
        next.ledgers.resize(M);
        for (std::size_t j = 0; j < M; ++j) {
            // merge at node j: left problem (u^i_{j-1}, u^{i-1}_{j-1}), right
            // problem (u^{i-1}_{j-1}, u^i_j); trivial sides give a zero ledger
            const Vec& uL = (j == 0) ? next.u[0] : next.u[j - 1];
            const Vec& uM = (j == 0) ? prev.u[0] : prev.u[j - 1];
            const Vec& uR = next.u[j];
            if (uL == uM || uM == uR)
                next.ledgers[j] = zero_ledger(next.fans[j], uL == uM);
            else
                next.ledgers[j] = compute_ledger(build_merge_case(model, uL, uM, uR));
        }
    }
    return next;
}

GlimmTrace glimm_run(const GlimmConfig& cfg) {
    GlimmTrace tr;
    tr.config = cfg;
    tr.model = make_model(cfg.model_name, cfg.model_params);
    cfg.datum.validate(tr.model.dim);
    tr.constants = (cfg.c1 > 0 || cfg.c2 > 0 || cfg.c3 > 0)
                       ? FunctionalConstants{cfg.c1, cfg.c2, cfg.c3}
                       : default_functional_constants(cfg.model_name);
    auto field = default_generalized_field(tr.model);
    ThetaSequence seq(cfg.sequence);

    const long steps = std::lround(cfg.horizon / cfg.eps);
    const double xmin = cfg.datum.xs.empty() ? 0.0 : cfg.datum.xs.front();
    const double xmax = cfg.datum.xs.empty() ? 0.0 : cfg.datum.xs.back();
    // speeds live in [0,1]: support only ever grows to the right, one cell
    // per step at most
    tr.m_lo = static_cast<long>(std::floor(xmin / cfg.eps)) - 2;
    const long m_hi = static_cast<long>(std::ceil(xmax / cfg.eps)) + steps + 2;
    const std::size_t M = static_cast<std::size_t>(m_hi - tr.m_lo + 1);

    GlimmLayer first;
    first.u.resize(M);
    for (std::size_t j = 0; j < M; ++j)
        first.u[j] = cfg.datum((tr.m_lo + static_cast<long>(j)) * cfg.eps);
    solve_layer_fans(tr.model, field, first);
    compute_functionals(tr.model, tr.constants, first);
    tr.layers.push_back(std::move(first));

    const double V0 = tr.layers[0].V;
    for (long i = 1; i <= steps; ++i) {
        GlimmLayer next = advance_layer(tr.model, field, tr.layers.back(),
                                        seq(static_cast<std::size_t>(i)),
                                        cfg.with_ledgers);
        compute_functionals(tr.model, tr.constants, next);
        if (V0 > 0 && next.V > cfg.blowup_factor * V0) {
            std::ostringstream os;
            os << "total variation blow-up at layer " << i << ": V = " << next.V
               << " > " << cfg.blowup_factor << " * V(0) = " << cfg.blowup_factor * V0;
            throw ModuleError("glimm", os.str());
        }
        tr.layers.push_back(std::move(next));
    }
    return tr;
}

}  // namespace glimmlab
