#include "glimmlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glimmlab/errors.hpp"

namespace glimmlab {

namespace {

nlohmann::json vec_to_json(const Vec& u) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < u.size(); ++i) a.push_back(u[i]);
    return a;
}

}  // namespace

nlohmann::json config_to_json(const GlimmConfig& cfg) {
    nlohmann::json j;
    j["model"] = cfg.model_name;
    if (!cfg.model_params.is_null()) j["params"] = cfg.model_params;
    j["eps"] = cfg.eps;
    j["horizon"] = cfg.horizon;
    j["sequence"] = cfg.sequence;
    j["with_ledgers"] = cfg.with_ledgers;
    j["blowup_factor"] = cfg.blowup_factor;
    j["constants"] = {{"c1", cfg.c1}, {"c2", cfg.c2}, {"c3", cfg.c3}};
    j["datum"]["xs"] = cfg.datum.xs;
    nlohmann::json vals = nlohmann::json::array();
    for (const Vec& v : cfg.datum.vals) vals.push_back(vec_to_json(v));
    j["datum"]["values"] = vals;
    return j;
}

nlohmann::json ledger_to_json(const InteractionLedger& led) {
    nlohmann::json j;
    j["a_trans"] = led.a_trans;
    j["a_cubic"] = led.a_cubic;
    j["a_canc"] = led.a_canc;
    j["a_cr"] = led.a_cr;
    j["a_quadr"] = led.a_quadr;
    j["dsigma"] = led.dsigma;
    j["s1"] = led.s1;
    j["s2"] = led.s2;
    j["s_out"] = led.s_out;
    j["total"] = led.total;
    j["dsigma_total"] = led.dsigma_total;
    if (led.refinement_drift >= 0) j["refinement_drift"] = led.refinement_drift;
    return j;
}

nlohmann::json trace_to_json(const GlimmTrace& tr) {
    nlohmann::json j;
    j["config"] = config_to_json(tr.config);
    j["m_lo"] = tr.m_lo;
    nlohmann::json layers = nlohmann::json::array();
    for (const GlimmLayer& l : tr.layers) {
        nlohmann::json jl;
        jl["theta"] = l.theta;
        jl["V"] = l.V;
        jl["Q_trans"] = l.Q_trans;
        jl["Q_cubic"] = l.Q_cubic;
        jl["Q_known"] = l.Q_known;
        nlohmann::json u = nlohmann::json::array();
        for (const Vec& v : l.u) u.push_back(vec_to_json(v));
        jl["u"] = u;
        nlohmann::json nodes = nlohmann::json::array();
        for (std::size_t m = 0; m < l.fans.size(); ++m) {
            nlohmann::json jn;
            jn["strengths"] = l.fans[m].strengths;
            if (m < l.ledgers.size()) jn["ledger"] = ledger_to_json(l.ledgers[m]);
            nodes.push_back(std::move(jn));
        }
        jl["nodes"] = nodes;
        layers.push_back(std::move(jl));
    }
    j["layers"] = layers;
    return j;
}

GlimmTrace trace_from_json(const nlohmann::json& j) {
    GlimmConfig cfg;
    try {
        cfg = glimm_config_from_json(j.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad trace file: ") + e.what());
    }
    GlimmTrace tr = glimm_run(cfg);
    // the trace is a deterministic function of its config; cross-check the
    // stored layers instead of deserializing solver state
    const auto& layers = j.at("layers");
    if (layers.size() != tr.layers.size())
        throw ModuleError("io", "trace file layer count does not match its config");
    for (std::size_t i = 0; i < tr.layers.size(); ++i) {
        const auto& ju = layers[i].at("u");
        if (ju.size() != tr.layers[i].u.size())
            throw ModuleError("io", "trace file cell count mismatch");
        for (std::size_t m = 0; m < tr.layers[i].u.size(); ++m) {
            const auto& row = ju[m];
            for (Eigen::Index c = 0; c < tr.layers[i].u[m].size(); ++c)
                if (std::fabs(row.at(c).get<double>() - tr.layers[i].u[m][c]) >
                    1e-9)
                    throw ModuleError("io", "trace file state mismatch at layer " +
                                                std::to_string(i));
        }
    }
    return tr;
}

nlohmann::json fan_to_json(const FluxModel& model, const RiemannFan& fan) {
    nlohmann::json j;
    j["strengths"] = fan.strengths;
    j["residual"] = fan.residual;
    j["iterations"] = fan.iterations;
    nlohmann::json states = nlohmann::json::array();
    for (const Vec& u : fan.states) states.push_back(vec_to_json(u));
    j["states"] = states;
    nlohmann::json waves = nlohmann::json::array();
    for (std::size_t k = 0; k < fan.curves.size(); ++k) {
        const ElementaryCurve& c = fan.curves[k];
        nlohmann::json w;
        w["family"] = static_cast<int>(k) + 1;
        w["s"] = c.s;
        if (!c.degenerate()) {
            w["sigma_min"] = *std::min_element(c.sigma.begin(), c.sigma.end());
            w["sigma_max"] = *std::max_element(c.sigma.begin(), c.sigma.end());
            w["speed_min"] = model.denormalize_speed(w["sigma_min"].get<double>());
            w["speed_max"] = model.denormalize_speed(w["sigma_max"].get<double>());
        }
        waves.push_back(std::move(w));
    }
    j["waves"] = waves;
    return j;
}

std::string fan_csv(const RiemannFan& fan, int samples) {
    std::ostringstream os;
    os << "xi";
    const Eigen::Index dim = fan.states.front().size();
    for (Eigen::Index c = 0; c < dim; ++c) os << ",u" << c;
    os << "\n";
    os.precision(12);
    for (int i = 0; i < samples; ++i) {
        double xi = -0.1 + 1.2 * i / (samples - 1);
        Vec u = fan.sample(xi);
        os << xi;
        for (Eigen::Index c = 0; c < dim; ++c) os << "," << u[c];
        os << "\n";
    }
    return os.str();
}

std::string functional_series_csv(const GlimmTrace& tr) {
    std::ostringstream os;
    os << "layer,t,theta,V,Q_trans,Q_cubic,Q_known,tot_var\n";
    os.precision(12);
    for (std::size_t i = 0; i < tr.layers.size(); ++i) {
        const GlimmLayer& l = tr.layers[i];
        os << i << "," << i * tr.config.eps << "," << l.theta << "," << l.V << ","
           << l.Q_trans << "," << l.Q_cubic << "," << l.Q_known << ","
           << l.tot_var() << "\n";
    }
    return os.str();
}

std::string packages_csv(const LagrangianRep& rep) {
    std::ostringstream os;
    os << "id,parent,family,sign,i_cr,node_cr,first_layer,last_layer,cancelled,"
          "split_out,measure_at_birth\n";
    os.precision(12);
    for (const WavePackage& p : rep.packages) {
        os << p.id << "," << p.parent << "," << p.family << "," << p.sign << ","
           << p.i_cr << "," << p.node_cr << "," << p.first_layer() << ","
           << p.last_layer() << "," << (p.i_canc != WavePackage::npos ? 1 : 0)
           << "," << (p.split_out ? 1 : 0) << ","
           << p.recs.front().hi - p.recs.front().lo << "\n";
    }
    return os.str();
}

nlohmann::json decay_report_to_json(const DecayReport& r) {
    nlohmann::json j;
    j["tv0"] = r.tv0;
    j["Q"] = r.Q;
    j["fitted_c"] = r.fitted_c;
    j["unexplained"] = r.unexplained;
    j["q0_total"] = r.q0_total;
    j["q0_over_tv2"] = r.q0_over_tv2;
    j["dsigma_total"] = r.dsigma_total;
    j["dsigma_over_tv2"] = r.dsigma_over_tv2;
    j["max_q"] = r.max_q;
    j["curvature_bound"] = r.curvature_bound;
    return j;
}

std::string decay_series_csv(const DecayReport& r) {
    std::ostringstream os;
    std::size_t n = r.Q.empty() ? 0 : r.Q[0].size();
    os << "step,a_total";
    for (std::size_t k = 1; k <= n; ++k) os << ",dQ_" << k;
    for (std::size_t k = 1; k <= n; ++k) os << ",a_quadr_" << k;
    os << "\n";
    os.precision(12);
    for (const DecayStep& st : r.steps) {
        os << st.i << "," << st.a_total;
        for (double v : st.dQ) os << "," << v;
        for (double v : st.a_quadr) os << "," << v;
        os << "\n";
    }
    return os.str();
}

namespace {

constexpr int W = 640, H = 400, PAD = 45;

double map_x(double x, double lo, double hi) {
    return PAD + (W - 2 * PAD) * (x - lo) / (hi - lo);
}
double map_y(double y, double lo, double hi) {
    return H - PAD - (H - 2 * PAD) * (y - lo) / (hi - lo);
}

const char* palette(std::size_t i) {
    static const char* cols[] = {"#1f6fb2", "#c23b22", "#2e8540",
                                 "#8031a7", "#b58900", "#444444"};
    return cols[i % 6];
}

}  // namespace

std::string svg_chart(const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& xs,
                      const std::vector<std::vector<double>>& ys, bool loglog) {
    auto tf = [&](double v) {
        return loglog ? std::log10(std::max(v, 1e-300)) : v;
    };
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (std::size_t s = 0; s < xs.size(); ++s)
        for (std::size_t i = 0; i < xs[s].size(); ++i) {
            xlo = std::min(xlo, tf(xs[s][i]));
            xhi = std::max(xhi, tf(xs[s][i]));
            ylo = std::min(ylo, tf(ys[s][i]));
            yhi = std::max(yhi, tf(ys[s][i]));
        }
    if (xhi - xlo < 1e-12) xhi = xlo + 1.0;
    if (yhi - ylo < 1e-12) yhi = ylo + 1.0;

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
       << "\" height=\"" << H << "\">\n";
    os << "<rect x=\"" << PAD << "\" y=\"" << PAD << "\" width=\"" << W - 2 * PAD
       << "\" height=\"" << H - 2 * PAD
       << "\" fill=\"none\" stroke=\"#999\"/>\n";
    os << "<text x=\"" << PAD << "\" y=\"" << H - 8 << "\" font-size=\"11\">"
       << (loglog ? "log10 x: " : "x: ") << xlo << " .. " << xhi << "</text>\n";
    os << "<text x=\"" << PAD << "\" y=\"" << PAD - 8 << "\" font-size=\"11\">"
       << (loglog ? "log10 y: " : "y: ") << ylo << " .. " << yhi << "</text>\n";
    for (std::size_t s = 0; s < xs.size(); ++s) {
        os << "<polyline fill=\"none\" stroke=\"" << palette(s)
           << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < xs[s].size(); ++i)
            os << map_x(tf(xs[s][i]), xlo, xhi) << ","
               << map_y(tf(ys[s][i]), ylo, yhi) << " ";
        os << "\"/>\n";
        if (s < names.size())
            os << "<text x=\"" << W - PAD - 150 << "\" y=\"" << PAD + 16 + 14 * s
               << "\" font-size=\"11\" fill=\"" << palette(s) << "\">" << names[s]
               << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string svg_profiles(const GlimmTrace& tr, int component, int snapshots) {
    std::vector<std::string> names;
    std::vector<std::vector<double>> xs, ys;
    const std::size_t NL = tr.layers.size();
    snapshots = std::max(2, std::min<int>(snapshots, static_cast<int>(NL)));
    for (int s = 0; s < snapshots; ++s) {
        std::size_t i = NL == 1 ? 0 : s * (NL - 1) / (snapshots - 1);
        const GlimmLayer& l = tr.layers[i];
        std::vector<double> x, y;
        for (std::size_t m = 0; m < l.u.size(); ++m) {
            // draw the piecewise-constant profile with vertical jumps
            x.push_back(tr.x_of(m));
            y.push_back(l.u[m][component]);
            x.push_back(tr.x_of(m) + tr.config.eps);
            y.push_back(l.u[m][component]);
        }
        std::ostringstream nm;
        nm << "t = " << i * tr.config.eps;
        names.push_back(nm.str());
        xs.push_back(std::move(x));
        ys.push_back(std::move(y));
    }
    return svg_chart(names, xs, ys);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + path);
    f << text;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace glimmlab
