// Command-line front end. Subcommands:
//   riemann  solve one Riemann problem, write fan JSON + profile CSV
//   merge    ledger of two merging Riemann problems as JSON
//   run      run the scheme from a JSON config, write trace/functionals/SVG
//   waves    package genealogy CSV from a trace file
//   verify   decay report (JSON + per-step CSV) from a trace file
//   sweep    strength-scaling study over a list of datum factors
//
// Exit codes: 0 ok, 1 solver/bookkeeping failure (ModuleError), 2 bad usage
// or bad config (ConfigError). Output directory: --out, else $GLIMMLAB_OUT,
// else the current directory.

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "glimmlab/errors.hpp"
#include "glimmlab/io.hpp"

using nlohmann::json;
using namespace glimmlab;

namespace {

struct Args {
    std::string cmd;
    std::map<std::string, std::string> opts;
    bool has(const std::string& k) const { return opts.count(k) != 0; }
    std::string get(const std::string& k) const {
        auto it = opts.find(k);
        if (it == opts.end()) throw ConfigError("missing required flag --" + k);
        return it->second;
    }
    std::string get(const std::string& k, const std::string& dflt) const {
        auto it = opts.find(k);
        return it == opts.end() ? dflt : it->second;
    }
};

Args parse_args(int argc, char** argv) {
    Args a;
    if (argc < 2) throw ConfigError("usage: glimmlab <command> [--flag value ...]");
    a.cmd = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string s = argv[i];
        if (s.rfind("--", 0) != 0) throw ConfigError("unexpected argument: " + s);
        std::string key = s.substr(2);
        if (i + 1 >= argc) throw ConfigError("flag --" + key + " needs a value");
        a.opts[key] = argv[++i];
    }
    return a;
}

std::string out_dir(const Args& a) {
    if (a.has("out")) return a.get("out");
    if (const char* e = std::getenv("GLIMMLAB_OUT")) return e;
    return ".";
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            v.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ConfigError("bad number in list: " + tok);
        }
    }
    if (v.empty()) throw ConfigError("empty number list");
    return v;
}

Vec parse_state(const std::string& s, int dim) {
    std::vector<double> v = parse_list(s);
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError("state has " + std::to_string(v.size()) +
                          " components, model needs " + std::to_string(dim));
    Vec u(dim);
    for (int i = 0; i < dim; ++i) u[i] = v[i];
    return u;
}

json parse_params(const Args& a) {
    if (!a.has("params")) return json();
    try {
        return json::parse(a.get("params"));
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad --params: ") + e.what());
    }
}

json load_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

// scale the jumps of the datum towards its first value: v -> v0 + theta(v - v0)
void scale_datum(GlimmConfig& cfg, double theta) {
    if (cfg.datum.vals.empty()) return;
    Vec v0 = cfg.datum.vals.front();
    for (Vec& v : cfg.datum.vals) v = v0 + theta * (v - v0);
}

GlimmConfig config_for_run(const Args& a, json* echo) {
    GlimmConfig cfg = glimm_config_from_json(load_json(a.get("config")));
    if (a.has("eps")) cfg.eps = std::stod(a.get("eps"));
    if (a.has("seq")) cfg.sequence = a.get("seq");
    double theta = a.has("theta") ? std::stod(a.get("theta")) : 1.0;
    if (theta != 1.0) scale_datum(cfg, theta);
    if (cfg.eps <= 0) throw ConfigError("eps must be positive");
    if (echo) {
        (*echo)["config"] = config_to_json(cfg);
        (*echo)["theta"] = theta;
    }
    return cfg;
}

int cmd_riemann(const Args& a) {
    FluxModel model = make_model(a.get("model", "burgers"), parse_params(a));
    Vec uL = parse_state(a.get("ul"), model.dim);
    Vec uR = parse_state(a.get("ur"), model.dim);
    RiemannFan fan = solve_riemann(model, uL, uR);

    json rep = fan_to_json(model, fan);
    rep["invocation"] = {{"command", "riemann"},
                         {"model", model.name},
                         {"params", model.params},
                         {"ul", a.get("ul")},
                         {"ur", a.get("ur")}};
    std::string dir = out_dir(a);
    write_file(dir + "/riemann.json", rep.dump(2) + "\n");
    write_file(dir + "/riemann.csv", fan_csv(fan));
    std::cout << dir << "/riemann.json\n" << dir << "/riemann.csv\n";
    return 0;
}

int cmd_merge(const Args& a) {
    FluxModel model = make_model(a.get("model", "burgers"), parse_params(a));
    Vec uL = parse_state(a.get("ul"), model.dim);
    Vec uM = parse_state(a.get("um"), model.dim);
    Vec uR = parse_state(a.get("ur"), model.dim);
    bool drift = a.get("drift", "0") != "0";
    InteractionLedger led = interaction_ledger(model, uL, uM, uR, drift);

    json rep = ledger_to_json(led);
    rep["invocation"] = {{"command", "merge"},
                         {"model", model.name},
                         {"params", model.params},
                         {"ul", a.get("ul")},
                         {"um", a.get("um")},
                         {"ur", a.get("ur")}};
    std::string dir = out_dir(a);
    write_file(dir + "/ledger.json", rep.dump(2) + "\n");
    std::cout << dir << "/ledger.json\n";
    return 0;
}

int cmd_run(const Args& a) {
    json echo;
    GlimmConfig cfg = config_for_run(a, &echo);
    GlimmTrace tr = glimm_run(cfg);

    std::string dir = out_dir(a);
    write_file(dir + "/trace.json", trace_to_json(tr).dump() + "\n");
    write_file(dir + "/functionals.csv", functional_series_csv(tr));
    if (a.get("svg", "0") != "0")
        write_file(dir + "/profiles.svg", svg_profiles(tr, 0));
    std::cout << dir << "/trace.json\n" << dir << "/functionals.csv\n";
    return 0;
}

int cmd_waves(const Args& a) {
    GlimmTrace tr = trace_from_json(load_json(a.get("trace")));
    LagrangianRep rep = build_lagrangian(tr);
    std::string dir = out_dir(a);
    write_file(dir + "/packages.csv", packages_csv(rep));
    std::cout << dir << "/packages.csv\n";
    return 0;
}

int cmd_verify(const Args& a) {
    GlimmTrace tr = trace_from_json(load_json(a.get("trace")));
    LagrangianRep rep = build_lagrangian(tr);
    PotentialRep pot = build_threads(rep);
    Potential P(pot);
    DecayReport dr = P.verify_decay();

    json out = decay_report_to_json(dr);
    out["config"] = config_to_json(tr.config);
    std::string dir = out_dir(a);
    write_file(dir + "/decay.json", out.dump(2) + "\n");
    write_file(dir + "/decay.csv", decay_series_csv(dr));
    std::cout << dir << "/decay.json\n" << dir << "/decay.csv\n";
    return 0;
}

// total speed change charged by all restart ledgers of a finished run
double total_dsigma(const GlimmTrace& tr) {
    double s = 0.0;
    for (std::size_t i = 1; i < tr.layers.size(); ++i)
        for (const InteractionLedger& led : tr.layers[i].ledgers)
            s += led.dsigma_total;
    return s;
}

int cmd_sweep(const Args& a) {
    GlimmConfig base = glimm_config_from_json(load_json(a.get("config")));
    if (a.has("eps")) base.eps = std::stod(a.get("eps"));
    if (a.has("seq")) base.sequence = a.get("seq");
    std::vector<double> thetas =
        a.has("theta") ? parse_list(a.get("theta"))
                       : std::vector<double>{1.0, 0.5, 0.25, 0.125};

    json points = json::array();
    std::vector<double> tvs, dss;
    for (double th : thetas) {
        GlimmConfig cfg = base;
        scale_datum(cfg, th);
        GlimmTrace tr = glimm_run(cfg);
        double tv = tr.layers.front().tot_var();
        double ds = total_dsigma(tr);
        tvs.push_back(tv);
        dss.push_back(ds);
        points.push_back({{"theta", th}, {"tv0", tv}, {"dsigma_total", ds}});
    }

    // least-squares slope of log(dsigma) against log(tv)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < tvs.size(); ++i) {
        if (tvs[i] <= 0 || dss[i] <= 0) continue;
        double x = std::log(tvs[i]), y = std::log(dss[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y; ++n;
    }
    double slope = n >= 2 ? (n * sxy - sx * sy) / (n * sxx - sx * sx) : 0.0;

    json rep;
    rep["config"] = config_to_json(base);
    rep["points"] = points;
    rep["slope"] = slope;
    std::string dir = out_dir(a);
    write_file(dir + "/sweep.json", rep.dump(2) + "\n");
    write_file(dir + "/sweep.svg",
               svg_chart({"total speed change vs TV"}, {tvs}, {dss}, true));
    std::cout << dir << "/sweep.json\n";
    return 0;
}

int dispatch(const Args& a) {
    if (a.cmd == "riemann") return cmd_riemann(a);
    if (a.cmd == "merge") return cmd_merge(a);
    if (a.cmd == "run") return cmd_run(a);
    if (a.cmd == "waves") return cmd_waves(a);
    if (a.cmd == "verify") return cmd_verify(a);
    if (a.cmd == "sweep") return cmd_sweep(a);
    throw ConfigError("unknown command: " + a.cmd +
                      " (expected riemann|merge|run|waves|verify|sweep)");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(parse_args(argc, argv));
    } catch (const ModuleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
