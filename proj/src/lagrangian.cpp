#include "glimmlab/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "glimmlab/errors.hpp"

namespace glimmlab {

namespace {

// half-open interval [a, b)
struct HInt {
    double a = 0.0, b = 0.0;
    double len() const { return std::max(0.0, b - a); }
    bool empty() const { return b - a <= 0.0; }
};

// wave coordinate interval of a node of strength s: [min(0,s), max(0,s))
HInt J(double s) { return {std::min(0.0, s), std::max(0.0, s)}; }

HInt isect(const HInt& p, const HInt& q) {
    return {std::max(p.a, q.a), std::min(p.b, q.b)};
}

HInt shifted(const HInt& p, double c) { return {p.a + c, p.b + c}; }

int sgn(double x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

double floored(double s) { return floored_strength(s); }

}  // namespace

// Strengths below the solver tolerance are re-solve noise between states that
// agree up to the Riemann iteration's stopping criterion; tracking them would
// spawn spurious packages sharing Phi offsets with real waves.
double floored_strength(double s) { return std::fabs(s) < 1e-9 ? 0.0 : s; }

const WaveRecord* WavePackage::rec_at(std::size_t layer) const {
    if (recs.empty() || layer < recs.front().layer) return nullptr;
    std::size_t off = layer - recs.front().layer;
    if (off >= recs.size()) return nullptr;
    return &recs[off];
}

double WavePackage::measure_at(std::size_t layer) const {
    const WaveRecord* r = rec_at(layer);
    return r ? r->hi - r->lo : 0.0;
}

std::vector<int> LagrangianRep::alive(std::size_t layer, int k) const {
    std::vector<int> ids;
    for (const auto& p : packages)
        if (p.family == k && p.rec_at(layer)) ids.push_back(p.id);
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        return packages[a].rec_at(layer)->phi_lo < packages[b].rec_at(layer)->phi_lo;
    });
    return ids;
}

namespace {

void fill_layer_info(const GlimmTrace& tr, std::size_t i, int k, FamilyLayerInfo& fi) {
    const auto& fans = tr.layers[i].fans;
    fi.offset.assign(fans.size(), 0.0);
    double pos = 0.0, neg = 0.0;
    for (std::size_t j = 0; j < fans.size(); ++j) {
        double s = floored(fans[j].strengths[k - 1]);
        fi.offset[j] = s >= 0 ? pos : neg;
        if (s > 0) pos += s;
        if (s < 0) neg += s;
    }
    fi.L_plus = pos;
    fi.L_minus = neg;
}

}  // namespace

LagrangianRep build_lagrangian(const GlimmTrace& trace) {
    LagrangianRep rep;
    rep.trace = &trace;
    rep.n = trace.model.dim;
    const std::size_t NL = trace.layers.size();
    if (NL == 0) return rep;
    const std::size_t M = trace.layers[0].u.size();

    for (std::size_t i = 1; i < NL; ++i)
        if (trace.layers[i].ledgers.size() != M)
            throw ModuleError("lagrangian", "trace must be run with ledgers");

    rep.info.assign(NL, std::vector<FamilyLayerInfo>(rep.n));
    for (std::size_t i = 0; i < NL; ++i)
        for (int k = 1; k <= rep.n; ++k) fill_layer_info(trace, i, k, rep.info[i][k - 1]);
    rep.transitions.assign(NL > 1 ? NL - 1 : 0,
                           std::vector<std::vector<NodeTransition>>(
                               rep.n, std::vector<NodeTransition>(M)));

    for (int k = 1; k <= rep.n; ++k) {
        const FamilyLayerInfo& fi0 = rep.info[0][k - 1];
        // fragment ids currently at each node, kept sorted by local lo
        std::vector<std::vector<int>> curr(M);
        for (std::size_t j = 0; j < M; ++j) {
            double s = floored(trace.layers[0].fans[j].strengths[k - 1]);
            if (s == 0.0) continue;
            WavePackage p;
            p.id = static_cast<int>(rep.packages.size());
            p.family = k;
            p.sign = sgn(s);
            p.i_cr = 0;
            p.node_cr = static_cast<long>(j);
            HInt jj = J(s);
            p.recs.push_back({0, static_cast<long>(j), jj.a, jj.b,
                              fi0.offset[j] + jj.a, fi0.offset[j] + jj.b, 'I',
                              jj.a, jj.b});
            curr[j].push_back(p.id);
            rep.packages.push_back(std::move(p));
        }

        for (std::size_t i = 1; i < NL; ++i) {
            const auto& prev = trace.layers[i - 1];
            const auto& next = trace.layers[i];
            auto& trans = rep.transitions[i - 1][k - 1];
            const FamilyLayerInfo& fin = rep.info[i][k - 1];

            // per merge node j: strengths, survivor regions, created interval,
            // branch shifts; per previous node j: split data
            std::vector<double> s1(M, 0.0), s2(M, 0.0), so(M, 0.0);
            std::vector<HInt> I1(M), I0(M), C(M);
            std::vector<double> shift0(M, 0.0), shift1(M, 0.0);
            std::vector<double> cut(M), stay_hi(M), gap(M, 0.0);
            std::vector<double> shortf0(M, 0.0), shortf1(M, 0.0);
            for (std::size_t j = 0; j < M; ++j) {
                s1[j] = floored(next.ledgers[j].s1[k - 1]);
                s2[j] = floored(next.ledgers[j].s2[k - 1]);
                so[j] = floored(next.fans[j].strengths[k - 1]);
                double ss = s1[j] + s2[j];
                I1[j] = isect(isect(J(s1[j]), J(ss)), J(so[j]));
                I0[j] = isect(isect(shifted(J(s2[j]), s1[j]), J(ss)), J(so[j]));
                if (so[j] > 0)
                    C[j] = {std::clamp(ss, 0.0, so[j]), so[j]};
                else if (so[j] < 0)
                    C[j] = {so[j], std::clamp(ss, so[j], 0.0)};
            }
            for (std::size_t j = 0; j < M; ++j) {
                double sprev = floored(prev.fans[j].strengths[k - 1]);
                HInt jp = J(sprev);
                double want_mv = j + 1 < M ? std::fabs(s1[j + 1]) : 0.0;
                double mv = std::min(want_mv, jp.len());
                double st_avail = jp.len() - mv;
                double st = std::min(std::fabs(s2[j]), st_avail);
                cut[j] = jp.b - mv;
                stay_hi[j] = jp.a + st;
                gap[j] = st_avail - st;
                shortf0[j] = std::fabs(s2[j]) - st;
                if (j + 1 < M) shortf1[j + 1] = want_mv - mv;
                // slope-1 shifts: staying waves of node j land on s1 + J(s2)
                // of merge j, moving waves land on J(s1) of merge j+1
                shift0[j] = s1[j] + std::min(0.0, s2[j]) - jp.a;
                if (j + 1 < M) shift1[j + 1] = std::min(0.0, s1[j + 1]) - cut[j];
            }

            std::vector<std::vector<int>> newcurr(M);
            for (std::size_t j = 0; j < M; ++j) {
                for (int pid : curr[j]) {
                    const WaveRecord r = rep.packages[pid].recs.back();
                    HInt stay{r.lo, std::min(r.hi, stay_hi[j])};
                    HInt move{std::max(r.lo, cut[j]), r.hi};
                    // waves in the defect gap (systems only) vanish here
                    double lost_gap = std::max(
                        0.0, std::min(r.hi, cut[j]) - std::max(r.lo, stay_hi[j]));
                    trans[j].cancelled += lost_gap;

                    struct Piece {
                        HInt out;    // surviving interval in the new node
                        HInt src;    // branch piece in the old coordinates
                        std::size_t node;
                        char origin;
                    };
                    std::vector<Piece> out;
                    if (!stay.empty()) {
                        HInt surv = isect(shifted(stay, shift0[j]), I0[j]);
                        trans[j].cancelled += stay.len() - surv.len();
                        if (surv.len() > 1e-15) out.push_back({surv, stay, j, 'S'});
                    }
                    if (!move.empty()) {
                        if (j + 1 < M) {
                            HInt surv = isect(shifted(move, shift1[j + 1]), I1[j + 1]);
                            trans[j + 1].cancelled += move.len() - surv.len();
                            if (surv.len() > 1e-15)
                                out.push_back({surv, move, j + 1, 'M'});
                        } else {
                            trans[j].cancelled += move.len();
                        }
                    }

                    auto make_rec = [&](const Piece& pc) {
                        return WaveRecord{i, static_cast<long>(pc.node), pc.out.a,
                                          pc.out.b, fin.offset[pc.node] + pc.out.a,
                                          fin.offset[pc.node] + pc.out.b, pc.origin,
                                          pc.src.a, pc.src.b};
                    };
                    if (out.empty()) {
                        rep.packages[pid].i_canc = i;
                    } else if (out.size() == 1) {
                        rep.packages[pid].recs.push_back(make_rec(out[0]));
                        newcurr[out[0].node].push_back(pid);
                    } else {
                        rep.packages[pid].split_out = true;
                        for (const Piece& pc : out) {
                            WavePackage child;
                            child.id = static_cast<int>(rep.packages.size());
                            child.parent = pid;
                            child.family = k;
                            child.sign = rep.packages[pid].sign;
                            child.i_cr = rep.packages[pid].i_cr;
                            child.node_cr = rep.packages[pid].node_cr;
                            child.recs.push_back(make_rec(pc));
                            newcurr[pc.node].push_back(child.id);
                            rep.packages.push_back(std::move(child));
                        }
                    }
                }
            }
            for (std::size_t j = 0; j < M; ++j) {
                if (C[j].len() > 1e-15) {
                    WavePackage p;
                    p.id = static_cast<int>(rep.packages.size());
                    p.family = k;
                    p.sign = sgn(so[j]);
                    p.i_cr = i;
                    p.node_cr = static_cast<long>(j);
                    p.recs.push_back({i, static_cast<long>(j), C[j].a, C[j].b,
                                      fin.offset[j] + C[j].a, fin.offset[j] + C[j].b,
                                      'C', C[j].a, C[j].b});
                    newcurr[j].push_back(p.id);
                    rep.packages.push_back(std::move(p));
                }
                std::sort(newcurr[j].begin(), newcurr[j].end(), [&](int a, int b) {
                    return rep.packages[a].recs.back().lo <
                           rep.packages[b].recs.back().lo;
                });
                NodeTransition& t = trans[j];
                t.s1 = s1[j];
                t.s2 = s2[j];
                t.s_out = so[j];
                t.created = C[j].len();
                double ss = s1[j] + s2[j];
                t.sign_flip = sgn(so[j]) != 0 && sgn(ss) != 0 && sgn(so[j]) != sgn(ss);
                if (!t.sign_flip)
                    t.extra = std::max(0.0, std::fabs(ss) - std::fabs(so[j]));
                else
                    t.extra = std::fabs(ss);
                t.defect = gap[j] + shortf0[j] + shortf1[j];
            }
            curr = std::move(newcurr);
        }
    }
    return rep;
}

std::vector<const WavePackage*> packages_at(const LagrangianRep& rep,
                                            std::size_t layer, long node) {
    std::vector<const WavePackage*> out;
    for (int k = 1; k <= rep.n; ++k) {
        std::vector<const WavePackage*> fam;
        for (const auto& p : rep.packages) {
            const WaveRecord* r = p.rec_at(layer);
            if (p.family == k && r && r->node == node) fam.push_back(&p);
        }
        std::sort(fam.begin(), fam.end(), [&](const WavePackage* a, const WavePackage* b) {
            return a->rec_at(layer)->phi_lo < b->rec_at(layer)->phi_lo;
        });
        for (std::size_t q = 1; q < fam.size(); ++q)
            if (fam[q]->sign != fam[0]->sign) {
                std::ostringstream os;
                os << "mixed signs at layer " << layer << ", node " << node
                   << ", family " << k;
                throw ModuleError("lagrangian", os.str());
            }
        out.insert(out.end(), fam.begin(), fam.end());
    }
    return out;
}

SampledFunction effective_flux(const LagrangianRep& rep, int k, std::size_t layer) {
    const GlimmTrace& tr = *rep.trace;
    const FamilyLayerInfo& fi = rep.info[layer][k - 1];

    // collect the curvature segments of every nontrivial node, transported to
    // the Phi coordinate by the node offset
    struct Seg {
        double a, b, d2;
    };
    std::vector<Seg> segs;
    for (std::size_t j = 0; j < tr.layers[layer].fans.size(); ++j) {
        const ElementaryCurve& cur = tr.layers[layer].fans[j].curves[k - 1];
        if (cur.degenerate() || floored(cur.s) == 0.0) continue;
        double off = fi.offset[j];
        for (std::size_t q = 0; q + 1 < cur.tau.size(); ++q) {
            double h = cur.tau[q + 1] - cur.tau[q];
            if (h <= 0) continue;
            segs.push_back({off + cur.tau[q], off + cur.tau[q + 1],
                            (cur.lam[q + 1] - cur.lam[q]) / h});
        }
    }
    SampledFunction f;
    if (segs.empty()) {
        f.nodes = {0.0};
        f.values = {0.0};
        return f;
    }
    std::sort(segs.begin(), segs.end(),
              [](const Seg& p, const Seg& q) { return p.a < q.a; });
    if (std::fabs(segs.front().a - fi.L_minus) > 1e-9 ||
        std::fabs(segs.back().b - fi.L_plus) > 1e-9)
        throw ModuleError("lagrangian", "effective flux domain does not tile [L-, L+]");

    // integrate twice: f'' piecewise constant, so f' is piecewise linear and
    // the node values below are exact
    double x = segs.front().a, df = 0.0, val = 0.0;
    f.nodes.push_back(x);
    f.values.push_back(val);
    for (const Seg& sg : segs) {
        if (sg.a - x > 1e-9)
            throw ModuleError("lagrangian", "effective flux segments leave a gap");
        double h = sg.b - x;
        if (h <= 0) continue;
        val += df * h + 0.5 * sg.d2 * h * h;
        df += sg.d2 * h;
        x = sg.b;
        f.nodes.push_back(x);
        f.values.push_back(val);
    }
    f.has_end_derivs = true;
    f.deriv_left = 0.0;
    f.deriv_right = df;
    return f;
}

LagrangianCheck check_lagrangian(const LagrangianRep& rep) {
    LagrangianCheck ck;
    const GlimmTrace& tr = *rep.trace;
    const std::size_t NL = tr.layers.size();
    const double tol = 1e-9;

    for (int k = 1; k <= rep.n; ++k) {
        for (std::size_t i = 0; i < NL; ++i) {
            const FamilyLayerInfo& fi = rep.info[i][k - 1];
            auto ids = rep.alive(i, k);

            // Phi tiling and ordering: positives tile [0, L+), negatives tile
            // [L-, 0); position order matches Phi order for positives and is
            // reversed for negatives
            double pos_edge = 0.0, neg_edge = fi.L_minus;
            long pos_node = -1, neg_node = -1;
            bool first_neg = true, first_pos = true;
            double pos_total = 0.0, neg_total = 0.0;
            for (int id : ids) {
                const WavePackage& p = rep.packages[id];
                const WaveRecord& r = *p.rec_at(i);
                if (p.sign > 0) {
                    double gap = std::fabs(r.phi_lo - (first_pos ? 0.0 : pos_edge));
                    ck.max_tiling_gap = std::max(ck.max_tiling_gap, gap);
                    if (gap > tol) ++ck.order_violations;
                    if (!first_pos && r.node < pos_node) ++ck.order_violations;
                    pos_edge = r.phi_hi;
                    pos_node = r.node;
                    first_pos = false;
                    pos_total += r.hi - r.lo;
                } else {
                    double gap = std::fabs(r.phi_lo - neg_edge);
                    ck.max_tiling_gap = std::max(ck.max_tiling_gap, gap);
                    if (gap > tol) ++ck.order_violations;
                    if (!first_neg && r.node > neg_node) ++ck.order_violations;
                    neg_edge = r.phi_hi;
                    neg_node = r.node;
                    first_neg = false;
                    neg_total += r.hi - r.lo;
                }
            }
            if (!first_pos) {
                double gap = std::fabs(pos_edge - fi.L_plus);
                ck.max_tiling_gap = std::max(ck.max_tiling_gap, gap);
                if (gap > tol) ++ck.order_violations;
            }
            if (!first_neg) {
                double gap = std::fabs(neg_edge - 0.0);
                ck.max_tiling_gap = std::max(ck.max_tiling_gap, gap);
                if (gap > tol) ++ck.order_violations;
            }
            double res_pos = std::fabs(pos_total - fi.L_plus);
            double res_neg = std::fabs(neg_total - (-fi.L_minus));
            // uncovered slivers from split defects can persist, so the slack
            // is cumulative over all transitions up to this layer (zero for
            // scalar models)
            double slack = 0.0;
            for (std::size_t q = 1; q <= i; ++q)
                for (const auto& t : rep.transitions[q - 1][k - 1]) slack += t.defect;
            ck.max_balance_residual = std::max(
                ck.max_balance_residual, std::max(res_pos, res_neg) - slack);
        }

        // per-node ledger comparison and transition structure
        for (std::size_t i = 1; i < NL; ++i) {
            const auto& trans = rep.transitions[i - 1][k - 1];
            const auto& leds = tr.layers[i].ledgers;
            double theta = tr.layers[i].theta;
            for (std::size_t j = 0; j < trans.size(); ++j) {
                const NodeTransition& t = trans[j];
                ck.max_defect = std::max(ck.max_defect, t.defect);
                if (t.sign_flip) {
                    ++ck.flip_nodes;
                    continue;
                }
                double slack = t.defect + (j > 0 ? trans[j - 1].defect : 0.0) +
                               (j + 1 < trans.size() ? trans[j + 1].defect : 0.0);
                double res_cr = std::fabs(t.created - leds[j].a_cr[k - 1]);
                double res_canc =
                    std::fabs(t.cancelled - (2.0 * leds[j].a_canc[k - 1] + t.extra));
                ck.max_balance_residual =
                    std::max(ck.max_balance_residual,
                             std::max(res_cr, res_canc) - slack);
            }

            // E_ode: stayed waves have sigma <= theta, moved waves have
            // sigma > theta, up to the curve grid resolution in sigma
            for (const auto& p : rep.packages) {
                if (p.family != k) continue;
                const WaveRecord* r = p.rec_at(i);
                if (!r || (r->origin != 'S' && r->origin != 'M')) continue;
                long pnode = r->node - (r->origin == 'M' ? 1 : 0);
                const ElementaryCurve& cur =
                    tr.layers[i - 1].fans[pnode].curves[k - 1];
                if (cur.degenerate()) continue;
                double seg_tol = 1e-7;
                for (std::size_t q = 0; q + 1 < cur.sigma.size(); ++q)
                    seg_tol = std::max(seg_tol,
                                       std::fabs(cur.sigma[q + 1] - cur.sigma[q]));
                if (r->origin == 'M' && cur.sigma_at(r->src_lo) < theta - seg_tol)
                    ++ck.ode_violations;
                if (r->origin == 'S' &&
                    cur.sigma_at(std::nextafter(r->src_hi, r->src_lo)) >
                        theta + seg_tol)
                    ++ck.ode_violations;
            }

            // affine slope 1: for surviving non-split packages sharing node
            // and branch, the Phi gaps between consecutive fragments are the
            // same before and after the transition
            for (std::size_t j = 0; j < trans.size(); ++j) {
                for (char branch : {'S', 'M'}) {
                    std::vector<const WavePackage*> grp;
                    for (const auto& p : rep.packages) {
                        const WaveRecord* r = p.rec_at(i);
                        if (p.family == k && r && r->node == static_cast<long>(j) &&
                            r->origin == branch && p.rec_at(i - 1))
                            grp.push_back(&p);
                    }
                    std::sort(grp.begin(), grp.end(),
                              [&](const WavePackage* a, const WavePackage* b) {
                                  return a->rec_at(i)->phi_lo < b->rec_at(i)->phi_lo;
                              });
                    for (std::size_t q = 1; q < grp.size(); ++q) {
                        const WaveRecord *a0 = grp[q - 1]->rec_at(i - 1),
                                         *a1 = grp[q - 1]->rec_at(i),
                                         *b0 = grp[q]->rec_at(i - 1),
                                         *b1 = grp[q]->rec_at(i);
                        double old_gap = b0->phi_lo - a0->phi_hi;
                        double new_gap = b1->phi_lo - a1->phi_hi;
                        if (std::fabs(new_gap - old_gap) > tol)
                            ++ck.affine_violations;
                    }
                }
            }
        }
    }

    // single-sign property at every occupied location
    for (std::size_t i = 0; i < NL; ++i) {
        for (int k = 1; k <= rep.n; ++k) {
            std::vector<std::pair<long, int>> seen;
            for (const auto& p : rep.packages) {
                const WaveRecord* r = p.rec_at(i);
                if (!r || p.family != k) continue;
                bool bad = false;
                for (auto& [nd, sg] : seen)
                    if (nd == r->node && sg != p.sign) bad = true;
                if (bad)
                    ++ck.sign_violations;
                else
                    seen.emplace_back(r->node, p.sign);
            }
        }
    }
    return ck;
}

}  // namespace glimmlab
