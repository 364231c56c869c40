#pragma once

#include "gkm/exactlp.hpp"
#include "gkm/instance.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gkm {

class InvariantBreach : public std::runtime_error {
public:
    explicit InvariantBreach(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// discretization

/**
 * Levels L(-2) = -1, L(-1) = 0, L(l) = alpha * tau^l. Levels are cached up to
 * the range requested with `reach`; higher ones are computed on demand.
 */
class Discretization {
public:
    Discretization() = default;
    Discretization(Rational tau, Rational offsetAlpha, std::uint64_t seed = 0)
        : tau_(std::move(tau)), alpha_(std::move(offsetAlpha)), seed_(seed) {
        if (tau_ <= 1) throw std::invalid_argument("tau must exceed 1");
        if (alpha_ < 1 || alpha_ >= tau_) throw std::invalid_argument("offset must lie in [1, tau)");
        cache_ = {alpha_};
    }

    const Rational& tau() const { return tau_; }
    const Rational& offset_alpha() const { return alpha_; }
    std::uint64_t seed() const { return seed_; }

    /// Caches every level needed to round distances up to `d`.
    void reach(const Rational& d) {
        while (cache_.back() < d) cache_.push_back(cache_.back() * tau_);
    }

    Rational L(int l) const {
        if (l == -2) return Rational(-1);
        if (l == -1) return Rational(0);
        if (l < -2) throw std::invalid_argument("level below -2");
        if (l < static_cast<int>(cache_.size())) return cache_[l];
        Rational v = cache_.back();
        for (int t = static_cast<int>(cache_.size()) - 1; t < l; ++t) v *= tau_;
        return v;
    }

    /// min { l >= -1 : L(l) >= d } for d >= 0.
    int level_of(const Rational& d) const {
        if (d.sign() <= 0) return -1;
        auto it = std::lower_bound(cache_.begin(), cache_.end(), d);
        if (it != cache_.end()) return static_cast<int>(it - cache_.begin());
        int l = static_cast<int>(cache_.size()) - 1;
        Rational v = cache_.back();
        while (v < d) {
            v *= tau_;
            ++l;
        }
        return l;
    }

    Rational round_up(const Rational& d) const { return L(level_of(d)); }

private:
    Rational tau_{2};
    Rational alpha_{1};
    std::uint64_t seed_ = 0;
    std::vector<Rational> cache_{Rational(1)};
};

/**
 * Offset with log-uniform law on [1, tau): u is uniform on a 2^64 grid and
 * alpha = tau^u is snapped to denominator 10^9.
 */
inline Rational sample_offset(const Rational& tau, std::uint64_t seed) {
    std::uint64_t bits = mix64(derive_seed(seed, "offset"));
    long double u = static_cast<long double>(bits) / 18446744073709551616.0L;
    long double a = std::pow(static_cast<long double>(to_double(tau)), u);
    const std::int64_t den = 1000000000;
    Rational alpha = snap(a, den);
    if (alpha < 1) alpha = 1;
    if (alpha >= tau) {
        Rational below(Integer(ceil_int(tau * den) - 1), Integer(den));
        alpha = below;
    }
    return alpha;
}

inline Discretization discretize(const MetricInstance& metric, const Rational& tau, std::uint64_t seed) {
    if (tau <= 1) throw std::invalid_argument("tau must exceed 1");
    Discretization disc(tau, sample_offset(tau, seed), seed);
    disc.reach(metric.diameter());
    return disc;
}

// ---------------------------------------------------------------------------
// LP1 and facility duplication

struct FacilityRec {
    int point = 0;               // index into the metric
    int origin = 0;              // facility of the input instance
    std::string id;
    std::vector<Rational> weight; // W column, one entry per knapsack row
};

struct ClientRec {
    int point = 0;
    int origin = -1;             // client of the input instance; -1 for dummies
    std::string id;
    std::vector<Rational> a;     // coverage row
    bool dummy = false;
};

/** Everything build_lp_iter needs: facilities (possibly copies), clients and their F-balls. */
struct LpIterInput {
    std::shared_ptr<const MetricInstance> metric;
    std::vector<FacilityRec> facilities;
    std::vector<ClientRec> clients;
    std::vector<std::vector<int>> fballs;
    std::vector<Rational> b, c;
    std::vector<int> S0; // facility indices pre-opened (all collocated copies)
    std::vector<int> C0; // dummy clients
    std::vector<int> S0origins;
    std::vector<Rational> y; // LP value of each facility copy
};

struct Lp1Options {
    std::vector<char> clientActive;                 // empty = all clients
    std::vector<char> preopened;                    // y_i fixed to 1
    std::vector<std::vector<char>> allowed;         // empty = all pairs; else x_ij exists iff allowed[i][j]
    std::optional<Rational> costCap;                // sum_j d(i,j) x_ij <= cap y_i for non-preopened i
    std::optional<std::vector<Rational>> coverage;  // overrides c
};

struct Lp1Solution {
    Rational value{0};
    std::vector<Rational> y;              // per facility
    std::vector<std::vector<Rational>> x; // facility x client
};

/** LP1 over x_ij, y_i; rows x <= y, sum_i x_ij <= 1, Wy <= b, coverage. */
inline LinearProgram build_lp1(const GkmInstance& g, const Lp1Options& opt, std::vector<std::pair<int, int>>& xvars) {
    int nf = g.nf(), nc = g.nc();
    xvars.clear();
    for (int i = 0; i < nf; ++i)
        for (int j = 0; j < nc; ++j) {
            if (!opt.clientActive.empty() && !opt.clientActive[j]) continue;
            if (!opt.allowed.empty() && !opt.allowed[i][j]) continue;
            xvars.emplace_back(i, j);
        }
    int nx = static_cast<int>(xvars.size());
    LinearProgram lp(nx + nf);
    for (int v = 0; v < nx; ++v) {
        auto [i, j] = xvars[v];
        lp.objective[v] = g.metric.fc(i, j);
        lp.names.push_back("x_" + g.facilityIds[i] + "_" + g.clientIds[j]);
    }
    for (int i = 0; i < nf; ++i) {
        lp.names.push_back("y_" + g.facilityIds[i]);
        if (!opt.preopened.empty() && opt.preopened[i]) lp.lo[nx + i] = 1;
    }
    std::vector<std::vector<std::pair<int, Rational>>> perClient(nc), perFacility(nf);
    for (int v = 0; v < nx; ++v) {
        auto [i, j] = xvars[v];
        lp.add_row({{v, Rational(1)}, {nx + i, Rational(-1)}}, Relation::LessEq, Rational(0),
                   ConstraintLabel::custom("open", i, j));
        perClient[j].emplace_back(v, Rational(1));
        perFacility[i].emplace_back(v, g.metric.fc(i, j));
    }
    for (int j = 0; j < nc; ++j)
        if (!perClient[j].empty())
            lp.add_row(perClient[j], Relation::LessEq, Rational(1), ConstraintLabel::custom("assign", j));
    for (int r = 0; r < g.r1(); ++r) {
        std::vector<std::pair<int, Rational>> coef;
        for (int i = 0; i < nf; ++i) coef.emplace_back(nx + i, g.W[r][i]);
        lp.add_row(coef, Relation::LessEq, g.b[r], ConstraintLabel::knapsack(r));
    }
    const auto& c = opt.coverage ? *opt.coverage : g.c;
    for (int r = 0; r < g.r2(); ++r) {
        std::vector<std::pair<int, Rational>> coef;
        for (int v = 0; v < nx; ++v) coef.emplace_back(v, g.a[xvars[v].second][r]);
        lp.add_row(coef, Relation::GreaterEq, c[r], ConstraintLabel::coverage(r));
    }
    if (opt.costCap) {
        for (int i = 0; i < nf; ++i) {
            if (!opt.preopened.empty() && opt.preopened[i]) continue;
            auto coef = perFacility[i];
            coef.emplace_back(nx + i, -*opt.costCap);
            lp.add_row(coef, Relation::LessEq, Rational(0), ConstraintLabel::custom("cheap", i));
        }
    }
    return lp;
}

/** nullopt when LP1 is infeasible. */
inline std::optional<Lp1Solution> solve_lp1(const GkmInstance& g, const Lp1Options& opt = {}) {
    std::vector<std::pair<int, int>> xvars;
    LinearProgram lp = build_lp1(g, opt, xvars);
    SolveOptions so;
    so.verifyBasis = false;
    LpResult r = solve_to_vertex(lp, so);
    if (r.status == LpStatus::Infeasible) return std::nullopt;
    if (r.status == LpStatus::Unbounded) throw LpError("LP1 unbounded");
    Lp1Solution s;
    s.value = r.point.objectiveValue;
    int nx = static_cast<int>(xvars.size());
    s.y.assign(r.point.y.begin() + nx, r.point.y.end());
    s.x.assign(g.nf(), std::vector<Rational>(g.nc(), Rational(0)));
    for (int v = 0; v < nx; ++v) s.x[xvars[v].first][xvars[v].second] = r.point.y[v];
    return s;
}

struct CopySplit {
    Rational y;
    std::vector<int> clients;
};

/**
 * Sorted-increment split: copy k gets x_(k) - x_(k-1) and serves every client
 * whose x is at least x_(k). With `keepResidual` a clientless copy carries
 * y - max x so the copies sum to y.
 */
inline std::vector<CopySplit> split_sorted(const std::vector<Rational>& x, const Rational& y, bool keepResidual) {
    std::vector<int> order;
    for (int j = 0; j < static_cast<int>(x.size()); ++j)
        if (x[j].sign() > 0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) { return x[p] < x[q]; });
    std::vector<CopySplit> out;
    Rational prev(0);
    for (std::size_t t = 0; t < order.size(); ++t) {
        const Rational& v = x[order[t]];
        if (v == prev) continue;
        CopySplit c{v - prev, {}};
        for (std::size_t u = t; u < order.size(); ++u) c.clients.push_back(order[u]);
        std::sort(c.clients.begin(), c.clients.end());
        out.push_back(std::move(c));
        prev = v;
    }
    if (keepResidual && y > prev) out.push_back({y - prev, {}});
    return out;
}

/**
 * Split whose copies each serve clients of total distance at most twice the
 * facility's LP cost bound. Clients are laid out by decreasing distance on a
 * line with lengths x_ij / y_i; the copy for offset theta serves the clients
 * whose segment contains a point of theta + Z. Each copy then holds at most
 * one client per unit of length, and the client picked from unit m is no
 * farther than any client of unit m-1.
 */
inline std::vector<CopySplit> split_cost_bounded(const std::vector<Rational>& x, const Rational& y,
                                                 const std::vector<Rational>& dist) {
    if (y.sign() <= 0) return {};
    std::vector<int> order;
    for (int j = 0; j < static_cast<int>(x.size()); ++j)
        if (x[j].sign() > 0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) { return dist[p] > dist[q]; });
    std::vector<Rational> prefix{Rational(0)};
    for (int j : order) prefix.push_back(prefix.back() + x[j] / y);
    auto frac = [](const Rational& v) {
        Integer f = numer(v) / denom(v);
        return v - Rational(f);
    };
    std::vector<Rational> cuts{Rational(0), Rational(1)};
    for (const auto& p : prefix) cuts.push_back(frac(p));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::map<std::vector<int>, Rational> byset;
    for (std::size_t q = 0; q + 1 < cuts.size(); ++q) {
        const Rational& theta = cuts[q];
        std::vector<int> members;
        for (std::size_t t = 0; t < order.size(); ++t) {
            Rational kk = Rational(ceil_int(prefix[t] - theta));
            if (theta + kk < prefix[t + 1]) members.push_back(order[t]);
        }
        if (members.empty()) continue;
        std::sort(members.begin(), members.end());
        byset[members] += (cuts[q + 1] - theta) * y;
    }
    std::vector<CopySplit> out;
    for (auto& [members, w] : byset) out.push_back({w, members});
    return out;
}

struct FBallExtraction {
    LpIterInput input;
    Lp1Solution lp1;
};

inline std::shared_ptr<const MetricInstance> share_metric(const MetricInstance& m) {
    return std::make_shared<const MetricInstance>(m);
}

/** Solves LP1, splits each facility by sorted increments, and reads off the F-balls. */
inline FBallExtraction duplicate_and_extract_fballs(const GkmInstance& g) {
    auto sol = solve_lp1(g);
    if (!sol) throw InstanceError("LP1 infeasible: the coverage requirement cannot be met");
    FBallExtraction ex;
    ex.lp1 = *sol;
    LpIterInput& in = ex.input;
    in.metric = share_metric(g.metric);
    in.b = g.b;
    in.c = g.c;
    in.fballs.assign(g.nc(), {});
    for (int j = 0; j < g.nc(); ++j)
        in.clients.push_back({g.metric.client_point(j), j, g.clientIds[j], g.a[j], false});
    for (int i = 0; i < g.nf(); ++i) {
        auto copies = split_sorted(sol->x[i], sol->y[i], false);
        for (std::size_t k = 0; k < copies.size(); ++k) {
            int idx = static_cast<int>(in.facilities.size());
            std::vector<Rational> w;
            for (int r = 0; r < g.r1(); ++r) w.push_back(g.W[r][i]);
            in.facilities.push_back({g.metric.facility_point(i), i, g.facilityIds[i] + "#" + std::to_string(k), w});
            in.y.push_back(copies[k].y);
            for (int j : copies[k].clients) in.fballs[j].push_back(idx);
        }
    }
    Rational lp2(0);
    for (int j = 0; j < g.nc(); ++j)
        for (int i : in.fballs[j]) lp2 += g.metric.d(in.facilities[i].point, in.clients[j].point) * in.y[i];
    if (lp2 != sol->value) throw InvariantBreach("split solution cost differs from Opt(LP1)");
    return ex;
}

// ---------------------------------------------------------------------------
// LP_iter state

enum class ClientTag { Part, Full, Star };

inline const char* tag_name(ClientTag t) {
    switch (t) {
    case ClientTag::Part: return "part";
    case ClientTag::Full: return "full";
    case ClientTag::Star: return "star";
    }
    return "?";
}

struct ExtraData {
    Kind kind = Kind::Knapsack;
    Rational rho, delta, U;
    std::vector<Rational> R; // per client of the state
};

struct LpIterState {
    std::shared_ptr<const MetricInstance> metric;
    Discretization disc;
    std::vector<FacilityRec> facilities;
    std::vector<ClientRec> clients;
    std::vector<char> facilityAlive, clientAlive;
    std::vector<Rational> b, c; // mutated by outliers post-processing (k, m)
    std::vector<std::vector<int>> F, B;
    std::vector<int> level;
    std::vector<ClientTag> tag;
    std::vector<int> S0, C0, S0origins;
    std::vector<char> inS0;
    std::optional<ExtraData> extra;
    std::vector<std::vector<int>> pointLevel; // level of every metric distance

    int nf() const { return static_cast<int>(facilities.size()); }
    int nc() const { return static_cast<int>(clients.size()); }
    int r1() const { return static_cast<int>(b.size()); }
    int r2() const { return static_cast<int>(c.size()); }
    int r() const { return r1() + r2(); }

    const Rational& d(int j, int i) const { return metric->d(clients[j].point, facilities[i].point); }
    int lev(int j, int i) const { return pointLevel[clients[j].point][facilities[i].point]; }
    Rational dprime(int j, int i) const { return disc.L(lev(j, i)); }
    Rational Lj(int j) const { return disc.L(level[j]); }

    std::vector<int> alive_facilities() const {
        std::vector<int> out;
        for (int i = 0; i < nf(); ++i)
            if (facilityAlive[i]) out.push_back(i);
        return out;
    }
    std::vector<int> alive_clients() const {
        std::vector<int> out;
        for (int j = 0; j < nc(); ++j)
            if (clientAlive[j]) out.push_back(j);
        return out;
    }
    std::vector<int> clients_with(ClientTag t) const {
        std::vector<int> out;
        for (int j = 0; j < nc(); ++j)
            if (clientAlive[j] && tag[j] == t) out.push_back(j);
        return out;
    }

    void recompute_inner(int j) {
        B[j].clear();
        for (int i : F[j])
            if (lev(j, i) <= level[j] - 1) B[j].push_back(i);
    }

    void delete_facility(int i) {
        facilityAlive[i] = 0;
        for (int j = 0; j < nc(); ++j) {
            std::erase(F[j], i);
            std::erase(B[j], i);
        }
    }
};

inline bool intersects(const std::vector<int>& a, const std::vector<int>& b) {
    auto p = a.begin(), q = b.begin();
    while (p != a.end() && q != b.end()) {
        if (*p == *q) return true;
        if (*p < *q) ++p;
        else ++q;
    }
    return false;
}

inline Rational mass(const std::vector<int>& set, const std::vector<Rational>& y) {
    Rational s(0);
    for (int i : set) s += y[i];
    return s;
}

/** Radius levels, inner balls and the initial partition (C* = C0). */
inline LpIterState build_lp_iter(const LpIterInput& in, const Discretization& disc) {
    LpIterState st;
    st.metric = in.metric;
    st.disc = disc;
    st.disc.reach(in.metric->diameter());
    st.facilities = in.facilities;
    st.clients = in.clients;
    st.facilityAlive.assign(in.facilities.size(), 1);
    st.clientAlive.assign(in.clients.size(), 1);
    st.b = in.b;
    st.c = in.c;
    st.S0 = in.S0;
    st.C0 = in.C0;
    st.S0origins = in.S0origins;
    st.inS0.assign(in.facilities.size(), 0);
    for (int i : in.S0) st.inS0[i] = 1;
    int P = in.metric->size();
    st.pointLevel.assign(P, std::vector<int>(P, -1));
    for (int p = 0; p < P; ++p)
        for (int q = 0; q < P; ++q) st.pointLevel[p][q] = st.disc.level_of(in.metric->d(p, q));
    int nc = static_cast<int>(in.clients.size());
    st.F = in.fballs;
    for (auto& f : st.F) std::sort(f.begin(), f.end());
    st.B.assign(nc, {});
    st.level.assign(nc, -1);
    st.tag.assign(nc, ClientTag::Part);
    for (int j = 0; j < nc; ++j) {
        for (int i : st.F[j]) st.level[j] = std::max(st.level[j], st.lev(j, i));
        st.recompute_inner(j);
    }
    for (int j : in.C0) st.tag[j] = ClientTag::Star;
    return st;
}

/** LP_iter over the alive facilities; `facilityOfVar` maps LP columns back. */
struct EmittedLp {
    LinearProgram lp;
    std::vector<int> facilityOfVar;
    std::vector<int> varOfFacility;
};

inline EmittedLp emit_lp(const LpIterState& st) {
    EmittedLp e;
    e.varOfFacility.assign(st.nf(), -1);
    for (int i = 0; i < st.nf(); ++i)
        if (st.facilityAlive[i]) {
            e.varOfFacility[i] = static_cast<int>(e.facilityOfVar.size());
            e.facilityOfVar.push_back(i);
        }
    int n = static_cast<int>(e.facilityOfVar.size());
    e.lp = LinearProgram(n);
    for (int v = 0; v < n; ++v) e.lp.names.push_back("y_" + st.facilities[e.facilityOfVar[v]].id);
    auto ballRow = [&](const std::vector<int>& ball) {
        std::vector<std::pair<int, Rational>> coef;
        for (int i : ball) coef.emplace_back(e.varOfFacility[i], Rational(1));
        return coef;
    };
    std::vector<Rational> need = st.c;
    std::vector<std::vector<Rational>> cover(st.r2(), std::vector<Rational>(n, Rational(0)));
    for (int j = 0; j < st.nc(); ++j) {
        if (!st.clientAlive[j]) continue;
        switch (st.tag[j]) {
        case ClientTag::Part:
            for (int i : st.F[j]) {
                int v = e.varOfFacility[i];
                e.lp.objective[v] += st.dprime(j, i);
                for (int r = 0; r < st.r2(); ++r) cover[r][v] += st.clients[j].a[r];
            }
            if (!st.F[j].empty()) e.lp.add_row(ballRow(st.F[j]), Relation::LessEq, Rational(1), ConstraintLabel::cpart(j));
            break;
        case ClientTag::Full:
        case ClientTag::Star: {
            Rational Lj = st.Lj(j);
            e.lp.constant += Lj;
            for (int i : st.B[j]) e.lp.objective[e.varOfFacility[i]] += st.dprime(j, i) - Lj;
            for (int r = 0; r < st.r2(); ++r) need[r] -= st.clients[j].a[r];
            if (st.tag[j] == ClientTag::Full) {
                if (!st.B[j].empty())
                    e.lp.add_row(ballRow(st.B[j]), Relation::LessEq, Rational(1), ConstraintLabel::cfull(j));
            } else {
                e.lp.add_row(ballRow(st.F[j]), Relation::Equal, Rational(1), ConstraintLabel::cstar(j));
            }
            break;
        }
        }
    }
    for (int r = 0; r < st.r1(); ++r) {
        std::vector<std::pair<int, Rational>> coef;
        for (int v = 0; v < n; ++v) coef.emplace_back(v, st.facilities[e.facilityOfVar[v]].weight[r]);
        e.lp.add_row(coef, Relation::LessEq, st.b[r], ConstraintLabel::knapsack(r));
    }
    for (int r = 0; r < st.r2(); ++r) {
        std::vector<std::pair<int, Rational>> coef;
        for (int v = 0; v < n; ++v) coef.emplace_back(v, cover[r][v]);
        e.lp.add_row(coef, Relation::GreaterEq, need[r], ConstraintLabel::coverage(r));
    }
    return e;
}

/**
 * Solves LP_iter and reports the vertex in facility indices: y has one entry per
 * facility of the state (0 for deleted ones) and Integrality labels name facilities.
 */
inline ExtremePoint solve_state(const LpIterState& st, const std::string& context = "LP_iter") {
    EmittedLp e = emit_lp(st);
    SolveOptions so;
    so.verifyBasis = false;
    ExtremePoint ep;
    try {
        ep = require_vertex(e.lp, context, so);
    } catch (const LpError& err) {
        throw InvariantBreach(err.what());
    }
    std::vector<Rational> y(st.nf(), Rational(0));
    for (int v = 0; v < e.lp.variableCount; ++v) y[e.facilityOfVar[v]] = ep.y[v];
    ep.y = y;
    for (auto* labels : {&ep.tightLabels, &ep.basisLabels})
        for (auto& l : *labels)
            if (l.kind == ConstraintLabel::Kind::Integrality) l.index = e.facilityOfVar[l.index];
    std::sort(ep.basisLabels.begin(), ep.basisLabels.end());
    return ep;
}

/** Objective of LP_iter at an arbitrary facility vector (for monotonicity checks). */
inline Rational lp_iter_value(const LpIterState& st, const std::vector<Rational>& y) {
    Rational z(0);
    for (int j = 0; j < st.nc(); ++j) {
        if (!st.clientAlive[j]) continue;
        if (st.tag[j] == ClientTag::Part) {
            for (int i : st.F[j]) z += st.dprime(j, i) * y[i];
        } else {
            Rational Lj = st.Lj(j);
            z += Lj;
            for (int i : st.B[j]) z += (st.dprime(j, i) - Lj) * y[i];
        }
    }
    return z;
}

// ---------------------------------------------------------------------------
// invariant checks

struct CheckItem {
    std::string name;
    bool pass = true;
    std::string witness;

    CheckItem() = default;
    explicit CheckItem(std::string n) : name(std::move(n)) {}
};

struct InvariantReport {
    std::vector<CheckItem> items;

    bool ok() const {
        return std::all_of(items.begin(), items.end(), [](const CheckItem& c) { return c.pass; });
    }
    const CheckItem* find(const std::string& name) const {
        for (const auto& c : items)
            if (c.name == name) return &c;
        return nullptr;
    }
    std::string summary() const {
        std::string s;
        for (const auto& c : items)
            if (!c.pass) s += c.name + ": " + c.witness + "; ";
        return s.empty() ? "all pass" : s;
    }
};

namespace detail {
inline void fail(CheckItem& item, const std::string& w) {
    if (item.pass) {
        item.pass = false;
        item.witness = w;
    }
}
} // namespace detail

/**
 * Basic Invariants 1 to 5, plus the two derived facts checked alongside them:
 * d(j,j') <= L(l_j) + L(l_j') for intersecting balls and at most two C*-balls
 * per facility.
 */
inline InvariantReport check_basic_invariants(const LpIterState& st) {
    InvariantReport rep;
    CheckItem partition{"partition"}, radius{"radius"}, inner{"inner-ball"}, floor{"level-floor"},
        neighbors{"distinct-neighbors"}, distance{"distance-bound"}, degree{"star-degree"};
    auto cname = [&](int j) { return st.clients[j].id + "[" + std::to_string(j) + "]"; };
    for (int j = 0; j < st.nc(); ++j) {
        if (!st.clientAlive[j]) continue;
        int t = static_cast<int>(st.tag[j]);
        if (t < 0 || t > 2) detail::fail(partition, cname(j) + " has no class");
        if (st.level[j] < -1) detail::fail(floor, cname(j) + " at level " + std::to_string(st.level[j]));
        Rational Lj = st.Lj(j);
        Rational Linner = st.disc.L(std::max(st.level[j] - 1, -2));
        std::vector<int> expect;
        for (int i : st.F[j]) {
            if (!st.facilityAlive[i]) detail::fail(radius, cname(j) + " holds deleted facility " + std::to_string(i));
            Rational dp = st.disc.round_up(st.d(j, i));
            if (dp > Lj) detail::fail(radius, cname(j) + " facility " + std::to_string(i));
            if (dp <= Linner) expect.push_back(i);
        }
        if (expect != st.B[j]) detail::fail(inner, cname(j));
    }
    auto stars = st.clients_with(ClientTag::Star);
    std::vector<int> starCount(st.nf(), 0);
    for (int j : stars)
        for (int i : st.F[j]) ++starCount[i];
    for (int i = 0; i < st.nf(); ++i)
        if (starCount[i] > 2) detail::fail(degree, "facility " + std::to_string(i) + " in " + std::to_string(starCount[i]));
    for (std::size_t p = 0; p < stars.size(); ++p)
        for (std::size_t q = p + 1; q < stars.size(); ++q) {
            int a = stars[p], b2 = stars[q];
            if (!intersects(st.F[a], st.F[b2])) continue;
            if (std::abs(st.level[a] - st.level[b2]) != 1)
                detail::fail(neighbors, "(" + cname(a) + "," + cname(b2) + ") at levels " +
                                            std::to_string(st.level[a]) + "," + std::to_string(st.level[b2]));
        }
    auto alive = st.alive_clients();
    for (std::size_t p = 0; p < alive.size(); ++p)
        for (std::size_t q = p + 1; q < alive.size(); ++q) {
            int a = alive[p], b2 = alive[q];
            if (!intersects(st.F[a], st.F[b2])) continue;
            if (st.metric->d(st.clients[a].point, st.clients[b2].point) > st.Lj(a) + st.Lj(b2))
                detail::fail(distance, "(" + cname(a) + "," + cname(b2) + ")");
        }
    rep.items = {partition, radius, inner, floor, neighbors, distance, degree};
    return rep;
}

/** Facilities at distance 0 from some pre-opened input facility. */
inline std::vector<char> collocated_with_s0(const LpIterState& st) {
    std::vector<char> out(st.nf(), 0);
    for (int i = 0; i < st.nf(); ++i)
        for (int o : st.S0origins)
            if (is_zero(st.metric->d(st.facilities[i].point, st.metric->facility_point(o)))) out[i] = 1;
    return out;
}

inline InvariantReport check_extra_invariants(const LpIterState& st, Kind kind) {
    if (!st.extra) throw std::invalid_argument("state carries no sparsity data");
    const ExtraData& ex = *st.extra;
    InvariantReport rep;
    CheckItem dummies{"extra-dummy"}, cheap{"extra-cheap"}, rad{"extra-radius"}, sparse{"extra-sparse"};
    auto coll = collocated_with_s0(st);
    for (int o : st.S0origins) {
        int p = st.metric->facility_point(o);
        std::vector<int> expect;
        for (int i = 0; i < st.nf(); ++i)
            if (st.facilityAlive[i] && is_zero(st.metric->d(st.facilities[i].point, p))) expect.push_back(i);
        bool found = false;
        for (int j : st.C0) {
            if (!st.clientAlive[j] || !is_zero(st.metric->d(st.clients[j].point, p))) continue;
            if (st.tag[j] == ClientTag::Star && st.level[j] == -1 && st.F[j] == expect) found = true;
        }
        if (!found) detail::fail(dummies, "pre-opened facility " + std::to_string(o));
    }
    Rational cheapBound = kind == Kind::Knapsack ? Rational(2) * ex.rho * ex.U : ex.rho * (1 + ex.delta) * ex.U;
    for (int i = 0; i < st.nf(); ++i) {
        if (!st.facilityAlive[i] || coll[i]) continue;
        Rational s(0);
        for (int j = 0; j < st.nc(); ++j)
            if (st.clientAlive[j] && std::binary_search(st.F[j].begin(), st.F[j].end(), i)) s += st.d(j, i);
        if (s > cheapBound) detail::fail(cheap, "facility " + std::to_string(i) + " carries " + to_string(s));
    }
    for (int j = 0; j < st.nc(); ++j) {
        if (!st.clientAlive[j]) continue;
        if (st.Lj(j) > st.disc.tau() * ex.R[j]) detail::fail(rad, "client " + std::to_string(j));
    }
    std::vector<int> real;
    for (int j = 0; j < st.nc(); ++j)
        if (st.clientAlive[j] && !st.clients[j].dummy) real.push_back(j);
    auto dcc = [&](int p, int j) { return st.metric->d(p, st.clients[j].point); };
    if (kind == Kind::Knapsack) {
        // |B(j, delta r)| r is nondecreasing in r, so r = R_j dominates; the
        // distances d(j, j') below R_j are checked as well.
        for (int j : real) {
            std::vector<Rational> rs{ex.R[j]};
            for (int jp : real)
                if (dcc(st.clients[j].point, jp) <= ex.R[j]) rs.push_back(dcc(st.clients[j].point, jp));
            for (const auto& r : rs) {
                int count = 0;
                for (int jp : real)
                    if (dcc(st.clients[j].point, jp) <= ex.delta * r) ++count;
                if (Rational(count) * r > ex.rho * ex.U) {
                    detail::fail(sparse, "client " + std::to_string(j) + " at r=" + to_string(r));
                    break;
                }
            }
        }
    } else {
        Rational factor = ex.rho * (1 + Rational(3, 4) * ex.delta) / (1 - ex.delta / 4) * ex.U;
        Rational shrink = ex.delta / (4 + 3 * ex.delta);
        std::vector<int> pts;
        for (int i = 0; i < st.nf(); ++i)
            if (st.facilityAlive[i]) pts.push_back(st.facilities[i].point);
        for (int j : real) pts.push_back(st.clients[j].point);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        for (int p : pts) {
            std::vector<Rational> ts;
            for (int j : real) {
                ts.push_back(dcc(p, j) / shrink);
                ts.push_back(ex.R[j]);
            }
            for (const auto& t : ts) {
                if (t.sign() <= 0) continue;
                int count = 0;
                for (int j : real)
                    if (ex.R[j] >= t && dcc(p, j) <= shrink * t) ++count;
                if (Rational(count) * t > factor) {
                    detail::fail(sparse, "point " + std::to_string(p) + " at t=" + to_string(t));
                    break;
                }
            }
        }
    }
    rep.items = {dummies, cheap, rad, sparse};
    return rep;
}

// ---------------------------------------------------------------------------

inline nlohmann::json snapshot_json(const LpIterState& st) {
    nlohmann::json j;
    j["tau"] = to_string(st.disc.tau());
    j["offsetAlpha"] = to_string(st.disc.offset_alpha());
    j["seed"] = st.disc.seed();
    nlohmann::json cl = nlohmann::json::array();
    for (int c = 0; c < st.nc(); ++c) {
        if (!st.clientAlive[c]) continue;
        cl.push_back({{"client", c},
                      {"id", st.clients[c].id},
                      {"tag", tag_name(st.tag[c])},
                      {"level", st.level[c]},
                      {"F", st.F[c]},
                      {"B", st.B[c]}});
    }
    j["clients"] = cl;
    j["facilities"] = st.alive_facilities();
    return j;
}

} // namespace gkm
