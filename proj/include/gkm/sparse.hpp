#pragma once

// Sub-instance construction shared by the knapsack and outliers pipelines:
// the restricted LP1', the facility splits, the dummy clients of S0, and the
// sparsity data the Extra Invariant checker reads.

#include "gkm/lpiter.hpp"
#include "gkm/oracle.hpp"
#include "gkm/rounding.hpp"

#include <memory>

namespace gkm {

struct SparseParams {
    Rational rho{1, 4}, delta{1, 4}, U{0};
};

/** A guess: pre-opened facilities, removed clients and radius caps, all in input indices. */
struct SparseSpec {
    std::vector<int> S0;
    std::vector<char> removed;  // per input client
    std::vector<Rational> R;    // per input client; ignored for removed ones
    std::optional<int> mPrime;  // outliers only
};

struct SparseCandidate {
    Kind kind = Kind::Knapsack;
    SparseSpec spec;
    SparseParams params;
    Rational cheapCap{0};        // T in the LP1' cost rows
    Rational lp1Value{0};
    LpIterInput input;
    ExtraData extra;
    std::vector<int> clientOrigin; // per state client: input client, or -1 for a dummy
};

/** Cap on each non-pre-opened facility's LP1' cost; copies end up within twice this. */
inline Rational cheap_cap(Kind kind, const SparseParams& p) {
    if (kind == Kind::Knapsack) return p.rho * p.U;
    return p.rho * (1 + p.delta) * p.U / 2;
}

/** Keeps one S0 facility per location. */
inline std::vector<int> dedupe_s0(const MetricInstance& m, std::vector<int> S0) {
    std::sort(S0.begin(), S0.end());
    S0.erase(std::unique(S0.begin(), S0.end()), S0.end());
    std::vector<int> out;
    for (int o : S0) {
        bool dup = false;
        for (int p : out) dup = dup || is_zero(m.d(m.facility_point(o), m.facility_point(p)));
        if (!dup) out.push_back(o);
    }
    return out;
}

/**
 * Solves LP1' for the guess and builds the LP_iter input. Facilities collocated
 * with S0 but not in it are dropped; S0 facilities split by sorted increments
 * (keeping a clientless residual so their copies sum to one), the rest by the
 * cost-bounded split. Returns nullopt when LP1' is infeasible.
 */
inline std::optional<SparseCandidate> build_candidate(const GkmInstance& g, Kind kind, SparseSpec spec,
                                                      const SparseParams& params) {
    const MetricInstance& M = g.metric;
    int nf = g.nf(), nc = g.nc();
    spec.S0 = dedupe_s0(M, spec.S0);
    if (spec.removed.empty()) spec.removed.assign(nc, 0);
    if (static_cast<int>(spec.R.size()) != nc) throw std::invalid_argument("R needs one entry per client");
    SparseCandidate cand;
    cand.kind = kind;
    cand.params = params;
    cand.cheapCap = cheap_cap(kind, params);
    const Rational& T = cand.cheapCap;

    std::vector<char> inS0(nf, 0), dropped(nf, 0);
    for (int o : spec.S0) inS0[o] = 1;
    for (int i = 0; i < nf; ++i)
        for (int o : spec.S0)
            if (!inS0[i] && is_zero(M.d(M.facility_point(i), M.facility_point(o)))) dropped[i] = 1;

    Lp1Options opt;
    opt.clientActive.assign(nc, 0);
    opt.preopened = inS0;
    opt.allowed.assign(nf, std::vector<char>(nc, 0));
    int active = 0;
    for (int j = 0; j < nc; ++j) {
        if (spec.removed[j]) continue;
        opt.clientActive[j] = 1;
        ++active;
        for (int i = 0; i < nf; ++i) {
            if (dropped[i]) continue;
            const Rational& d = M.fc(i, j);
            opt.allowed[i][j] = d <= spec.R[j] && (inS0[i] || d <= T);
        }
    }
    opt.costCap = T;
    std::vector<Rational> coverage;
    if (kind == Kind::Knapsack) coverage = {Rational(active)};
    else coverage = {Rational(spec.mPrime.value_or(0))};
    opt.coverage = coverage;
    auto sol = solve_lp1(g, opt);
    if (!sol) return std::nullopt;
    cand.lp1Value = sol->value;

    LpIterInput& in = cand.input;
    in.metric = share_metric(M);
    in.b = g.b;
    in.S0origins = spec.S0;
    std::vector<int> stateOf(nc, -1);
    for (int j = 0; j < nc; ++j) {
        if (spec.removed[j]) continue;
        stateOf[j] = static_cast<int>(in.clients.size());
        in.clients.push_back({M.client_point(j), j, g.clientIds[j], g.a[j], false});
        cand.clientOrigin.push_back(j);
        cand.extra.R.push_back(spec.R[j]);
    }
    in.fballs.assign(in.clients.size(), {});
    std::vector<std::vector<int>> copiesOf(nf);
    for (int i = 0; i < nf; ++i) {
        if (dropped[i]) continue;
        std::vector<Rational> x(nc, Rational(0)), dist(nc, Rational(0));
        for (int j = 0; j < nc; ++j) {
            x[j] = sol->x[i][j];
            dist[j] = M.fc(i, j);
        }
        auto copies = inS0[i] ? split_sorted(x, sol->y[i], true) : split_cost_bounded(x, sol->y[i], dist);
        std::vector<Rational> w;
        for (int r = 0; r < g.r1(); ++r) w.push_back(g.W[r][i]);
        for (std::size_t k = 0; k < copies.size(); ++k) {
            int idx = static_cast<int>(in.facilities.size());
            in.facilities.push_back({M.facility_point(i), i, g.facilityIds[i] + "#" + std::to_string(k), w});
            in.y.push_back(copies[k].y);
            copiesOf[i].push_back(idx);
            if (inS0[i]) in.S0.push_back(idx);
            for (int j : copies[k].clients) in.fballs[stateOf[j]].push_back(idx);
        }
    }
    // y = 1 on S0 and the residual copy make this impossible; kept as a guard
    for (int o : spec.S0)
        if (copiesOf[o].empty()) throw InvariantBreach("pre-opened facility " + g.facilityIds[o] + " lost its copies");
    for (int o : spec.S0) {
        int idx = static_cast<int>(in.clients.size());
        in.clients.push_back({M.facility_point(o), -1, "dummy:" + g.facilityIds[o],
                              std::vector<Rational>(g.r2(), Rational(1)), true});
        in.fballs.push_back(copiesOf[o]);
        in.C0.push_back(idx);
        cand.clientOrigin.push_back(-1);
        cand.extra.R.push_back(Rational(0));
    }
    in.c = coverage;
    for (auto& v : in.c) v += Rational(static_cast<long long>(spec.S0.size()));
    cand.extra.kind = kind;
    cand.extra.rho = params.rho;
    cand.extra.delta = params.delta;
    cand.extra.U = params.U;
    cand.spec = std::move(spec);
    return cand;
}

inline LpIterState instantiate(const SparseCandidate& cand, const Discretization& disc) {
    LpIterState st = build_lp_iter(cand.input, disc);
    st.extra = cand.extra;
    return st;
}

/** Checks both invariant families; empty string when everything passes. */
inline std::string sparse_violations(const LpIterState& st, Kind kind) {
    auto basic = check_basic_invariants(st);
    auto extra = check_extra_invariants(st, kind);
    std::string out;
    if (!basic.ok()) out += "basic: " + basic.summary();
    if (!extra.ok()) out += "extra: " + extra.summary();
    return out;
}

struct SubInstance {
    std::string parent;
    std::shared_ptr<const SparseCandidate> candidate;
    LpIterState state;

    const std::vector<int>& S0() const { return candidate->spec.S0; }
    std::vector<int> removed_clients() const {
        std::vector<int> out;
        for (std::size_t j = 0; j < candidate->spec.removed.size(); ++j)
            if (candidate->spec.removed[j]) out.push_back(static_cast<int>(j));
        return out;
    }
};

/** Connection cost carried by facility i under an assignment, skipping removed clients. */
inline Rational facility_load(const InstanceBase& in, const std::vector<int>& assignment, int i,
                              const std::vector<char>& removed) {
    Rational s(0);
    for (int j = 0; j < in.nc(); ++j)
        if (assignment[j] == i && (removed.empty() || !removed[j])) s += in.metric.fc(i, j);
    return s;
}

/** Finite grid {d(p,q) : q} plus the diameter, ascending, from which radius caps are drawn. */
inline std::vector<Rational> radius_grid(const MetricInstance& m, int p) {
    std::vector<Rational> g{m.diameter(), Rational(0)};
    for (int q = 0; q < m.size(); ++q) g.push_back(m.d(p, q));
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

enum class PreprocessMode { Enumerative, Oracle };

inline PreprocessMode parse_mode(const std::string& s) {
    if (s == "oracle") return PreprocessMode::Oracle;
    if (s == "enumerative") return PreprocessMode::Enumerative;
    throw std::invalid_argument("unknown mode '" + s + "'");
}

/** Knobs shared by both end-to-end solvers. */
struct PipelineOptions {
    std::optional<Rational> tau;         // defaults per problem
    PreprocessMode mode = PreprocessMode::Oracle;
    std::optional<Rational> rho, delta;  // default to eps'^2 and eps'
    const OracleResult* oracle = nullptr; // reused instead of a fresh brute force
    OracleLimits limits;
    RoundingConfig rounding;              // tau and gapC are filled in by the solver
    int maxS0 = 3;                        // enumerative mode cap on |S0|
};

inline Rational eps_prime(const Rational& eps) { return eps / 8; }

/**
 * Geometric U grid from `lower` with ratio 1 + eps', each point rounded up to
 * a multiple of 10^-6 to keep LP coefficients short. A zero lower end puts 0
 * first and continues from 1, the smallest nonzero distance.
 */
inline std::vector<Rational> u_grid(const Rational& lower, const Rational& upper, const Rational& epsPrime) {
    std::vector<Rational> out;
    long double base = to_double(lower);
    if (lower.sign() <= 0) {
        out.push_back(Rational(0));
        base = 1;
    }
    long double ratio = 1 + static_cast<long double>(to_double(epsPrime));
    long double up = to_double(upper);
    for (long double v = base;; v *= ratio) {
        Rational q(Integer(static_cast<long long>(std::ceil(v * 1e6L))), Integer(1000000));
        if (!out.empty() && q <= out.back()) continue;
        out.push_back(q);
        if (v >= up) break;
    }
    return out;
}

/** First grid point at or above `opt`. */
inline Rational u_at_least(const std::vector<Rational>& grid, const Rational& opt) {
    for (const auto& u : grid)
        if (u >= opt) return u;
    throw std::invalid_argument("U grid does not reach the optimum");
}

/** Per-run outcome of pseudo-approximation plus post-processing on one sub-instance. */
struct PipelineRecord {
    Rational U{0};
    std::vector<int> S0;
    int removedClients = 0;
    Rational lpIterValue{0};      // Opt(LP_iter) at the pseudo-approximation output
    Rational fractionalCost{0};   // assembled fractional cost (true distances)
    int fractional = 0;
    int solves = 0;
    std::vector<RerouteCertificate> certificates;
    std::vector<ChainDecomposition> decompositions;
    Solution solution;
};

} // namespace gkm
