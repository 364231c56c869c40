#pragma once

#include "gkm/sparse.hpp"

namespace gkm {

inline Rational knapsack_default_tau() { return Rational(1023, 500); }

namespace detail {

inline const Rational& client_distance(const InstanceBase& in, int j, int q) {
    return in.metric.d(in.metric.client_point(j), in.metric.client_point(q));
}

/** |B_C'(j, delta r)| r <= rho U, counting the clients still in C'. */
inline bool knapsack_ball_ok(const InstanceBase& in, const std::vector<char>& removed, int j, const Rational& r,
                             const SparseParams& p) {
    int count = 0;
    for (int q = 0; q < in.nc(); ++q)
        if (!removed[q] && client_distance(in, j, q) <= p.delta * r) ++count;
    return Rational(count) * r <= p.rho * p.U;
}

/** Largest grid radius passing the ball condition; the product is monotone in r. */
inline Rational knapsack_radius(const InstanceBase& in, const std::vector<char>& removed, int j, const SparseParams& p) {
    auto grid = radius_grid(in.metric, in.metric.client_point(j));
    Rational best(0);
    for (const auto& r : grid)
        if (knapsack_ball_ok(in, removed, j, r, p)) best = r;
    return best;
}

inline std::vector<std::vector<int>> subsets_up_to(int n, int cap) {
    std::vector<std::vector<int>> out{{}};
    std::vector<int> cur;
    auto rec = [&](auto&& self, int start, int left) -> void {
        for (int i = start; i < n; ++i) {
            cur.push_back(i);
            out.push_back(cur);
            if (left > 1) self(self, i + 1, left - 1);
            cur.pop_back();
        }
    };
    if (cap > 0) rec(rec, 0, cap);
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
    return out;
}

inline int s0_cap(const SparseParams& p, int maxS0) {
    Integer inv = ceil_int(1 / p.rho);
    return inv < maxS0 ? static_cast<int>(inv.convert_to<long long>()) : maxS0;
}

} // namespace detail

/**
 * Oracle-mode guess: S0 holds the optimum's facilities whose clients cost more
 * than the cheap cap, their clients leave, R_j = d(j, S*); clients whose ball
 * condition still fails move their facility into S0, until nothing fails.
 */
inline SparseSpec knapsack_oracle_spec(const KnapsackInstance& in, const OracleResult& opt, const SparseParams& p) {
    const auto& sigma = opt.solution.assignment;
    Rational T = cheap_cap(Kind::Knapsack, p);
    SparseSpec spec;
    spec.removed.assign(in.nc(), 0);
    spec.R.assign(in.nc(), Rational(0));
    std::vector<char> pre(in.nf(), 0);
    auto open_up = [&](int i) {
        pre[i] = 1;
        for (int j = 0; j < in.nc(); ++j)
            if (sigma[j] == i) spec.removed[j] = 1;
    };
    for (int i : opt.optOpenSet)
        if (facility_load(in, sigma, i, {}) > T) open_up(i);
    for (int j = 0; j < in.nc(); ++j) spec.R[j] = in.metric.fc(sigma[j], j);
    for (bool changed = true; changed;) {
        changed = false;
        for (int j = 0; j < in.nc(); ++j)
            if (!spec.removed[j] && !detail::knapsack_ball_ok(in, spec.removed, j, spec.R[j], p)) {
                open_up(sigma[j]);
                changed = true;
            }
    }
    for (int i = 0; i < in.nf(); ++i)
        if (pre[i]) spec.S0.push_back(i);
    return spec;
}

/** Enumerative guesses: S0 by size, then C \ C' = {j : d(j, S0) <= theta}, then radius caps. */
inline std::vector<SparseSpec> knapsack_enumerative_specs(const KnapsackInstance& in, const SparseParams& p, int maxS0) {
    std::vector<SparseSpec> out;
    for (const auto& S0 : detail::subsets_up_to(in.nf(), detail::s0_cap(p, maxS0))) {
        if (weight_of(in, S0) > in.B) continue;
        std::vector<Rational> dS0(in.nc());
        std::vector<std::optional<Rational>> thetas{std::nullopt};
        for (int j = 0; j < in.nc() && !S0.empty(); ++j) {
            dS0[j] = in.metric.fc(detail::nearest(in, S0, j), j);
            thetas.emplace_back(dS0[j]);
        }
        std::sort(thetas.begin() + 1, thetas.end());
        thetas.erase(std::unique(thetas.begin() + 1, thetas.end()), thetas.end());
        for (const auto& theta : thetas) {
            SparseSpec spec;
            spec.S0 = S0;
            spec.removed.assign(in.nc(), 0);
            for (int j = 0; j < in.nc() && theta; ++j) spec.removed[j] = dS0[j] <= *theta;
            spec.R.assign(in.nc(), Rational(0));
            for (int j = 0; j < in.nc(); ++j)
                if (!spec.removed[j]) spec.R[j] = detail::knapsack_radius(in, spec.removed, j, p);
            out.push_back(std::move(spec));
        }
    }
    return out;
}

/**
 * Sub-instances whose LP_iter passes the Basic and knapsack Extra Invariants.
 * In oracle mode a failing construction is an invariant breach; in enumerative
 * mode failing candidates are skipped.
 */
inline std::vector<SubInstance> preprocess_knapsack(const KnapsackInstance& in, const SparseParams& p,
                                                    PreprocessMode mode, const Rational& tau, std::uint64_t seed,
                                                    const OracleResult* oracle = nullptr, int maxS0 = 3) {
    if (!(p.rho > 0 && p.rho < Rational(1, 2) && p.delta > 0 && p.delta < Rational(1, 2)) || p.U.sign() < 0)
        throw std::invalid_argument("need 0 < rho, delta < 1/2 and U >= 0");
    GkmInstance g = to_gkm(in);
    std::vector<SparseSpec> specs;
    std::optional<OracleResult> own;
    if (mode == PreprocessMode::Oracle) {
        if (!oracle) oracle = &own.emplace(brute_force(g));
        specs.push_back(knapsack_oracle_spec(in, *oracle, p));
    } else {
        specs = knapsack_enumerative_specs(in, p, maxS0);
    }
    Discretization disc = discretize(in.metric, tau, seed);
    std::vector<SubInstance> out;
    for (auto& spec : specs) {
        auto cand = build_candidate(g, Kind::Knapsack, std::move(spec), p);
        if (!cand) {
            if (mode == PreprocessMode::Oracle) throw InvariantBreach("oracle-mode LP1' is infeasible");
            continue;
        }
        SubInstance sub;
        sub.parent = in.id;
        sub.candidate = std::make_shared<const SparseCandidate>(std::move(*cand));
        sub.state = instantiate(*sub.candidate, disc);
        auto why = sparse_violations(sub.state, Kind::Knapsack);
        if (!why.empty()) {
            if (mode == PreprocessMode::Oracle) throw InvariantBreach("oracle-mode sub-instance fails: " + why);
            continue;
        }
        out.push_back(std::move(sub));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct KnapsackPost {
    Solution solution;
    std::vector<int> S;       // opened copies in the sub-instance state
    bool lpIntegral = true;   // the weight LP returned an integral vertex
    Rational weight{0};
    RerouteCertificate certificate;
};

namespace detail {

/** min sum w y over y(F_j) = 1 on C*, y = 1 on F_{=1}; returns the vertex in facility indices. */
inline std::vector<Rational> weight_lp(const LpIterState& st, const ExtremePoint& ep, bool& integral) {
    auto alive = st.alive_facilities();
    std::vector<int> var(st.nf(), -1);
    for (std::size_t v = 0; v < alive.size(); ++v) var[alive[v]] = static_cast<int>(v);
    LinearProgram lp(static_cast<int>(alive.size()));
    for (std::size_t v = 0; v < alive.size(); ++v) {
        lp.objective[v] = st.facilities[alive[v]].weight[0];
        if (ep.y[alive[v]] == 1) lp.lo[v] = 1;
    }
    for (int j : st.clients_with(ClientTag::Star)) {
        std::vector<std::pair<int, Rational>> row;
        for (int i : st.F[j]) row.emplace_back(var[i], Rational(1));
        lp.add_row(row, Relation::Equal, Rational(1), ConstraintLabel::post("star", j));
    }
    auto vtx = require_vertex(lp, "knapsack post-processing LP");
    std::vector<Rational> y(st.nf(), Rational(0));
    for (std::size_t v = 0; v < alive.size(); ++v) y[alive[v]] = vtx.y[v];
    integral = std::all_of(y.begin(), y.end(), [](const Rational& q) { return is_integer(q); });
    if (integral) return y;

    // exhaustive fallback over the fractional facilities
    auto frac = fractional_facilities(st, ep);
    if (frac.size() > 22) throw InvariantBreach("weight LP fractional and too many fractional facilities to enumerate");
    std::optional<std::pair<Rational, std::vector<Rational>>> best;
    for (std::uint32_t mask = 0; mask < (1u << frac.size()); ++mask) {
        std::vector<Rational> z(st.nf(), Rational(0));
        for (int i : alive)
            if (ep.y[i] == 1) z[i] = 1;
        for (std::size_t t = 0; t < frac.size(); ++t)
            if (mask >> t & 1u) z[frac[t]] = 1;
        bool ok = true;
        for (int j : st.clients_with(ClientTag::Star)) ok = ok && mass(st.F[j], z) == 1;
        if (!ok) continue;
        Rational w(0);
        for (int i : alive) w += z[i] * st.facilities[i].weight[0];
        if (!best || w < best->first) best = std::make_pair(w, z);
    }
    if (!best) throw InvariantBreach("no integral setting of the fractional facilities satisfies the C* balls");
    return best->second;
}

} // namespace detail

/**
 * Rounds the pseudo-approximation's output integrally: one open facility per
 * C* ball, every integral facility kept, weight within the budget; then serves
 * every input client from its nearest open facility.
 */
inline KnapsackPost postprocess_knapsack(const KnapsackInstance& in, const SubInstance& sub, const LpIterState& st,
                                         const ExtremePoint& ep) {
    if (!st.clients_with(ClientTag::Part).empty())
        throw InvariantBreach("C_part is not empty after pseudo-approximation");
    KnapsackPost out;
    auto y = detail::weight_lp(st, ep, out.lpIntegral);
    std::vector<int> origins;
    for (int i : st.alive_facilities())
        if (y[i] == 1) {
            out.S.push_back(i);
            out.weight += st.facilities[i].weight[0];
            origins.push_back(st.facilities[i].origin);
        }
    if (out.weight > in.B) throw InvariantBreach("rounded weight " + to_string(out.weight) + " exceeds B");
    for (int o : sub.S0())
        if (std::find(origins.begin(), origins.end(), o) == origins.end())
            throw InvariantBreach("pre-opened facility " + in.facilityIds[o] + " is closed");
    out.certificate = certify_reroute_bound(st, out.S, Rational(1));
    if (!out.certificate.ok) throw InvariantBreach("rerouting bound: " + out.certificate.witness);
    out.solution = connect_all(in, origins);
    if (weight_of(in, out.solution.open) > in.B) throw InvariantBreach("solution exceeds the budget");
    return out;
}

/** Pseudo-approximation plus post-processing on a copy of the sub-instance's state. */
inline PipelineRecord run_knapsack_pipeline(const KnapsackInstance& in, const SubInstance& sub,
                                            const RoundingConfig& cfg) {
    PipelineRecord rec;
    rec.U = sub.candidate->params.U;
    rec.S0 = sub.S0();
    rec.removedClients = static_cast<int>(sub.removed_clients().size());
    LpIterState st = sub.state;
    RoundingLog log;
    ExtremePoint ep = pseudo_approximation(st, cfg, log);
    rec.lpIterValue = ep.objectiveValue;
    rec.fractional = static_cast<int>(fractional_facilities(st, ep).size());
    rec.solves = log.solves;
    rec.decompositions = std::move(log.decompositions);
    rec.fractionalCost = assemble_fractional_solution(st, ep).cost;
    auto post = postprocess_knapsack(in, sub, st, ep);
    rec.certificates.push_back(post.certificate);
    rec.solution = std::move(post.solution);
    return rec;
}

struct EndToEndRun {
    Solution best;
    PipelineRecord winner;
    Rational U{0};
    Rational rho{0}, delta{0}, tau{0};
    int subInstances = 0;
    int runs = 0;
    std::optional<OracleResult> oracle;
};

namespace detail {
inline void resolve_params(const Rational& eps, const PipelineOptions& opt, Rational& rho, Rational& delta) {
    if (!(eps > 0 && eps < Rational(1, 2))) throw std::invalid_argument("epsilon must lie in (0, 1/2)");
    Rational ep = eps_prime(eps);
    rho = opt.rho.value_or(ep * ep);
    delta = opt.delta.value_or(ep);
}

inline void keep_better(EndToEndRun& run, PipelineRecord&& rec, bool& found) {
    ++run.runs;
    if (!found || better(rec.solution, run.best)) {
        run.best = rec.solution;
        run.U = rec.U;
        run.winner = std::move(rec);
        found = true;
    }
}
} // namespace detail

inline Rational knapsack_u_lower(const InstanceBase& in) {
    Rational lo(0);
    for (int j = 0; j < in.nc(); ++j) {
        Rational m;
        for (int i = 0; i < in.nf(); ++i)
            if (i == 0 || in.metric.fc(i, j) < m) m = in.metric.fc(i, j);
        lo = rmax(lo, m);
    }
    return lo;
}

inline Rational u_upper(const InstanceBase& in) {
    Rational s(0);
    for (int j = 0; j < in.nc(); ++j) {
        Rational m(0);
        for (int i = 0; i < in.nf(); ++i) m = rmax(m, in.metric.fc(i, j));
        s += m;
    }
    return s;
}

/**
 * Knapsack median end to end. Oracle mode runs the single U of the grid with
 * OPT <= U <= (1 + eps')OPT; enumerative mode walks the grid upward and stops
 * at the first U above the best cost found, since every later U only weakens
 * the guarantee.
 */
inline EndToEndRun solve_knapsack(const KnapsackInstance& in, const Rational& eps, std::uint64_t seed,
                                  const PipelineOptions& opt = {}) {
    EndToEndRun run;
    detail::resolve_params(eps, opt, run.rho, run.delta);
    run.tau = opt.tau.value_or(knapsack_default_tau());
    RoundingConfig cfg = opt.rounding;
    cfg.tau = run.tau;
    auto grid = u_grid(knapsack_u_lower(in), u_upper(in), eps_prime(eps));
    bool found = false;
    if (opt.mode == PreprocessMode::Oracle) {
        const OracleResult* oracle = opt.oracle;
        if (!oracle) oracle = &run.oracle.emplace(brute_force(to_gkm(in), opt.limits));
        Rational U = u_at_least(grid, oracle->optCost);
        auto subs = preprocess_knapsack(in, {run.rho, run.delta, U}, PreprocessMode::Oracle, run.tau, seed, oracle);
        run.subInstances = static_cast<int>(subs.size());
        for (const auto& sub : subs) detail::keep_better(run, run_knapsack_pipeline(in, sub, cfg), found);
    } else {
        for (const auto& U : grid) {
            if (found && U >= run.best.cost) break;
            auto subs = preprocess_knapsack(in, {run.rho, run.delta, U}, PreprocessMode::Enumerative, run.tau, seed,
                                            nullptr, opt.maxS0);
            run.subInstances += static_cast<int>(subs.size());
            for (const auto& sub : subs) detail::keep_better(run, run_knapsack_pipeline(in, sub, cfg), found);
        }
    }
    if (!found) throw InfeasibleError("no sub-instance yields a feasible solution");
    return run;
}

} // namespace gkm
