#pragma once

#include "gkm/knapsack.hpp"

namespace gkm {

inline Rational outliers_default_tau() { return Rational(12074, 10000); }

// ---------------------------------------------------------------------------
// pre-processing

namespace detail {

/** One violated sparsity test: clients with R_j >= t within delta t/(4+3 delta) of point p. */
struct SparseBreach {
    int point = -1;
    Rational t;
    std::vector<int> members;
};

inline std::optional<SparseBreach> outliers_breach(const InstanceBase& in, const std::vector<char>& removed,
                                                   const std::vector<Rational>& R, const SparseParams& p) {
    const MetricInstance& M = in.metric;
    Rational factor = p.rho * (1 + Rational(3, 4) * p.delta) / (1 - p.delta / 4) * p.U;
    Rational shrink = p.delta / (4 + 3 * p.delta);
    std::vector<int> active;
    for (int j = 0; j < in.nc(); ++j)
        if (!removed[j]) active.push_back(j);
    std::vector<int> pts;
    for (int i = 0; i < in.nf(); ++i) pts.push_back(M.facility_point(i));
    for (int j : active) pts.push_back(M.client_point(j));
    for (int pt : pts) {
        std::vector<Rational> ts;
        for (int j : active) {
            ts.push_back(M.d(pt, M.client_point(j)) / shrink);
            ts.push_back(R[j]);
        }
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        for (const auto& t : ts) {
            if (t.sign() <= 0) continue;
            SparseBreach b{pt, t, {}};
            for (int j : active)
                if (R[j] >= t && M.d(pt, M.client_point(j)) <= shrink * t) b.members.push_back(j);
            if (Rational(static_cast<long long>(b.members.size())) * t > factor) return b;
        }
    }
    return std::nullopt;
}

/** Largest value of j's radius grid strictly below t. */
inline Rational radius_below(const InstanceBase& in, int j, const Rational& t) {
    Rational best(0);
    for (const auto& r : radius_grid(in.metric, in.metric.client_point(j)))
        if (r < t) best = r;
    return best;
}

} // namespace detail

/**
 * Oracle-mode guess for outliers. S0 is the optimum's expensive facilities and
 * their served clients leave; R_j = d(j, S*). A failing sparsity test moves the
 * facility of a served member into S0, or lowers an unserved member's radius
 * below the test's t.
 */
inline SparseSpec outliers_oracle_spec(const OutliersInstance& in, const OracleResult& opt, const SparseParams& p) {
    const auto& sigma = opt.solution.assignment;
    Rational T = cheap_cap(Kind::Outliers, p);
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
    for (int j = 0; j < in.nc(); ++j)
        spec.R[j] = in.metric.fc(detail::nearest(in, opt.optOpenSet, j), j);
    while (auto b = detail::outliers_breach(in, spec.removed, spec.R, p)) {
        int served = -1;
        for (int j : b->members)
            if (sigma[j] >= 0) {
                served = j;
                break;
            }
        if (served >= 0) open_up(sigma[served]);
        else
            for (int j : b->members) spec.R[j] = detail::radius_below(in, j, b->t);
    }
    for (int i = 0; i < in.nf(); ++i)
        if (pre[i]) spec.S0.push_back(i);
    int gone = 0;
    for (int j : opt.optServed) gone += spec.removed[j];
    spec.mPrime = in.m - gone;
    return spec;
}

/** Enumerative guesses: S0, then theta, then m' over {m - |C \ C'|, ..., m}; radii by greedy lowering. */
inline std::vector<SparseSpec> outliers_enumerative_specs(const OutliersInstance& in, const SparseParams& p, int maxS0) {
    std::vector<SparseSpec> out;
    int cap = std::min(detail::s0_cap(p, maxS0), in.k);
    for (const auto& S0 : detail::subsets_up_to(in.nf(), cap)) {
        std::vector<Rational> dS0(in.nc());
        std::vector<std::optional<Rational>> thetas{std::nullopt};
        for (int j = 0; j < in.nc() && !S0.empty(); ++j) {
            dS0[j] = in.metric.fc(detail::nearest(in, S0, j), j);
            thetas.emplace_back(dS0[j]);
        }
        std::sort(thetas.begin() + 1, thetas.end());
        thetas.erase(std::unique(thetas.begin() + 1, thetas.end()), thetas.end());
        for (const auto& theta : thetas) {
            SparseSpec base;
            base.S0 = S0;
            base.removed.assign(in.nc(), 0);
            int gone = 0;
            for (int j = 0; j < in.nc() && theta; ++j) gone += base.removed[j] = dS0[j] <= *theta;
            base.R.assign(in.nc(), in.metric.diameter());
            while (auto b = detail::outliers_breach(in, base.removed, base.R, p))
                for (int j : b->members) base.R[j] = detail::radius_below(in, j, b->t);
            for (int mp = std::max(0, in.m - gone); mp <= std::min(in.m, in.nc() - gone); ++mp) {
                SparseSpec spec = base;
                spec.mPrime = mp;
                out.push_back(std::move(spec));
            }
        }
    }
    return out;
}

inline std::vector<SubInstance> preprocess_outliers(const OutliersInstance& in, const SparseParams& p,
                                                    PreprocessMode mode, const Rational& tau, std::uint64_t seed,
                                                    const OracleResult* oracle = nullptr, int maxS0 = 3) {
    if (!(p.rho > 0 && p.rho < Rational(1, 2) && p.delta > 0 && p.delta < Rational(1, 2)) || p.U.sign() < 0)
        throw std::invalid_argument("need 0 < rho, delta < 1/2 and U >= 0");
    GkmInstance g = to_gkm(in);
    std::vector<SparseSpec> specs;
    std::optional<OracleResult> own;
    if (mode == PreprocessMode::Oracle) {
        if (!oracle) oracle = &own.emplace(brute_force(g));
        specs.push_back(outliers_oracle_spec(in, *oracle, p));
    } else {
        specs = outliers_enumerative_specs(in, p, maxS0);
    }
    Discretization disc = discretize(in.metric, tau, seed);
    std::vector<SubInstance> out;
    for (auto& spec : specs) {
        auto cand = build_candidate(g, Kind::Outliers, std::move(spec), p);
        if (!cand) {
            if (mode == PreprocessMode::Oracle) throw InvariantBreach("oracle-mode LP1' is infeasible");
            continue;
        }
        SubInstance sub;
        sub.parent = in.id;
        sub.candidate = std::make_shared<const SparseCandidate>(std::move(*cand));
        sub.state = instantiate(*sub.candidate, disc);
        auto why = sparse_violations(sub.state, Kind::Outliers);
        if (!why.empty()) {
            if (mode == PreprocessMode::Oracle) throw InvariantBreach("oracle-mode sub-instance fails: " + why);
            continue;
        }
        out.push_back(std::move(sub));
    }
    return out;
}

// ---------------------------------------------------------------------------
// ComputePartial

struct PartialSolution {
    std::vector<int> S;        // state facilities, none of them in S0
    std::vector<int> Sbar;
    std::vector<int> served;   // C', state clients
    std::vector<int> covered;
    std::vector<int> Cbar;
    int kUsed = 0;
    int kBefore = 0, mBefore = 0;
    bool coveredProofBound = true; // d(j, Sbar) <= (1 + 2 tau^{c-1}) L(l_j) on C_covered
    RerouteCertificate certificate;  // on the pre-update state, beta = 3 + 2 tau^-c, against S plus S0
    std::vector<std::string> events;
};

namespace detail {

inline bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

inline int as_int(const Rational& q) {
    if (!is_integer(q)) throw InvariantBreach("k or m became fractional: " + to_string(q));
    return static_cast<int>(numer(q).convert_to<long long>());
}

/** Whether y (facility indexed) satisfies every row and bound of the state's LP. */
inline std::string infeasibility(const LpIterState& st, const std::vector<Rational>& y) {
    EmittedLp e = emit_lp(st);
    for (std::size_t v = 0; v < e.facilityOfVar.size(); ++v) {
        const Rational& val = y[e.facilityOfVar[v]];
        if (val < e.lp.lo[v] || val > e.lp.hi[v]) return "bound on " + e.lp.var_name(static_cast<int>(v));
    }
    for (const auto& row : e.lp.rows) {
        Rational s(0);
        for (const auto& [v, c] : row.coef) s += c * y[e.facilityOfVar[v]];
        bool ok = row.rel == Relation::LessEq ? s <= row.rhs : row.rel == Relation::Equal ? s == row.rhs : s >= row.rhs;
        if (!ok) return "row " + row.label.str() + " at " + to_string(s) + " vs " + to_string(row.rhs);
    }
    return {};
}

} // namespace detail

/**
 * One partial solution: an integral facility for each surviving C-bar client,
 * the integral facilities, and the clients they are guaranteed to serve. The
 * state loses S, F(C-bar) and C', and k and m drop accordingly.
 */
inline PartialSolution compute_partial(LpIterState& st, const ExtremePoint& ep, const RoundingConfig& cfg) {
    PartialSolution out;
    out.kBefore = detail::as_int(st.b.at(0));
    out.mBefore = detail::as_int(st.c.at(0));
    auto starFrac = fractional_star(st, ep);
    bool nonDummy = false;
    for (int j : starFrac) nonDummy = nonDummy || !detail::contains(st.C0, j);
    if (!nonDummy) throw std::invalid_argument("compute_partial needs a fractional C* client outside C0");
    const int c = cfg.gapC;
    auto cname = [&](int j) { return st.clients[j].id; };

    std::vector<int> Cbar;
    for (int j : starFrac) {
        bool touches = false;
        for (int i : st.F[j]) touches = touches || st.inS0[i];
        if (!touches) Cbar.push_back(j);
    }
    std::vector<int> order = Cbar;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return st.level[a] < st.level[b]; });
    std::vector<char> covered(st.nc(), 0);
    std::vector<int> processed;
    auto inCbar = [&](int j) { return detail::contains(Cbar, j); };
    for (int jb : order) {
        if (!inCbar(jb)) continue;
        processed.push_back(jb);
        std::erase_if(Cbar, [&](int j) {
            bool gone = j != jb && intersects(st.F[j], st.F[jb]);
            if (gone) out.events.push_back("evict " + cname(j) + " meets " + cname(jb));
            return gone;
        });
        for (;;) {
            int jp = -1, other = -1;
            for (int q : st.clients_with(ClientTag::Part)) {
                if (covered[q] || !intersects(st.F[q], st.F[jb])) continue;
                for (int j : Cbar)
                    if (j != jb && intersects(st.F[q], st.F[j])) {
                        other = j;
                        break;
                    }
                if (other >= 0) {
                    jp = q;
                    break;
                }
            }
            if (jp < 0) break;
            if (st.level[jp] <= st.level[jb] - c) {
                std::erase(Cbar, other);
                out.events.push_back("evict " + cname(other) + " via " + cname(jp));
            } else {
                covered[jp] = 1;
                out.covered.push_back(jp);
                out.events.push_back("cover " + cname(jp));
            }
        }
    }
    for (int j : processed)
        if (!inCbar(j)) throw InvariantBreach("client " + cname(j) + " left C-bar after the loop reached it");
    for (std::size_t p = 0; p < Cbar.size(); ++p)
        for (std::size_t q = p + 1; q < Cbar.size(); ++q)
            if (intersects(st.F[Cbar[p]], st.F[Cbar[q]])) throw InvariantBreach("C-bar balls are not disjoint");
    auto parts = st.clients_with(ClientTag::Part);
    for (int q : parts) {
        if (covered[q]) continue;
        int meets = 0;
        for (int j : Cbar) meets += intersects(st.F[q], st.F[j]);
        if (meets > 1) throw InvariantBreach("C_part client " + cname(q) + " meets " + std::to_string(meets) + " C-bar balls");
    }

    std::vector<int> w(st.nf(), 0);
    for (int q : parts)
        if (!covered[q])
            for (int i : st.F[q]) ++w[i];
    Rational weighted(0);
    for (int j : Cbar) {
        int best = -1;
        for (int i : st.F[j]) {
            if (best < 0 || w[i] > w[best]) best = i;
            weighted += w[i] * ep.y[i];
        }
        if (best < 0) throw InvariantBreach("C-bar client " + cname(j) + " has an empty ball");
        out.Sbar.push_back(best);
    }
    std::sort(out.Sbar.begin(), out.Sbar.end());
    std::vector<int> partServed;
    for (int q : parts)
        if (intersects(st.F[q], out.Sbar)) partServed.push_back(q);
    if (Rational(static_cast<long long>(partServed.size())) < weighted)
        throw InvariantBreach("greedy choice serves " + std::to_string(partServed.size()) + " < " + to_string(weighted));

    std::vector<int> S = out.Sbar;
    for (int i : integral_facilities(st, ep)) S.push_back(i);
    S = detail::normalized_set(S);
    std::erase_if(S, [&](int i) { return st.inS0[i] != 0; });
    out.S = S;
    out.kUsed = static_cast<int>(S.size());

    std::vector<int> served = partServed;
    served.insert(served.end(), out.covered.begin(), out.covered.end());
    for (int j : st.clients_with(ClientTag::Full)) served.push_back(j);
    for (int j : st.clients_with(ClientTag::Star))
        if (!detail::contains(st.C0, j)) served.push_back(j);
    out.served = detail::normalized_set(served);
    out.Cbar = Cbar;

    // bounds on the pre-update state
    std::vector<int> withS0 = S;
    for (int i : st.alive_facilities())
        if (st.inS0[i]) withS0.push_back(i);
    out.certificate = certify_reroute_bound(st, detail::normalized_set(withS0), beta_outliers(st.disc.tau(), c));
    if (!out.certificate.ok) throw InvariantBreach("rerouting bound in ComputePartial: " + out.certificate.witness);
    Rational tc = rpow(st.disc.tau(), c);
    for (int q : out.covered) {
        Rational d;
        for (std::size_t t = 0; t < out.Sbar.size(); ++t)
            if (t == 0 || st.d(q, out.Sbar[t]) < d) d = st.d(q, out.Sbar[t]);
        if (d > (1 + 2 * tc) * st.Lj(q)) throw InvariantBreach("covered client " + cname(q) + " too far from S-bar");
        if (d > (1 + 2 * tc / st.disc.tau()) * st.Lj(q)) out.coveredProofBound = false;
    }

    std::vector<Rational> ybar = ep.y;
    std::vector<int> drop = S;
    for (int j : Cbar) drop.insert(drop.end(), st.F[j].begin(), st.F[j].end());
    for (int i : detail::normalized_set(drop)) {
        st.delete_facility(i);
        ybar[i] = 0;
    }
    for (int j : out.served) st.clientAlive[j] = 0;
    st.b[0] -= out.kUsed;
    st.c[0] -= static_cast<long long>(out.served.size());
    auto why = detail::infeasibility(st, ybar);
    if (!why.empty()) throw InvariantBreach("restricted y-bar infeasible after ComputePartial: " + why);
    auto inv = sparse_violations(st, Kind::Outliers);
    if (!inv.empty()) throw InvariantBreach("state after ComputePartial: " + inv);
    return out;
}

// ---------------------------------------------------------------------------
// OutliersPostProcess

struct PostStep {
    enum class Kind { Integral, TwoFractional, Partial } kind = Kind::Integral;
    int kBefore = 0, mBefore = 0;
    std::vector<int> S;      // facilities added by this step (state indices)
    int fractional = 0;
    std::optional<PartialSolution> partial;
    RerouteCertificate certificate;
};

struct OutliersPost {
    std::vector<int> S;      // union over steps, state indices
    std::vector<PostStep> steps;
    RoundingLog log;
    Rational firstObjective{0};
    Rational firstFractionalCost{0};
    int firstFractional = 0;
};

/**
 * Alternates PseudoApproximation and ComputePartial until the vertex is
 * integral or every fractional C* ball belongs to a dummy client; the loop is
 * the recursion unrolled, each round removing at least one client.
 */
inline OutliersPost outliers_postprocess(LpIterState& st, const RoundingConfig& cfg) {
    OutliersPost out;
    for (int round = 0;; ++round) {
        if (round > st.nc() + 1) throw InvariantBreach("post-processing did not terminate");
        PostStep step;
        step.kBefore = detail::as_int(st.b.at(0));
        step.mBefore = detail::as_int(st.c.at(0));
        out.log.lastObjective.reset();
        ExtremePoint ep = pseudo_approximation(st, cfg, out.log);
        auto frac = fractional_facilities(st, ep);
        step.fractional = static_cast<int>(frac.size());
        if (round == 0) {
            out.firstObjective = ep.objectiveValue;
            out.firstFractional = step.fractional;
            out.firstFractionalCost = assemble_fractional_solution(st, ep).cost;
        }
        auto starFrac = fractional_star(st, ep);
        bool dummyOnly = std::all_of(starFrac.begin(), starFrac.end(), [&](int j) { return detail::contains(st.C0, j); });
        if (frac.empty() || dummyOnly) {
            step.S = integral_facilities(st, ep);
            if (!frac.empty()) {
                if (frac.size() > 2)
                    throw InvariantBreach(std::to_string(frac.size()) + " fractional facilities with C*_<1 inside C0");
                auto count = [&](int i) {
                    int n = 0;
                    for (int j : st.clients_with(ClientTag::Part)) n += detail::contains(st.F[j], i);
                    return n;
                };
                int a = frac[0];
                if (frac.size() == 2) {
                    int b = frac[1];
                    if (count(b) > count(a) || (count(b) == count(a) && st.inS0[a] && !st.inS0[b])) std::swap(a, b);
                }
                step.S.push_back(a);
                step.kind = PostStep::Kind::TwoFractional;
            }
            if (static_cast<int>(step.S.size()) > step.kBefore)
                throw InvariantBreach("base case opens " + std::to_string(step.S.size()) + " > k = " +
                                      std::to_string(step.kBefore));
            step.certificate = certify_reroute_bound(st, step.S, Rational(1));
            if (!step.certificate.ok) throw InvariantBreach("rerouting bound in the base case: " + step.certificate.witness);
            out.S.insert(out.S.end(), step.S.begin(), step.S.end());
            out.steps.push_back(std::move(step));
            break;
        }
        step.kind = PostStep::Kind::Partial;
        auto part = compute_partial(st, ep, cfg);
        if (detail::as_int(st.b[0]) != step.kBefore - part.kUsed ||
            detail::as_int(st.c[0]) != step.mBefore - static_cast<int>(part.served.size()))
            throw InvariantBreach("k/m bookkeeping drifted");
        step.S = part.S;
        step.certificate = part.certificate;
        out.S.insert(out.S.end(), part.S.begin(), part.S.end());
        step.partial = std::move(part);
        out.steps.push_back(std::move(step));
    }
    out.S = detail::normalized_set(out.S);
    int kInitial = out.steps.front().kBefore;
    if (static_cast<int>(out.S.size()) > kInitial)
        throw InvariantBreach("post-processing opened " + std::to_string(out.S.size()) + " > k facilities");
    return out;
}

// ---------------------------------------------------------------------------
// end to end

inline Rational outliers_u_lower(const OutliersInstance& in) {
    std::vector<Rational> near;
    for (int j = 0; j < in.nc(); ++j) {
        Rational m;
        for (int i = 0; i < in.nf(); ++i)
            if (i == 0 || in.metric.fc(i, j) < m) m = in.metric.fc(i, j);
        near.push_back(m);
    }
    std::sort(near.begin(), near.end());
    return in.m > 0 ? near[in.m - 1] : Rational(0);
}

inline PipelineRecord run_outliers_pipeline(const OutliersInstance& in, const SubInstance& sub,
                                            const RoundingConfig& cfg) {
    PipelineRecord rec;
    rec.U = sub.candidate->params.U;
    rec.S0 = sub.S0();
    rec.removedClients = static_cast<int>(sub.removed_clients().size());
    LpIterState st = sub.state;
    auto post = outliers_postprocess(st, cfg);
    rec.lpIterValue = post.firstObjective;
    rec.fractional = post.firstFractional;
    rec.fractionalCost = post.firstFractionalCost;
    rec.solves = post.log.solves;
    rec.decompositions = std::move(post.log.decompositions);
    for (const auto& s : post.steps) rec.certificates.push_back(s.certificate);
    std::vector<int> origins = sub.S0();
    for (int i : post.S) origins.push_back(st.facilities[i].origin);
    origins = detail::normalized_set(origins);
    if (static_cast<int>(origins.size()) > in.k)
        throw InvariantBreach("solution opens " + std::to_string(origins.size()) + " > k facilities");
    for (int o : sub.S0())
        if (!std::binary_search(origins.begin(), origins.end(), o))
            throw InvariantBreach("pre-opened facility " + in.facilityIds[o] + " is closed");
    rec.solution = serve_closest(in, origins, in.m);
    return rec;
}

/** k-median with outliers end to end; the U search mirrors solve_knapsack. */
inline EndToEndRun solve_outliers(const OutliersInstance& in, const Rational& eps, std::uint64_t seed,
                                  const PipelineOptions& opt = {}) {
    EndToEndRun run;
    detail::resolve_params(eps, opt, run.rho, run.delta);
    run.tau = opt.tau.value_or(outliers_default_tau());
    if (in.m > in.nc()) throw InfeasibleError("m exceeds the number of clients");
    if (in.m == 0) {
        run.best.assignment.assign(in.nc(), -1);
        run.winner.solution = run.best;
        return run;
    }
    if (in.k == 0) throw InfeasibleError("k = 0 cannot serve m > 0 clients");
    RoundingConfig cfg = opt.rounding;
    cfg.tau = run.tau;
    cfg.gapC = gap_constant(run.tau, eps_prime(eps));
    auto grid = u_grid(outliers_u_lower(in), u_upper(in), eps_prime(eps));
    bool found = false;
    if (opt.mode == PreprocessMode::Oracle) {
        const OracleResult* oracle = opt.oracle;
        if (!oracle) oracle = &run.oracle.emplace(brute_force(to_gkm(in), opt.limits));
        Rational U = u_at_least(grid, oracle->optCost);
        auto subs = preprocess_outliers(in, {run.rho, run.delta, U}, PreprocessMode::Oracle, run.tau, seed, oracle);
        run.subInstances = static_cast<int>(subs.size());
        for (const auto& sub : subs) detail::keep_better(run, run_outliers_pipeline(in, sub, cfg), found);
    } else {
        for (const auto& U : grid) {
            if (found && U >= run.best.cost) break;
            auto subs = preprocess_outliers(in, {run.rho, run.delta, U}, PreprocessMode::Enumerative, run.tau, seed,
                                            nullptr, opt.maxS0);
            run.subInstances += static_cast<int>(subs.size());
            for (const auto& sub : subs) detail::keep_better(run, run_outliers_pipeline(in, sub, cfg), found);
        }
    }
    if (!found) throw InfeasibleError("no sub-instance yields a feasible solution");
    return run;
}

} // namespace gkm
