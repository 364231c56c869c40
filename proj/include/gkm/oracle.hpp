#pragma once

// Brute-force ground truth. Deliberately naive: every feasible open set is
// enumerated and the best service set for it is computed exactly.

#include "gkm/lpiter.hpp"
#include "gkm/solution.hpp"

#include <functional>

namespace gkm {

struct OracleLimits {
    int maxFacilities = 15;
    int maxClientsForSubsets = 12; // general coverage rows need client-subset enumeration
};

struct OracleResult {
    Rational optCost{0};
    std::vector<int> optOpenSet;
    std::vector<int> optServed;
    long long enumerationCount = 0;
    Solution solution;
};

class OracleLimitError : public std::runtime_error {
public:
    explicit OracleLimitError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline std::vector<int> mask_members(std::uint32_t mask, int n) {
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (mask >> i & 1u) out.push_back(i);
    return out;
}

/**
 * Cheapest client subset meeting the coverage rows, given per-client distances
 * to the open set. Uniform single-row coverage takes the closest clients;
 * anything else enumerates subsets.
 */
inline std::optional<std::pair<Rational, std::vector<int>>> cheapest_cover(const GkmInstance& g,
                                                                           const std::vector<Rational>& dist,
                                                                           const OracleLimits& lim) {
    int nc = g.nc();
    bool uniform = g.r2() == 1;
    for (int j = 0; uniform && j < nc; ++j) uniform = g.a[j][0] == g.a[0][0];
    if (g.r2() == 0) return std::make_pair(Rational(0), std::vector<int>{});
    if (uniform) {
        const Rational& a = g.a[0][0];
        Rational need = g.c[0];
        int count = 0;
        if (need.sign() > 0) {
            if (is_zero(a)) return std::nullopt;
            count = static_cast<int>(ceil_int(need / a));
        }
        if (count > nc) return std::nullopt;
        std::vector<int> order(nc);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int p, int q) { return dist[p] < dist[q]; });
        std::vector<int> served(order.begin(), order.begin() + count);
        Rational cost(0);
        for (int j : served) cost += dist[j];
        std::sort(served.begin(), served.end());
        return std::make_pair(cost, served);
    }
    if (nc > lim.maxClientsForSubsets)
        throw OracleLimitError("general coverage needs |C| <= " + std::to_string(lim.maxClientsForSubsets));
    std::optional<std::pair<Rational, std::vector<int>>> best;
    for (std::uint32_t mask = 0; mask < (1u << nc); ++mask) {
        bool ok = true;
        for (int r = 0; r < g.r2() && ok; ++r) {
            Rational s(0);
            for (int j = 0; j < nc; ++j)
                if (mask >> j & 1u) s += g.a[j][r];
            ok = s >= g.c[r];
        }
        if (!ok) continue;
        Rational cost(0);
        for (int j = 0; j < nc; ++j)
            if (mask >> j & 1u) cost += dist[j];
        auto members = mask_members(mask, nc);
        if (!best || cost < best->first || (cost == best->first && members < best->second))
            best = std::make_pair(cost, members);
    }
    return best;
}

} // namespace detail

/** Exact optimum over all open sets allowed by the knapsack rows. */
inline OracleResult brute_force(const GkmInstance& g, const OracleLimits& lim = {}) {
    int nf = g.nf(), nc = g.nc();
    if (nf > lim.maxFacilities)
        throw OracleLimitError("brute force needs |F| <= " + std::to_string(lim.maxFacilities));
    OracleResult res;
    bool found = false;
    for (std::uint32_t mask = 0; mask < (1u << nf); ++mask) {
        auto open = detail::mask_members(mask, nf);
        bool ok = true;
        for (int r = 0; r < g.r1() && ok; ++r) {
            Rational w(0);
            for (int i : open) w += g.W[r][i];
            ok = w <= g.b[r];
        }
        if (!ok) continue;
        std::vector<Rational> dist(nc);
        std::vector<int> near(nc, -1);
        bool reach = !open.empty();
        for (int j = 0; j < nc && reach; ++j) {
            near[j] = detail::nearest(g, open, j);
            dist[j] = g.metric.fc(near[j], j);
        }
        std::optional<std::pair<Rational, std::vector<int>>> cover;
        if (reach) {
            cover = detail::cheapest_cover(g, dist, lim);
        } else {
            // nothing open: only feasible when no coverage is demanded
            bool none = std::all_of(g.c.begin(), g.c.end(), [](const Rational& v) { return v.sign() <= 0; });
            if (none) cover = std::make_pair(Rational(0), std::vector<int>{});
        }
        if (!cover) continue;
        ++res.enumerationCount;
        if (found && !(cover->first < res.optCost)) continue;
        found = true;
        res.optCost = cover->first;
        res.optOpenSet = open;
        res.optServed = cover->second;
    }
    if (!found) throw InfeasibleError("no feasible open set");
    res.solution.open = res.optOpenSet;
    res.solution.served = res.optServed;
    res.solution.assignment.assign(nc, -1);
    for (int j : res.optServed) res.solution.assignment[j] = detail::nearest(g, res.optOpenSet, j);
    res.solution.cost = res.optCost;
    return res;
}

inline OracleResult brute_force(const AnyInstance& in, const OracleLimits& lim = {}) { return brute_force(to_gkm(in), lim); }

/** Opt(LP2) over the extracted balls, with true distances. */
inline Rational lp2_optimum(const LpIterInput& in) {
    int nf = static_cast<int>(in.facilities.size());
    LinearProgram lp(nf);
    int r2 = static_cast<int>(in.c.size());
    std::vector<std::vector<Rational>> cover(r2, std::vector<Rational>(nf, Rational(0)));
    for (std::size_t j = 0; j < in.clients.size(); ++j) {
        std::vector<std::pair<int, Rational>> row;
        for (int i : in.fballs[j]) {
            lp.objective[i] += in.metric->d(in.clients[j].point, in.facilities[i].point);
            row.emplace_back(i, Rational(1));
            for (int r = 0; r < r2; ++r) cover[r][i] += in.clients[j].a[r];
        }
        if (!row.empty()) lp.add_row(row, Relation::LessEq, Rational(1), ConstraintLabel::cpart(static_cast<int>(j)));
    }
    for (std::size_t r = 0; r < in.b.size(); ++r) {
        std::vector<std::pair<int, Rational>> row;
        for (int i = 0; i < nf; ++i) row.emplace_back(i, in.facilities[i].weight[r]);
        lp.add_row(row, Relation::LessEq, in.b[r], ConstraintLabel::knapsack(static_cast<int>(r)));
    }
    for (int r = 0; r < r2; ++r) {
        std::vector<std::pair<int, Rational>> row;
        for (int i = 0; i < nf; ++i) row.emplace_back(i, cover[r][i]);
        lp.add_row(row, Relation::GreaterEq, in.c[r], ConstraintLabel::coverage(r));
    }
    SolveOptions so;
    so.verifyBasis = false;
    return require_vertex(lp, "LP2", so).objectiveValue;
}

// ---------------------------------------------------------------------------

struct RatioStats {
    int trials = 0;
    double mean = 0, max = 0, stddev = 0;
    std::vector<double> ratios;
};

class SeedFailure : public std::runtime_error {
public:
    SeedFailure(std::uint64_t s, const std::string& what)
        : std::runtime_error("seed " + std::to_string(s) + ": " + what), seed(s) {}
    std::uint64_t seed;
};

/** cost / OPT, with 0/0 read as 1. */
inline double cost_ratio(const Rational& cost, const Rational& opt) {
    if (is_zero(opt)) return is_zero(cost) ? 1.0 : std::numeric_limits<double>::infinity();
    return to_double(cost / opt);
}

using CostSolver = std::function<Rational(std::uint64_t seed)>;

/** Runs `solver` once per seed and summarizes cost / opt. */
inline RatioStats monte_carlo_ratio(const CostSolver& solver, const Rational& opt, const std::vector<std::uint64_t>& seeds) {
    RatioStats st;
    for (auto s : seeds) {
        Rational cost;
        try {
            cost = solver(s);
        } catch (const std::exception& e) {
            throw SeedFailure(s, e.what());
        }
        st.ratios.push_back(cost_ratio(cost, opt));
    }
    st.trials = static_cast<int>(st.ratios.size());
    if (st.trials == 0) return st;
    double sum = 0;
    for (double r : st.ratios) {
        sum += r;
        st.max = std::max(st.max, r);
    }
    st.mean = sum / st.trials;
    double var = 0;
    for (double r : st.ratios) var += (r - st.mean) * (r - st.mean);
    st.stddev = std::sqrt(var / st.trials);
    return st;
}

inline RatioStats monte_carlo_ratio(const std::function<Rational(const AnyInstance&, std::uint64_t)>& solver,
                                    const AnyInstance& instance, const std::vector<std::uint64_t>& seeds,
                                    const OracleLimits& lim = {}) {
    Rational opt = brute_force(instance, lim).optCost;
    return monte_carlo_ratio([&](std::uint64_t s) { return solver(instance, s); }, opt, seeds);
}

inline nlohmann::json oracle_json(const InstanceBase& in, const OracleResult& r) {
    nlohmann::json open = nlohmann::json::array(), served = nlohmann::json::array();
    for (int i : r.optOpenSet) open.push_back(in.facilityIds[i]);
    for (int j : r.optServed) served.push_back(in.clientIds[j]);
    Rational scaled = r.optCost * in.metric.scale;
    return {{"optCost", to_string(scaled)},
            {"optCostDecimal", to_decimal(scaled)},
            {"optOpenSet", open},
            {"optServed", served},
            {"enumerationCount", r.enumerationCount}};
}

} // namespace gkm
