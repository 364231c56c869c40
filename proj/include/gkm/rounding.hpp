#pragma once

#include "gkm/chains.hpp"
#include "gkm/lpiter.hpp"

#include <functional>
#include <map>
#include <optional>
#include <vector>

namespace gkm {

enum class EventKind { Solve, DeleteFacility, PartToFull, ShrinkBall, AddToStar, EvictFromStar, ConfigEvict };

inline const char* event_name(EventKind k) {
    switch (k) {
    case EventKind::Solve: return "Solve";
    case EventKind::DeleteFacility: return "DeleteFacility";
    case EventKind::PartToFull: return "PartToFull";
    case EventKind::ShrinkBall: return "ShrinkBall";
    case EventKind::AddToStar: return "AddToStar";
    case EventKind::EvictFromStar: return "EvictFromStar";
    case EventKind::ConfigEvict: return "ConfigEvict";
    }
    return "?";
}

struct RoundingEvent {
    EventKind kind = EventKind::Solve;
    int client = -1;
    int facility = -1;
    int peer = -1; // the j' of a configuration, or the client whose reroute evicted this one
    int levelBefore = 0, levelAfter = 0;
    Rational lpObjective{0};
    int solveIndex = 0;
};

inline nlohmann::json event_json(const RoundingEvent& e) {
    nlohmann::json j{{"kind", event_name(e.kind)}, {"solve", e.solveIndex}, {"lpObjective", to_string(e.lpObjective)}};
    if (e.client >= 0) j["client"] = e.client;
    if (e.facility >= 0) j["facility"] = e.facility;
    if (e.peer >= 0) j["peer"] = e.peer;
    if (e.kind != EventKind::Solve && e.kind != EventKind::DeleteFacility) {
        j["levelBefore"] = e.levelBefore;
        j["levelAfter"] = e.levelAfter;
    }
    return j;
}

struct RoundingConfig {
    Rational tau{1023, 500};
    int gapC = 1;
    long long maxIterGuard = 0; // 0 picks the default from the state size
    bool verifyChains = false;
    std::function<void(const RoundingEvent&)> traceSink;
    /// called after every mutation of the state
    std::function<void(const LpIterState&, const RoundingEvent&)> onEvent;
    /// called with every vertex that IterativeRound returns
    std::function<void(const LpIterState&, const ExtremePoint&)> onRoundVertex;
};

/** Shared across calls so event order and the objective monotonicity check span a whole run. */
struct RoundingLog {
    std::vector<RoundingEvent> events;
    std::vector<ChainDecomposition> decompositions;
    std::optional<Rational> lastObjective;
    int solves = 0;
    long long steps = 0;
};

namespace detail {

inline void emit(const RoundingConfig& cfg, RoundingLog& log, const LpIterState& st, RoundingEvent e) {
    e.solveIndex = log.solves;
    if (log.lastObjective) e.lpObjective = *log.lastObjective;
    log.events.push_back(e);
    if (cfg.traceSink) cfg.traceSink(e);
    if (cfg.onEvent) cfg.onEvent(st, e);
}

inline long long default_guard(const LpIterState& st) {
    int maxLevel = 0;
    for (int l : st.level) maxLevel = std::max(maxLevel, l);
    long long budget = static_cast<long long>(st.nc()) * (maxLevel + 2);
    return 10 * (st.nf() + budget) * std::max(1LL, budget);
}

} // namespace detail

inline Rational alpha_basic(const Rational& tau) {
    Rational t3 = tau * tau * tau;
    return (t3 + 2 * tau * tau + 1) / (t3 - 1);
}

/** alpha for a destination bound beta on C*: max(beta, 1 + (1 + beta)/tau, alpha_basic). */
inline Rational alpha_for(const Rational& beta, const Rational& tau) {
    return rmax(rmax(beta, 1 + (1 + beta) / tau), alpha_basic(tau));
}

inline Rational beta_outliers(const Rational& tau, int c) { return 3 + 2 / rpow(tau, c); }

/** Smallest c >= 1 with 2 tau^{-c} <= eps. */
inline int gap_constant(const Rational& tau, const Rational& eps) {
    int c = 1;
    while (2 / rpow(tau, c) > eps) ++c;
    return c;
}

inline void reroute(LpIterState& st, int j, const RoundingConfig& cfg, RoundingLog& log) {
    if (!st.clientAlive[j] || st.tag[j] != ClientTag::Full)
        throw std::invalid_argument("reroute needs a C_full client, got " + std::to_string(j));
    std::vector<int> nbrs;
    for (int jp : st.clients_with(ClientTag::Star))
        if (intersects(st.F[j], st.F[jp])) nbrs.push_back(jp);
    for (int jp : nbrs)
        if (st.level[j] > st.level[jp] - 1) return;
    // the admission and its evictions form one step; events are reported once the step is complete
    st.tag[j] = ClientTag::Star;
    std::vector<int> evicted;
    for (int jp : nbrs)
        if (st.level[jp] >= st.level[j] + 2) {
            st.tag[jp] = ClientTag::Full;
            evicted.push_back(jp);
        }
    detail::emit(cfg, log, st, {EventKind::AddToStar, j, -1, -1, st.level[j], st.level[j]});
    for (int jp : evicted) detail::emit(cfg, log, st, {EventKind::EvictFromStar, jp, -1, j, st.level[jp], st.level[jp]});
}

/**
 * IterativeRound. Zero facilities are deleted together: the restricted vertex
 * stays an optimal vertex of the smaller LP, so the next branch is tested on it
 * without a re-solve.
 */
inline ExtremePoint iterative_round(LpIterState& st, const RoundingConfig& cfg, RoundingLog& log) {
    long long guard = cfg.maxIterGuard > 0 ? cfg.maxIterGuard : detail::default_guard(st);
    for (;;) {
        ExtremePoint ep = solve_state(st);
        ++log.solves;
        if (log.lastObjective && ep.objectiveValue > *log.lastObjective)
            throw InvariantBreach("LP_iter objective rose from " + to_string(*log.lastObjective) + " to " +
                                  to_string(ep.objectiveValue));
        log.lastObjective = ep.objectiveValue;
        {
            RoundingEvent e{EventKind::Solve};
            e.solveIndex = log.solves;
            e.lpObjective = ep.objectiveValue;
            log.events.push_back(e);
            if (cfg.traceSink) cfg.traceSink(e);
        }
        bool changed = false;
        while (!changed) {
            if (++log.steps > guard) throw InvariantBreach("iteration guard exceeded");
            std::vector<int> zeros;
            for (int i : st.alive_facilities())
                if (is_zero(ep.y[i])) zeros.push_back(i);
            if (!zeros.empty()) {
                for (int i : zeros) {
                    st.delete_facility(i);
                    detail::emit(cfg, log, st, {EventKind::DeleteFacility, -1, i});
                }
                std::vector<ConstraintLabel> keep;
                for (const auto& l : ep.basisLabels)
                    if (l.kind != ConstraintLabel::Kind::Integrality || st.facilityAlive[l.index]) keep.push_back(l);
                ep.basisLabels = keep;
                keep.clear();
                for (const auto& l : ep.tightLabels)
                    if (l.kind != ConstraintLabel::Kind::Integrality || st.facilityAlive[l.index]) keep.push_back(l);
                ep.tightLabels = keep;
                continue;
            }
            int part = -1, full = -1;
            for (int j = 0; j < st.nc() && part < 0; ++j)
                if (st.clientAlive[j] && st.tag[j] == ClientTag::Part && !st.F[j].empty() && mass(st.F[j], ep.y) == 1)
                    part = j;
            if (part >= 0) {
                st.tag[part] = ClientTag::Full;
                detail::emit(cfg, log, st, {EventKind::PartToFull, part, -1, -1, st.level[part], st.level[part]});
                reroute(st, part, cfg, log);
                changed = true;
                break;
            }
            for (int j = 0; j < st.nc() && full < 0; ++j)
                if (st.clientAlive[j] && st.tag[j] == ClientTag::Full && !st.B[j].empty() && mass(st.B[j], ep.y) == 1)
                    full = j;
            if (full >= 0) {
                int before = st.level[full];
                st.F[full] = st.B[full];
                st.level[full] -= 1;
                st.recompute_inner(full);
                detail::emit(cfg, log, st, {EventKind::ShrinkBall, full, -1, -1, before, st.level[full]});
                reroute(st, full, cfg, log);
                changed = true;
                break;
            }
            if (cfg.onRoundVertex) cfg.onRoundVertex(st, ep);
            if (cfg.verifyChains) log.decompositions.push_back(chain_decompose(st, ep));
            return ep;
        }
    }
}

inline void config_reroute(LpIterState& st, const ExtremePoint& ep, std::pair<int, int> pair, const RoundingConfig& cfg,
                           RoundingLog& log) {
    auto why = candidate_violation(st, ep, pair.first, pair.second);
    if (!why.empty())
        throw std::invalid_argument("(" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
                                    ") is not a candidate configuration: " + why);
    int j = pair.first;
    st.tag[j] = ClientTag::Full;
    detail::emit(cfg, log, st, {EventKind::ConfigEvict, j, -1, pair.second, st.level[j], st.level[j]});
}

inline ExtremePoint pseudo_approximation(LpIterState& st, const RoundingConfig& cfg, RoundingLog& log) {
    for (;;) {
        ExtremePoint ep = iterative_round(st, cfg, log);
        auto cand = find_candidate_configuration(st, ep);
        if (!cand) return ep;
        config_reroute(st, ep, *cand, cfg, log);
    }
}

inline ExtremePoint pseudo_approximation(LpIterState& st, const RoundingConfig& cfg = {}) {
    RoundingLog log;
    return pseudo_approximation(st, cfg, log);
}

// ---------------------------------------------------------------------------

struct FractionalSolution {
    std::vector<std::map<int, Rational>> x; // per client: facility -> mass
    Rational cost{0};                       // sum d(i,j) x_ij over true distances
    Rational lpValue{0};                    // Opt(LP_iter)
    Rational bound{0};                      // (2 + alpha) Opt(LP_iter)
    Rational alpha{0};
};

/**
 * Connects C_part and C* clients to their balls and each C_full client to
 * B_j plus the nearest remaining open mass. Throws InvariantBreach when the
 * mass within (2 + alpha) L(l_j) falls short or the cost bound fails.
 */
inline FractionalSolution assemble_fractional_solution(const LpIterState& st, const ExtremePoint& ep) {
    FractionalSolution out;
    out.alpha = alpha_basic(st.disc.tau());
    out.lpValue = ep.objectiveValue;
    out.bound = (2 + out.alpha) * ep.objectiveValue;
    out.x.assign(st.nc(), {});
    auto open = st.alive_facilities();
    for (int j = 0; j < st.nc(); ++j) {
        if (!st.clientAlive[j]) continue;
        auto& xj = out.x[j];
        if (st.tag[j] != ClientTag::Full) {
            for (int i : st.F[j])
                if (ep.y[i] > 0) xj[i] = ep.y[i];
        } else {
            for (int i : st.B[j])
                if (ep.y[i] > 0) xj[i] = ep.y[i];
            Rational need = 1 - mass(st.B[j], ep.y);
            Rational radius = (2 + out.alpha) * st.Lj(j);
            std::vector<int> cand;
            for (int i : open)
                if (ep.y[i] > 0 && !std::binary_search(st.B[j].begin(), st.B[j].end(), i) && st.d(j, i) <= radius)
                    cand.push_back(i);
            std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return st.d(j, a) < st.d(j, b); });
            for (int i : cand) {
                if (need.sign() <= 0) break;
                Rational take = rmin(need, ep.y[i]);
                xj[i] += take;
                need -= take;
            }
            if (need.sign() > 0)
                throw InvariantBreach("client " + st.clients[j].id + " lacks " + to_string(need) +
                                      " open mass within (2+alpha)L(l_j)");
        }
        for (const auto& [i, v] : xj) out.cost += st.d(j, i) * v;
    }
    if (out.cost > out.bound)
        throw InvariantBreach("fractional cost " + to_string(out.cost) + " exceeds (2+alpha) Opt(LP_iter)");
    return out;
}

struct RerouteCertificate {
    bool ok = true;
    bool preconditionOk = true;
    std::string witness;
    Rational alpha{0};
    double worstRatio = 0; // max d(j,S) / L(l_j) over clients with L(l_j) > 0
    int checked = 0;
};

/** d(j,S) <= (2 + alpha) L(l_j) for C_full and C*, given d(j,S) <= beta L(l_j) on C*. */
inline RerouteCertificate certify_reroute_bound(const LpIterState& st, const std::vector<int>& S, const Rational& beta) {
    RerouteCertificate rep;
    rep.alpha = alpha_for(beta, st.disc.tau());
    auto dist = [&](int j) -> std::optional<Rational> {
        std::optional<Rational> best;
        for (int i : S) {
            const Rational& d = st.d(j, i);
            if (!best || d < *best) best = d;
        }
        return best;
    };
    for (int j : st.clients_with(ClientTag::Star)) {
        auto d = dist(j);
        if (!d || *d > beta * st.Lj(j)) {
            rep.ok = rep.preconditionOk = false;
            rep.witness = "C* client " + st.clients[j].id + " is farther than beta L(l_j) from S";
            return rep;
        }
    }
    for (int j : st.alive_clients()) {
        if (st.tag[j] == ClientTag::Part) continue;
        auto d = dist(j);
        ++rep.checked;
        Rational L = st.Lj(j);
        if (!d || *d > (2 + rep.alpha) * L) {
            rep.ok = false;
            rep.witness = "client " + st.clients[j].id + " exceeds (2+alpha)L(l_j)";
            return rep;
        }
        if (L.sign() > 0) rep.worstRatio = std::max(rep.worstRatio, to_double(*d / L));
    }
    return rep;
}

} // namespace gkm
