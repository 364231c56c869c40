#pragma once

#include "gkm/lpiter.hpp"

#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace gkm {

/** Clients of C* whose balls hold only fractional facilities. */
inline std::vector<int> fractional_star(const LpIterState& st, const ExtremePoint& ep) {
    std::vector<int> out;
    for (int j : st.clients_with(ClientTag::Star)) {
        bool frac = std::all_of(st.F[j].begin(), st.F[j].end(), [&](int i) { return ep.y[i] < 1; });
        if (frac) out.push_back(j);
    }
    return out;
}

inline std::vector<int> fractional_facilities(const LpIterState& st, const ExtremePoint& ep) {
    std::vector<int> out;
    for (int i : st.alive_facilities())
        if (ep.y[i] > 0 && ep.y[i] < 1) out.push_back(i);
    return out;
}

inline std::vector<int> integral_facilities(const LpIterState& st, const ExtremePoint& ep) {
    std::vector<int> out;
    for (int i : st.alive_facilities())
        if (ep.y[i] == 1) out.push_back(i);
    return out;
}

struct IntersectionGraph {
    std::vector<int> vertices;
    std::vector<std::pair<int, int>> edges;
    std::map<int, std::vector<int>> adj;
};

enum class VertexSet { AllStar, FractionalStar };

inline IntersectionGraph graph_on(const LpIterState& st, const std::vector<int>& vertices) {
    IntersectionGraph g;
    g.vertices = vertices;
    for (int v : vertices) g.adj[v];
    for (std::size_t p = 0; p < vertices.size(); ++p)
        for (std::size_t q = p + 1; q < vertices.size(); ++q) {
            int a = vertices[p], b = vertices[q];
            if (!intersects(st.F[a], st.F[b])) continue;
            g.edges.emplace_back(a, b);
            g.adj[a].push_back(b);
            g.adj[b].push_back(a);
        }
    return g;
}

inline IntersectionGraph build_graph(const LpIterState& st, VertexSet which, const ExtremePoint* ep = nullptr) {
    if (which == VertexSet::FractionalStar) {
        if (!ep) throw std::invalid_argument("fractional vertex set needs an extreme point");
        return graph_on(st, fractional_star(st, *ep));
    }
    return graph_on(st, st.clients_with(ClientTag::Star));
}

struct BipartiteResult {
    bool bipartite = true;
    std::map<int, int> side;     // 0 or 1 per vertex
    std::vector<int> oddCycle;   // closed walk v0..vk with an edge vk-v0
};

inline BipartiteResult check_bipartite(const IntersectionGraph& g) {
    BipartiteResult res;
    std::map<int, int> parent, depth;
    for (int root : g.vertices) {
        if (res.side.count(root)) continue;
        res.side[root] = 0;
        parent[root] = -1;
        depth[root] = 0;
        std::vector<int> queue{root};
        for (std::size_t h = 0; h < queue.size(); ++h) {
            int u = queue[h];
            for (int v : g.adj.at(u)) {
                if (!res.side.count(v)) {
                    res.side[v] = 1 - res.side[u];
                    parent[v] = u;
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                } else if (res.side[v] == res.side[u]) {
                    // climb both to their common ancestor
                    std::vector<int> left{u}, right{v};
                    int a = u, b = v;
                    while (depth[a] > depth[b]) left.push_back(a = parent[a]);
                    while (depth[b] > depth[a]) right.push_back(b = parent[b]);
                    while (a != b) {
                        left.push_back(a = parent[a]);
                        right.push_back(b = parent[b]);
                    }
                    right.pop_back();
                    res.bipartite = false;
                    res.oddCycle = left;
                    res.oddCycle.insert(res.oddCycle.end(), right.rbegin(), right.rend());
                    res.side.clear();
                    return res;
                }
            }
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

struct ChainComponent {
    std::vector<int> chain; // walk order
    bool cycle = false;
    int facilities = 0;     // |F(V_k)|
    int rank = 0;           // dim(V_k)
};

struct ChainDecomposition {
    std::vector<std::vector<int>> chains;
    std::vector<int> violating;
    int r = 0;
    std::vector<ChainComponent> components;
    int fractionalFacilities = 0;
    int fractionalStar = 0;
    int rank = 0; // dim(C*_{<1})
    int excess = 0; // sum over C*_{<1} of |F_j| - 2
};

namespace detail {
inline std::vector<std::vector<Rational>> incidence(const LpIterState& st, const std::vector<int>& clients,
                                                    const std::vector<int>& columns) {
    std::vector<std::vector<Rational>> out;
    for (int j : clients) {
        std::vector<Rational> v(columns.size(), Rational(0));
        for (std::size_t c = 0; c < columns.size(); ++c)
            if (std::binary_search(st.F[j].begin(), st.F[j].end(), columns[c])) v[c] = 1;
        out.push_back(std::move(v));
    }
    return out;
}
} // namespace detail

/**
 * Splits C*_{<1} into violating clients (|F_j| > 2) and chains, and asserts
 * every counting bound the decomposition comes with. Throws InvariantBreach
 * with a witness when one fails.
 */
inline ChainDecomposition chain_decompose(const LpIterState& st, const ExtremePoint& ep) {
    ChainDecomposition out;
    out.r = st.r();
    auto stars = fractional_star(st, ep);
    auto frac = fractional_facilities(st, ep);
    out.fractionalFacilities = static_cast<int>(frac.size());
    out.fractionalStar = static_cast<int>(stars.size());
    auto breach = [](const std::string& what) { throw InvariantBreach("chain decomposition: " + what); };

    std::vector<int> rest;
    for (int j : stars) {
        int size = static_cast<int>(st.F[j].size());
        if (size < 2) breach("fractional C* client " + std::to_string(j) + " has |F_j| = " + std::to_string(size));
        out.excess += size - 2;
        if (size > 2) out.violating.push_back(j);
        else rest.push_back(j);
    }
    out.rank = rank_of(detail::incidence(st, stars, frac));

    auto g = graph_on(st, rest);
    std::map<int, char> seen;
    std::vector<char> used(st.nf(), 0);
    for (int start : rest) {
        if (seen[start]) continue;
        std::vector<int> comp{start};
        seen[start] = 1;
        for (std::size_t h = 0; h < comp.size(); ++h)
            for (int v : g.adj[comp[h]])
                if (!seen[v]) {
                    seen[v] = 1;
                    comp.push_back(v);
                }
        std::sort(comp.begin(), comp.end());
        std::size_t edges = 0;
        for (int v : comp) {
            if (g.adj[v].size() > 2) breach("client " + std::to_string(v) + " has degree " + std::to_string(g.adj[v].size()));
            edges += g.adj[v].size();
        }
        edges /= 2;
        // connected with degrees at most two: a path when edges = |V_k| - 1, a cycle when edges = |V_k|
        ChainComponent cc;
        cc.cycle = edges == comp.size();
        // walk: paths start at the lowest-id endpoint, cycles at the lowest id toward its lower neighbour
        int first = comp[0];
        if (!cc.cycle)
            for (int v : comp)
                if (g.adj[v].size() <= 1) {
                    first = v;
                    break;
                }
        std::vector<int> walk{first};
        int prev = -1, cur = first;
        while (walk.size() < comp.size()) {
            auto nb = g.adj[cur];
            std::sort(nb.begin(), nb.end());
            int next = -1;
            for (int v : nb)
                if (v != prev && std::find(walk.begin(), walk.end(), v) == walk.end()) {
                    next = v;
                    break;
                }
            if (next < 0) breach("walk stuck at client " + std::to_string(cur));
            walk.push_back(next);
            prev = cur;
            cur = next;
        }
        for (std::size_t q = 0; q + 1 < walk.size(); ++q)
            if (!intersects(st.F[walk[q]], st.F[walk[q + 1]])) breach("chain link broken at " + std::to_string(walk[q]));
        std::set<int> fk;
        for (int v : comp) fk.insert(st.F[v].begin(), st.F[v].end());
        for (int i : fk) {
            if (used[i]) breach("facility " + std::to_string(i) + " shared between components");
            used[i] = 1;
        }
        cc.chain = walk;
        cc.facilities = static_cast<int>(fk.size());
        std::vector<int> cols(fk.begin(), fk.end());
        cc.rank = rank_of(detail::incidence(st, comp, cols));
        if (cc.facilities <= cc.rank) breach("component at " + std::to_string(comp[0]) + " has |F(V_k)| <= dim(V_k)");
        if (cc.cycle) {
            if (comp.size() % 2) breach("odd cycle through client " + std::to_string(comp[0]));
            if (cc.rank != static_cast<int>(comp.size()) - 1)
                breach("cycle at " + std::to_string(comp[0]) + " has rank " + std::to_string(cc.rank));
        }
        out.components.push_back(cc);
        out.chains.push_back(walk);
    }
    int usedCount = static_cast<int>(std::count(used.begin(), used.end(), 1));
    if (usedCount > out.fractionalFacilities) breach("chain facilities exceed |F_{<1}|");
    if (out.excess > 2 * out.r) breach("sum of |F_j| - 2 is " + std::to_string(out.excess));
    if (static_cast<int>(out.violating.size()) > 2 * out.r)
        breach(std::to_string(out.violating.size()) + " violating clients");
    if (static_cast<int>(out.chains.size()) > 3 * out.r) breach(std::to_string(out.chains.size()) + " chains");
    if (out.fractionalFacilities > out.rank + out.r)
        breach("|F_{<1}| = " + std::to_string(out.fractionalFacilities) + " exceeds dim + r = " +
               std::to_string(out.rank + out.r));
    return out;
}

/** Checks the four clauses of a candidate configuration; an empty string means valid. */
inline std::string candidate_violation(const LpIterState& st, const ExtremePoint& ep, int j, int jp) {
    auto stars = fractional_star(st, ep);
    auto in = [&](int c) { return std::binary_search(stars.begin(), stars.end(), c); };
    if (j == jp || !in(j) || !in(jp)) return "not both in C*_{<1}";
    if (!intersects(st.F[j], st.F[jp])) return "balls do not intersect";
    if (st.level[jp] > st.level[j] - 1) return "level of j' is not below level of j";
    if (st.F[j].size() != 2 || st.F[jp].size() != 2) return "a ball does not hold exactly two facilities";
    std::vector<int> count(st.nf(), 0);
    for (int c : st.clients_with(ClientTag::Star))
        for (int i : st.F[c]) ++count[i];
    for (int c : {j, jp})
        for (int i : st.F[c])
            if (count[i] != 2) return "facility " + std::to_string(i) + " lies in " + std::to_string(count[i]) + " C*-balls";
    return {};
}

/**
 * Lowest (j, j') over intersecting pairs of C*_{<1} that validates. Any chain
 * of length four contributes such a pair, so scanning all edges finds one
 * whenever the chain argument does.
 */
inline std::optional<std::pair<int, int>> find_candidate_configuration(const LpIterState& st, const ExtremePoint& ep) {
    auto stars = fractional_star(st, ep);
    for (int j : stars)
        for (int jp : stars) {
            if (j == jp || st.level[jp] != st.level[j] - 1) continue;
            if (!intersects(st.F[j], st.F[jp])) continue;
            if (candidate_violation(st, ep, j, jp).empty()) return std::make_pair(j, jp);
        }
    return std::nullopt;
}

inline nlohmann::json decomposition_json(const ChainDecomposition& d) {
    return {{"chains", d.chains.size()},
            {"violating", d.violating.size()},
            {"fractional", d.fractionalFacilities},
            {"rank", d.rank},
            {"r", d.r},
            {"chainSlack", 3 * d.r - static_cast<int>(d.chains.size())},
            {"violatingSlack", 2 * d.r - static_cast<int>(d.violating.size())}};
}

} // namespace gkm
