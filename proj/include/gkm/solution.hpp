#pragma once

#include "gkm/instance.hpp"

#include <numeric>

namespace gkm {

class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

/** An integral solution on an input instance. Costs are in normalized distance units. */
struct Solution {
    std::vector<int> open;       // facilities of the input instance, ascending
    std::vector<int> assignment; // per client; -1 when unserved
    std::vector<int> served;     // ascending
    Rational cost{0};
};

namespace detail {
inline int nearest(const InstanceBase& in, const std::vector<int>& open, int j) {
    int best = -1;
    for (int i : open)
        if (best < 0 || in.metric.fc(i, j) < in.metric.fc(best, j)) best = i;
    return best;
}

inline std::vector<int> normalized_set(std::vector<int> s) {
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}
} // namespace detail

/** Serves every client from its nearest open facility (ties to the lower index). */
inline Solution connect_all(const InstanceBase& in, std::vector<int> open) {
    Solution s;
    s.open = detail::normalized_set(std::move(open));
    s.assignment.assign(in.nc(), -1);
    if (s.open.empty() && in.nc() > 0) throw InfeasibleError("no open facility to serve the clients");
    for (int j = 0; j < in.nc(); ++j) {
        s.assignment[j] = detail::nearest(in, s.open, j);
        s.served.push_back(j);
        s.cost += in.metric.fc(s.assignment[j], j);
    }
    return s;
}

/** Serves the m clients closest to the open set (ties to the lower client index). */
inline Solution serve_closest(const InstanceBase& in, std::vector<int> open, int m) {
    Solution s;
    s.open = detail::normalized_set(std::move(open));
    s.assignment.assign(in.nc(), -1);
    if (m <= 0) return s;
    if (s.open.empty()) throw InfeasibleError("no open facility to serve " + std::to_string(m) + " clients");
    if (m > in.nc()) throw InfeasibleError("m exceeds the number of clients");
    std::vector<int> nearest(in.nc());
    for (int j = 0; j < in.nc(); ++j) nearest[j] = detail::nearest(in, s.open, j);
    std::vector<int> order(in.nc());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int p, int q) {
        return in.metric.fc(nearest[p], p) < in.metric.fc(nearest[q], q);
    });
    for (int t = 0; t < m; ++t) {
        int j = order[t];
        s.assignment[j] = nearest[j];
        s.served.push_back(j);
        s.cost += in.metric.fc(nearest[j], j);
    }
    std::sort(s.served.begin(), s.served.end());
    return s;
}

/** Cheaper first; equal costs fall back to the open set, lexicographically. */
inline bool better(const Solution& a, const Solution& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    return a.open < b.open;
}

inline Rational weight_of(const KnapsackInstance& in, const std::vector<int>& open) {
    Rational w(0);
    for (int i : open) w += in.w[i];
    return w;
}

inline nlohmann::json solution_json(const InstanceBase& in, const Solution& s) {
    nlohmann::json open = nlohmann::json::array(), assign = nlohmann::json::object();
    for (int i : s.open) open.push_back(in.facilityIds[i]);
    for (int j = 0; j < in.nc(); ++j)
        if (s.assignment[j] >= 0) assign[in.clientIds[j]] = in.facilityIds[s.assignment[j]];
    Rational scaled = s.cost * in.metric.scale;
    return {{"open", open},
            {"assignment", assign},
            {"served", s.served.size()},
            {"cost", to_string(scaled)},
            {"costDecimal", to_decimal(scaled)},
            {"normalizedCost", to_string(s.cost)}};
}

} // namespace gkm
