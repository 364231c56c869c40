#pragma once

#include "gkm/rational.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <optional>
#include <variant>
#include <vector>

namespace gkm {

class InstanceError : public std::runtime_error {
public:
    explicit InstanceError(const std::string& what) : std::runtime_error(what) {}
};

enum class Kind { Gkm, Knapsack, Outliers };

inline std::string kind_name(Kind k) {
    switch (k) {
    case Kind::Gkm: return "gkm";
    case Kind::Knapsack: return "knapsack";
    case Kind::Outliers: return "outliers";
    }
    return "?";
}

inline Kind parse_kind(const std::string& s) {
    if (s == "gkm") return Kind::Gkm;
    if (s == "knapsack") return Kind::Knapsack;
    if (s == "outliers") return Kind::Outliers;
    throw InstanceError("unknown kind '" + s + "'");
}

/**
 * Distances over the point set F followed by C. Stored normalized so that the
 * smallest nonzero distance is 1; `scale` converts back to input units.
 */
struct MetricInstance {
    int facilityCount = 0;
    int clientCount = 0;
    std::vector<std::vector<Rational>> dist;
    Rational scale{1};
    std::vector<std::vector<long long>> points; // kept only for l1-points input

    int size() const { return facilityCount + clientCount; }
    const Rational& d(int p, int q) const { return dist[p][q]; }
    int facility_point(int i) const { return i; }
    int client_point(int j) const { return facilityCount + j; }
    const Rational& fc(int i, int j) const { return dist[i][facilityCount + j]; }

    Rational diameter() const {
        Rational m(0);
        for (const auto& row : dist)
            for (const auto& v : row)
                if (v > m) m = v;
        return m;
    }
};

/** Fields shared by every instance kind. */
struct InstanceBase {
    std::string id;
    std::vector<std::string> facilityIds;
    std::vector<std::string> clientIds;
    MetricInstance metric;

    int nf() const { return metric.facilityCount; }
    int nc() const { return metric.clientCount; }
};

struct GkmInstance : InstanceBase {
    std::vector<std::vector<Rational>> W; // r1 x |F|
    std::vector<Rational> b;              // r1
    std::vector<std::vector<Rational>> a; // |C| x r2
    std::vector<Rational> c;              // r2

    int r1() const { return static_cast<int>(b.size()); }
    int r2() const { return static_cast<int>(c.size()); }
    int r() const { return r1() + r2(); }
};

struct KnapsackInstance : InstanceBase {
    std::vector<Rational> w;
    Rational B{0};
};

struct OutliersInstance : InstanceBase {
    int k = 0;
    int m = 0;
};

using AnyInstance = std::variant<GkmInstance, KnapsackInstance, OutliersInstance>;

// ---------------------------------------------------------------------------
// validation

inline std::string point_name(const InstanceBase& in, int p) {
    if (p < in.nf()) return in.facilityIds[p];
    return in.clientIds[p - in.nf()];
}

/** Throws InstanceError naming the first offending pair or triple. */
inline void validate_metric(const InstanceBase& in) {
    const auto& M = in.metric;
    int n = M.size();
    if (static_cast<int>(M.dist.size()) != n) throw InstanceError("distance matrix has wrong row count");
    for (int p = 0; p < n; ++p) {
        if (static_cast<int>(M.dist[p].size()) != n)
            throw InstanceError("distance matrix row " + std::to_string(p) + " has wrong length");
        if (!is_zero(M.dist[p][p])) throw InstanceError("nonzero self distance at " + point_name(in, p));
    }
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q) {
            if (M.dist[p][q] != M.dist[q][p])
                throw InstanceError("asymmetric distance between " + point_name(in, p) + " and " +
                                    point_name(in, q));
            if (M.dist[p][q].sign() < 0)
                throw InstanceError("negative distance between " + point_name(in, p) + " and " +
                                    point_name(in, q));
        }
    for (int p = 0; p < n; ++p)
        for (int q = p + 1; q < n; ++q)
            for (int m = 0; m < n; ++m) {
                if (m == p || m == q) continue;
                if (M.dist[p][q] > M.dist[p][m] + M.dist[m][q])
                    throw InstanceError("triangle inequality violated at (" + point_name(in, p) + "," +
                                        point_name(in, m) + "," + point_name(in, q) + ")");
            }
}

inline void check_ids(const InstanceBase& in) {
    std::set<std::string> f(in.facilityIds.begin(), in.facilityIds.end());
    std::set<std::string> c(in.clientIds.begin(), in.clientIds.end());
    if (static_cast<int>(f.size()) != in.nf()) throw InstanceError("duplicate facility id");
    if (static_cast<int>(c.size()) != in.nc()) throw InstanceError("duplicate client id");
}

/** Rescales so the smallest nonzero distance is 1, folding the factor into `scale`. */
inline void normalize_metric(MetricInstance& M) {
    Rational smallest(0);
    for (const auto& row : M.dist)
        for (const auto& v : row)
            if (v.sign() > 0 && (is_zero(smallest) || v < smallest)) smallest = v;
    if (is_zero(smallest) || smallest == 1) return;
    for (auto& row : M.dist)
        for (auto& v : row) v /= smallest;
    M.scale *= smallest;
}

/** Builds the L1 distance matrix of integer grid points. */
inline std::vector<std::vector<Rational>> l1_matrix(const std::vector<std::vector<long long>>& pts) {
    std::size_t n = pts.size();
    std::vector<std::vector<Rational>> d(n, std::vector<Rational>(n));
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q) {
            if (pts[p].size() != pts[q].size()) throw InstanceError("points differ in dimension");
            long long s = 0;
            for (std::size_t t = 0; t < pts[p].size(); ++t) s += std::llabs(pts[p][t] - pts[q][t]);
            d[p][q] = Rational(s);
        }
    return d;
}

// ---------------------------------------------------------------------------
// embedding into GKM

inline GkmInstance to_gkm(const KnapsackInstance& in) {
    GkmInstance g;
    static_cast<InstanceBase&>(g) = in;
    g.W = {in.w};
    g.b = {in.B};
    g.a.assign(in.nc(), std::vector<Rational>{Rational(1)});
    g.c = {Rational(in.nc())};
    return g;
}

inline GkmInstance to_gkm(const OutliersInstance& in) {
    GkmInstance g;
    static_cast<InstanceBase&>(g) = in;
    g.W = {std::vector<Rational>(in.nf(), Rational(1))};
    g.b = {Rational(in.k)};
    g.a.assign(in.nc(), std::vector<Rational>{Rational(1)});
    g.c = {Rational(in.m)};
    return g;
}

inline GkmInstance to_gkm(const GkmInstance& in) { return in; }

inline GkmInstance to_gkm(const AnyInstance& in) {
    return std::visit([](const auto& x) { return to_gkm(x); }, in);
}

inline Kind kind_of(const AnyInstance& in) {
    if (std::holds_alternative<KnapsackInstance>(in)) return Kind::Knapsack;
    if (std::holds_alternative<OutliersInstance>(in)) return Kind::Outliers;
    return Kind::Gkm;
}

inline const InstanceBase& base_of(const AnyInstance& in) {
    return std::visit([](const auto& x) -> const InstanceBase& { return x; }, in);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline Rational json_rational(const nlohmann::json& v, const std::string& field) {
    try {
        if (v.is_number_integer()) return Rational(v.get<long long>());
        if (v.is_string()) return parse_rational(v.get<std::string>());
    } catch (const ParseError& e) {
        throw InstanceError(field + ": " + e.what());
    }
    throw InstanceError(field + ": expected rational string or integer");
}

inline nlohmann::json rational_json(const Rational& q) {
    if (is_integer(q) && abs(numer(q)) < Integer(1) << 53) return numer(q).convert_to<long long>();
    return to_string(q);
}

inline std::vector<Rational> rational_vector(const nlohmann::json& v, const std::string& field) {
    if (!v.is_array()) throw InstanceError(field + ": expected array");
    std::vector<Rational> out;
    for (std::size_t t = 0; t < v.size(); ++t)
        out.push_back(json_rational(v[t], field + "[" + std::to_string(t) + "]"));
    return out;
}

inline void require_nonnegative(const Rational& q, const std::string& field) {
    if (q.sign() < 0) throw InstanceError(field + " is negative");
}

} // namespace detail

/** Parses one instance document. `expected` of nullopt accepts the file's own kind. */
inline AnyInstance parse_instance(const nlohmann::json& j, std::optional<Kind> expected = std::nullopt) {
    using detail::json_rational;
    if (!j.is_object()) throw InstanceError("instance must be a JSON object");
    if (!j.contains("kind") || !j["kind"].is_string()) throw InstanceError("missing field 'kind'");
    Kind kind = parse_kind(j["kind"].get<std::string>());
    if (expected && *expected != kind)
        throw InstanceError("instance kind '" + kind_name(kind) + "' does not match requested '" +
                            kind_name(*expected) + "'");
    if (!j.contains("facilities") || !j["facilities"].is_array()) throw InstanceError("missing field 'facilities'");
    if (!j.contains("clients") || !j["clients"].is_array()) throw InstanceError("missing field 'clients'");
    if (!j.contains("metric") || !j["metric"].is_object()) throw InstanceError("missing field 'metric'");

    InstanceBase base;
    base.id = j.value("id", std::string("instance"));
    for (const auto& f : j["facilities"]) {
        if (!f.contains("id") || !f["id"].is_string()) throw InstanceError("facility without string id");
        base.facilityIds.push_back(f["id"].get<std::string>());
    }
    for (const auto& c : j["clients"]) {
        if (!c.contains("id") || !c["id"].is_string()) throw InstanceError("client without string id");
        base.clientIds.push_back(c["id"].get<std::string>());
    }
    if (base.facilityIds.empty()) throw InstanceError("no facilities");
    base.metric.facilityCount = static_cast<int>(base.facilityIds.size());
    base.metric.clientCount = static_cast<int>(base.clientIds.size());
    check_ids(base);

    const auto& mj = j["metric"];
    std::string form = mj.value("form", std::string());
    int n = base.metric.size();
    if (form == "matrix") {
        if (!mj.contains("dist") || !mj["dist"].is_array()) throw InstanceError("metric.dist missing");
        const auto& dj = mj["dist"];
        if (static_cast<int>(dj.size()) != n) throw InstanceError("metric.dist must be |F|+|C| square");
        base.metric.dist.assign(n, std::vector<Rational>(n));
        for (int p = 0; p < n; ++p) {
            if (!dj[p].is_array() || static_cast<int>(dj[p].size()) != n)
                throw InstanceError("metric.dist must be |F|+|C| square");
            for (int q = 0; q < n; ++q)
                base.metric.dist[p][q] =
                    json_rational(dj[p][q], "metric.dist[" + std::to_string(p) + "][" + std::to_string(q) + "]");
        }
    } else if (form == "l1-points") {
        if (!mj.contains("points") || !mj["points"].is_array()) throw InstanceError("metric.points missing");
        const auto& pj = mj["points"];
        if (static_cast<int>(pj.size()) != n) throw InstanceError("metric.points must list |F|+|C| points");
        for (const auto& p : pj) {
            if (!p.is_array()) throw InstanceError("metric.points entries must be arrays");
            std::vector<long long> coords;
            for (const auto& x : p) {
                if (!x.is_number_integer()) throw InstanceError("l1-points coordinates must be integers");
                coords.push_back(x.get<long long>());
            }
            base.metric.points.push_back(coords);
        }
        base.metric.dist = l1_matrix(base.metric.points);
    } else if (form == "euclidean-points") {
        if (!mj.contains("points") || !mj["points"].is_array()) throw InstanceError("metric.points missing");
        const auto& pj = mj["points"];
        if (static_cast<int>(pj.size()) != n) throw InstanceError("metric.points must list |F|+|C| points");
        std::vector<std::vector<double>> pts;
        for (const auto& p : pj) pts.push_back(p.get<std::vector<double>>());
        base.metric.dist.assign(n, std::vector<Rational>(n));
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) {
                long double s = 0;
                for (std::size_t t = 0; t < pts[p].size(); ++t) {
                    long double dx = pts[p][t] - pts[q][t];
                    s += dx * dx;
                }
                base.metric.dist[p][q] = p == q ? Rational(0) : snap(std::sqrt(s), 1000000);
            }
    } else {
        throw InstanceError("metric.form must be 'matrix', 'l1-points' or 'euclidean-points'");
    }
    validate_metric(base);
    normalize_metric(base.metric);

    if (kind == Kind::Knapsack) {
        KnapsackInstance in;
        static_cast<InstanceBase&>(in) = base;
        for (std::size_t i = 0; i < j["facilities"].size(); ++i) {
            const auto& f = j["facilities"][i];
            Rational w = f.contains("weight") ? json_rational(f["weight"], "facilities[" + std::to_string(i) + "].weight")
                                              : Rational(0);
            detail::require_nonnegative(w, "weight of " + in.facilityIds[i]);
            in.w.push_back(w);
        }
        if (!j.contains("budget")) throw InstanceError("knapsack instance needs 'budget'");
        in.B = json_rational(j["budget"], "budget");
        detail::require_nonnegative(in.B, "budget");
        return in;
    }
    if (kind == Kind::Outliers) {
        OutliersInstance in;
        static_cast<InstanceBase&>(in) = base;
        if (!j.contains("k") || !j["k"].is_number_integer()) throw InstanceError("outliers instance needs integer 'k'");
        if (!j.contains("m") || !j["m"].is_number_integer()) throw InstanceError("outliers instance needs integer 'm'");
        in.k = j["k"].get<int>();
        in.m = j["m"].get<int>();
        if (in.k < 1) throw InstanceError("k must be positive");
        if (in.m < 0 || in.m > in.nc()) throw InstanceError("m must lie in [0, |C|]");
        return in;
    }
    GkmInstance in;
    static_cast<InstanceBase&>(in) = base;
    if (j.contains("W")) {
        for (const auto& row : j["W"]) in.W.push_back(detail::rational_vector(row, "W"));
    }
    if (j.contains("b")) in.b = detail::rational_vector(j["b"], "b");
    if (j.contains("c")) in.c = detail::rational_vector(j["c"], "c");
    if (in.W.size() != in.b.size()) throw InstanceError("W and b disagree on r1");
    for (const auto& row : in.W) {
        if (static_cast<int>(row.size()) != in.nf()) throw InstanceError("W rows must have |F| entries");
        for (const auto& v : row) detail::require_nonnegative(v, "W entry");
    }
    for (const auto& v : in.b) detail::require_nonnegative(v, "b entry");
    for (const auto& v : in.c) detail::require_nonnegative(v, "c entry");
    for (std::size_t t = 0; t < j["clients"].size(); ++t) {
        const auto& cj = j["clients"][t];
        std::vector<Rational> a;
        if (cj.contains("coverage")) a = detail::rational_vector(cj["coverage"], "clients[" + std::to_string(t) + "].coverage");
        else a.assign(in.c.size(), Rational(1));
        if (a.size() != in.c.size()) throw InstanceError("coverage vector length must equal |c|");
        for (const auto& v : a) detail::require_nonnegative(v, "coverage entry");
        in.a.push_back(a);
    }
    if (in.r() < 1) throw InstanceError("GKM instance needs at least one knapsack or coverage row");
    return in;
}

inline AnyInstance load_instance(const std::string& path, std::optional<Kind> expected = std::nullopt) {
    std::ifstream f(path);
    if (!f) throw InstanceError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InstanceError(std::string("JSON parse error: ") + e.what());
    }
    return parse_instance(j, expected);
}

/** Serializes in input units; l1-points instances keep their coordinates. */
inline nlohmann::json instance_json(const AnyInstance& any) {
    using detail::rational_json;
    const InstanceBase& base = base_of(any);
    nlohmann::json j;
    j["id"] = base.id;
    j["kind"] = kind_name(kind_of(any));
    nlohmann::json fac = nlohmann::json::array(), cli = nlohmann::json::array();
    for (int i = 0; i < base.nf(); ++i) {
        nlohmann::json f{{"id", base.facilityIds[i]}};
        if (auto* k = std::get_if<KnapsackInstance>(&any)) f["weight"] = rational_json(k->w[i]);
        fac.push_back(f);
    }
    for (int t = 0; t < base.nc(); ++t) {
        nlohmann::json c{{"id", base.clientIds[t]}};
        if (auto* g = std::get_if<GkmInstance>(&any)) {
            nlohmann::json cov = nlohmann::json::array();
            for (const auto& v : g->a[t]) cov.push_back(rational_json(v));
            c["coverage"] = cov;
        }
        cli.push_back(c);
    }
    j["facilities"] = fac;
    j["clients"] = cli;
    if (!base.metric.points.empty()) {
        j["metric"] = {{"form", "l1-points"}, {"points", base.metric.points}};
    } else {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : base.metric.dist) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& v : row) r.push_back(rational_json(v * base.metric.scale));
            rows.push_back(r);
        }
        j["metric"] = {{"form", "matrix"}, {"dist", rows}};
    }
    if (auto* k = std::get_if<KnapsackInstance>(&any)) j["budget"] = rational_json(k->B);
    if (auto* o = std::get_if<OutliersInstance>(&any)) {
        j["k"] = o->k;
        j["m"] = o->m;
    }
    if (auto* g = std::get_if<GkmInstance>(&any)) {
        nlohmann::json W = nlohmann::json::array();
        for (const auto& row : g->W) {
            nlohmann::json r = nlohmann::json::array();
            for (const auto& v : row) r.push_back(rational_json(v));
            W.push_back(r);
        }
        j["W"] = W;
        nlohmann::json b = nlohmann::json::array(), c = nlohmann::json::array();
        for (const auto& v : g->b) b.push_back(rational_json(v));
        for (const auto& v : g->c) c.push_back(rational_json(v));
        j["b"] = b;
        j["c"] = c;
    }
    return j;
}

// ---------------------------------------------------------------------------
// generator

struct GeneratorParams {
    int grid = 12;         // coordinates drawn from [0, grid)
    int dims = 2;
    int k = 2;             // outliers
    int m = -1;            // outliers; -1 means |C| - 1
    int maxWeight = 5;     // knapsack weights drawn from [1, maxWeight]
    Rational budget{-1};   // knapsack; negative means half the total weight, rounded
    int r1 = 1;            // gkm knapsack rows
    int r2 = 1;            // gkm coverage rows
};

/** Small deterministic draw helper; avoids implementation-defined distributions. */
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : eng_(seed) {}
    std::uint64_t next() { return eng_(); }
    /// uniform in [lo, hi]
    long long between(long long lo, long long hi) {
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v;
        do v = eng_(); while (v >= limit);
        return lo + static_cast<long long>(v % span);
    }

private:
    std::mt19937_64 eng_;
};

inline AnyInstance generate_instance(std::uint64_t seed, int nFacilities, int nClients, Kind kind,
                                     const GeneratorParams& params = {}) {
    if (nFacilities < 1 || nClients < 1) throw InstanceError("generator needs at least one facility and client");
    if (kind == Kind::Outliers) {
        int m = params.m < 0 ? nClients - 1 : params.m;
        if (m > nClients) throw InstanceError("m exceeds the number of clients");
        if (params.k > nFacilities) throw InstanceError("k exceeds the number of facilities");
    }
    SeededRng rng(derive_seed(seed, "generator/" + kind_name(kind)));
    InstanceBase base;
    base.id = kind_name(kind) + "-" + std::to_string(seed) + "-" + std::to_string(nFacilities) + "x" +
              std::to_string(nClients);
    for (int i = 0; i < nFacilities; ++i) base.facilityIds.push_back("f" + std::to_string(i));
    for (int j = 0; j < nClients; ++j) base.clientIds.push_back("c" + std::to_string(j));
    base.metric.facilityCount = nFacilities;
    base.metric.clientCount = nClients;
    for (int p = 0; p < nFacilities + nClients; ++p) {
        std::vector<long long> pt;
        for (int t = 0; t < params.dims; ++t) pt.push_back(rng.between(0, params.grid - 1));
        base.metric.points.push_back(pt);
    }
    base.metric.dist = l1_matrix(base.metric.points);
    normalize_metric(base.metric);

    if (kind == Kind::Knapsack) {
        KnapsackInstance in;
        static_cast<InstanceBase&>(in) = base;
        Rational total(0);
        for (int i = 0; i < nFacilities; ++i) {
            in.w.push_back(Rational(rng.between(1, params.maxWeight)));
            total += in.w.back();
        }
        if (params.budget.sign() >= 0) {
            in.B = params.budget;
        } else {
            in.B = Rational(ceil_int(total / 2));
            Rational heaviest = *std::max_element(in.w.begin(), in.w.end());
            if (in.B < heaviest) in.B = heaviest;
        }
        return in;
    }
    if (kind == Kind::Outliers) {
        OutliersInstance in;
        static_cast<InstanceBase&>(in) = base;
        in.k = params.k;
        in.m = params.m < 0 ? nClients - 1 : params.m;
        return in;
    }
    GkmInstance in;
    static_cast<InstanceBase&>(in) = base;
    for (int r = 0; r < params.r1; ++r) {
        std::vector<Rational> row;
        Rational total(0);
        for (int i = 0; i < nFacilities; ++i) {
            row.push_back(Rational(rng.between(1, params.maxWeight)));
            total += row.back();
        }
        in.W.push_back(row);
        in.b.push_back(Rational(ceil_int(total / 2)));
    }
    in.a.assign(nClients, {});
    std::vector<Rational> sums(params.r2, Rational(0));
    for (int j = 0; j < nClients; ++j)
        for (int r = 0; r < params.r2; ++r) {
            in.a[j].push_back(Rational(rng.between(0, 3)));
            sums[r] += in.a[j][r];
        }
    for (int r = 0; r < params.r2; ++r) in.c.push_back(Rational(ceil_int(sums[r] * Rational(3, 4))));
    return in;
}

} // namespace gkm
