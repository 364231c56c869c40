#pragma once

#include "gkm/rational.hpp"

#include <algorithm>
#include <compare>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace gkm {

/**
 * Identity of an LP row or bound. `index` is a client, facility, variable or
 * row number depending on `kind`; `side` distinguishes the two bounds of a
 * variable (0 = lower, 1 = upper).
 */
struct ConstraintLabel {
    enum class Kind { CPart, CFull, CStar, Knapsack, Coverage, Integrality, PostProcess, Custom };
    Kind kind = Kind::Custom;
    int index = 0;
    int side = 0;
    std::string tag;

    static ConstraintLabel cpart(int j) { return {Kind::CPart, j, 0, {}}; }
    static ConstraintLabel cfull(int j) { return {Kind::CFull, j, 0, {}}; }
    static ConstraintLabel cstar(int j) { return {Kind::CStar, j, 0, {}}; }
    static ConstraintLabel knapsack(int r) { return {Kind::Knapsack, r, 0, {}}; }
    static ConstraintLabel coverage(int r) { return {Kind::Coverage, r, 0, {}}; }
    static ConstraintLabel integrality(int i, int side) { return {Kind::Integrality, i, side, {}}; }
    static ConstraintLabel post(std::string tag, int i = 0) { return {Kind::PostProcess, i, 0, std::move(tag)}; }
    static ConstraintLabel custom(std::string tag, int i = 0, int side = 0) {
        return {Kind::Custom, i, side, std::move(tag)};
    }

    auto operator<=>(const ConstraintLabel& o) const {
        return std::tie(kind, index, side, tag) <=> std::tie(o.kind, o.index, o.side, o.tag);
    }
    bool operator==(const ConstraintLabel& o) const = default;

    std::string str() const {
        switch (kind) {
        case Kind::CPart: return "CPart(" + std::to_string(index) + ")";
        case Kind::CFull: return "CFull(" + std::to_string(index) + ")";
        case Kind::CStar: return "CStar(" + std::to_string(index) + ")";
        case Kind::Knapsack: return "Knapsack(" + std::to_string(index) + ")";
        case Kind::Coverage: return "Coverage(" + std::to_string(index) + ")";
        case Kind::Integrality:
            return "Integrality(" + std::to_string(index) + ")@" + (side ? "hi" : "lo");
        case Kind::PostProcess: return "PostProcess(" + tag + "," + std::to_string(index) + ")";
        case Kind::Custom: return tag + "(" + std::to_string(index) + "," + std::to_string(side) + ")";
        }
        return "?";
    }
};

enum class Relation { LessEq, Equal, GreaterEq };

struct LpRow {
    std::vector<std::pair<int, Rational>> coef; // sparse, variable index ascending
    Relation rel = Relation::LessEq;
    Rational rhs{0};
    ConstraintLabel label;
};

/** Minimize objective . y + constant subject to labeled rows and per-variable bounds. */
struct LinearProgram {
    int variableCount = 0;
    std::vector<Rational> objective;
    Rational constant{0};
    std::vector<LpRow> rows;
    std::vector<Rational> lo, hi;
    std::vector<char> hiFinite;
    std::vector<std::string> names;

    explicit LinearProgram(int n = 0)
        : variableCount(n), objective(n), lo(n, Rational(0)), hi(n, Rational(1)), hiFinite(n, 1) {}

    void add_row(std::vector<std::pair<int, Rational>> coef, Relation rel, Rational rhs, ConstraintLabel label) {
        std::sort(coef.begin(), coef.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        std::vector<std::pair<int, Rational>> merged;
        for (auto& [v, c] : coef) {
            if (!merged.empty() && merged.back().first == v) merged.back().second += c;
            else merged.emplace_back(v, c);
        }
        std::erase_if(merged, [](const auto& e) { return is_zero(e.second); });
        rows.push_back({std::move(merged), rel, std::move(rhs), std::move(label)});
    }

    void set_unbounded_above(int v) { hiFinite[v] = 0; }

    std::string var_name(int v) const {
        if (v < static_cast<int>(names.size()) && !names[v].empty()) return names[v];
        return "y" + std::to_string(v);
    }
};

struct ExtremePoint {
    std::vector<Rational> y;
    Rational objectiveValue{0};
    std::vector<ConstraintLabel> tightLabels;
    std::vector<ConstraintLabel> basisLabels;
    long pivots = 0;

    std::vector<int> fractional() const {
        std::vector<int> out;
        for (int i = 0; i < static_cast<int>(y.size()); ++i)
            if (y[i].sign() > 0 && y[i] < 1) out.push_back(i);
        return out;
    }
    std::vector<int> integral_one() const {
        std::vector<int> out;
        for (int i = 0; i < static_cast<int>(y.size()); ++i)
            if (y[i] == 1) out.push_back(i);
        return out;
    }
    bool is_tight(const ConstraintLabel& l) const {
        return std::find(tightLabels.begin(), tightLabels.end(), l) != tightLabels.end();
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Optimal;
    ExtremePoint point;
    std::vector<ConstraintLabel> certificate; // rows with nonzero Farkas multiplier when infeasible
    std::vector<Rational> ray;                // improving direction when unbounded
};

class LpError : public std::runtime_error {
public:
    explicit LpError(const std::string& what) : std::runtime_error(what) {}
};

struct SolveOptions {
    /// Start phase 2 from this basis (as returned in basisLabels) when it is primal feasible.
    const std::vector<ConstraintLabel>* warmBasis = nullptr;
    bool verifyBasis = true;
};

// ---------------------------------------------------------------------------

/** Exact rank by fraction-free (Bareiss) elimination after clearing denominators. */
inline int rank_of(const std::vector<std::vector<Rational>>& vectors) {
    if (vectors.empty()) return 0;
    std::size_t cols = vectors[0].size();
    std::vector<std::vector<Integer>> M;
    for (const auto& v : vectors) {
        if (v.size() != cols) throw LpError("rank_of: vectors differ in dimension");
        Integer l(1);
        for (const auto& q : v) l = boost::multiprecision::lcm(l, denom(q));
        std::vector<Integer> row;
        for (const auto& q : v) row.push_back(numer(q) * (l / denom(q)));
        M.push_back(std::move(row));
    }
    std::size_t rows = M.size();
    std::size_t r = 0;
    Integer prev(1);
    for (std::size_t c = 0; c < cols && r < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && M[piv][c] == 0) ++piv;
        if (piv == rows) continue;
        std::swap(M[piv], M[r]);
        for (std::size_t i = r + 1; i < rows; ++i) {
            for (std::size_t k = c + 1; k < cols; ++k)
                M[i][k] = (M[r][c] * M[i][k] - M[i][c] * M[r][k]) / prev;
            M[i][c] = 0;
        }
        prev = M[r][c];
        ++r;
    }
    return static_cast<int>(r);
}

namespace detail {

/** Row echelon form grown one vector at a time; add() reports independence. */
class IncrementalRank {
public:
    explicit IncrementalRank(int dim) : dim_(dim) {}
    bool add(std::vector<Rational> v) {
        for (std::size_t t = 0; t < rows_.size(); ++t) {
            int p = pivotCol_[t];
            if (is_zero(v[p])) continue;
            Rational f = v[p];
            for (int c = p; c < dim_; ++c)
                if (!is_zero(rows_[t][c])) v[c] -= f * rows_[t][c];
        }
        int p = 0;
        while (p < dim_ && is_zero(v[p])) ++p;
        if (p == dim_) return false;
        Rational inv = Rational(1) / v[p];
        for (int c = p; c < dim_; ++c) v[c] *= inv;
        rows_.push_back(std::move(v));
        pivotCol_.push_back(p);
        return true;
    }
    int rank() const { return static_cast<int>(rows_.size()); }

private:
    int dim_;
    std::vector<std::vector<Rational>> rows_;
    std::vector<int> pivotCol_;
};

/** Dense bounded-variable tableau simplex with Bland's rule. */
class Tableau {
public:
    enum class Stat : char { Basic, AtLower, AtUpper };

    Tableau(const LinearProgram& lp) : lp_(lp), n_(lp.variableCount), m_(static_cast<int>(lp.rows.size())) {}

    LpResult run(const SolveOptions& opt) {
        LpResult res;
        bool warm = opt.warmBasis && try_warm(*opt.warmBasis);
        if (!warm) {
            cold_start();
            if (nart_ > 0) {
                std::vector<Rational> c1(N_, Rational(0));
                for (int a = n_ + m_; a < N_; ++a) c1[a] = 1;
                set_costs(c1);
                auto st = iterate(false);
                (void)st;
                if (objective_value() > 0) {
                    res.status = LpStatus::Infeasible;
                    for (int i = 0; i < m_; ++i)
                        if (!is_zero(d_[n_ + i])) res.certificate.push_back(lp_.rows[i].label);
                    return res;
                }
                retire_artificials();
            }
        }
        std::vector<Rational> c2(N_, Rational(0));
        for (int v = 0; v < n_; ++v) c2[v] = lp_.objective[v];
        set_costs(c2);
        if (!iterate(true)) {
            res.status = LpStatus::Unbounded;
            res.ray = ray_;
            return res;
        }
        res.status = LpStatus::Optimal;
        res.point = extract(opt.verifyBasis);
        return res;
    }

private:
    const LinearProgram& lp_;
    int n_, m_;
    int N_ = 0, nart_ = 0;
    std::vector<std::vector<Rational>> T_; // m x N
    std::vector<Rational> beta_;           // B^-1 b, used to seed basic values
    std::vector<int> basis_;               // column basic in each row
    std::vector<Stat> stat_;
    std::vector<Rational> x_;              // current value of every column
    std::vector<Rational> lo_, hi_;
    std::vector<char> loF_, hiF_;
    std::vector<Rational> cost_, d_;
    std::vector<Rational> ray_;
    long pivots_ = 0;

    void setup_columns(int artificials) {
        nart_ = artificials;
        N_ = n_ + m_ + nart_;
        lo_.assign(N_, Rational(0));
        hi_.assign(N_, Rational(0));
        loF_.assign(N_, 1);
        hiF_.assign(N_, 1);
        for (int v = 0; v < n_; ++v) {
            lo_[v] = lp_.lo[v];
            hi_[v] = lp_.hi[v];
            hiF_[v] = lp_.hiFinite[v];
        }
        for (int i = 0; i < m_; ++i) {
            int s = n_ + i;
            switch (lp_.rows[i].rel) {
            case Relation::LessEq: hiF_[s] = 0; break;
            case Relation::GreaterEq: loF_[s] = 0; break;
            case Relation::Equal: break;
            }
        }
        for (int a = n_ + m_; a < N_; ++a) hiF_[a] = 0;
        stat_.assign(N_, Stat::AtLower);
        x_.assign(N_, Rational(0));
        T_.assign(m_, std::vector<Rational>(N_, Rational(0)));
        beta_.assign(m_, Rational(0));
        basis_.assign(m_, -1);
    }

    Rational row_activity(int i, const std::vector<Rational>& x) const {
        Rational s(0);
        for (const auto& [v, c] : lp_.rows[i].coef) s += c * x[v];
        return s;
    }

    void cold_start() {
        std::vector<Rational> x0(n_);
        for (int v = 0; v < n_; ++v) x0[v] = lp_.lo[v];
        std::vector<Rational> slack(m_);
        std::vector<char> needArt(m_, 0);
        int arts = 0;
        for (int i = 0; i < m_; ++i) {
            slack[i] = lp_.rows[i].rhs - row_activity(i, x0);
            bool ok = true;
            switch (lp_.rows[i].rel) {
            case Relation::LessEq: ok = slack[i].sign() >= 0; break;
            case Relation::GreaterEq: ok = slack[i].sign() <= 0; break;
            case Relation::Equal: ok = is_zero(slack[i]); break;
            }
            if (!ok) {
                needArt[i] = 1;
                ++arts;
            }
        }
        setup_columns(arts);
        for (int v = 0; v < n_; ++v) {
            x_[v] = lo_[v];
            stat_[v] = Stat::AtLower;
        }
        int a = n_ + m_;
        for (int i = 0; i < m_; ++i) {
            int s = n_ + i;
            for (const auto& [v, c] : lp_.rows[i].coef) T_[i][v] = c;
            T_[i][s] = 1;
            if (!needArt[i]) {
                basis_[i] = s;
                stat_[s] = Stat::Basic;
                x_[s] = slack[i];
                beta_[i] = lp_.rows[i].rhs;
            } else {
                // slack parks at 0, the artificial absorbs the residual
                stat_[s] = loF_[s] ? Stat::AtLower : Stat::AtUpper;
                x_[s] = 0;
                int sigma = slack[i].sign() > 0 ? 1 : -1;
                T_[i][a] = sigma;
                if (sigma < 0)
                    for (auto& e : T_[i]) e = -e;
                basis_[i] = a;
                stat_[a] = Stat::Basic;
                x_[a] = sigma > 0 ? slack[i] : Rational(-slack[i]);
                beta_[i] = sigma > 0 ? lp_.rows[i].rhs : Rational(-lp_.rows[i].rhs);
                ++a;
            }
        }
    }

    void set_costs(const std::vector<Rational>& c) {
        cost_ = c;
        d_ = c;
        for (int i = 0; i < m_; ++i) {
            const Rational& cb = cost_[basis_[i]];
            if (is_zero(cb)) continue;
            for (int j = 0; j < N_; ++j)
                if (!is_zero(T_[i][j])) d_[j] -= cb * T_[i][j];
        }
    }

    Rational objective_value() const {
        Rational z(0);
        for (int j = 0; j < N_; ++j)
            if (!is_zero(cost_[j])) z += cost_[j] * x_[j];
        return z;
    }

    bool fixed(int j) const { return loF_[j] && hiF_[j] && lo_[j] == hi_[j]; }

    void pivot(int r, int q) {
        std::vector<Rational>& pr = T_[r];
        Rational inv = Rational(1) / pr[q];
        std::vector<int> nz;
        for (int j = 0; j < N_; ++j)
            if (!is_zero(pr[j])) {
                pr[j] *= inv;
                nz.push_back(j);
            }
        beta_[r] *= inv;
        for (int i = 0; i < m_; ++i) {
            if (i == r || is_zero(T_[i][q])) continue;
            Rational f = T_[i][q];
            for (int j : nz) T_[i][j] -= f * pr[j];
            beta_[i] -= f * beta_[r];
        }
        if (!is_zero(d_[q])) {
            Rational f = d_[q];
            for (int j : nz) d_[j] -= f * pr[j];
        }
        stat_[basis_[r]] = Stat::AtLower; // caller fixes the exact bound
        basis_[r] = q;
        stat_[q] = Stat::Basic;
        ++pivots_;
    }

    /** Returns false when unbounded (phase 2 only). */
    bool iterate(bool phase2) {
        for (;;) {
            int q = -1;
            int dir = 0;
            for (int j = 0; j < N_; ++j) {
                if (stat_[j] == Stat::Basic || fixed(j)) continue;
                int sg = d_[j].sign();
                if (sg < 0 && (!hiF_[j] || x_[j] < hi_[j])) {
                    q = j;
                    dir = 1;
                    break;
                }
                if (sg > 0 && (!loF_[j] || x_[j] > lo_[j])) {
                    q = j;
                    dir = -1;
                    break;
                }
            }
            if (q < 0) return true;

            std::optional<Rational> best;
            int leaveRow = -1; // -1 with best set means bound flip of q
            int leaveCol = -1;
            bool leaveToUpper = false;
            if (loF_[q] && hiF_[q]) {
                best = hi_[q] - lo_[q];
                leaveCol = q;
            }
            for (int i = 0; i < m_; ++i) {
                const Rational& a = T_[i][q];
                if (is_zero(a)) continue;
                int b = basis_[i];
                int s = a.sign() * dir; // basic moves by -s * delta
                std::optional<Rational> lim;
                bool toUpper = false;
                if (s > 0 && loF_[b]) lim = (x_[b] - lo_[b]) / (a.sign() > 0 ? a : Rational(-a));
                if (s < 0 && hiF_[b]) {
                    lim = (hi_[b] - x_[b]) / (a.sign() > 0 ? a : Rational(-a));
                    toUpper = true;
                }
                if (!lim) continue;
                if (!best || *lim < *best || (*lim == *best && b < leaveCol)) {
                    best = *lim;
                    leaveRow = i;
                    leaveCol = b;
                    leaveToUpper = toUpper;
                }
            }
            if (!best) {
                if (!phase2) throw LpError("phase 1 unbounded: internal error");
                ray_.assign(n_, Rational(0));
                if (q < n_) ray_[q] = dir;
                for (int i = 0; i < m_; ++i)
                    if (basis_[i] < n_) ray_[basis_[i]] = -T_[i][q] * dir;
                return false;
            }
            Rational delta = *best;
            if (!is_zero(delta)) {
                for (int i = 0; i < m_; ++i)
                    if (!is_zero(T_[i][q])) x_[basis_[i]] -= T_[i][q] * dir * delta;
                x_[q] += dir * delta;
            }
            if (leaveRow < 0) {
                stat_[q] = dir > 0 ? Stat::AtUpper : Stat::AtLower;
                x_[q] = dir > 0 ? hi_[q] : lo_[q];
                ++pivots_;
                continue;
            }
            int out = basis_[leaveRow];
            pivot(leaveRow, q);
            stat_[out] = leaveToUpper ? Stat::AtUpper : Stat::AtLower;
            x_[out] = leaveToUpper ? hi_[out] : lo_[out];
        }
    }

    void retire_artificials() {
        for (int r = 0; r < m_; ++r) {
            int b = basis_[r];
            if (b < n_ + m_) continue;
            for (int j = 0; j < n_ + m_; ++j) {
                if (stat_[j] == Stat::Basic || is_zero(T_[r][j])) continue;
                pivot(r, j);
                stat_[b] = Stat::AtLower;
                x_[b] = 0;
                break;
            }
        }
        for (int a = n_ + m_; a < N_; ++a) {
            hiF_[a] = 1;
            hi_[a] = 0;
        }
    }

    bool try_warm(const std::vector<ConstraintLabel>& labels) {
        setup_columns(0);
        std::vector<char> nonbasic(n_ + m_, 0);
        for (const auto& l : labels) {
            if (l.kind == ConstraintLabel::Kind::Integrality && l.index < n_) {
                nonbasic[l.index] = 1;
                stat_[l.index] = l.side ? Stat::AtUpper : Stat::AtLower;
                continue;
            }
            bool found = false;
            for (int i = 0; i < m_; ++i)
                if (lp_.rows[i].label == l) {
                    nonbasic[n_ + i] = 1;
                    found = true;
                }
            if (!found) return false;
        }
        for (int i = 0; i < m_; ++i) {
            for (const auto& [v, c] : lp_.rows[i].coef) T_[i][v] = c;
            T_[i][n_ + i] = 1;
            basis_[i] = n_ + i;
            stat_[n_ + i] = Stat::Basic;
            beta_[i] = lp_.rows[i].rhs;
        }
        d_.assign(N_, Rational(0));
        for (int v = 0; v < n_; ++v) {
            if (nonbasic[v]) continue;
            int r = -1;
            for (int i = 0; i < m_; ++i)
                if (basis_[i] >= n_ && nonbasic[basis_[i]] && !is_zero(T_[i][v])) {
                    r = i;
                    break;
                }
            if (r < 0) return false;
            pivot(r, v);
        }
        for (int i = 0; i < m_; ++i)
            if (nonbasic[basis_[i]]) return false;
        for (int j = 0; j < N_; ++j) {
            if (stat_[j] == Stat::Basic) continue;
            if (j >= n_) stat_[j] = loF_[j] ? Stat::AtLower : Stat::AtUpper;
            if (stat_[j] == Stat::AtUpper && !hiF_[j]) return false;
            x_[j] = stat_[j] == Stat::AtUpper ? hi_[j] : lo_[j];
        }
        for (int i = 0; i < m_; ++i) {
            Rational v = beta_[i];
            for (int j = 0; j < N_; ++j)
                if (stat_[j] != Stat::Basic && !is_zero(T_[i][j]) && !is_zero(x_[j])) v -= T_[i][j] * x_[j];
            int b = basis_[i];
            if ((loF_[b] && v < lo_[b]) || (hiF_[b] && v > hi_[b])) return false;
            x_[b] = v;
        }
        pivots_ = 0;
        return true;
    }

    ExtremePoint extract(bool verify) {
        ExtremePoint ep;
        ep.pivots = pivots_;
        ep.y.assign(x_.begin(), x_.begin() + n_);
        ep.objectiveValue = lp_.constant;
        for (int v = 0; v < n_; ++v) ep.objectiveValue += lp_.objective[v] * ep.y[v];
        for (int i = 0; i < m_; ++i) {
            Rational slack = lp_.rows[i].rhs - row_activity(i, ep.y);
            bool feasible = true;
            switch (lp_.rows[i].rel) {
            case Relation::LessEq: feasible = slack.sign() >= 0; break;
            case Relation::GreaterEq: feasible = slack.sign() <= 0; break;
            case Relation::Equal: feasible = is_zero(slack); break;
            }
            if (!feasible) throw LpError("solution violates row " + lp_.rows[i].label.str());
            if (is_zero(slack)) ep.tightLabels.push_back(lp_.rows[i].label);
        }
        for (int v = 0; v < n_; ++v) {
            if (ep.y[v] < lp_.lo[v] || (lp_.hiFinite[v] && ep.y[v] > lp_.hi[v]))
                throw LpError("solution violates bounds of " + lp_.var_name(v));
            if (ep.y[v] == lp_.lo[v]) ep.tightLabels.push_back(ConstraintLabel::integrality(v, 0));
            if (lp_.hiFinite[v] && ep.y[v] == lp_.hi[v]) ep.tightLabels.push_back(ConstraintLabel::integrality(v, 1));
        }
        // Nonbasic bounds fix their coordinates, so the nonbasic rows only need to be
        // independent on the remaining columns. Surplus rows come from redundant equalities.
        std::vector<int> freeCol(n_, -1);
        int k = 0;
        for (int v = 0; v < n_; ++v) {
            if (stat_[v] == Stat::Basic) freeCol[v] = k++;
            else ep.basisLabels.push_back(ConstraintLabel::integrality(v, stat_[v] == Stat::AtUpper ? 1 : 0));
        }
        int rowsWanted = n_ - static_cast<int>(ep.basisLabels.size());
        int rowCands = 0;
        for (int i = 0; i < m_; ++i)
            if (stat_[n_ + i] != Stat::Basic) ++rowCands;
        if (rowCands == rowsWanted && !verify) {
            for (int i = 0; i < m_; ++i)
                if (stat_[n_ + i] != Stat::Basic) ep.basisLabels.push_back(lp_.rows[i].label);
        } else {
            IncrementalRank ir(k);
            for (int i = 0; i < m_ && rowsWanted > 0; ++i) {
                if (stat_[n_ + i] == Stat::Basic) continue;
                std::vector<Rational> v(k, Rational(0));
                for (const auto& [var, c] : lp_.rows[i].coef)
                    if (freeCol[var] >= 0) v[freeCol[var]] = c;
                if (ir.add(std::move(v))) {
                    ep.basisLabels.push_back(lp_.rows[i].label);
                    --rowsWanted;
                }
            }
            if (rowsWanted != 0) throw LpError("basis certificate is rank deficient");
        }
        std::sort(ep.basisLabels.begin(), ep.basisLabels.end());
        return ep;
    }
};

} // namespace detail

/** Optimal basic feasible solution by two-phase bounded simplex (Bland's rule). */
inline LpResult solve_to_vertex(const LinearProgram& lp, const SolveOptions& opt = {}) {
    if (static_cast<int>(lp.objective.size()) != lp.variableCount)
        throw LpError("objective length differs from variable count");
    for (int v = 0; v < lp.variableCount; ++v)
        if (lp.hiFinite[v] && lp.hi[v] < lp.lo[v]) {
            LpResult r;
            r.status = LpStatus::Infeasible;
            r.certificate.push_back(ConstraintLabel::integrality(v, 1));
            return r;
        }
    detail::Tableau t(lp);
    return t.run(opt);
}

/** As solve_to_vertex, but infeasibility and unboundedness are errors. */
inline ExtremePoint require_vertex(const LinearProgram& lp, const std::string& context,
                                   const SolveOptions& opt = {}) {
    LpResult r = solve_to_vertex(lp, opt);
    if (r.status == LpStatus::Infeasible) {
        std::string rows;
        for (const auto& l : r.certificate) rows += " " + l.str();
        throw LpError(context + ": LP infeasible; certificate rows:" + rows);
    }
    if (r.status == LpStatus::Unbounded) throw LpError(context + ": LP unbounded");
    return r.point;
}

/** CPLEX-LP-like text with exact p/q coefficients, for external cross-checking. */
inline std::string to_lp_text(const LinearProgram& lp) {
    std::ostringstream os;
    auto term = [&](const Rational& c, int v, bool first) {
        std::string s;
        if (c.sign() < 0) s = first ? "- " : " - ";
        else if (!first) s = " + ";
        Rational a = c.sign() < 0 ? Rational(-c) : c;
        if (a != 1) s += to_string(a) + " ";
        return s + lp.var_name(v);
    };
    os << "Minimize\n obj:";
    bool first = true;
    for (int v = 0; v < lp.variableCount; ++v) {
        if (is_zero(lp.objective[v])) continue;
        os << (first ? " " : "") << term(lp.objective[v], v, first);
        first = false;
    }
    if (!is_zero(lp.constant) || first) os << (first ? " " : " + ") << to_string(lp.constant);
    os << "\nSubject To\n";
    for (const auto& row : lp.rows) {
        os << " " << row.label.str() << ":";
        bool f = true;
        for (const auto& [v, c] : row.coef) {
            os << (f ? " " : "") << term(c, v, f);
            f = false;
        }
        if (f) os << " 0";
        os << (row.rel == Relation::LessEq ? " <= " : row.rel == Relation::Equal ? " = " : " >= ")
           << to_string(row.rhs) << "\n";
    }
    os << "Bounds\n";
    for (int v = 0; v < lp.variableCount; ++v) {
        os << " " << to_string(lp.lo[v]) << " <= " << lp.var_name(v);
        if (lp.hiFinite[v]) os << " <= " << to_string(lp.hi[v]);
        os << "\n";
    }
    os << "End\n";
    return os.str();
}

} // namespace gkm
