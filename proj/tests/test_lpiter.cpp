#include "gkm/lpiter.hpp"
#include "support/vertex_enum.hpp"

#include <gtest/gtest.h>

using namespace gkm;
using nlohmann::json;

namespace {

Rational q(long long p, long long d = 1) { return Rational(p, d); }

GkmInstance desk3() {
    auto any = parse_instance(json::parse(R"({
      "kind": "gkm",
      "facilities": [{"id": "f0"}, {"id": "f1"}, {"id": "f2"}],
      "clients": [{"id": "c0", "coverage": [1]}, {"id": "c1", "coverage": [1]}, {"id": "c2", "coverage": [1]}],
      "metric": {"form": "l1-points", "points": [[0], [5], [10], [1], [4], [9]]},
      "W": [[1, 1, 1]], "b": ["3/2"], "c": [3]
    })"));
    return std::get<GkmInstance>(any);
}

/** LP2 over the copies, written independently of emit_lp: min sum_j sum_{i in F_j} d y_i. */
LinearProgram lp2(const LpIterInput& in, bool discretized, const Discretization& disc) {
    int n = static_cast<int>(in.facilities.size());
    LinearProgram lp(n);
    std::vector<Rational> cover(n, Rational(0));
    for (std::size_t j = 0; j < in.clients.size(); ++j) {
        std::vector<std::pair<int, Rational>> row;
        for (int i : in.fballs[j]) {
            Rational d = in.metric->d(in.clients[j].point, in.facilities[i].point);
            lp.objective[i] += discretized ? disc.round_up(d) : d;
            cover[i] += in.clients[j].a[0];
            row.emplace_back(i, Rational(1));
        }
        if (!row.empty()) lp.add_row(row, Relation::LessEq, Rational(1), ConstraintLabel::cpart(static_cast<int>(j)));
    }
    std::vector<std::pair<int, Rational>> w, c;
    for (int i = 0; i < n; ++i) {
        w.emplace_back(i, in.facilities[i].weight[0]);
        c.emplace_back(i, cover[i]);
    }
    lp.add_row(w, Relation::LessEq, in.b[0], ConstraintLabel::knapsack(0));
    lp.add_row(c, Relation::GreaterEq, in.c[0], ConstraintLabel::coverage(0));
    return lp;
}

} // namespace

TEST(Discretization, LevelsAndRounding) {
    Discretization disc(q(2), q(1));
    disc.reach(q(100));
    EXPECT_EQ(disc.L(-2), q(-1));
    EXPECT_EQ(disc.L(-1), q(0));
    EXPECT_EQ(disc.round_up(q(0)), q(0));
    EXPECT_EQ(disc.level_of(q(0)), -1);
    EXPECT_EQ(disc.round_up(q(3)), q(4));
    EXPECT_EQ(disc.level_of(q(3)), 2);
    EXPECT_EQ(disc.round_up(q(4)), q(4));
    EXPECT_EQ(disc.L(9), q(512)); // beyond the cache
    for (int l = -2; l < 8; ++l) EXPECT_LT(disc.L(l), disc.L(l + 1));
    EXPECT_THROW(Discretization(q(1), q(1)), std::invalid_argument);
    EXPECT_THROW(Discretization(q(2), q(2)), std::invalid_argument);
}

TEST(Discretization, RoundingStaysWithinOneLevel) {
    SeededRng rng(5);
    for (int t = 0; t < 40; ++t) {
        Rational tau = q(rng.between(1001, 3000), 1000);
        Discretization disc(tau, sample_offset(tau, static_cast<std::uint64_t>(t)));
        for (int s = 0; s < 20; ++s) {
            Rational d = q(rng.between(1000, 60000), 1000);
            Rational dp = disc.round_up(d);
            EXPECT_LE(d, dp);
            EXPECT_LT(dp, tau * d);
        }
    }
}

TEST(Discretization, OffsetLiesInRangeAndIsSeeded) {
    Rational tau = q(1023, 500);
    for (std::uint64_t s = 0; s < 200; ++s) {
        Rational a = sample_offset(tau, s);
        EXPECT_GE(a, 1);
        EXPECT_LT(a, tau);
        EXPECT_LE(denom(a), Integer(1000000000));
    }
    EXPECT_EQ(sample_offset(tau, 3), sample_offset(tau, 3));
    EXPECT_NE(sample_offset(tau, 3), sample_offset(tau, 4));
    GkmInstance g = desk3();
    EXPECT_THROW(discretize(g.metric, q(1), 0), std::invalid_argument);
}

TEST(Discretization, MeanRoundedUnitDistanceOnSmallSample) {
    // 4000 seeds; the acceptance binary runs the full sample at 1% tolerance
    Rational tau = q(1023, 500);
    double sum = 0;
    for (std::uint64_t s = 0; s < 4000; ++s) sum += to_double(Discretization(tau, sample_offset(tau, s)).round_up(q(1)));
    EXPECT_NEAR(sum / 4000, 1.46113, 0.03);
}

TEST(Split, SortedIncrementsExample) {
    auto copies = split_sorted({q(1, 3), q(2, 3)}, q(2, 3), false);
    ASSERT_EQ(copies.size(), 2u);
    EXPECT_EQ(copies[0].y, q(1, 3));
    EXPECT_EQ(copies[1].y, q(1, 3));
    EXPECT_EQ(copies[0].clients, (std::vector<int>{0, 1}));
    EXPECT_EQ(copies[1].clients, (std::vector<int>{1}));
    auto withResidual = split_sorted({q(1, 4)}, q(1), true);
    ASSERT_EQ(withResidual.size(), 2u);
    EXPECT_EQ(withResidual[1].y, q(3, 4));
    EXPECT_TRUE(withResidual[1].clients.empty());
}

TEST(Split, CostBoundedCopiesReproduceMassAndStayCheap) {
    SeededRng rng(17);
    for (int t = 0; t < 300; ++t) {
        int n = static_cast<int>(rng.between(1, 6));
        Rational y = q(rng.between(1, 12), 12);
        std::vector<Rational> x(n), d(n);
        for (int j = 0; j < n; ++j) {
            x[j] = y * q(rng.between(0, 6), 6);
            d[j] = q(rng.between(0, 9));
        }
        auto copies = split_cost_bounded(x, y, d);
        std::vector<Rational> got(n, Rational(0));
        Rational avg(0), maxd(0), total(0);
        for (int j = 0; j < n; ++j)
            if (x[j] > 0) {
                avg += d[j] * x[j] / y;
                maxd = rmax(maxd, d[j]);
            }
        for (const auto& c : copies) {
            Rational s(0);
            for (int j : c.clients) {
                got[j] += c.y;
                s += d[j];
            }
            EXPECT_LE(s, avg + maxd);
            EXPECT_GT(c.y, 0);
            total += c.y;
        }
        EXPECT_EQ(got, x);
        EXPECT_LE(total, y);
    }
}

TEST(Duplication, IntegralLp1GivesSingletonBalls) {
    auto any = parse_instance(json::parse(R"({
      "kind": "knapsack", "budget": 2,
      "facilities": [{"id": "f0", "weight": 1}, {"id": "f1", "weight": 1}],
      "clients": [{"id": "c0"}, {"id": "c1"}, {"id": "c2"}],
      "metric": {"form": "l1-points", "points": [[0], [10], [1], [2], [12]]}
    })"));
    auto ex = duplicate_and_extract_fballs(to_gkm(any));
    for (const auto& f : ex.input.fballs) EXPECT_EQ(f.size(), 1u);
    for (const auto& y : ex.input.y) EXPECT_EQ(y, 1);
    EXPECT_EQ(ex.lp1.value, q(1 + 2 + 2));
}

TEST(Duplication, Lp2OptimumMatchesLp1OnDeskInstance) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto oracle = testsupport::enumerate_optimum(lp2(ex.input, false, Discretization()));
    ASSERT_TRUE(oracle);
    EXPECT_EQ(*oracle, ex.lp1.value);
    // frozen from an independent floating-point LP1 solve: 15/2 = 7.5
    EXPECT_EQ(ex.lp1.value, q(15, 2));
}

TEST(Duplication, InfeasibleCoverageIsReported) {
    GkmInstance g = desk3();
    g.c[0] = 4;
    EXPECT_THROW(duplicate_and_extract_fballs(g), InstanceError);
}

TEST(LpIter, FreshBuildLevelsAndInvariants) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    Discretization disc(q(2), q(1));
    auto st = build_lp_iter(ex.input, disc);
    EXPECT_TRUE(check_basic_invariants(st).ok()) << check_basic_invariants(st).summary();
    for (int j = 0; j < st.nc(); ++j) {
        EXPECT_EQ(st.tag[j], ClientTag::Part);
        int expect = -1;
        for (int i : st.F[j]) expect = std::max(expect, disc.level_of(st.d(j, i)));
        EXPECT_EQ(st.level[j], expect);
        for (int i : st.B[j]) EXPECT_LE(st.dprime(j, i), disc.L(st.level[j] - 1));
    }
}

TEST(LpIter, EmptyBallSitsAtFloorLevel) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    ex.input.fballs[1].clear();
    auto st = build_lp_iter(ex.input, Discretization(q(2), q(1)));
    EXPECT_EQ(st.level[1], -1);
    EXPECT_TRUE(st.B[1].empty());
    EXPECT_TRUE(check_basic_invariants(st).ok());
}

TEST(LpIter, LevelThreeBallHasLevelTwoInnerBall) {
    LpIterInput in;
    MetricInstance m;
    m.facilityCount = 2;
    m.clientCount = 1;
    m.dist = {{q(0), q(5), q(7)}, {q(5), q(0), q(2)}, {q(7), q(2), q(0)}};
    in.metric = share_metric(m);
    in.facilities = {{0, 0, "f0", {q(1)}}, {1, 1, "f1", {q(1)}}};
    in.clients = {{2, 0, "c0", {q(1)}, false}};
    in.fballs = {{0, 1}};
    in.b = {q(1)};
    in.c = {q(1)};
    auto st = build_lp_iter(in, Discretization(q(2), q(1)));
    EXPECT_EQ(st.level[0], 3); // d' = 8 = L(3)
    EXPECT_EQ(st.B[0], (std::vector<int>{1})); // d' = 2 <= L(2) = 4
}

TEST(LpIter, InitialEmitEqualsLp2OverRoundedDistances) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        GeneratorParams p;
        auto g = to_gkm(generate_instance(seed, 3, 4, Kind::Gkm, p));
        auto ex = duplicate_and_extract_fballs(g);
        auto disc = discretize(g.metric, q(1023, 500), seed);
        auto st = build_lp_iter(ex.input, disc);
        auto ep = solve_state(st);
        auto lp = lp2(ex.input, true, st.disc);
        if (lp.variableCount <= 7) {
            auto oracle = testsupport::enumerate_optimum(lp);
            ASSERT_TRUE(oracle);
            EXPECT_EQ(ep.objectiveValue, *oracle) << "seed " << seed;
        }
        auto direct = solve_to_vertex(lp);
        ASSERT_EQ(direct.status, LpStatus::Optimal);
        EXPECT_EQ(ep.objectiveValue, direct.point.objectiveValue);
        EXPECT_EQ(lp_iter_value(st, ep.y), ep.objectiveValue);
        // the LP2 optimum over true distances equals Opt(LP1)
        EXPECT_EQ(solve_to_vertex(lp2(ex.input, false, st.disc)).point.objectiveValue, ex.lp1.value);
    }
}

TEST(LpIter, EmitFoldsFullClientConstants) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto st = build_lp_iter(ex.input, Discretization(q(2), q(1)));
    st.tag[0] = ClientTag::Full;
    st.B[0].clear();
    auto e = emit_lp(st);
    EXPECT_EQ(e.lp.constant, st.Lj(0));
    for (const auto& row : e.lp.rows) EXPECT_NE(row.label, ConstraintLabel::cfull(0));
    EXPECT_EQ(e.lp.rows.back().rhs, q(2)); // coverage 3 minus the full client
}

TEST(Invariants, EqualLevelStarNeighborsNamePair) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto st = build_lp_iter(ex.input, Discretization(q(2), q(1)));
    st.F[0] = {0};
    st.F[1] = {0};
    st.level[0] = st.level[1] = 3;
    st.recompute_inner(0);
    st.recompute_inner(1);
    st.tag[0] = st.tag[1] = ClientTag::Star;
    auto rep = check_basic_invariants(st);
    const auto* item = rep.find("distinct-neighbors");
    ASSERT_NE(item, nullptr);
    EXPECT_FALSE(item->pass);
    EXPECT_NE(item->witness.find("c0"), std::string::npos);
    EXPECT_NE(item->witness.find("c1"), std::string::npos);
}

TEST(Invariants, StaleInnerBallIsCaught) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto st = build_lp_iter(ex.input, Discretization(q(2), q(1)));
    st.level[2] += 1; // B no longer matches
    EXPECT_FALSE(check_basic_invariants(st).find("inner-ball")->pass || st.F[2].empty());
}

TEST(Invariants, ExtraClausesVacuousForHugeBudget) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto st = build_lp_iter(ex.input, Discretization(q(2), q(1)));
    ExtraData extra;
    extra.rho = q(1, 4);
    extra.delta = q(1, 4);
    extra.U = q(100000);
    extra.R.assign(st.nc(), g.metric.diameter());
    st.extra = extra;
    EXPECT_TRUE(check_extra_invariants(st, Kind::Knapsack).ok());
    EXPECT_TRUE(check_extra_invariants(st, Kind::Outliers).ok());
    st.extra->U = q(1, 100);
    EXPECT_FALSE(check_extra_invariants(st, Kind::Knapsack).find("extra-cheap")->pass);
    EXPECT_FALSE(check_extra_invariants(st, Kind::Knapsack).find("extra-sparse")->pass);
}

TEST(Invariants, DummyClauseForPreopenedFacility) {
    LpIterInput in;
    MetricInstance m;
    m.facilityCount = 1;
    m.clientCount = 2;
    m.dist = {{q(0), q(0), q(3)}, {q(0), q(0), q(3)}, {q(3), q(3), q(0)}};
    in.metric = share_metric(m);
    in.facilities = {{0, 0, "f0", {q(1)}}};
    in.clients = {{1, -1, "dummy", {q(1)}, true}, {2, 0, "c0", {q(1)}, false}};
    in.fballs = {{0}, {0}};
    in.b = {q(1)};
    in.c = {q(2)};
    in.S0 = {0};
    in.S0origins = {0};
    in.C0 = {0};
    auto st = build_lp_iter(in, Discretization(q(2), q(1)));
    ExtraData extra;
    extra.rho = q(1, 4);
    extra.delta = q(1, 4);
    extra.U = q(1000);
    extra.R = {q(0), q(3)};
    st.extra = extra;
    EXPECT_EQ(st.tag[0], ClientTag::Star);
    EXPECT_EQ(st.level[0], -1);
    auto rep = check_extra_invariants(st, Kind::Knapsack);
    EXPECT_TRUE(rep.ok()) << rep.summary();
    st.tag[0] = ClientTag::Part;
    EXPECT_FALSE(check_extra_invariants(st, Kind::Knapsack).find("extra-dummy")->pass);
}

TEST(Snapshot, CarriesDiscretizationAndBalls) {
    GkmInstance g = desk3();
    auto ex = duplicate_and_extract_fballs(g);
    auto st = build_lp_iter(ex.input, discretize(g.metric, q(2), 11));
    auto j = snapshot_json(st);
    EXPECT_EQ(j["seed"], 11);
    EXPECT_EQ(j["tau"], "2");
    EXPECT_EQ(j["clients"].size(), 3u);
    EXPECT_EQ(j["clients"][0]["tag"], "part");
}
