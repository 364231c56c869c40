// Acceptance run: one PASS/FAIL line per criterion, then informational lines.
// Exit status is nonzero when any criterion fails.

#include "gkm/knapsack.hpp"
#include "gkm/outliers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace gkm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
    Verdict(int i, std::string n) : id(i), name(std::move(n)) {}

    int id = 0;
    std::string name;
    bool pass = true;
    std::string detail;
    double seconds = 0;
    std::string firstFailure;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        if (pass) firstFailure = what;
        pass = false;
    }
};

void print(const Verdict& v) {
    std::printf("[%s] %d %s: %s (%.2fs)\n", v.pass ? "PASS" : "FAIL", v.id, v.name.c_str(), v.detail.c_str(), v.seconds);
    if (!v.pass) std::printf("       first failure: %s\n", v.firstFailure.c_str());
    std::fflush(stdout);
}

void info(const std::string& s) {
    std::printf("[INFO] %s\n", s.c_str());
    std::fflush(stdout);
}

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << x;
    return os.str();
}

const Rational kEps(1, 10);
constexpr int kSeeds = 200;
constexpr int kDeskInstances = 20;

// ---------------------------------------------------------------------------
// 1

Verdict discretization_expectation() {
    Verdict v{1, "discretization expectation"};
    auto t0 = Clock::now();
    std::ostringstream d;
    for (const Rational& tau : {knapsack_default_tau(), outliers_default_tau()}) {
        double sum = 0;
        const int n = 100000;
        for (int s = 0; s < n; ++s) {
            Discretization disc(tau, sample_offset(tau, s), s);
            sum += to_double(disc.round_up(Rational(1)));
        }
        double mean = sum / n;
        double t = to_double(tau);
        double want = (t - 1) / std::log(t);
        double rel = std::abs(mean - want) / want;
        v.require(rel <= 0.01, "tau " + to_string(tau) + " relative error " + fmt(rel, 6));
        d << "tau=" << fmt(t) << " mean=" << fmt(mean, 6) << " target=" << fmt(want, 6) << " rel=" << fmt(rel, 6) << "; ";
    }
    v.seconds = seconds_since(t0);
    v.require(v.seconds < 5, "runtime " + fmt(v.seconds) + "s >= 5s");
    v.detail = d.str() + "limit 5s";
    return v;
}

// ---------------------------------------------------------------------------
// 2, 3 and the pseudo-approximation half of 4

struct GkmTallies {
    int instances = 0, events = 0, solves = 0, vertices = 0, maxFractional = 0;
    int maxChains = 0, maxViolating = 0, bigVertices = 0, certificates = 0;
    double seconds = 0;
};

void run_gkm_family(Verdict& c2, Verdict& c3, Verdict& c4, GkmTallies& t) {
    auto t0 = Clock::now();
    GeneratorParams gp;
    gp.r1 = 1;
    gp.r2 = 1;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        auto g = to_gkm(generate_instance(seed, 10, 12, Kind::Gkm, gp));
        auto ex = duplicate_and_extract_fballs(g);
        LpIterState st = build_lp_iter(ex.input, discretize(g.metric, knapsack_default_tau(), seed));
        std::string tag = "gkm seed " + std::to_string(seed);
        auto first = check_basic_invariants(st);
        c2.require(first.ok(), tag + " initial state: " + first.summary());

        RoundingConfig cfg;
        cfg.tau = knapsack_default_tau();
        cfg.onEvent = [&](const LpIterState& s, const RoundingEvent& e) {
            ++t.events;
            auto rep = check_basic_invariants(s);
            c2.require(rep.ok(), tag + " after " + event_name(e.kind) + ": " + rep.summary());
        };
        cfg.onRoundVertex = [&](const LpIterState& s, const ExtremePoint& ep) {
            ++t.vertices;
            auto dec = chain_decompose(s, ep);
            int r = s.r();
            t.maxChains = std::max(t.maxChains, static_cast<int>(dec.chains.size()));
            t.maxViolating = std::max(t.maxViolating, static_cast<int>(dec.violating.size()));
            c3.require(static_cast<int>(dec.chains.size()) <= 3 * r, tag + ": " + std::to_string(dec.chains.size()) + " chains");
            c3.require(static_cast<int>(dec.violating.size()) <= 2 * r,
                       tag + ": " + std::to_string(dec.violating.size()) + " violating clients");
            c3.require(dec.fractionalFacilities <= dec.rank + r,
                       tag + ": |F<1| = " + std::to_string(dec.fractionalFacilities) + " > rank + r");
            if (dec.fractionalFacilities >= 15 * r) {
                ++t.bigVertices;
                c3.require(find_candidate_configuration(s, ep).has_value(), tag + ": no candidate configuration");
            }
        };
        RoundingLog log;
        ExtremePoint ep;
        try {
            ep = pseudo_approximation(st, cfg, log);
        } catch (const std::exception& e) {
            c2.require(false, tag + ": " + e.what());
            continue;
        }
        ++t.instances;
        t.solves += log.solves;
        int frac = static_cast<int>(fractional_facilities(st, ep).size());
        t.maxFractional = std::max(t.maxFractional, frac);
        c2.require(frac <= 15 * st.r(), tag + ": " + std::to_string(frac) + " fractional facilities");
        std::optional<Rational> last;
        for (const auto& e : log.events)
            if (e.kind == EventKind::Solve) {
                c2.require(!last || e.lpObjective <= *last, tag + ": LP objective rose");
                last = e.lpObjective;
            }
        auto cert = certify_reroute_bound(st, st.alive_facilities(), Rational(1));
        ++t.certificates;
        c4.require(cert.ok, tag + " pseudo-approximation: " + cert.witness);
    }
    t.seconds = seconds_since(t0);
}

// ---------------------------------------------------------------------------
// 5 to 8

struct EndToEnd {
    double meanMax = 0, meanAll = 0, worst = 0;
    int runs = 0, certificates = 0, partialSteps = 0;
    std::vector<std::string> winners;
    double seconds = 0;
};

bool contains_all(const std::vector<int>& big, const std::vector<int>& small) {
    for (int x : small)
        if (std::find(big.begin(), big.end(), x) == big.end()) return false;
    return true;
}

std::vector<KnapsackInstance> knapsack_desk() {
    std::vector<KnapsackInstance> out;
    for (std::uint64_t s = 1; s <= kDeskInstances; ++s)
        out.push_back(std::get<KnapsackInstance>(generate_instance(1000 + s, 7, 9, Kind::Knapsack)));
    return out;
}

std::vector<OutliersInstance> outliers_desk() {
    std::vector<OutliersInstance> out;
    for (std::uint64_t s = 1; s <= kDeskInstances; ++s) {
        GeneratorParams gp;
        gp.k = 2 + static_cast<int>(s % 2);
        gp.m = 6 + static_cast<int>(s % 3);
        out.push_back(std::get<OutliersInstance>(generate_instance(2000 + s, 7, 9, Kind::Outliers, gp)));
    }
    return out;
}

EndToEnd knapsack_end_to_end(const std::vector<KnapsackInstance>& desk, const std::vector<OracleResult>& opts,
                             Verdict& c4, Verdict* c5) {
    EndToEnd e;
    auto t0 = Clock::now();
    double total = 0;
    for (std::size_t n = 0; n < desk.size(); ++n) {
        const auto& in = desk[n];
        PipelineOptions po;
        po.oracle = &opts[n];
        double sum = 0;
        for (int seed = 0; seed < kSeeds; ++seed) {
            std::string tag = in.id + " seed " + std::to_string(seed);
            EndToEndRun run;
            try {
                run = solve_knapsack(in, kEps, seed, po);
            } catch (const std::exception& ex) {
                if (c5) c5->require(false, tag + ": " + ex.what());
                e.winners.push_back("error");
                continue;
            }
            ++e.runs;
            const auto& s = run.best;
            if (c5) {
                c5->require(weight_of(in, s.open) <= in.B, tag + ": over budget");
                c5->require(static_cast<int>(s.served.size()) == in.nc(), tag + ": a client is unserved");
                c5->require(contains_all(s.open, run.winner.S0), tag + ": S0 not open");
            }
            for (const auto& c : run.winner.certificates) {
                ++e.certificates;
                c4.require(c.ok, tag + " knapsack post-processing: " + c.witness);
            }
            double ratio = cost_ratio(s.cost, opts[n].optCost);
            sum += ratio;
            e.worst = std::max(e.worst, ratio);
            e.winners.push_back(solution_json(in, s).dump());
        }
        double mean = sum / kSeeds;
        e.meanMax = std::max(e.meanMax, mean);
        total += sum;
    }
    e.meanAll = total / (kSeeds * static_cast<double>(desk.size()));
    e.seconds = seconds_since(t0);
    return e;
}

EndToEnd outliers_end_to_end(const std::vector<OutliersInstance>& desk, const std::vector<OracleResult>& opts,
                             Verdict& c4, Verdict& c6) {
    EndToEnd e;
    auto t0 = Clock::now();
    double total = 0;
    for (std::size_t n = 0; n < desk.size(); ++n) {
        const auto& in = desk[n];
        PipelineOptions po;
        po.oracle = &opts[n];
        double sum = 0;
        for (int seed = 0; seed < kSeeds; ++seed) {
            std::string tag = in.id + " seed " + std::to_string(seed);
            EndToEndRun run;
            try {
                run = solve_outliers(in, kEps, seed, po);
            } catch (const std::exception& ex) {
                c6.require(false, tag + ": " + ex.what());
                continue;
            }
            ++e.runs;
            const auto& s = run.best;
            c6.require(static_cast<int>(s.open.size()) <= in.k, tag + ": opens more than k");
            c6.require(static_cast<int>(s.served.size()) >= in.m, tag + ": serves fewer than m");
            for (const auto& c : run.winner.certificates) {
                ++e.certificates;
                c4.require(c.ok, tag + " outliers post-processing: " + c.witness);
            }

            // replay the winning sub-instance and audit the k/m ledger of each round
            auto subs = preprocess_outliers(in, {run.rho, run.delta, run.U}, PreprocessMode::Oracle, run.tau, seed,
                                            &opts[n]);
            RoundingConfig cfg;
            cfg.tau = run.tau;
            cfg.gapC = gap_constant(run.tau, eps_prime(kEps));
            LpIterState st = subs.at(0).state;
            int k = detail::as_int(st.b.at(0)), m = detail::as_int(st.c.at(0));
            auto post = outliers_postprocess(st, cfg);
            for (const auto& step : post.steps) {
                c6.require(step.kBefore == k && step.mBefore == m, tag + ": k/m bookkeeping drifted");
                if (step.partial) {
                    ++e.partialSteps;
                    k -= step.partial->kUsed;
                    m -= static_cast<int>(step.partial->served.size());
                    c6.require(step.partial->kUsed == static_cast<int>(step.partial->S.size()),
                               tag + ": kUsed differs from facilities opened");
                } else {
                    c6.require(static_cast<int>(step.S.size()) <= k, tag + ": base case exceeds remaining k");
                }
            }
            c6.require(s.cost == run_outliers_pipeline(in, subs[0], cfg).solution.cost, tag + ": replay differs");

            double ratio = cost_ratio(s.cost, opts[n].optCost);
            sum += ratio;
            e.worst = std::max(e.worst, ratio);
        }
        e.meanMax = std::max(e.meanMax, sum / kSeeds);
        total += sum;
    }
    e.meanAll = total / (kSeeds * static_cast<double>(desk.size()));
    e.seconds = seconds_since(t0);
    return e;
}

template <class Inst>
void relaxation_order(Verdict& v, const std::vector<Inst>& desk, const std::vector<OracleResult>& opts) {
    for (std::size_t n = 0; n < desk.size(); ++n) {
        auto ex = duplicate_and_extract_fballs(to_gkm(desk[n]));
        Rational lp2 = lp2_optimum(ex.input);
        v.require(ex.lp1.value <= lp2, desk[n].id + ": LP1 > LP2");
        v.require(lp2 <= opts[n].optCost, desk[n].id + ": LP2 > OPT");
    }
}

// ---------------------------------------------------------------------------
// informational

// S0 empty, radii at the diameter, U far above OPT: the sparsity clauses are vacuous
template <class Inst>
SubInstance unconstrained_sub(const Inst& in, Kind kind, const Rational& tau, std::uint64_t seed) {
    SparseSpec spec;
    spec.R.assign(in.nc(), in.metric.diameter());
    if constexpr (std::is_same_v<Inst, OutliersInstance>) spec.mPrime = in.m;
    auto cand = build_candidate(to_gkm(in), kind, spec, {Rational(1, 4), Rational(1, 4), Rational(1000000)});
    SubInstance sub;
    sub.parent = in.id;
    sub.candidate = std::make_shared<const SparseCandidate>(std::move(*cand));
    sub.state = instantiate(*sub.candidate, discretize(in.metric, tau, seed));
    return sub;
}

void informational(const std::vector<KnapsackInstance>& kd, const std::vector<OracleResult>& ko,
                   const std::vector<OutliersInstance>& od, const std::vector<OracleResult>& oo) {
    {
        // fractional cost of the pseudo-approximation against OPT on desk GKM instances
        GeneratorParams gp;
        double sum = 0, worst = 0;
        int runs = 0;
        for (std::uint64_t inst = 1; inst <= 5; ++inst) {
            auto g = to_gkm(generate_instance(3000 + inst, 7, 9, Kind::Gkm, gp));
            Rational opt = brute_force(g).optCost;
            auto ex = duplicate_and_extract_fballs(g);
            for (int seed = 0; seed < kSeeds; ++seed) {
                LpIterState st = build_lp_iter(ex.input, discretize(g.metric, knapsack_default_tau(), seed));
                auto ep = pseudo_approximation(st);
                double r = cost_ratio(assemble_fractional_solution(st, ep).cost, opt);
                sum += r;
                worst = std::max(worst, r);
                ++runs;
            }
        }
        info("pseudo-approximation fractional cost / OPT on 5 GKM instances x 200 seeds: mean " + fmt(sum / runs) +
             ", max " + fmt(worst) + " (reference 6.387)");
    }
    {
        double sum = 0, worst = 0;
        int runs = 0;
        for (std::size_t n = 0; n < kd.size(); ++n)
            for (int seed = 0; seed < 20; ++seed) {
                auto sub = unconstrained_sub(kd[n], Kind::Knapsack, knapsack_default_tau(), seed);
                RoundingConfig cfg;
                cfg.tau = knapsack_default_tau();
                double r = cost_ratio(run_knapsack_pipeline(kd[n], sub, cfg).solution.cost, ko[n].optCost);
                sum += r;
                worst = std::max(worst, r);
                ++runs;
            }
        info("knapsack pipeline on the unconstrained sub-instance (no S0, no radius caps), 20 instances x 20 seeds: "
             "mean " + fmt(sum / runs) + ", max " + fmt(worst));
    }
    {
        double sum = 0, worst = 0;
        int runs = 0, partial = 0;
        for (std::size_t n = 0; n < od.size(); ++n)
            for (int seed = 0; seed < 20; ++seed) {
                auto sub = unconstrained_sub(od[n], Kind::Outliers, outliers_default_tau(), seed);
                RoundingConfig cfg;
                cfg.tau = outliers_default_tau();
                cfg.gapC = gap_constant(cfg.tau, eps_prime(kEps));
                LpIterState st = sub.state;
                auto post = outliers_postprocess(st, cfg);
                for (const auto& s : post.steps) partial += s.partial.has_value();
                double r = cost_ratio(run_outliers_pipeline(od[n], sub, cfg).solution.cost, oo[n].optCost);
                sum += r;
                worst = std::max(worst, r);
                ++runs;
            }
        info("outliers pipeline on the unconstrained sub-instance, 20 instances x 20 seeds: mean " + fmt(sum / runs) +
             ", max " + fmt(worst) + ", ComputePartial rounds " + std::to_string(partial));
    }
}

} // namespace

int main() {
    std::vector<Verdict> all;
    auto v1 = discretization_expectation();
    print(v1);
    all.push_back(v1);

    Verdict v2{2, "pseudo-approximation structure"}, v3{3, "chain decomposition bounds"}, v4{4, "rerouting bound"};
    GkmTallies gt;
    run_gkm_family(v2, v3, v4, gt);
    v2.seconds = v3.seconds = gt.seconds;
    v2.require(gt.instances == 100, "only " + std::to_string(gt.instances) + " of 100 instances finished");
    v2.require(gt.seconds < 120, "runtime " + fmt(gt.seconds) + "s >= 120s");
    v2.detail = std::to_string(gt.instances) + " instances (10x12, r=2), " + std::to_string(gt.events) +
                " events checked, " + std::to_string(gt.solves) + " solves, max fractional " +
                std::to_string(gt.maxFractional) + " <= 30";
    v3.detail = std::to_string(gt.vertices) + " vertices, max chains " + std::to_string(gt.maxChains) +
                " <= 6, max violating " + std::to_string(gt.maxViolating) + " <= 4, vertices with |F<1| >= 30: " +
                std::to_string(gt.bigVertices);
    print(v2);
    print(v3);

    auto kd = knapsack_desk();
    auto od = outliers_desk();
    std::vector<OracleResult> ko, oo;
    for (const auto& in : kd) ko.push_back(brute_force(in));
    for (const auto& in : od) oo.push_back(brute_force(in));

    Verdict v5{5, "knapsack end to end"};
    Verdict dummy4{4, ""};
    auto ke = knapsack_end_to_end(kd, ko, v4, &v5);
    double kBound = 6.387 * 1.1 / 0.9 + 0.1;
    v5.require(ke.meanMax <= kBound, "per-instance mean " + fmt(ke.meanMax) + " > " + fmt(kBound));
    v5.require(ke.seconds < 600, "runtime " + fmt(ke.seconds) + "s >= 600s");
    v5.seconds = ke.seconds;
    v5.detail = std::to_string(kd.size()) + " instances (7x9) x " + std::to_string(kSeeds) + " seeds; " +
                std::to_string(ke.runs) + " runs; worst per-instance mean " + fmt(ke.meanMax) + ", overall mean " +
                fmt(ke.meanAll) + ", max run " + fmt(ke.worst) + "; bound " + fmt(kBound);

    Verdict v6{6, "outliers end to end"};
    auto oe = outliers_end_to_end(od, oo, v4, v6);
    double oBound = 6.994 + 0.1;
    v6.require(oe.meanMax <= oBound, "per-instance mean " + fmt(oe.meanMax) + " > " + fmt(oBound));
    v6.require(oe.seconds < 900, "runtime " + fmt(oe.seconds) + "s >= 900s");
    v6.seconds = oe.seconds;
    v6.detail = std::to_string(od.size()) + " instances (7x9) x " + std::to_string(kSeeds) + " seeds; " +
                std::to_string(oe.runs) + " runs; worst per-instance mean " + fmt(oe.meanMax) + ", overall mean " +
                fmt(oe.meanAll) + ", max run " + fmt(oe.worst) + "; ComputePartial rounds " +
                std::to_string(oe.partialSteps) + "; bound " + fmt(oBound);

    v4.seconds = gt.seconds + ke.seconds + oe.seconds;
    v4.detail = std::to_string(gt.certificates + ke.certificates + oe.certificates) +
                " certificates (pseudo-approximation " + std::to_string(gt.certificates) + ", knapsack " +
                std::to_string(ke.certificates) + ", outliers " + std::to_string(oe.certificates) + ")";
    print(v4);
    print(v5);
    print(v6);

    Verdict v7{7, "relaxation ordering"};
    auto t7 = Clock::now();
    relaxation_order(v7, kd, ko);
    relaxation_order(v7, od, oo);
    v7.seconds = seconds_since(t7);
    v7.detail = "LP1 <= LP2 <= OPT on " + std::to_string(kd.size() + od.size()) + " instances";
    print(v7);

    Verdict v8{8, "determinism"};
    auto again = knapsack_end_to_end(kd, ko, dummy4, nullptr);
    int differ = 0;
    for (std::size_t t = 0; t < ke.winners.size(); ++t) differ += ke.winners[t] != again.winners.at(t);
    v8.require(ke.winners.size() == again.winners.size() && differ == 0,
               std::to_string(differ) + " winning solutions differ");
    v8.seconds = again.seconds;
    v8.detail = std::to_string(ke.winners.size()) + " winning solutions compared byte for byte, " +
                std::to_string(differ) + " differ";
    print(v8);

    all.insert(all.end(), {v2, v3, v4, v5, v6, v7, v8});
    informational(kd, ko, od, oo);

    int failed = 0;
    for (const auto& v : all) failed += !v.pass;
    std::printf("%d of %zu criteria pass\n", static_cast<int>(all.size()) - failed, all.size());
    return failed == 0 ? 0 : 1;
}
