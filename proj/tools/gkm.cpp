// gkm: solve, oracle, gen, verify and bench over JSON instances.
//
// Exit codes: 0 ok, 2 bad input, 3 infeasible, 4 invariant breach.
// Reports go to stdout in one write, so a failing run prints nothing there.

#include "gkm/outliers.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

using namespace gkm;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, BadInput = 2, Infeasible = 3, Breach = 4 };

bool debug_log() {
    const char* v = std::getenv("GKM_LOG");
    return v && std::string(v) == "debug";
}

void log_line(const std::string& s) {
    const char* v = std::getenv("GKM_LOG");
    if (v && (std::string(v) == "debug" || std::string(v) == "info")) std::cerr << "[gkm] " << s << "\n";
}

struct Flags {
    std::string kind, instance, epsilon = "1/10", tau, mode = "oracle", trace;
    std::uint64_t seed = 1;
    bool verifyChains = false, ratio = false;
};

AnyInstance load(const Flags& f) {
    std::optional<Kind> expect;
    if (!f.kind.empty()) expect = parse_kind(f.kind);
    return load_instance(f.instance, expect);
}

Rational default_tau(Kind k) { return k == Kind::Outliers ? outliers_default_tau() : knapsack_default_tau(); }

/** Pass counts per Basic Invariant over the states handed to `record`. */
struct InvariantTally {
    std::map<std::string, std::pair<long long, long long>> counts; // name -> (pass, checked)

    void record(const LpIterState& st) {
        auto rep = check_basic_invariants(st);
        for (const auto& c : rep.items) {
            auto& e = counts[c.name];
            e.second++;
            e.first += c.pass;
        }
        if (!rep.ok()) throw InvariantBreach("basic invariants: " + rep.summary());
    }
    json to_json() const {
        json j = json::object();
        for (const auto& [name, e] : counts) j[name] = {{"pass", e.first}, {"checked", e.second}};
        return j;
    }
};

struct ChainTally {
    int rounds = 0;
    std::size_t maxChains = 0, maxViolating = 0;
    int r = 0;

    void add(const std::vector<ChainDecomposition>& ds) {
        for (const auto& d : ds) {
            ++rounds;
            r = d.r;
            maxChains = std::max(maxChains, d.chains.size());
            maxViolating = std::max(maxViolating, d.violating.size());
        }
    }
    json to_json() const {
        return {{"rounds", rounds}, {"r", r}, {"maxChains", maxChains}, {"maxViolating", maxViolating},
                {"chainBound", 3 * r}, {"violatingBound", 2 * r}};
    }
};

/** Everything a solve produces; the trace lines double as the replay record. */
struct SolveOutcome {
    json report;
    std::vector<std::string> traceLines;
};

json header_json(const Flags& f, Kind kind, const Rational& tau) {
    return {{"header",
             {{"kind", kind_name(kind)}, {"seed", f.seed}, {"epsilon", f.epsilon}, {"tau", to_string(tau)},
              {"mode", f.mode}, {"verifyChains", f.verifyChains}}}};
}

json certificate_summary(const std::vector<RerouteCertificate>& cs) {
    int ok = 0;
    double worst = 0;
    for (const auto& c : cs) {
        ok += c.ok;
        worst = std::max(worst, c.worstRatio);
    }
    return {{"checked", cs.size()}, {"ok", ok}, {"worstRatio", worst}};
}

SolveOutcome run_solve(const Flags& f, const AnyInstance& any,
                       const std::function<void(const LpIterState&, const RoundingEvent&)>& onEvent = {}) {
    Kind kind = kind_of(any);
    Rational eps = parse_rational(f.epsilon);
    Rational tau = f.tau.empty() ? default_tau(kind) : parse_rational(f.tau);
    SolveOutcome out;
    out.traceLines.push_back(header_json(f, kind, tau).dump());

    InvariantTally tally;
    ChainTally chains;
    RoundingConfig cfg;
    cfg.tau = tau;
    cfg.verifyChains = f.verifyChains;
    cfg.traceSink = [&](const RoundingEvent& e) { out.traceLines.push_back(event_json(e).dump()); };
    cfg.onEvent = onEvent;
    cfg.onRoundVertex = [&](const LpIterState& st, const ExtremePoint&) { tally.record(st); };

    const InstanceBase& base = base_of(any);
    json rep{{"instance", base.id}, {"kind", kind_name(kind)}, {"seed", f.seed}, {"epsilon", to_string(eps)},
             {"tau", to_string(tau)}};
    std::optional<OracleResult> oracle;
    if (f.ratio || (kind != Kind::Gkm && f.mode == "oracle")) oracle = brute_force(any);

    if (kind == Kind::Gkm) {
        const auto& g = std::get<GkmInstance>(any);
        auto ex = duplicate_and_extract_fballs(g);
        LpIterState st = build_lp_iter(ex.input, discretize(g.metric, tau, f.seed));
        RoundingLog log;
        ExtremePoint ep = pseudo_approximation(st, cfg, log);
        tally.record(st);
        auto frac = assemble_fractional_solution(st, ep);
        auto cert = certify_reroute_bound(st, st.alive_facilities(), Rational(1));
        chains.add(log.decompositions);
        Rational cost = frac.cost * g.metric.scale;
        rep["cost"] = to_string(cost);
        rep["costDecimal"] = to_decimal(cost);
        rep["lp1"] = to_string(ex.lp1.value * g.metric.scale);
        rep["lpIterValue"] = to_string(ep.objectiveValue * g.metric.scale);
        rep["fractionalFacilities"] = fractional_facilities(st, ep).size();
        rep["solves"] = log.solves;
        rep["fractional"] = true;
        rep["certificate"] = certificate_summary({cert});
        if (oracle) rep["ratioToOracle"] = cost_ratio(frac.cost, oracle->optCost);
    } else {
        PipelineOptions po;
        po.tau = tau;
        po.mode = parse_mode(f.mode);
        po.rounding = cfg;
        if (oracle) po.oracle = &*oracle;
        EndToEndRun run = kind == Kind::Knapsack ? solve_knapsack(std::get<KnapsackInstance>(any), eps, f.seed, po)
                                                 : solve_outliers(std::get<OutliersInstance>(any), eps, f.seed, po);
        chains.add(run.winner.decompositions);
        rep["mode"] = f.mode;
        rep["solution"] = solution_json(base, run.best);
        rep["cost"] = rep["solution"]["cost"];
        rep["costDecimal"] = rep["solution"]["costDecimal"];
        rep["U"] = to_string(run.U * base.metric.scale);
        json s0 = json::array();
        for (int o : run.winner.S0) s0.push_back(base.facilityIds[o]);
        rep["winner"] = {{"S0", s0},
                         {"removedClients", run.winner.removedClients},
                         {"lpIterValue", to_string(run.winner.lpIterValue * base.metric.scale)},
                         {"fractionalFacilities", run.winner.fractional},
                         {"solves", run.winner.solves},
                         {"certificates", certificate_summary(run.winner.certificates)}};
        rep["subInstances"] = run.subInstances;
        rep["runs"] = run.runs;
        if (oracle) rep["ratioToOracle"] = cost_ratio(run.best.cost, oracle->optCost);
    }
    if (oracle) rep["oracleCost"] = to_string(oracle->optCost * base.metric.scale);
    rep["invariantSummary"] = tally.to_json();
    if (f.verifyChains) rep["chains"] = chains.to_json();
    out.report = rep;
    return out;
}

void write_trace(const std::string& path, const std::vector<std::string>& lines) {
    if (path.empty()) return;
    std::ofstream os(path);
    if (!os) throw InstanceError("cannot write trace to " + path);
    for (const auto& l : lines) os << l << "\n";
}

/** Maps exceptions to the exit-code contract. */
int guarded(const std::function<int()>& body, const std::string& tracePath = {}) {
    try {
        return body();
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return Infeasible;
    } catch (const InvariantBreach& e) {
        std::cerr << "invariant breach: " << e.what();
        if (!tracePath.empty()) std::cerr << " (trace: " << tracePath << ")";
        std::cerr << "\n";
        return Breach;
    } catch (const SeedFailure& e) {
        std::cerr << "invariant breach: " << e.what() << "\n";
        return Breach;
    } catch (const std::exception& e) {
        std::cerr << "bad input: " << e.what() << "\n";
        return BadInput;
    }
}

void emit(const json& j) {
    std::string s = j.dump(2) + "\n";
    std::cout.write(s.data(), static_cast<std::streamsize>(s.size()));
    std::cout.flush();
}

int cmd_solve(const Flags& f) {
    return guarded([&] {
        AnyInstance any = load(f);
        log_line("solve " + base_of(any).id + " seed " + std::to_string(f.seed));
        auto out = run_solve(f, any);
        write_trace(f.trace, out.traceLines);
        emit(out.report);
        return Ok;
    }, f.trace);
}

int cmd_oracle(const Flags& f) {
    return guarded([&] {
        AnyInstance any = load(f);
        emit(oracle_json(base_of(any), brute_force(any)));
        return Ok;
    });
}

int cmd_gen(const Flags& f, int nf, int nc, int k, int m, const std::string& budget) {
    return guarded([&] {
        GeneratorParams gp;
        gp.k = k;
        gp.m = m;
        if (!budget.empty()) gp.budget = parse_rational(budget);
        emit(instance_json(generate_instance(f.seed, nf, nc, parse_kind(f.kind.empty() ? "knapsack" : f.kind), gp)));
        return Ok;
    });
}

/** Re-runs the solve named by the trace header, checks every state, and compares the event streams. */
int cmd_verify(Flags f) {
    return guarded([&] {
        std::ifstream is(f.trace);
        if (!is) throw InstanceError("cannot read trace " + f.trace);
        std::vector<std::string> lines;
        for (std::string l; std::getline(is, l);)
            if (!l.empty()) lines.push_back(l);
        if (lines.empty()) throw InstanceError("empty trace");
        json h = json::parse(lines[0]).at("header");
        f.kind = h.at("kind");
        f.seed = h.at("seed");
        f.epsilon = h.at("epsilon");
        f.tau = h.at("tau");
        f.mode = h.at("mode");
        f.verifyChains = h.value("verifyChains", false);
        AnyInstance any = load(f);
        long long checked = 0;
        auto out = run_solve(f, any, [&](const LpIterState& st, const RoundingEvent&) {
            auto rep = check_basic_invariants(st);
            ++checked;
            if (!rep.ok()) throw InvariantBreach("after event " + std::to_string(checked) + ": " + rep.summary());
        });
        std::size_t same = 0;
        while (same < lines.size() && same < out.traceLines.size() && lines[same] == out.traceLines[same]) ++same;
        bool match = same == lines.size() && same == out.traceLines.size();
        if (!match)
            throw InvariantBreach("trace diverges at line " + std::to_string(same + 1) + " of " +
                                  std::to_string(lines.size()));
        emit({{"trace", f.trace}, {"events", lines.size() - 1}, {"statesChecked", checked}, {"match", true},
              {"cost", out.report["cost"]}});
        return Ok;
    });
}

/** Ratio table over a seed range; runs fan out across `jobs` workers and are reported in seed order. */
int cmd_bench(const Flags& f, std::uint64_t first, int count, int jobs) {
    return guarded([&] {
        AnyInstance any = load(f);
        if (count < 1) throw InstanceError("--count must be positive");
        OracleResult opt = brute_force(any);
        Flags g = f;
        g.ratio = false;
        std::vector<Rational> costs(count);
        std::vector<std::string> errors(count);
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int t; (t = next++) < count;) {
                Flags h = g;
                h.seed = first + t;
                try {
                    PipelineOptions po;
                    Kind kind = kind_of(any);
                    Rational eps = parse_rational(h.epsilon);
                    po.tau = h.tau.empty() ? default_tau(kind) : parse_rational(h.tau);
                    po.mode = parse_mode(h.mode);
                    po.oracle = &opt;
                    if (kind == Kind::Knapsack) costs[t] = solve_knapsack(std::get<KnapsackInstance>(any), eps, h.seed, po).best.cost;
                    else if (kind == Kind::Outliers) costs[t] = solve_outliers(std::get<OutliersInstance>(any), eps, h.seed, po).best.cost;
                    else costs[t] = parse_rational(run_solve(h, any).report["cost"].get<std::string>()) / base_of(any).metric.scale;
                } catch (const std::exception& e) {
                    errors[t] = e.what();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int w = 0; w < std::max(1, jobs); ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        std::vector<std::uint64_t> seeds;
        for (int t = 0; t < count; ++t) {
            if (!errors[t].empty()) throw SeedFailure(first + t, errors[t]);
            seeds.push_back(first + t);
        }
        auto stats = monte_carlo_ratio([&](std::uint64_t s) { return costs[s - first]; }, opt.optCost, seeds);
        json rows = json::array();
        for (int t = 0; t < count; ++t)
            rows.push_back({{"seed", first + t}, {"cost", to_decimal(costs[t] * base_of(any).metric.scale)},
                            {"ratio", stats.ratios[t]}});
        emit({{"instance", base_of(any).id}, {"kind", kind_name(kind_of(any))},
              {"oracleCost", to_string(opt.optCost * base_of(any).metric.scale)}, {"trials", stats.trials},
              {"mean", stats.mean}, {"max", stats.max}, {"stddev", stats.stddev}, {"rows", rows}});
        return Ok;
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generalized k-median solvers"};
    app.require_subcommand(1);
    Flags f;
    auto common = [&](CLI::App* c) {
        c->add_option("--kind", f.kind, "gkm | knapsack | outliers")->check(CLI::IsMember({"gkm", "knapsack", "outliers"}));
        c->add_option("--seed", f.seed, "single seed for every random choice");
    };
    auto solveFlags = [&](CLI::App* c) {
        c->add_option("--instance", f.instance, "instance JSON")->required();
        c->add_option("--epsilon", f.epsilon, "accuracy, a rational in (0, 1/2)");
        c->add_option("--tau", f.tau, "discretization base");
        c->add_option("--mode", f.mode, "pre-processing mode")->check(CLI::IsMember({"oracle", "enumerative"}));
    };

    auto* solve = app.add_subcommand("solve", "run the pipeline and print a report");
    common(solve);
    solveFlags(solve);
    solve->add_option("--trace", f.trace, "write events as JSON lines");
    solve->add_flag("--verify-chains", f.verifyChains, "decompose every rounded vertex and report chain counts");
    solve->add_flag("--ratio", f.ratio, "include cost / brute-force optimum");

    auto* oracle = app.add_subcommand("oracle", "brute-force optimum");
    common(oracle);
    oracle->add_option("--instance", f.instance, "instance JSON")->required();

    int nf = 6, nc = 8, k = 2, m = -1;
    std::string budget;
    auto* gen = app.add_subcommand("gen", "generate a seeded instance");
    common(gen);
    gen->add_option("--facilities", nf);
    gen->add_option("--clients", nc);
    gen->add_option("-k", k, "outliers: facility bound");
    gen->add_option("-m", m, "outliers: clients to serve (default |C| - 1)");
    gen->add_option("--budget", budget, "knapsack budget (default: half the total weight)");

    auto* verify = app.add_subcommand("verify", "replay a trace and re-check every state");
    verify->add_option("--instance", f.instance, "instance JSON")->required();
    verify->add_option("--trace", f.trace, "trace written by solve")->required();

    std::uint64_t first = 1;
    int count = 20, jobs = 1;
    auto* bench = app.add_subcommand("bench", "ratio table over a seed range");
    common(bench);
    solveFlags(bench);
    bench->add_option("--first-seed", first);
    bench->add_option("--count", count);
    bench->add_option("--jobs", jobs, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? Ok : BadInput;
    }
    if (debug_log()) std::cerr << "[gkm] command " << app.get_subcommands().front()->get_name() << "\n";
    if (*solve) return cmd_solve(f);
    if (*oracle) return cmd_oracle(f);
    if (*gen) return cmd_gen(f, nf, nc, k, m, budget);
    if (*verify) return cmd_verify(f);
    return cmd_bench(f, first, count, jobs);
}
