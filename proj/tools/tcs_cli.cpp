// Command-line front end: scenario runs, exploration, trace checking, delay
// measurement and workload generation.
//
// Exit codes: 0 = all checks pass, 1 = a check failed, 2 = usage/config error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "tcs/harness.hpp"

namespace {

int report_verdicts(const tcs::Verdicts& v) {
    auto line = [](const std::string& name, bool ok, const std::string& why) {
        std::cout << (ok ? "PASS " : "FAIL ") << name;
        if (!ok && !why.empty()) std::cout << "  (" << why << ")";
        std::cout << "\n";
    };
    if (!v.error.empty()) {
        std::cout << "FAIL probes  (" << v.error << ")\n";
        return 1;
    }
    line("history-correct", v.history.correct, v.history.refutation);
    line("certificate", v.certificate.pass, v.certificate.code);
    line("fig5-invariants", v.fig5.pass, v.fig5.code + " " + v.fig5.detail);
    line("props-3-4", v.props.pass, v.props.code + " " + v.props.detail);
    line("fig6-constraints", v.fig6.pass, v.fig6.code + " " + v.fig6.detail);
    line("acyclicity", v.acyclicity.pass, v.acyclicity.code + " " + v.acyclicity.detail);
    return v.pass() ? 0 : 1;
}

tcs::Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tcs::Error("ScenarioInvalid", "cannot open " + path);
    tcs::Json j = tcs::Json::parse(in);
    return tcs::parse_scenario(j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transaction certification service workbench"};
    app.require_subcommand(1);

    std::string scenario_path, trace_path, trace_out, policy = "ser", txn_id;
    std::size_t random_n = 100;
    std::uint64_t seed = 1;
    bool exhaustive = false;
    int depth = 5000, crashes = 0, recovers = 3, retries = 2, forgets = 0, resends = 0;

    auto* run_cmd = app.add_subcommand("run", "run one scenario and check it");
    run_cmd->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run_cmd->add_option("--trace-out", trace_out, "write the trace to this file");

    auto* explore_cmd = app.add_subcommand("explore", "randomized or exhaustive search");
    explore_cmd->add_option("scenario", scenario_path)->required();
    explore_cmd->add_option("--random", random_n, "number of seeded runs");
    explore_cmd->add_option("--seed", seed, "base seed for --random");
    explore_cmd->add_flag("--exhaustive", exhaustive, "explore all interleavings");
    explore_cmd->add_option("--depth", depth, "max events per explored trace");
    explore_cmd->add_option("--crashes", crashes, "total crash points (exhaustive)");
    explore_cmd->add_option("--recovers", recovers, "max recover firings (exhaustive)");
    explore_cmd->add_option("--retries", retries, "max retry firings (exhaustive)");
    explore_cmd->add_option("--forgets", forgets, "max forget firings (exhaustive)");
    explore_cmd->add_option("--resends", resends, "max resend firings (exhaustive)");

    auto* check_cmd = app.add_subcommand("check", "re-check a recorded trace");
    check_cmd->add_option("trace", trace_path, "trace file")->required();
    check_cmd->add_option("--policy", policy, "ser|si (default: trace metadata)");

    auto* delays_cmd = app.add_subcommand("delays", "certify-to-decide logical delay");
    delays_cmd->add_option("trace", trace_path)->required();
    delays_cmd->add_option("--txn", txn_id, "transaction id")->required();

    int objects = 2, txns = 2, read_min = 1, read_max = 2, write_min = 0, write_max = 1;
    auto* gen_cmd = app.add_subcommand("gen-workload", "generate a workload");
    gen_cmd->add_option("--objects", objects);
    gen_cmd->add_option("--txns", txns);
    gen_cmd->add_option("--read-min", read_min);
    gen_cmd->add_option("--read-max", read_max);
    gen_cmd->add_option("--write-min", write_min);
    gen_cmd->add_option("--write-max", write_max);
    gen_cmd->add_option("--seed", seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run_cmd) {
            tcs::Scenario sc = load_scenario(scenario_path);
            tcs::ScenarioResult r = tcs::run_scenario(sc);
            if (!trace_out.empty()) {
                std::ofstream out(trace_out);
                tcs::write_trace(out, r.trace, r.catalog, sc.config,
                                 tcs::to_string(sc.protocol), sc.policy_name,
                                 sc.leaderless);
            }
            for (const auto& a : r.history.actions)
                std::cout << tcs::encode_action(a) << "\n";
            return report_verdicts(r.verdicts);
        }
        if (*explore_cmd) {
            tcs::Scenario sc = load_scenario(scenario_path);
            tcs::ExploreSummary sum;
            if (exhaustive) {
                tcs::ExploreBounds b;
                b.max_events_per_trace = depth;
                b.max_crashes = crashes;
                b.max_recovers = recovers;
                b.max_retries = retries;
                b.max_forgets = forgets;
                b.max_resends = resends;
                sum = tcs::explore_exhaustive_scenario(sc, b);
                std::cout << "states=" << sum.stats.states
                          << " terminals=" << sum.stats.terminals
                          << " dedup=" << sum.stats.dedup_hits
                          << (sum.stats.truncated ? " TRUNCATED" : "") << "\n";
                if (sum.stats.truncated) {
                    std::cerr << "BoundExceeded: state or depth bound hit\n";
                    return 1;
                }
            } else {
                sum = tcs::explore_random(sc, random_n, seed);
            }
            std::cout << "runs=" << sum.runs << " failures=" << sum.failures << "\n";
            for (const auto& [t, c] : sum.commits)
                std::cout << "commit " << t << " x" << c << "\n";
            for (const auto& [t, c] : sum.aborts)
                std::cout << "abort " << t << " x" << c << "\n";
            for (const auto& [d, c] : sum.delay_histogram)
                std::cout << "delay " << d << " x" << c << "\n";
            if (sum.failures > 0) {
                std::cout << "first failure: " << sum.first_failure;
                if (sum.first_failing_seed)
                    std::cout << " (seed " << *sum.first_failing_seed << ")";
                std::cout << "\n";
                return 1;
            }
            return 0;
        }
        if (*check_cmd) {
            std::ifstream in(trace_path);
            if (!in) throw tcs::Error("MalformedTrace", "cannot open " + trace_path);
            tcs::TraceFile tf = tcs::read_trace(in);
            tcs::Scenario sc;
            sc.config = tf.config;
            sc.protocol = tcs::protocol_from_string(tf.protocol);
            sc.policy_name = check_cmd->count("--policy") ? policy : tf.policy;
            sc.leaderless = tf.leaderless;
            tcs::History h = tcs::history_of(tf.trace);
            tcs::Verdicts v = tcs::judge_trace(tf.trace, h, sc, tf.catalog);
            return report_verdicts(v);
        }
        if (*delays_cmd) {
            std::ifstream in(trace_path);
            if (!in) throw tcs::Error("MalformedTrace", "cannot open " + trace_path);
            tcs::TraceFile tf = tcs::read_trace(in);
            std::cout << tcs::measure_delays(tf.trace, txn_id) << "\n";
            return 0;
        }
        if (*gen_cmd) {
            tcs::WorkloadParams p;
            p.objects = objects;
            p.txns = txns;
            p.read_min = read_min;
            p.read_max = read_max;
            p.write_min = write_min;
            p.write_max = write_max;
            p.seed = seed;
            tcs::Workload w = tcs::generate_workload(p);
            tcs::Json out;
            tcs::Json arr = tcs::Json::array();
            for (const auto& t : w.transactions) arr.push_back(tcs::to_json(t));
            out["transactions"] = arr;
            out["submit_times"] = w.submit_times;
            std::cout << out.dump(2) << "\n";
            return 0;
        }
    } catch (const tcs::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
