#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tcs/explore.hpp"
#include "tcs/probes.hpp"
#include "tcs/simnet.hpp"

namespace tcs {

// ---- workload generation ----------------------------------------------------

struct WorkloadParams {
    int objects = 2;
    int txns = 2;
    int read_min = 1, read_max = 2;
    int write_min = 0, write_max = 1;
    std::uint64_t seed = 0;
    ProcessId client = 100;
    std::int64_t submit_spacing = 0;
};

struct Workload {
    std::vector<Transaction> transactions;
    std::vector<std::int64_t> submit_times;
};

// Reads target the current stored version of each object (v0 or the commit
// version of the latest earlier writer); commit versions strictly increase.
inline Workload generate_workload(const WorkloadParams& p) {
    if (p.objects <= 0 || p.txns < 0 || p.read_min < 1 || p.read_min > p.read_max ||
        p.write_min > p.write_max || p.write_min < 0)
        throw Error("InfeasibleParams", "nonsensical size parameters");
    if (p.read_min > p.objects || p.write_min > p.objects)
        throw Error("InfeasibleParams", "set sizes exceed object count");

    std::mt19937_64 rng(p.seed);
    auto pick = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    std::vector<ObjectId> objs;
    for (int i = 0; i < p.objects; ++i) objs.push_back("x" + std::to_string(i));
    std::map<ObjectId, Version> stored;
    for (const auto& x : objs) stored[x] = kMinVersion;
    Version next_vc = 1;

    Workload w;
    for (int i = 0; i < p.txns; ++i) {
        Transaction t;
        t.id = "t" + std::to_string(i + 1);
        t.client = p.client;
        int nr = std::min(pick(p.read_min, p.read_max), p.objects);
        std::vector<ObjectId> pool = objs;
        for (int j = 0; j < nr; ++j) {
            int k = pick(0, static_cast<int>(pool.size()) - 1);
            t.read_set[pool[k]] = stored[pool[k]];
            pool.erase(pool.begin() + k);
        }
        int nw = std::min(pick(p.write_min, p.write_max), nr);
        std::vector<ObjectId> reads;
        for (const auto& [x, _] : t.read_set) reads.push_back(x);
        for (int j = 0; j < nw; ++j) {
            int k = pick(0, static_cast<int>(reads.size()) - 1);
            t.write_set[reads[k]] = t.id + "/" + reads[k];
            reads.erase(reads.begin() + k);
        }
        Version max_read = 0;
        for (const auto& [_, v] : t.read_set) max_read = std::max(max_read, v);
        t.commit_version = std::max(next_vc, max_read + 1);
        next_vc = t.commit_version + 1;
        for (const auto& [x, _] : t.write_set) stored[x] = t.commit_version;

        auto vr = validate_transaction(t);
        if (!vr.ok()) throw Error("InfeasibleParams", t.id + ": " + vr.violations[0]);
        w.transactions.push_back(t);
        w.submit_times.push_back(static_cast<std::int64_t>(i) * p.submit_spacing);
    }
    return w;
}

// ---- scenarios --------------------------------------------------------------

struct Scenario {
    SystemConfig config;
    Protocol protocol = Protocol::Multishot2pc;
    std::string policy_name = "ser";
    bool leaderless = false;
    Workload workload;
    Adversary adversary;
    RunOptions options;
};

inline void validate_scenario(const Scenario& sc) {
    if (sc.protocol == Protocol::Multishot2pc) {
        for (const auto& [s, ms] : sc.config.members)
            if (ms.size() != 1)
                throw Error("ScenarioInvalid", "multishot-2pc needs single-member shards");
        for (const auto& [s, b] : sc.adversary.crash_budget)
            if (b != 0)
                throw Error("ScenarioInvalid", "multishot-2pc admits no crashes");
    }
    for (const auto& [s, b] : sc.adversary.crash_budget)
        if (b > sc.config.f)
            throw Error("ScenarioInvalid", "crash budget above f for shard " + s);
    policy_by_name(sc.policy_name);  // throws on unknown policy
}

inline Scenario parse_scenario(const Json& j) {
    Scenario sc;
    const auto& jc = j.at("config");
    for (const auto& [s, ms] : jc.at("members").items())
        sc.config.members[s] = ms.get<std::vector<ProcessId>>();
    for (const auto& [x, s] : jc.at("ownership").items())
        sc.config.ownership[x] = s.get<std::string>();
    sc.config.f = jc.value("f", 0);
    sc.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    sc.policy_name = j.value("policy", "ser");
    sc.leaderless = j.value("leaderless", false);

    const auto& jw = j.at("workload");
    if (jw.contains("generate")) {
        const auto& g = jw.at("generate");
        WorkloadParams p;
        p.objects = g.value("objects", p.objects);
        p.txns = g.value("txns", p.txns);
        p.read_min = g.value("read_min", p.read_min);
        p.read_max = g.value("read_max", p.read_max);
        p.write_min = g.value("write_min", p.write_min);
        p.write_max = g.value("write_max", p.write_max);
        p.seed = g.value("seed", p.seed);
        p.client = g.value("client", p.client);
        p.submit_spacing = g.value("submit_spacing", p.submit_spacing);
        sc.workload = generate_workload(p);
    } else {
        for (const auto& t : jw.at("transactions"))
            sc.workload.transactions.push_back(transaction_from_json(t));
        if (jw.contains("submit_times"))
            sc.workload.submit_times = jw.at("submit_times").get<std::vector<std::int64_t>>();
    }

    if (j.contains("adversary")) {
        const auto& ja = j.at("adversary");
        sc.adversary.seed = ja.value("seed", 0);
        sc.adversary.random_order = ja.value("random_order", false);
        sc.adversary.forget_rate = ja.value("forget_rate", 0);
        sc.adversary.resend_rate = ja.value("resend_rate", 0);
        sc.adversary.crash_rate = ja.value("crash_rate", 500);
        sc.adversary.auto_recover = ja.value("auto_recover", true);
        if (ja.contains("crash_budget"))
            for (const auto& [s, b] : ja.at("crash_budget").items())
                sc.adversary.crash_budget[s] = b.get<int>();
        if (ja.contains("script")) {
            for (const auto& je : ja.at("script")) {
                ScriptEntry e;
                std::string trig = je.value("trigger", "at_event");
                e.trigger = trig == "after_first_send" ? ScriptEntry::Trigger::AfterFirstSend
                            : trig == "on_quiescence" ? ScriptEntry::Trigger::OnQuiescence
                                                      : ScriptEntry::Trigger::AtEvent;
                std::string act = je.value("act", "crash");
                e.act = act == "recover"  ? ScriptEntry::Act::Recover
                        : act == "retry"  ? ScriptEntry::Act::Retry
                        : act == "forget" ? ScriptEntry::Act::Forget
                        : act == "resend" ? ScriptEntry::Act::Resend
                                          : ScriptEntry::Act::Crash;
                e.watch_pid = je.value("watch_pid", -1);
                if (je.contains("watch_kind")) {
                    std::string k = je.at("watch_kind");
                    for (MsgKind mk : {MsgKind::Prepare, MsgKind::PrepareAck, MsgKind::Accept,
                                       MsgKind::AcceptAck, MsgKind::Decision,
                                       MsgKind::NewLeader, MsgKind::NewLeaderAck,
                                       MsgKind::NewState})
                        if (k == to_string(mk)) e.watch_kind = mk;
                }
                e.at_event = je.value("at_event", -1);
                e.target = je.value("target", -1);
                e.slot = je.value("slot", -1);
                sc.adversary.script.push_back(e);
            }
        }
    }
    validate_scenario(sc);
    return sc;
}

// ---- verdicts ---------------------------------------------------------------

struct Verdicts {
    CheckResult history;
    CertificateResult certificate;
    ProbeReport fig5;        // FT only; pass=true otherwise
    ProbeReport props;       // FT only
    ProbeReport fig6;
    ProbeReport acyclicity;
    std::string error;       // set when a probe threw (e.g. AmbiguousAssignment)

    bool pass() const {
        return error.empty() && history.correct && certificate.pass && fig5.pass &&
               props.pass && fig6.pass && acyclicity.pass;
    }
    std::string first_failure() const {
        if (!error.empty()) return error;
        if (!history.correct) return "history: " + history.refutation;
        if (!certificate.pass) return "certificate: " + certificate.code;
        if (!fig5.pass) return fig5.code + ": " + fig5.detail;
        if (!props.pass) return props.code + ": " + props.detail;
        if (!fig6.pass) return fig6.code + ": " + fig6.detail;
        if (!acyclicity.pass) return acyclicity.code + ": " + acyclicity.detail;
        return "";
    }
};

// Run every applicable check on a finished trace.
inline Verdicts judge_trace(const Trace& tr, const History& h, const Scenario& sc,
                            const TxnCatalog& catalog) {
    Verdicts v;
    IsolationPolicy pol = policy_by_name(sc.policy_name);
    try {
        v.history = is_correct(h, pol, catalog);
        v.certificate = check_certificate(h, pol, catalog, decision_points(tr));
        if (sc.protocol == Protocol::FtCommit) {
            v.fig5 = check_fig5(tr, sc.config);
            v.props = check_props(tr, sc.config);
        }
        auto ex = extract_cert_orders(tr, sc.config);
        auto prov = collect_provenance(tr);
        v.fig6 = check_fig6(ex, prov, h, sc.config, pol, catalog);
        v.acyclicity = check_acyclicity(ex, prov, h, sc.config, catalog);
    } catch (const Error& e) {
        v.error = e.what();
    }
    return v;
}

struct ScenarioResult {
    Trace trace;
    History history;
    TxnCatalog catalog;
    Verdicts verdicts;
};

inline ScenarioResult run_scenario(const Scenario& sc) {
    validate_scenario(sc);
    ScenarioResult res;
    RunResult rr = run(sc.config, sc.protocol, policy_by_name(sc.policy_name),
                       sc.leaderless, sc.workload.transactions, sc.workload.submit_times,
                       sc.adversary, sc.options);
    res.trace = std::move(rr.trace);
    res.history = std::move(rr.history);
    for (const auto& t : sc.workload.transactions) res.catalog[t.id] = t;
    res.verdicts = judge_trace(res.trace, res.history, sc, res.catalog);
    return res;
}

// ---- exploration ------------------------------------------------------------

struct ExploreSummary {
    std::size_t runs = 0;
    std::size_t failures = 0;
    std::optional<std::uint64_t> first_failing_seed;
    std::string first_failure;
    std::map<TxnId, std::size_t> commits, aborts;
    std::map<int, std::size_t> delay_histogram;  // delays of first transaction
    ExploreStats stats;                          // exhaustive mode only
};

inline ExploreSummary explore_random(const Scenario& sc, std::size_t n,
                                     std::uint64_t base_seed) {
    validate_scenario(sc);
    ExploreSummary sum;
    for (std::size_t i = 0; i < n; ++i) {
        Scenario run_sc = sc;
        run_sc.adversary.seed = base_seed + i;
        ScenarioResult r = run_scenario(run_sc);
        ++sum.runs;
        for (const auto& a : r.history.actions) {
            if (a.kind != Action::Kind::Decide) continue;
            if (*a.decision == Decision::Commit)
                ++sum.commits[a.txn];
            else
                ++sum.aborts[a.txn];
        }
        if (!sc.adversary.random_order && !sc.workload.transactions.empty()) {
            try {
                ++sum.delay_histogram[measure_delays(
                    r.trace, sc.workload.transactions.front().id)];
            } catch (const Error&) {
            }
        }
        if (!r.verdicts.pass() && ++sum.failures == 1) {
            sum.first_failing_seed = run_sc.adversary.seed;
            sum.first_failure = r.verdicts.first_failure();
        }
    }
    return sum;
}

inline ExploreSummary explore_exhaustive_scenario(const Scenario& sc,
                                                  const ExploreBounds& bounds) {
    validate_scenario(sc);
    ExploreSummary sum;
    TxnCatalog catalog;
    for (const auto& t : sc.workload.transactions) catalog[t.id] = t;
    World w0 = make_world(sc.config, sc.protocol, policy_by_name(sc.policy_name),
                          sc.leaderless, sc.workload.transactions,
                          sc.workload.submit_times, sc.adversary);
    sum.stats = explore_exhaustive(w0, bounds, [&](const Trace& tr, const World&) {
        ++sum.runs;
        History h = history_of(tr);
        Verdicts v = judge_trace(tr, h, sc, catalog);
        for (const auto& a : h.actions) {
            if (a.kind != Action::Kind::Decide) continue;
            if (*a.decision == Decision::Commit)
                ++sum.commits[a.txn];
            else
                ++sum.aborts[a.txn];
        }
        if (!v.pass() && ++sum.failures == 1) sum.first_failure = v.first_failure();
    });
    return sum;
}

}  // namespace tcs
