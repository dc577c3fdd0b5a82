#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <unordered_set>
#include <string>
#include <vector>

#include "tcs/simnet.hpp"

namespace tcs {

// One branch point of the nondeterministic transition system.
struct Choice {
    enum class Kind { Deliver, Submit, Crash, Recover, Retry, Forget, Resend };
    Kind kind = Kind::Deliver;
    ProcessId a = -1, b = -1;  // channel endpoints for Deliver
    ProcessId target = -1;
    int slot = -1;
};

struct ExploreBounds {
    int max_crashes = 0;  // total across shards; per-shard limits come from
                          // the adversary's crash budget
    int max_recovers = 3;
    int max_retries = 2;
    int max_forgets = 0;
    int max_resends = 0;
    std::int64_t max_events_per_trace = 5000;
    std::size_t max_states = 5'000'000;
};

// ---- canonical state hashing (FNV-1a over a flat serialization) ------------

namespace explore_detail {

// Incremental FNV-1a over the canonical field order.
struct Fnv {
    std::uint64_t h = 1469598103934665603ull;
    void byte(unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) byte(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
    }
};

inline void ser(Fnv& out, std::int64_t v) { out.u64(static_cast<std::uint64_t>(v)); }
inline void ser(Fnv& out, int v) { out.u64(static_cast<std::uint64_t>(v)); }
inline void ser(Fnv& out, bool v) { out.byte(v ? 1 : 0); }
inline void ser(Fnv& out, const std::string& s) {
    out.u64(s.size());
    for (unsigned char c : s) out.byte(c);
}
inline void ser(Fnv& out, Decision d) { out.byte(d == Decision::Commit ? 1 : 0); }
inline void ser(Fnv& out, const std::optional<Decision>& d) {
    out.byte(!d ? 2 : (*d == Decision::Commit ? 1 : 0));
}
inline void ser(Fnv& out, const LogArrays& log) {
    ser(out, log.size());
    for (int k = 0; k < log.size(); ++k) {
        ser(out, log.txn[k]);
        ser(out, log.vote[k]);
        ser(out, log.dec[k]);
        ser(out, static_cast<int>(log.phase[k]));
    }
}
inline void ser(Fnv& out, const Message& m) {
    ser(out, static_cast<int>(m.kind));
    ser(out, m.txn);
    ser(out, m.shard);
    ser(out, m.slot);
    ser(out, m.ballot);
    ser(out, m.cballot);
    ser(out, m.decision);
    ser(out, m.coord);
    ser(out, m.to_client);
    ser(out, m.state);
}

inline std::uint64_t state_fnv(const World& w) {
    Fnv out;
    ser(out, static_cast<std::int64_t>(w.next_submission));
    ser(out, w.recovers_used);
    ser(out, w.retries_used);
    ser(out, w.forgets_used);
    ser(out, w.resends_used);
    for (const auto& [s, n] : w.crashes_used) {
        ser(out, s);
        ser(out, n);
    }
    for (const auto& p : w.procs) {
        ser(out, p.crashed);
        if (p.sp) {
            ser(out, p.sp->shard);
            ser(out, p.sp->next);
            ser(out, p.sp->log);
        }
        if (p.rep) {
            ser(out, p.rep->shard);
            ser(out, static_cast<int>(p.rep->status));
            ser(out, p.rep->ballot);
            ser(out, p.rep->cballot);
            ser(out, p.rep->next);
            ser(out, p.rep->log);
            for (const auto& [b, acks] : p.rep->nl_acks) {
                ser(out, b);
                for (const auto& [q, m] : acks) {
                    ser(out, q);
                    ser(out, m);
                }
            }
        }
        for (const auto& [txn, per_shard] : p.coord2pc.acks) {
            ser(out, txn);
            for (const auto& [s, e] : per_shard) {
                ser(out, s);
                ser(out, e.first);
                ser(out, e.second);
            }
        }
        for (const auto& [key, senders] : p.ackq.buckets) {
            ser(out, std::get<0>(key));
            ser(out, std::get<1>(key));
            ser(out, std::get<2>(key));
            ser(out, std::get<3>(key));
            ser(out, std::get<4>(key));
            for (ProcessId q : senders) ser(out, q);
        }
        for (const auto& t : p.ackq.fired) ser(out, t);
        for (const auto& [txn, d] : p.decided) {
            ser(out, txn);
            ser(out, d);
        }
    }
    // Channel contents matter for the future; envelope seqs and times do not.
    for (const auto& [key, queue] : w.channels) {
        if (queue.empty()) continue;
        ser(out, key.first);
        ser(out, key.second);
        for (const auto& env : queue) ser(out, env.msg);
    }
    return out.h;
}

}  // namespace explore_detail

inline std::uint64_t hash_state(const World& w) {
    return explore_detail::state_fnv(w);
}

// ---- choice enumeration and application -------------------------------------

inline std::vector<Choice> enabled_choices(const World& w, const ExploreBounds& bounds) {
    std::vector<Choice> out;
    const auto& cfg = w.ctx->cfg;
    for (const auto& c : sim_detail::deliverable_channels(w))
        out.push_back({Choice::Kind::Deliver, c.first, c.second, -1, -1});
    bool quiet = out.empty();
    if (w.next_submission < w.submissions.size())
        out.push_back({Choice::Kind::Submit});

    int total_crashes = 0;
    for (const auto& [_, n] : w.crashes_used) total_crashes += n;

    // Recovery and retry are liveness interventions, not network behavior:
    // they branch only once the network is quiet, while crashes may strike at
    // any point of any delivery interleaving.
    if (w.ctx->protocol == Protocol::FtCommit) {
        if (total_crashes < bounds.max_crashes) {
            for (const auto& p : w.procs) {
                if (!p.rep || p.crashed) continue;
                int budget = 0;
                auto bit = w.ctx->adv.crash_budget.find(p.rep->shard);
                if (bit != w.ctx->adv.crash_budget.end()) budget = bit->second;
                auto uit = w.crashes_used.find(p.rep->shard);
                int used = uit == w.crashes_used.end() ? 0 : uit->second;
                if (used < budget && used < cfg.f)
                    out.push_back({Choice::Kind::Crash, -1, -1, p.id, -1});
            }
        }
        if (quiet && w.recovers_used < bounds.max_recovers) {
            for (const auto& [s, ms] : cfg.members) {
                bool live_leader = false;
                for (ProcessId q : ms)
                    if (!w.procs[q].crashed &&
                        w.procs[q].rep->status == ft::Status::Leader)
                        live_leader = true;
                if (live_leader) continue;
                for (ProcessId q : ms)
                    if (!w.procs[q].crashed)
                        out.push_back({Choice::Kind::Recover, -1, -1, q, -1});
            }
        }
        if (quiet && w.retries_used < bounds.max_retries && total_crashes > 0) {
            for (const auto& p : w.procs) {
                if (!p.rep || p.crashed || p.rep->status == ft::Status::Recovering)
                    continue;
                for (int k = 0; k <= p.rep->next; ++k) {
                    if (p.rep->log.phase[k] != Phase::Prepared) continue;
                    const TxnId& id = p.rep->log.txn[k];
                    const auto& t = w.ctx->catalog.at(id);
                    if (w.procs[t.client].decided.count(id)) continue;
                    out.push_back({Choice::Kind::Retry, -1, -1, p.id, k});
                }
            }
        }
    } else {
        for (const auto& p : w.procs) {
            if (!p.sp) continue;
            for (int k = 0; k <= p.sp->next; ++k) {
                if (w.forgets_used < bounds.max_forgets &&
                    p.sp->log.phase[k] == Phase::Decided)
                    out.push_back({Choice::Kind::Forget, -1, -1, p.id, k});
                if (w.resends_used < bounds.max_resends &&
                    p.sp->log.phase[k] != Phase::Start)
                    out.push_back({Choice::Kind::Resend, -1, -1, p.id, k});
            }
        }
    }
    return out;
}

inline void apply_choice(World& w, Trace& tr, const Choice& c) {
    using namespace sim_detail;
    switch (c.kind) {
        case Choice::Kind::Deliver: deliver(w, tr, {c.a, c.b}); break;
        case Choice::Kind::Submit: fire_submission(w, tr); break;
        case Choice::Kind::Crash: crash_process(w, tr, c.target); break;
        case Choice::Kind::Recover: fire_recover(w, tr, c.target); break;
        case Choice::Kind::Retry: fire_retry(w, tr, c.target, c.slot); break;
        case Choice::Kind::Forget: fire_forget(w, tr, c.target, c.slot); break;
        case Choice::Kind::Resend: fire_resend(w, tr, c.target, c.slot); break;
    }
    drain_self(w, tr);
}

// ---- exhaustive exploration --------------------------------------------------

struct ExploreStats {
    std::size_t states = 0;
    std::size_t terminals = 0;
    std::size_t dedup_hits = 0;
    bool truncated = false;
};

using TerminalCallback = std::function<void(const Trace&, const World&)>;

namespace explore_detail {

inline void dfs(World& w, Trace& tr, const ExploreBounds& bounds,
                std::unordered_set<std::uint64_t>& seen, ExploreStats& st,
                const TerminalCallback& cb) {
    if (static_cast<std::int64_t>(tr.events.size()) > bounds.max_events_per_trace) {
        st.truncated = true;
        return;
    }
    auto choices = enabled_choices(w, bounds);
    if (choices.empty()) {
        ++st.terminals;
        if (cb) cb(tr, w);
        return;
    }
    for (const auto& c : choices) {
        if (seen.size() >= bounds.max_states) {
            st.truncated = true;
            return;
        }
        World w2 = w;
        std::size_t mark = tr.events.size();
        apply_choice(w2, tr, c);
        if (seen.insert(hash_state(w2)).second) {
            ++st.states;
            dfs(w2, tr, bounds, seen, st, cb);
        } else {
            ++st.dedup_hits;
        }
        tr.events.resize(mark);
    }
}

}  // namespace explore_detail

inline ExploreStats explore_exhaustive(const World& initial, const ExploreBounds& bounds,
                                       const TerminalCallback& cb) {
    World w = initial;
    Trace tr;
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(1 << 20);
    ExploreStats st;
    seen.insert(hash_state(w));
    explore_detail::dfs(w, tr, bounds, seen, st, cb);
    return st;
}

}  // namespace tcs
