#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tcs/ft.hpp"
#include "tcs/trace.hpp"
#include "tcs/twopc.hpp"

namespace tcs {

enum class Protocol { Multishot2pc, FtCommit };

inline const char* to_string(Protocol p) {
    return p == Protocol::Multishot2pc ? "multishot-2pc" : "ft-commit";
}

inline Protocol protocol_from_string(const std::string& s) {
    if (s == "multishot-2pc") return Protocol::Multishot2pc;
    if (s == "ft-commit") return Protocol::FtCommit;
    throw Error("UnknownProtocol", s);
}

struct ScriptEntry {
    enum class Trigger { AfterFirstSend, AtEvent, OnQuiescence };
    enum class Act { Crash, Recover, Retry, Forget, Resend };
    Trigger trigger = Trigger::AtEvent;
    Act act = Act::Crash;
    ProcessId watch_pid = -1;           // AfterFirstSend
    MsgKind watch_kind = MsgKind::Prepare;
    std::int64_t at_event = -1;         // AtEvent
    ProcessId target = -1;
    int slot = -1;                      // Retry/Forget/Resend
};

struct Adversary {
    std::uint64_t seed = 0;
    bool random_order = false;          // perturb delivery order (FIFO preserved)
    std::map<ShardId, int> crash_budget;
    int forget_rate = 0;                // per-mille, fires between deliveries (2PC)
    int resend_rate = 0;                // per-mille (2PC)
    int crash_rate = 500;               // per-mille chance a budgeted crash is used
    std::vector<ScriptEntry> script;
    bool auto_recover = true;           // default stall handling supplies liveness
};

struct Submission {
    std::int64_t time = 0;
    TxnId txn;
};

struct Envelope {
    std::int64_t seq = 0;
    ProcessId src = -1, dst = -1;
    std::int64_t send_time = 0, deliver_time = 0;
    Message msg;
};

struct ProcState {
    ProcessId id = -1;
    bool is_client = false;
    bool crashed = false;
    std::optional<twopc::ShardProcessState> sp;  // 2PC shard process
    std::optional<ft::ReplicaState> rep;         // FT replica
    twopc::CoordinatorState coord2pc;
    ft::AckQuorum ackq;
    std::map<TxnId, Decision> decided;           // client bookkeeping
};

struct World {
    struct Ctx {
        SystemConfig cfg;
        IsolationPolicy policy;
        TxnCatalog catalog;
        Protocol protocol = Protocol::Multishot2pc;
        bool leaderless = false;
        Adversary adv;
    };
    std::shared_ptr<const Ctx> ctx;

    std::vector<ProcState> procs;
    std::map<std::pair<ProcessId, ProcessId>, std::deque<Envelope>> channels;
    std::vector<Submission> submissions;
    std::size_t next_submission = 0;
    std::int64_t clock = 0;
    std::int64_t next_env_seq = 0;
    std::int64_t next_event_seq = 0;

    std::map<ShardId, int> crashes_used;
    int recovers_used = 0, retries_used = 0, forgets_used = 0, resends_used = 0;
    std::vector<bool> script_fired;
};

// ---- construction ----------------------------------------------------------

inline World make_world(const SystemConfig& cfg, Protocol protocol,
                        const IsolationPolicy& policy, bool leaderless,
                        const std::vector<Transaction>& workload,
                        const std::vector<std::int64_t>& submit_times,
                        const Adversary& adv) {
    auto ctx = std::make_shared<World::Ctx>();
    ctx->cfg = cfg;
    ctx->policy = policy;
    ctx->protocol = protocol;
    ctx->leaderless = leaderless;
    ctx->adv = adv;

    int max_pid = -1;
    for (const auto& [_, ms] : cfg.members)
        for (ProcessId p : ms) max_pid = std::max(max_pid, p);
    for (const auto& t : workload) max_pid = std::max(max_pid, t.client);

    World w;
    w.procs.resize(max_pid + 1);
    for (int i = 0; i <= max_pid; ++i) w.procs[i].id = i;
    for (const auto& [s, ms] : cfg.members) {
        if (protocol == Protocol::Multishot2pc && ms.size() != 1)
            throw Error("ConfigMismatch", "multishot-2pc requires single-member shards");
        if (protocol == Protocol::FtCommit &&
            static_cast<int>(ms.size()) != 2 * cfg.f + 1)
            throw Error("ConfigMismatch", "ft-commit requires 2f+1 members per shard");
        for (std::size_t i = 0; i < ms.size(); ++i) {
            auto& p = w.procs[ms[i]];
            if (protocol == Protocol::Multishot2pc) {
                p.sp = twopc::ShardProcessState{};
                p.sp->shard = s;
            } else {
                p.rep = ft::make_replica(s, static_cast<int>(i));
            }
        }
    }
    for (std::size_t i = 0; i < workload.size(); ++i) {
        const auto& t = workload[i];
        auto vr = validate_transaction(t);
        if (!vr.ok()) throw Error("InvalidTransaction", t.id + ": " + vr.violations[0]);
        if (w.procs[t.client].sp || w.procs[t.client].rep)
            throw Error("ConfigMismatch", "client id collides with a shard member");
        w.procs[t.client].is_client = true;
        ctx->catalog[t.id] = t;
        std::int64_t when = i < submit_times.size() ? submit_times[i] : 0;
        w.submissions.push_back({when, t.id});
    }
    for (const auto& [s, b] : adv.crash_budget) {
        if (protocol == Protocol::Multishot2pc && b > 0)
            throw Error("ConfigMismatch", "multishot-2pc processes are reliable");
        if (b > cfg.f)
            throw Error("ConfigMismatch", "crash budget exceeds f for shard " + s);
    }
    w.script_fired.assign(adv.script.size(), false);
    w.ctx = ctx;
    return w;
}

// ---- engine primitives -----------------------------------------------------

namespace sim_detail {

inline TraceEvent& emit(World& w, Trace& tr, EventKind kind) {
    TraceEvent e;
    e.seq = w.next_event_seq++;
    e.time = w.clock;
    e.kind = kind;
    tr.events.push_back(e);
    return tr.events.back();
}

inline void send(World& w, Trace& tr, ProcessId src, ProcessId dst, Message msg) {
    Envelope env;
    env.seq = w.next_env_seq++;
    env.src = src;
    env.dst = dst;
    env.send_time = w.clock;
    // Self-addressed messages are local steps: applied immediately (see
    // drain_self) at zero logical latency.
    env.deliver_time = w.clock + (dst == src ? 0 : 1);
    env.msg = msg;
    auto& e = emit(w, tr, EventKind::Send);
    e.pid = src;
    e.env_seq = env.seq;
    e.src = src;
    e.dst = dst;
    e.msg = msg;
    if (!w.procs[dst].crashed) w.channels[{src, dst}].push_back(env);
}

inline void snapshot(World& w, Trace& tr, ProcessId pid) {
    const auto& p = w.procs[pid];
    SnapshotData s;
    if (p.sp) {
        s.shard = p.sp->shard;
        s.next = p.sp->next;
        s.log = p.sp->log;
    } else if (p.rep) {
        s.shard = p.rep->shard;
        s.status = ft::to_string(p.rep->status);
        s.ballot = p.rep->ballot;
        s.cballot = p.rep->cballot;
        s.next = p.rep->next;
        s.log = p.rep->log;
    } else {
        return;
    }
    auto& e = emit(w, tr, EventKind::StateSnapshot);
    e.pid = pid;
    e.snap = s;
}

inline TraceEvent& fired(World& w, Trace& tr, ProcessId pid, const std::string& name) {
    auto& e = emit(w, tr, EventKind::HandlerFired);
    e.pid = pid;
    e.handler = name;
    return e;
}

inline void record_client_decide(World& w, Trace& tr, ProcessId client, const TxnId& t,
                                 Decision d) {
    auto& p = w.procs[client];
    auto it = p.decided.find(t);
    if (it != p.decided.end()) {
        if (it->second != d)
            throw Error("DecisionDisagreement", t + " decided both ways at client");
        return;
    }
    p.decided[t] = d;
    auto& e = emit(w, tr, EventKind::ClientAction);
    e.pid = client;
    e.client_action = Action::decide(t, d);
}

inline void broadcast_shard(World& w, Trace& tr, ProcessId src, const ShardId& s,
                            const Message& m) {
    for (ProcessId dst : w.ctx->cfg.procs(s)) send(w, tr, src, dst, m);
}

// Decision fan-out in coordinator mode: client plus every member of every
// relevant shard.
inline void emit_ft_bundle(World& w, Trace& tr, ProcessId self,
                           const ft::FtDecisionBundle& b) {
    const auto& cfg = w.ctx->cfg;
    const auto& t = w.ctx->catalog.at(b.txn);
    DecisionRecord rec{b.txn, b.decision, b.slots};
    auto& e = fired(w, tr, self, "decision_computed");
    e.decided = rec;
    if (!w.ctx->leaderless) {
        Message mc;
        mc.kind = MsgKind::Decision;
        mc.txn = b.txn;
        mc.decision = b.decision;
        mc.to_client = true;
        send(w, tr, self, t.client, mc);
        for (const auto& [s, bp] : b.slots) {
            Message ms;
            ms.kind = MsgKind::Decision;
            ms.ballot = bp.first;
            ms.slot = bp.second;
            ms.decision = b.decision;
            for (ProcessId dst : cfg.procs(s)) send(w, tr, self, dst, ms);
        }
    } else {
        // Everyone aggregates locally: apply to own replica / client record.
        auto& p = w.procs[self];
        if (p.rep) {
            auto it = b.slots.find(p.rep->shard);
            if (it != b.slots.end()) {
                ft::handle_decision(*p.rep, it->second.first, it->second.second,
                                    b.decision);
                snapshot(w, tr, self);
            }
        }
        if (p.is_client && t.client == self) record_client_decide(w, tr, self, b.txn, b.decision);
    }
}

inline void dispatch(World& w, Trace& tr, const Envelope& env) {
    auto& p = w.procs[env.dst];
    const auto& ctx = *w.ctx;
    const Message& m = env.msg;

    switch (m.kind) {
        case MsgKind::Prepare: {
            const Transaction& t = ctx.catalog.at(m.txn);
            if (p.sp) {
                auto res = twopc::handle_prepare(*p.sp, t, ctx.policy, ctx.cfg, ctx.catalog);
                auto& e = fired(w, tr, env.dst, "handle_prepare");
                e.prov = res.prov;
                send(w, tr, env.dst, res.ack_dst, res.ack);
                snapshot(w, tr, env.dst);
            } else if (p.rep) {
                bool from_process = !w.procs[env.src].is_client;
                auto res = ft::handle_prepare(*p.rep, t, env.src, from_process, ctx.policy,
                                              ctx.cfg, ctx.catalog);
                if (!res.handled) {
                    fired(w, tr, env.dst, "prepare_ignored");
                    break;
                }
                auto& e = fired(w, tr, env.dst, "handle_prepare");
                e.prov = res.prov;
                broadcast_shard(w, tr, env.dst, p.rep->shard, res.accept);
                snapshot(w, tr, env.dst);
            }
            break;
        }
        case MsgKind::PrepareAck: {
            auto bundle = twopc::coordinator_step(p.coord2pc, m, ctx.cfg, ctx.catalog);
            if (!bundle) {
                fired(w, tr, env.dst, "coordinator_ack");
                break;
            }
            const Transaction& t = ctx.catalog.at(bundle->txn);
            DecisionRecord rec;
            rec.txn = bundle->txn;
            rec.decision = bundle->decision;
            for (const auto& [s, k] : bundle->slots) rec.slots[s] = {0, k};
            auto& e = fired(w, tr, env.dst, "decision_computed");
            e.decided = rec;
            Message mc;
            mc.kind = MsgKind::Decision;
            mc.txn = bundle->txn;
            mc.decision = bundle->decision;
            mc.to_client = true;
            send(w, tr, env.dst, t.client, mc);
            for (const auto& [s, k] : bundle->slots) {
                Message ms;
                ms.kind = MsgKind::Decision;
                ms.slot = k;
                ms.decision = bundle->decision;
                send(w, tr, env.dst, ctx.cfg.procs(s).front(), ms);
            }
            break;
        }
        case MsgKind::Accept: {
            auto res = ft::handle_accept(*p.rep, m);
            if (!res.handled) {
                fired(w, tr, env.dst, "accept_ignored");
                break;
            }
            fired(w, tr, env.dst, "handle_accept");
            if (ctx.leaderless) {
                const Transaction& t = ctx.catalog.at(m.txn);
                std::set<ProcessId> dsts;
                for (const auto& s : shards_of(t, ctx.cfg))
                    for (ProcessId q : ctx.cfg.procs(s)) dsts.insert(q);
                dsts.insert(t.client);
                for (ProcessId q : dsts) send(w, tr, env.dst, q, res.ack);
            } else {
                send(w, tr, env.dst, m.coord, res.ack);
            }
            snapshot(w, tr, env.dst);
            break;
        }
        case MsgKind::AcceptAck: {
            auto bundle = ft::coordinator_step(p.ackq, m, env.src, ctx.cfg, ctx.catalog);
            if (!bundle) {
                fired(w, tr, env.dst, "coordinator_ack");
                break;
            }
            emit_ft_bundle(w, tr, env.dst, *bundle);
            break;
        }
        case MsgKind::Decision: {
            if (m.to_client) {
                fired(w, tr, env.dst, "client_decision");
                record_client_decide(w, tr, env.dst, m.txn, *m.decision);
            } else if (p.sp) {
                twopc::handle_decision(*p.sp, m.slot, *m.decision);
                fired(w, tr, env.dst, "handle_decision");
                snapshot(w, tr, env.dst);
            } else if (p.rep) {
                bool applied = ft::handle_decision(*p.rep, m.ballot, m.slot, *m.decision);
                fired(w, tr, env.dst, applied ? "handle_decision" : "decision_ignored");
                if (applied) snapshot(w, tr, env.dst);
            }
            break;
        }
        case MsgKind::NewLeader: {
            auto ack = ft::handle_new_leader(*p.rep, m);
            if (!ack) {
                fired(w, tr, env.dst, "new_leader_ignored");
                break;
            }
            fired(w, tr, env.dst, "handle_new_leader");
            send(w, tr, env.dst, env.src, *ack);
            snapshot(w, tr, env.dst);
            break;
        }
        case MsgKind::NewLeaderAck: {
            auto out = ft::handle_new_leader_ack(*p.rep, m, env.src, ctx.cfg);
            if (!out) {
                fired(w, tr, env.dst, "new_leader_ack_buffered");
                break;
            }
            fired(w, tr, env.dst, "handle_new_leader_ack_quorum");
            for (ProcessId q : ctx.cfg.procs(p.rep->shard))
                if (q != env.dst) send(w, tr, env.dst, q, out->new_state);
            snapshot(w, tr, env.dst);
            break;
        }
        case MsgKind::NewState: {
            bool applied = ft::handle_new_state(*p.rep, m);
            fired(w, tr, env.dst, applied ? "handle_new_state" : "new_state_ignored");
            if (applied) snapshot(w, tr, env.dst);
            break;
        }
    }
}

inline void deliver(World& w, Trace& tr, const std::pair<ProcessId, ProcessId>& chan) {
    auto it = w.channels.find(chan);
    Envelope env = it->second.front();
    it->second.pop_front();
    if (it->second.empty()) w.channels.erase(it);
    if (env.deliver_time > w.clock) w.clock = env.deliver_time;
    auto& e = emit(w, tr, EventKind::Deliver);
    e.pid = env.dst;
    e.env_seq = env.seq;
    e.src = env.src;
    e.dst = env.dst;
    e.msg = env.msg;
    dispatch(w, tr, env);
}

inline void fire_submission(World& w, Trace& tr) {
    const auto& sub = w.submissions[w.next_submission++];
    const Transaction& t = w.ctx->catalog.at(sub.txn);
    if (sub.time > w.clock) w.clock = sub.time;
    auto& e = emit(w, tr, EventKind::ClientAction);
    e.pid = t.client;
    e.client_action = Action::certify(sub.txn);
    Message m;
    m.kind = MsgKind::Prepare;
    m.txn = sub.txn;
    for (const auto& s : shards_of(t, w.ctx->cfg))
        for (ProcessId dst : w.ctx->cfg.procs(s)) send(w, tr, t.client, dst, m);
}

inline void crash_process(World& w, Trace& tr, ProcessId target) {
    auto& p = w.procs[target];
    auto shard = p.sp ? std::optional<ShardId>(p.sp->shard)
                      : (p.rep ? std::optional<ShardId>(p.rep->shard) : std::nullopt);
    if (!shard) throw Error("ConfigMismatch", "can only crash shard members");
    int budget = 0;
    auto bit = w.ctx->adv.crash_budget.find(*shard);
    if (bit != w.ctx->adv.crash_budget.end()) budget = bit->second;
    if (w.crashes_used[*shard] >= budget || w.crashes_used[*shard] >= w.ctx->cfg.f)
        throw Error("ConfigMismatch", "crash budget exhausted for shard " + *shard);
    ++w.crashes_used[*shard];
    p.crashed = true;
    auto& e = emit(w, tr, EventKind::Crash);
    e.pid = target;
    for (auto it = w.channels.begin(); it != w.channels.end();) {
        if (it->first.first == target || it->first.second == target)
            it = w.channels.erase(it);
        else
            ++it;
    }
}

inline void fire_recover(World& w, Trace& tr, ProcessId target) {
    auto& p = w.procs[target];
    Message m = ft::recover(*p.rep, w.ctx->cfg);
    auto& e = emit(w, tr, EventKind::NondetFired);
    e.pid = target;
    e.handler = "recover";
    ++w.recovers_used;
    broadcast_shard(w, tr, target, p.rep->shard, m);
}

inline void fire_retry(World& w, Trace& tr, ProcessId target, int slot) {
    auto& p = w.procs[target];
    Message m = ft::retry(*p.rep, slot);
    auto& e = emit(w, tr, EventKind::NondetFired);
    e.pid = target;
    e.handler = "retry";
    ++w.retries_used;
    const Transaction& t = w.ctx->catalog.at(m.txn);
    for (const auto& s : shards_of(t, w.ctx->cfg))
        for (ProcessId dst : w.ctx->cfg.procs(s)) send(w, tr, target, dst, m);
}

inline void fire_forget(World& w, Trace& tr, ProcessId target, int slot) {
    twopc::forget_decision(*w.procs[target].sp, slot);
    auto& e = emit(w, tr, EventKind::NondetFired);
    e.pid = target;
    e.handler = "forget";
    ++w.forgets_used;
    snapshot(w, tr, target);
}

inline void fire_resend(World& w, Trace& tr, ProcessId target, int slot) {
    auto res = twopc::resend_vote(*w.procs[target].sp, slot, w.ctx->cfg, w.ctx->catalog);
    auto& e = emit(w, tr, EventKind::NondetFired);
    e.pid = target;
    e.handler = "resend_vote";
    ++w.resends_used;
    send(w, tr, target, res.ack_dst, res.ack);
}

// Messages a process addresses to itself are local: they never race with
// network traffic and are applied as soon as the current handler finishes.
inline void drain_self(World& w, Trace& tr) {
    bool again = true;
    while (again) {
        again = false;
        for (const auto& p : w.procs) {
            std::pair<ProcessId, ProcessId> chan{p.id, p.id};
            if (!w.channels.count(chan)) continue;
            deliver(w, tr, chan);
            again = true;
            break;
        }
    }
}

inline bool all_clients_decided(const World& w) {
    for (const auto& [id, t] : w.ctx->catalog)
        if (!w.procs[t.client].decided.count(id)) return false;
    return true;
}

inline std::vector<std::pair<ProcessId, ProcessId>> deliverable_channels(const World& w) {
    std::vector<std::pair<ProcessId, ProcessId>> out;
    for (const auto& [key, q] : w.channels) {
        if (q.empty()) continue;
        if (w.procs[key.first].crashed || w.procs[key.second].crashed) continue;
        out.push_back(key);
    }
    return out;
}

}  // namespace sim_detail

// ---- seeded / scripted runs ------------------------------------------------

struct RunOptions {
    std::int64_t step_bound = 200000;
    int max_interventions = 64;
};

struct RunResult {
    Trace trace;
    History history;
};

namespace sim_detail {

// Default stall handling: when the network is quiet but transactions are
// undecided, nudge the protocol the way a liveness layer would.
inline bool stall_intervene(World& w, Trace& tr) {
    if (w.ctx->protocol != Protocol::FtCommit) return false;
    const auto& cfg = w.ctx->cfg;
    // Shards relevant to undecided transactions.
    std::set<ShardId> stalled;
    for (const auto& [id, t] : w.ctx->catalog)
        if (!w.procs[t.client].decided.count(id))
            for (const auto& s : shards_of(t, cfg)) stalled.insert(s);
    if (stalled.empty()) return false;

    for (const auto& s : stalled) {
        bool live_leader = false;
        for (ProcessId q : cfg.procs(s))
            if (!w.procs[q].crashed && w.procs[q].rep->status == ft::Status::Leader)
                live_leader = true;
        if (!live_leader) {
            for (ProcessId q : cfg.procs(s)) {
                if (!w.procs[q].crashed) {
                    fire_recover(w, tr, q);
                    return true;
                }
            }
        }
    }
    // Leaders are up; reconstruct missing decisions via retry.
    for (const auto& s : stalled) {
        for (ProcessId q : cfg.procs(s)) {
            const auto& p = w.procs[q];
            if (p.crashed || p.rep->status == ft::Status::Recovering) continue;
            for (int k = 0; k <= p.rep->next; ++k) {
                if (p.rep->log.phase[k] != Phase::Prepared) continue;
                const TxnId& id = p.rep->log.txn[k];
                const auto& t = w.ctx->catalog.at(id);
                if (w.procs[t.client].decided.count(id)) continue;
                fire_retry(w, tr, q, k);
                return true;
            }
        }
    }
    return false;
}

}  // namespace sim_detail

inline RunResult run(const SystemConfig& cfg, Protocol protocol,
                     const IsolationPolicy& policy, bool leaderless,
                     const std::vector<Transaction>& workload,
                     const std::vector<std::int64_t>& submit_times, const Adversary& adv,
                     const RunOptions& opts = {}) {
    using namespace sim_detail;
    World w = make_world(cfg, protocol, policy, leaderless, workload, submit_times, adv);
    Trace tr;
    std::mt19937_64 rng(adv.seed);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };

    // Seeded crash plan: per shard with budget, maybe pick a victim and a
    // point (in delivered-message count) at which it dies.
    struct CrashPlan {
        ProcessId victim;
        std::int64_t after_deliveries;
        bool done = false;
    };
    std::vector<CrashPlan> plans;
    if (protocol == Protocol::FtCommit) {
        for (const auto& [s, budget] : adv.crash_budget) {
            for (int i = 0; i < budget; ++i) {
                if (static_cast<int>(pick(1000)) >= adv.crash_rate) continue;
                const auto& ms = cfg.procs(s);
                plans.push_back({ms[pick(ms.size())],
                                 static_cast<std::int64_t>(pick(40)), false});
            }
        }
    }

    std::int64_t deliveries = 0;
    int interventions = 0;
    while (true) {
        if (w.next_event_seq > opts.step_bound)
            throw Error("StepBoundExceeded", std::to_string(w.next_event_seq));
        drain_self(w, tr);

        // Scripted triggers.
        bool fired_script = false;
        for (std::size_t i = 0; i < w.ctx->adv.script.size(); ++i) {
            if (w.script_fired[i]) continue;
            const auto& entry = w.ctx->adv.script[i];
            bool due = false;
            if (entry.trigger == ScriptEntry::Trigger::AtEvent)
                due = w.next_event_seq >= entry.at_event;
            else if (entry.trigger == ScriptEntry::Trigger::AfterFirstSend) {
                for (const auto& e : tr.events)
                    if (e.kind == EventKind::Send && e.src == entry.watch_pid &&
                        e.msg->kind == entry.watch_kind) {
                        due = true;
                        break;
                    }
            } else if (entry.trigger == ScriptEntry::Trigger::OnQuiescence) {
                due = deliverable_channels(w).empty() &&
                      w.next_submission >= w.submissions.size();
            }
            if (!due) continue;
            w.script_fired[i] = true;
            fired_script = true;
            switch (entry.act) {
                case ScriptEntry::Act::Crash: crash_process(w, tr, entry.target); break;
                case ScriptEntry::Act::Recover: fire_recover(w, tr, entry.target); break;
                case ScriptEntry::Act::Retry: fire_retry(w, tr, entry.target, entry.slot); break;
                case ScriptEntry::Act::Forget: fire_forget(w, tr, entry.target, entry.slot); break;
                case ScriptEntry::Act::Resend: fire_resend(w, tr, entry.target, entry.slot); break;
            }
            break;
        }
        if (fired_script) continue;

        // Seeded crash plan.
        bool crashed_now = false;
        for (auto& plan : plans) {
            if (plan.done || deliveries < plan.after_deliveries) continue;
            plan.done = true;
            if (!w.procs[plan.victim].crashed) {
                crash_process(w, tr, plan.victim);
                crashed_now = true;
            }
            break;
        }
        if (crashed_now) continue;

        // Seeded 2PC forget/recall firings between deliveries.
        if (protocol == Protocol::Multishot2pc && adv.forget_rate > 0 &&
            static_cast<int>(pick(1000)) < adv.forget_rate) {
            std::vector<std::pair<ProcessId, int>> cands;
            for (const auto& p : w.procs)
                if (p.sp)
                    for (int k = 0; k <= p.sp->next; ++k)
                        if (p.sp->log.phase[k] == Phase::Decided) cands.push_back({p.id, k});
            if (!cands.empty()) {
                auto [pid, k] = cands[pick(cands.size())];
                fire_forget(w, tr, pid, k);
                continue;
            }
        }
        if (protocol == Protocol::Multishot2pc && adv.resend_rate > 0 &&
            static_cast<int>(pick(1000)) < adv.resend_rate) {
            std::vector<std::pair<ProcessId, int>> cands;
            for (const auto& p : w.procs)
                if (p.sp)
                    for (int k = 0; k <= p.sp->next; ++k)
                        if (p.sp->log.phase[k] != Phase::Start) cands.push_back({p.id, k});
            if (!cands.empty()) {
                auto [pid, k] = cands[pick(cands.size())];
                fire_resend(w, tr, pid, k);
                continue;
            }
        }

        auto chans = deliverable_channels(w);

        // Submissions fire at their scheduled time relative to deliveries.
        if (w.next_submission < w.submissions.size()) {
            const auto& sub = w.submissions[w.next_submission];
            bool nothing_earlier = chans.empty();
            if (!nothing_earlier && !adv.random_order) {
                std::int64_t earliest = INT64_MAX;
                for (const auto& c : chans)
                    earliest = std::min(earliest, w.channels.at(c).front().deliver_time);
                nothing_earlier = sub.time <= earliest;
            }
            if (nothing_earlier || (adv.random_order && pick(4) == 0)) {
                fire_submission(w, tr);
                continue;
            }
        }

        if (chans.empty()) {
            if (w.next_submission < w.submissions.size()) {
                fire_submission(w, tr);
                continue;
            }
            if (adv.auto_recover && !all_clients_decided(w) &&
                interventions < opts.max_interventions) {
                ++interventions;
                if (stall_intervene(w, tr)) continue;
            }
            break;
        }

        std::size_t idx;
        if (adv.random_order) {
            idx = pick(chans.size());
        } else {
            idx = 0;
            for (std::size_t i = 1; i < chans.size(); ++i) {
                const auto& a = w.channels.at(chans[i]).front();
                const auto& b = w.channels.at(chans[idx]).front();
                if (std::tie(a.deliver_time, a.seq) < std::tie(b.deliver_time, b.seq))
                    idx = i;
            }
        }
        deliver(w, tr, chans[idx]);
        ++deliveries;
    }

    RunResult res;
    res.history = history_of(tr);
    res.trace = std::move(tr);
    return res;
}

// Logical hops from certify submission to the client's decision.
inline int measure_delays(const Trace& tr, const TxnId& txn) {
    std::optional<std::int64_t> certify_t, decide_t;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::ClientAction) continue;
        if (e.client_action->txn != txn) continue;
        if (e.client_action->kind == Action::Kind::Certify)
            certify_t = e.time;
        else
            decide_t = e.time;
    }
    if (!certify_t || !decide_t) throw Error("TransactionUndecided", txn);
    return static_cast<int>(*decide_t - *certify_t);
}

}  // namespace tcs
