#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tcs/history_check.hpp"
#include "tcs/trace.hpp"

namespace tcs {

struct ProbeReport {
    bool pass = true;
    std::string code;                 // e.g. "Invariant1", "Prop4b", "Fig6-16"
    std::string detail;
    std::vector<std::int64_t> events; // offending event seqs
    void fail(const std::string& c, const std::string& d,
              std::vector<std::int64_t> ev = {}) {
        if (!pass) return;  // keep the first violation
        pass = false;
        code = c;
        detail = d;
        events = std::move(ev);
    }
};

// pos_s / d_s / d_global reconstructed from a trace per the quorum-acked
// ACCEPT rule (FT) or the PREPARE_ACK-send rule (2PC).
struct CertOrderExtract {
    std::map<std::pair<ShardId, TxnId>, int> pos;
    std::map<std::pair<ShardId, TxnId>, Decision> d_local;
    std::map<TxnId, Decision> d_global;
};

// T/P captured at vote-computation instants, possibly several per (shard, txn)
// when a slot was lost to a crash and re-proposed.
using VoteProvenance = std::vector<VoteProv>;

// ---- trace indexing helpers -------------------------------------------------

namespace probe_detail {

inline bool is_boundary(const TraceEvent& e) {
    return e.kind == EventKind::Deliver || e.kind == EventKind::NondetFired ||
           e.kind == EventKind::Crash || e.kind == EventKind::ClientAction;
}

// State of `pid` at the instant of event index i: the snapshot emitted by the
// same handler if the handler mutated state, else the last earlier snapshot.
// Every state mutation in the engine is followed by a snapshot, so this is
// exact.
inline const SnapshotData* state_at(const Trace& tr, std::size_t i, ProcessId pid) {
    for (std::size_t j = i + 1; j < tr.events.size(); ++j) {
        const auto& e = tr.events[j];
        if (is_boundary(e)) break;
        if (e.kind == EventKind::StateSnapshot && e.pid == pid) return &*e.snap;
    }
    for (std::size_t j = i + 1; j-- > 0;) {
        const auto& e = tr.events[j];
        if (e.kind == EventKind::StateSnapshot && e.pid == pid) return &*e.snap;
    }
    return nullptr;
}

inline ShardId shard_of(const SystemConfig& cfg, ProcessId p) {
    auto s = cfg.shard_of_process(p);
    return s ? *s : ShardId{};
}

struct QuorumAck {
    ShardId shard;
    int ballot, slot;
    TxnId txn;
    Decision vote;
    std::vector<std::int64_t> ack_events;
};

// ACCEPT_ACK sends grouped by (shard, ballot, slot, txn, vote); an entry is a
// quorum ack once f+1 distinct senders have sent it.
inline std::vector<QuorumAck> quorum_acks(const Trace& tr, const SystemConfig& cfg) {
    using Key = std::tuple<ShardId, int, int, TxnId, int>;
    std::map<Key, std::set<ProcessId>> senders;
    std::map<Key, std::vector<std::int64_t>> evs;
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::Send || e.msg->kind != MsgKind::AcceptAck) continue;
        Key k{e.msg->shard, e.msg->ballot, e.msg->slot, e.msg->txn,
              static_cast<int>(*e.msg->decision)};
        if (senders[k].insert(e.src).second) evs[k].push_back(e.seq);
    }
    std::vector<QuorumAck> out;
    for (const auto& [k, ss] : senders) {
        if (static_cast<int>(ss.size()) < cfg.quorum_size()) continue;
        out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), std::get<3>(k),
                       static_cast<Decision>(std::get<4>(k)), evs[k]});
    }
    return out;
}

}  // namespace probe_detail

// ---- Figure 5 invariants ----------------------------------------------------

inline ProbeReport check_fig5(const Trace& tr, const SystemConfig& cfg) {
    using namespace probe_detail;
    ProbeReport rep;

    // Invariant 1: per (ballot, shard, slot) the ACCEPTs sent carry one
    // (txn, vote) pair.
    {
        std::map<std::tuple<int, ShardId, int>, std::pair<TxnId, Decision>> seen;
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::Send || e.msg->kind != MsgKind::Accept) continue;
            std::tuple<int, ShardId, int> key{e.msg->ballot, shard_of(cfg, e.dst),
                                              e.msg->slot};
            std::pair<TxnId, Decision> val{e.msg->txn, *e.msg->decision};
            auto [it, fresh] = seen.emplace(key, val);
            if (!fresh && it->second != val)
                rep.fail("Invariant1", "two ACCEPTs for one (ballot, shard, slot)",
                         {e.seq});
        }
    }

    // Invariant 2: right after a process acks ACCEPT(b, k, t, d), its log up
    // to k matches the ballot leader's log at ACCEPT-send time.
    for (std::size_t i = 0; i < tr.events.size() && rep.pass; ++i) {
        const auto& ack = tr.events[i];
        if (ack.kind != EventKind::Send || ack.msg->kind != MsgKind::AcceptAck) continue;
        int b = ack.msg->ballot, k = ack.msg->slot;
        // Leader arrays at the matching ACCEPT send.
        const SnapshotData* leader = nullptr;
        for (std::size_t j = 0; j < i; ++j) {
            const auto& acc = tr.events[j];
            if (acc.kind != EventKind::Send || acc.msg->kind != MsgKind::Accept) continue;
            if (acc.msg->ballot != b || acc.msg->slot != k ||
                acc.msg->txn != ack.msg->txn || acc.dst != ack.src)
                continue;
            leader = state_at(tr, j, acc.src);
        }
        const SnapshotData* mine = state_at(tr, i, ack.src);
        if (!leader || !mine) continue;
        for (int j = 0; j <= k; ++j) {
            bool ok = j < leader->log.size() && j < mine->log.size() &&
                      leader->log.phase[j] != Phase::Start &&
                      mine->log.phase[j] != Phase::Start &&
                      leader->log.txn[j] == mine->log.txn[j] &&
                      leader->log.vote[j] == mine->log.vote[j];
            if (!ok) {
                rep.fail("Invariant2", "acker log diverges from leader prefix",
                         {ack.seq});
                break;
            }
        }
    }

    // Invariant 3: quorum-accepted prefixes persist at every later-ballot
    // LEADER/FOLLOWER snapshot.
    auto qas = quorum_acks(tr, cfg);
    for (const auto& qa : qas) {
        // The leader's arrays at the ACCEPT-send instant.
        const SnapshotData* leader = nullptr;
        for (std::size_t j = 0; j < tr.events.size(); ++j) {
            const auto& acc = tr.events[j];
            if (acc.kind != EventKind::Send || acc.msg->kind != MsgKind::Accept) continue;
            if (acc.msg->ballot != qa.ballot || acc.msg->slot != qa.slot ||
                acc.msg->txn != qa.txn || shard_of(cfg, acc.dst) != qa.shard)
                continue;
            leader = state_at(tr, j, acc.src);
            break;
        }
        if (!leader) continue;
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::StateSnapshot || e.snap->shard != qa.shard) continue;
            if (e.snap->status == "RECOVERING" || e.snap->ballot <= qa.ballot) continue;
            for (int j = 0; j <= qa.slot; ++j) {
                bool ok = j < e.snap->log.size() && j < leader->log.size() &&
                          e.snap->log.phase[j] != Phase::Start &&
                          e.snap->log.txn[j] == leader->log.txn[j] &&
                          e.snap->log.vote[j] == leader->log.vote[j];
                if (!ok) {
                    rep.fail("Invariant3", "accepted prefix lost in later ballot",
                             {e.seq});
                    break;
                }
            }
            if (!rep.pass) break;
        }
        if (!rep.pass) break;
    }

    // Invariant 4: within one ballot a transaction occupies one slot per shard.
    {
        std::map<std::tuple<int, ShardId, TxnId>, int> seen;
        for (const auto& e : tr.events) {
            if (e.kind != EventKind::Send || e.msg->kind != MsgKind::Accept) continue;
            std::tuple<int, ShardId, TxnId> key{e.msg->ballot, shard_of(cfg, e.dst),
                                                e.msg->txn};
            auto [it, fresh] = seen.emplace(key, e.msg->slot);
            if (!fresh && it->second != e.msg->slot)
                rep.fail("Invariant4", "transaction accepted at two slots in one ballot",
                         {e.seq});
        }
    }

    // Invariant 5: all transactions in any txn array are distinct.
    for (const auto& e : tr.events) {
        if (e.kind != EventKind::StateSnapshot) continue;
        std::set<TxnId> ids;
        for (int k = 0; k < e.snap->log.size(); ++k) {
            if (e.snap->log.phase[k] == Phase::Start) continue;
            if (!ids.insert(e.snap->log.txn[k]).second)
                rep.fail("Invariant5", "duplicate transaction in txn array", {e.seq});
        }
    }

    // Invariant 6a: DECISIONs for one (shard, slot) agree. Decision records
    // (leaderless aggregation) count as sends to every shard they touch.
    {
        std::map<std::pair<ShardId, int>, Decision> seen;
        auto note = [&](const ShardId& s, int k, Decision d, std::int64_t seq) {
            auto [it, fresh] = seen.emplace(std::make_pair(s, k), d);
            if (!fresh && it->second != d)
                rep.fail("Invariant6a", "conflicting DECISIONs for one slot", {seq});
        };
        for (const auto& e : tr.events) {
            if (e.kind == EventKind::Send && e.msg->kind == MsgKind::Decision &&
                !e.msg->to_client)
                note(shard_of(cfg, e.dst), e.msg->slot, *e.msg->decision, e.seq);
            if (e.kind == EventKind::HandlerFired && e.decided)
                for (const auto& [s, bp] : e.decided->slots)
                    note(s, bp.second, e.decided->decision, e.seq);
        }
    }

    // Invariant 6b: DECISIONs for one transaction agree system-wide.
    {
        std::map<TxnId, Decision> seen;
        auto note = [&](const TxnId& t, Decision d, std::int64_t seq) {
            auto [it, fresh] = seen.emplace(t, d);
            if (!fresh && it->second != d)
                rep.fail("Invariant6b", "conflicting DECISIONs for " + t, {seq});
        };
        for (const auto& e : tr.events) {
            if (e.kind == EventKind::Send && e.msg->kind == MsgKind::Decision &&
                e.msg->to_client)
                note(e.msg->txn, *e.msg->decision, e.seq);
            if (e.kind == EventKind::HandlerFired && e.decided)
                note(e.decided->txn, e.decided->decision, e.seq);
        }
    }

    // Invariant 7a/7b: quorum-acked tuples agree per slot and per transaction.
    {
        std::map<std::pair<ShardId, int>, std::pair<TxnId, Decision>> by_slot;
        std::map<std::pair<ShardId, TxnId>, std::pair<int, Decision>> by_txn;
        for (const auto& qa : qas) {
            std::pair<TxnId, Decision> tv{qa.txn, qa.vote};
            auto [it, fresh] = by_slot.emplace(std::make_pair(qa.shard, qa.slot), tv);
            if (!fresh && it->second != tv)
                rep.fail("Invariant7a", "two quorums disagree on a slot", qa.ack_events);
            std::pair<int, Decision> kv{qa.slot, qa.vote};
            auto [it2, fresh2] = by_txn.emplace(std::make_pair(qa.shard, qa.txn), kv);
            if (!fresh2 && it2->second != kv)
                rep.fail("Invariant7b", "two quorums disagree on " + qa.txn,
                         qa.ack_events);
        }
    }

    return rep;
}

// ---- Propositions 3 and 4 ---------------------------------------------------

inline ProbeReport check_props(const Trace& tr, const SystemConfig& cfg) {
    using namespace probe_detail;
    ProbeReport rep;
    bool any_snapshot = false;
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const auto& e = tr.events[i];
        if (e.kind != EventKind::StateSnapshot) continue;
        any_snapshot = true;
        const auto& s = *e.snap;
        // Prop 3(1): the occupied part of the log has no holes.
        for (int k = 1; k < s.log.size(); ++k)
            if (s.log.phase[k] != Phase::Start && s.log.phase[k - 1] == Phase::Start)
                rep.fail("Prop3-1", "hole below an occupied slot", {e.seq});
        // Prop 3(2): non-recovering processes have ballot = cballot.
        if (!s.status.empty() && s.status != "RECOVERING" && s.ballot != s.cballot)
            rep.fail("Prop3-2", "ballot != cballot outside recovery", {e.seq});
        for (int k = 0; k < s.log.size(); ++k) {
            if (s.log.phase[k] != Phase::Decided) continue;
            Decision d = *s.log.dec[k];
            // Prop 4(b).
            if (d == Decision::Commit && s.log.vote[k] != Decision::Commit)
                rep.fail("Prop4b", "DECIDED COMMIT over an ABORT vote", {e.seq});
            // Prop 4(a): a matching DECISION reached this shard earlier. Only
            // meaningful for replicated shards (FT traces carry status).
            if (s.status.empty()) continue;
            bool justified = false;
            for (std::size_t j = 0; j < tr.events.size() && tr.events[j].seq <= e.seq;
                 ++j) {
                const auto& p = tr.events[j];
                if (p.kind == EventKind::Send && p.msg->kind == MsgKind::Decision &&
                    !p.msg->to_client && p.msg->slot == k &&
                    *p.msg->decision == d && shard_of(cfg, p.dst) == s.shard)
                    justified = true;
                if (p.kind == EventKind::HandlerFired && p.decided &&
                    p.decided->decision == d) {
                    auto it = p.decided->slots.find(s.shard);
                    if (it != p.decided->slots.end() && it->second.second == k)
                        justified = true;
                }
            }
            if (!justified)
                rep.fail("Prop4a", "DECIDED slot without a prior DECISION", {e.seq});
        }
    }
    if (!any_snapshot && !tr.events.empty())
        throw Error("MalformedTrace", "trace carries no state snapshots");
    return rep;
}

// ---- certification-order extraction ----------------------------------------

namespace probe_detail {

inline void assign(CertOrderExtract& ex, const ShardId& s, const TxnId& t, int pos,
                   Decision d, std::int64_t seq) {
    auto key = std::make_pair(s, t);
    auto pit = ex.pos.find(key);
    if (pit != ex.pos.end() && pit->second != pos)
        throw Error("AmbiguousAssignment",
                    t + " at two positions in " + s + " (event " + std::to_string(seq) +
                        ")");
    auto dit = ex.d_local.find(key);
    if (dit != ex.d_local.end() && dit->second != d)
        throw Error("AmbiguousAssignment", t + " with two votes in " + s);
    for (const auto& [k2, p2] : ex.pos)
        if (k2.first == s && p2 == pos && k2.second != t)
            throw Error("AmbiguousAssignment",
                        "slot " + std::to_string(pos) + " of " + s + " held by " +
                            k2.second + " and " + t);
    ex.pos[key] = pos;
    ex.d_local[key] = d;
}

}  // namespace probe_detail

inline CertOrderExtract extract_cert_orders(const Trace& tr, const SystemConfig& cfg) {
    using namespace probe_detail;
    CertOrderExtract ex;

    // 2PC rule: every PREPARE_ACK send defines the sender's whole prefix.
    for (std::size_t i = 0; i < tr.events.size(); ++i) {
        const auto& e = tr.events[i];
        if (e.kind != EventKind::Send || e.msg->kind != MsgKind::PrepareAck) continue;
        const SnapshotData* st = state_at(tr, i, e.src);
        if (!st) throw Error("MalformedTrace", "PREPARE_ACK without sender state");
        for (int j = 0; j <= e.msg->slot && j < st->log.size(); ++j)
            assign(ex, e.msg->shard, st->log.txn[j], j, st->log.vote[j], e.seq);
    }

    // FT rule: quorum-acked ACCEPTs define the sending leader's prefix.
    for (const auto& qa : quorum_acks(tr, cfg)) {
        const SnapshotData* leader = nullptr;
        std::int64_t at = -1;
        for (std::size_t j = 0; j < tr.events.size(); ++j) {
            const auto& acc = tr.events[j];
            if (acc.kind != EventKind::Send || acc.msg->kind != MsgKind::Accept) continue;
            if (acc.msg->ballot != qa.ballot || acc.msg->slot != qa.slot ||
                acc.msg->txn != qa.txn || *acc.msg->decision != qa.vote ||
                shard_of(cfg, acc.dst) != qa.shard)
                continue;
            leader = state_at(tr, j, acc.src);
            at = acc.seq;
            break;
        }
        if (!leader) continue;
        for (int j = 0; j <= qa.slot && j < leader->log.size(); ++j)
            assign(ex, qa.shard, leader->log.txn[j], j, leader->log.vote[j], at);
    }

    // d_global from computed decisions and DECISION-to-client sends.
    auto note = [&](const TxnId& t, Decision d) {
        auto [it, fresh] = ex.d_global.emplace(t, d);
        if (!fresh && it->second != d)
            throw Error("AmbiguousAssignment", "two global decisions for " + t);
    };
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::HandlerFired && e.decided)
            note(e.decided->txn, e.decided->decision);
        if (e.kind == EventKind::Send && e.msg->kind == MsgKind::Decision &&
            e.msg->to_client)
            note(e.msg->txn, *e.msg->decision);
    }
    return ex;
}

inline VoteProvenance collect_provenance(const Trace& tr) {
    VoteProvenance out;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::HandlerFired && e.prov) out.push_back(*e.prov);
    return out;
}

// ---- Figure 6 constraints ---------------------------------------------------

inline ProbeReport check_fig6(const CertOrderExtract& ex, const VoteProvenance& prov,
                              const History& h, const SystemConfig& cfg,
                              const IsolationPolicy& policy, const TxnCatalog& catalog) {
    ProbeReport rep;

    // (11): d[t] = meet of the shard votes, whenever all are defined.
    for (const auto& [t, d] : ex.d_global) {
        const auto& txn = catalog.at(t);
        Decision m = Decision::Commit;
        bool all = true;
        for (const auto& s : shards_of(txn, cfg)) {
            auto it = ex.d_local.find({s, t});
            if (it == ex.d_local.end()) {
                all = false;
                break;
            }
            m = meet(m, it->second);
        }
        if (all && m != d) rep.fail("Fig6-11", "decision is not the meet of votes: " + t);
    }
    for (const auto& a : h.actions)
        if (a.kind == Action::Kind::Decide) {
            auto it = ex.d_global.find(a.txn);
            if (it == ex.d_global.end() || it->second != *a.decision)
                rep.fail("Fig6-11", "client decision differs from computed: " + a.txn);
        }

    // (12) downclosure and (13) injectivity per shard.
    std::map<ShardId, std::map<int, TxnId>> by_shard;
    for (const auto& [key, p] : ex.pos) {
        auto& slots = by_shard[key.first];
        auto [it, fresh] = slots.emplace(p, key.second);
        if (!fresh) rep.fail("Fig6-13", "two transactions share a slot in " + key.first);
    }
    for (const auto& [s, slots] : by_shard)
        for (const auto& [p, t] : slots)
            for (int j = 0; j < p; ++j)
                if (!slots.count(j)) rep.fail("Fig6-12", "hole in the order of " + s);

    // (14): real-time order respected by positions.
    {
        std::map<TxnId, std::size_t> certify_at, decide_at;
        for (std::size_t i = 0; i < h.actions.size(); ++i) {
            if (h.actions[i].kind == Action::Kind::Certify)
                certify_at[h.actions[i].txn] = i;
            else
                decide_at[h.actions[i].txn] = i;
        }
        for (const auto& [t, di] : decide_at) {
            for (const auto& [t2, ci] : certify_at) {
                if (t == t2 || di >= ci) continue;
                const auto& txn = catalog.at(t);
                const auto& txn2 = catalog.at(t2);
                for (const auto& s : shards_of(txn, cfg)) {
                    if (!shards_of(txn2, cfg).count(s)) continue;
                    auto p1 = ex.pos.find({s, t});
                    auto p2 = ex.pos.find({s, t2});
                    if (p1 == ex.pos.end() || p2 == ex.pos.end()) continue;
                    if (p1->second >= p2->second)
                        rep.fail("Fig6-14", t + " decided before certify(" + t2 +
                                                ") but not ordered before it in " + s);
                }
            }
        }
    }

    // (15)-(17) against captured provenance.
    for (const auto& [key, d_s] : ex.d_local) {
        const auto& [s, t] = key;
        int pos_t = ex.pos.at(key);
        const VoteProv* pv = nullptr;
        for (const auto& p : prov)
            if (p.shard == s && p.txn == t && p.slot == pos_t) pv = &p;
        if (!pv) {
            rep.fail("MissingProvenance", "no vote provenance for " + t + " at " + s);
            continue;
        }
        TxnSet T, P;
        for (const auto& id : pv->T) T.push_back(catalog.at(id));
        for (const auto& id : pv->P) P.push_back(catalog.at(id));
        const auto& txn = catalog.at(t);
        Decision expect = meet(policy.local_committed(cfg, s, T, txn),
                               policy.local_prepared(cfg, s, P, txn));
        if (expect != d_s) rep.fail("Fig6-15", "stored vote differs from f_s ⊓ g_s: " + t);

        std::set<TxnId> Pset(pv->P.begin(), pv->P.end());
        std::set<TxnId> Tset(pv->T.begin(), pv->T.end());
        std::set<TxnId> expected_T;
        for (const auto& [key2, p2] : ex.pos) {
            if (key2.first != s || p2 >= pos_t) continue;
            auto dg = ex.d_global.find(key2.second);
            if (dg != ex.d_global.end() && dg->second == Decision::Commit &&
                !Pset.count(key2.second))
                expected_T.insert(key2.second);
        }
        if (Tset != expected_T)
            rep.fail("Fig6-16", "T set differs from committed predecessors: " + t);
        for (const auto& id : Pset) {
            auto pp = ex.pos.find({s, id});
            auto dv = ex.d_local.find({s, id});
            bool ok = pp != ex.pos.end() && pp->second < pos_t &&
                      dv != ex.d_local.end() && dv->second == Decision::Commit;
            if (!ok) rep.fail("Fig6-17", "P contains a non-COMMIT-voted predecessor: " + t);
        }
    }
    return rep;
}

// ---- ⊏_dec ∪ ⊏_rt acyclicity ----------------------------------------------

inline ProbeReport check_acyclicity(const CertOrderExtract& ex, const VoteProvenance& prov,
                                    const History& h, const SystemConfig& cfg,
                                    const TxnCatalog& catalog) {
    ProbeReport rep;
    std::set<TxnId> nodes;
    for (const auto& a : h.actions) nodes.insert(a.txn);

    std::map<TxnId, std::set<TxnId>> edges;  // t' -> t meaning t' ⊏ t
    auto add_edge = [&](const TxnId& from, const TxnId& to) {
        if (from != to) edges[from].insert(to);
    };

    // ⊏_dec.
    for (const TxnId& t : nodes) {
        const auto& txn_t = catalog.find(t);
        if (txn_t == catalog.end()) continue;
        for (const auto& s : shards_of(txn_t->second, cfg)) {
            auto pt = ex.pos.find({s, t});
            if (pt == ex.pos.end()) continue;
            const VoteProv* pv = nullptr;
            for (const auto& p : prov)
                if (p.shard == s && p.txn == t && p.slot == pt->second) pv = &p;
            std::set<TxnId> Pset, Tset;
            if (pv) {
                Pset.insert(pv->P.begin(), pv->P.end());
                Tset.insert(pv->T.begin(), pv->T.end());
            }
            for (const TxnId& tp : Tset) add_edge(tp, t);
            for (const auto& [key2, p2] : ex.pos) {
                if (key2.first != s || p2 >= pt->second) continue;
                const TxnId& tp = key2.second;
                auto dv = ex.d_local.find({s, tp});
                auto dg = ex.d_global.find(tp);
                if (dv != ex.d_local.end() && dv->second == Decision::Commit &&
                    dg != ex.d_global.end() && dg->second == Decision::Abort &&
                    !Pset.count(tp))
                    add_edge(tp, t);
            }
        }
    }

    // ⊏_rt.
    {
        std::set<TxnId> decided_so_far;
        for (const auto& a : h.actions) {
            if (a.kind == Action::Kind::Certify) {
                for (const TxnId& tp : decided_so_far) add_edge(tp, a.txn);
            } else {
                decided_so_far.insert(a.txn);
            }
        }
    }

    // Cycle detection with a witness path.
    std::map<TxnId, int> color;  // 0 = white, 1 = grey, 2 = black
    std::vector<TxnId> path;
    std::function<bool(const TxnId&)> dfs = [&](const TxnId& u) -> bool {
        color[u] = 1;
        path.push_back(u);
        for (const TxnId& v : edges[u]) {
            if (color[v] == 1) {
                path.push_back(v);
                return true;
            }
            if (color[v] == 0 && dfs(v)) return true;
        }
        path.pop_back();
        color[u] = 2;
        return false;
    };
    for (const TxnId& t : nodes) {
        if (color[t] == 0 && dfs(t)) {
            std::string witness;
            auto it = std::find(path.begin(), path.end(), path.back());
            for (; it != path.end(); ++it) witness += (witness.empty() ? "" : " -> ") + *it;
            rep.fail("CyclicDependency", witness);
            break;
        }
    }
    return rep;
}

// The linearization points used by check_certificate: the first event that
// establishes each transaction's decision.
inline std::map<TxnId, std::int64_t> decision_points(const Trace& tr) {
    std::map<TxnId, std::int64_t> out;
    for (const auto& e : tr.events) {
        if (e.kind == EventKind::HandlerFired && e.decided)
            out.emplace(e.decided->txn, e.seq);
        if (e.kind == EventKind::Send && e.msg->kind == MsgKind::Decision &&
            e.msg->to_client)
            out.emplace(e.msg->txn, e.seq);
    }
    return out;
}

}  // namespace tcs
