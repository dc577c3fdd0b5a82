#pragma once

#include <map>
#include <optional>
#include <vector>

#include "tcs/vote.hpp"

namespace tcs {
namespace twopc {

// Per-process state of the reliable multi-shot 2PC protocol. One process
// manages one shard.
struct ShardProcessState {
    ShardId shard;
    int next = -1;
    LogArrays log;

    std::optional<int> slot_of(const TxnId& t) const {
        for (int k = 0; k <= next; ++k)
            if (log.txn[k] == t) return k;
        return std::nullopt;
    }
};

struct PrepareResult {
    Message ack;  // PREPARE_ACK to coord(t)
    ProcessId ack_dst = -1;
    VoteProv prov;
};

inline PrepareResult handle_prepare(ShardProcessState& st, const Transaction& t,
                                    const IsolationPolicy& p, const SystemConfig& cfg,
                                    const TxnCatalog& catalog) {
    if (st.slot_of(t.id)) throw Error("DuplicatePrepare", t.id + " at " + st.shard);
    ++st.next;
    st.log.ensure(st.next);
    VoteOutcome v = compute_vote(cfg, p, st.shard, st.log, st.next, t, catalog);
    st.log.txn[st.next] = t.id;
    st.log.vote[st.next] = v.vote;
    st.log.phase[st.next] = Phase::Prepared;

    PrepareResult r;
    r.ack.kind = MsgKind::PrepareAck;
    r.ack.shard = st.shard;
    r.ack.slot = st.next;
    r.ack.txn = t.id;
    r.ack.decision = v.vote;
    r.ack_dst = coord_of(t, cfg);
    r.prov = v.prov;
    return r;
}

inline void handle_decision(ShardProcessState& st, int k, Decision d) {
    if (k < 0 || k >= st.log.size() || st.log.phase[k] == Phase::Start)
        throw Error("UnknownSlot", "slot " + std::to_string(k) + " at " + st.shard);
    st.log.dec[k] = d;
    st.log.phase[k] = Phase::Decided;
}

// Line 21: drop the decision but keep the vote.
inline void forget_decision(ShardProcessState& st, int k) {
    if (k < 0 || k >= st.log.size() || st.log.phase[k] != Phase::Decided)
        throw Error("NotDecided", "slot " + std::to_string(k) + " at " + st.shard);
    st.log.phase[k] = Phase::Prepared;
}

// Line 24: resend the stored vote for any non-START slot.
inline PrepareResult resend_vote(const ShardProcessState& st, int k,
                                 const SystemConfig& cfg, const TxnCatalog& catalog) {
    if (k < 0 || k >= st.log.size() || st.log.phase[k] == Phase::Start)
        throw Error("EmptySlot", "slot " + std::to_string(k) + " at " + st.shard);
    PrepareResult r;
    r.ack.kind = MsgKind::PrepareAck;
    r.ack.shard = st.shard;
    r.ack.slot = k;
    r.ack.txn = st.log.txn[k];
    r.ack.decision = st.log.vote[k];
    r.ack_dst = coord_of(catalog.at(st.log.txn[k]), cfg);
    return r;
}

// Coordinator bookkeeping: one (slot, vote) entry per (txn, shard).
struct CoordinatorState {
    std::map<TxnId, std::map<ShardId, std::pair<int, Decision>>> acks;
};

struct DecisionBundle {
    TxnId txn;
    Decision decision = Decision::Abort;
    std::map<ShardId, int> slots;  // pos_s per shard
};

// Records the ack; emits the decision bundle whenever acks cover every shard
// of the transaction (including re-fires triggered by line-24 resends).
inline std::optional<DecisionBundle> coordinator_step(CoordinatorState& cs,
                                                      const Message& ack,
                                                      const SystemConfig& cfg,
                                                      const TxnCatalog& catalog) {
    if (ack.kind != MsgKind::PrepareAck) throw Error("BadMessage", "expected PREPARE_ACK");
    const Transaction& t = catalog.at(ack.txn);
    auto shards = shards_of(t, cfg);
    if (!shards.count(ack.shard)) throw Error("IrrelevantShard", ack.shard);

    auto& per_shard = cs.acks[ack.txn];
    auto it = per_shard.find(ack.shard);
    std::pair<int, Decision> entry{ack.slot, *ack.decision};
    if (it != per_shard.end()) {
        if (it->second != entry)
            throw Error("InconsistentResend", ack.txn + " at " + ack.shard);
    } else {
        per_shard[ack.shard] = entry;
    }

    for (const auto& s : shards)
        if (!per_shard.count(s)) return std::nullopt;

    DecisionBundle b;
    b.txn = ack.txn;
    b.decision = Decision::Commit;
    for (const auto& s : shards) {
        b.decision = meet(b.decision, per_shard[s].second);
        b.slots[s] = per_shard[s].first;
    }
    return b;
}

}  // namespace twopc
}  // namespace tcs
