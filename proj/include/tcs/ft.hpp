#pragma once

#include <map>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "tcs/vote.hpp"

namespace tcs {
namespace ft {

enum class Status { Leader, Follower, Recovering };

inline const char* to_string(Status s) {
    switch (s) {
        case Status::Leader: return "LEADER";
        case Status::Follower: return "FOLLOWER";
        case Status::Recovering: return "RECOVERING";
    }
    return "?";
}

// leader(b) = (b - 1) mod (2f + 1), as an index into the member list.
inline int leader_index(int ballot, int group_size) {
    return (ballot - 1) % group_size;
}

struct ReplicaState {
    ShardId shard;
    int member_index = 0;
    Status status = Status::Follower;
    int ballot = 1;
    int cballot = 1;
    int next = -1;
    LogArrays log;

    // NEW_LEADER_ACK collection while recovering, keyed by ballot.
    std::map<int, std::map<ProcessId, Message>> nl_acks;

    std::optional<int> slot_of(const TxnId& t) const {
        for (int k = 0; k <= next; ++k)
            if (log.phase[k] != Phase::Start && log.txn[k] == t) return k;
        return std::nullopt;
    }
};

// Replicas start as if a ballot-1 recovery over empty logs had completed:
// member 0 leads, the rest follow.
inline ReplicaState make_replica(const ShardId& shard, int member_index) {
    ReplicaState st;
    st.shard = shard;
    st.member_index = member_index;
    st.status = member_index == 0 ? Status::Leader : Status::Follower;
    return st;
}

struct PrepareOutcome {
    bool handled = false;          // false: not the leader, message ignored
    Message accept;                // ACCEPT broadcast to the shard
    std::optional<VoteProv> prov;  // set when a fresh vote was computed
};

inline PrepareOutcome handle_prepare(ReplicaState& st, const Transaction& t,
                                     ProcessId sender, bool sender_is_process,
                                     const IsolationPolicy& p, const SystemConfig& cfg,
                                     const TxnCatalog& catalog) {
    PrepareOutcome out;
    if (st.status != Status::Leader) return out;
    out.handled = true;
    ProcessId coord = sender_is_process ? sender : coord_of(t, cfg);

    out.accept.kind = MsgKind::Accept;
    out.accept.ballot = st.ballot;
    out.accept.txn = t.id;
    out.accept.coord = coord;
    if (auto k = st.slot_of(t.id)) {
        out.accept.slot = *k;
        out.accept.decision = st.log.vote[*k];
        return out;
    }
    ++st.next;
    st.log.ensure(st.next);
    VoteOutcome v = compute_vote(cfg, p, st.shard, st.log, st.next, t, catalog);
    v.prov.ballot = st.ballot;
    st.log.txn[st.next] = t.id;
    st.log.vote[st.next] = v.vote;
    st.log.phase[st.next] = Phase::Prepared;
    out.accept.slot = st.next;
    out.accept.decision = v.vote;
    out.prov = v.prov;
    return out;
}

struct AcceptOutcome {
    bool handled = false;  // false: stale ballot or wrong status, ignored
    Message ack;           // ACCEPT_ACK; routed to the coordinator, or broadcast
                           // in leaderless mode
};

inline AcceptOutcome handle_accept(ReplicaState& st, const Message& m) {
    AcceptOutcome out;
    if (st.status == Status::Recovering || st.ballot != m.ballot) return out;
    out.handled = true;
    st.log.ensure(m.slot);
    if (st.log.phase[m.slot] == Phase::Start) {
        st.log.txn[m.slot] = m.txn;
        st.log.vote[m.slot] = *m.decision;
        st.log.phase[m.slot] = Phase::Prepared;
        if (m.slot > st.next) st.next = m.slot;
    }
    out.ack.kind = MsgKind::AcceptAck;
    out.ack.shard = st.shard;
    out.ack.ballot = m.ballot;
    out.ack.slot = m.slot;
    out.ack.txn = m.txn;
    out.ack.decision = m.decision;
    return out;
}

inline bool handle_decision(ReplicaState& st, int b, int k, Decision d) {
    if (st.status == Status::Recovering || st.ballot < b) return false;
    if (k < 0 || k >= st.log.size() || st.log.phase[k] != Phase::Prepared) return false;
    st.log.dec[k] = d;
    st.log.phase[k] = Phase::Decided;
    return true;
}

// NEW_LEADER with the smallest ballot above the current one led by this
// process. Broadcast to the whole shard, self included.
inline Message recover(const ReplicaState& st, const SystemConfig& cfg) {
    int n = static_cast<int>(cfg.procs(st.shard).size());
    int b = st.ballot + 1;
    while (leader_index(b, n) != st.member_index) ++b;
    Message m;
    m.kind = MsgKind::NewLeader;
    m.ballot = b;
    return m;
}

inline std::optional<Message> handle_new_leader(ReplicaState& st, const Message& m) {
    if (m.ballot <= st.ballot) return std::nullopt;
    st.status = Status::Recovering;
    st.ballot = m.ballot;
    Message ack;
    ack.kind = MsgKind::NewLeaderAck;
    ack.ballot = st.ballot;
    ack.cballot = st.cballot;
    ack.state = st.log;
    return ack;
}

struct NewLeaderAckOutcome {
    bool became_leader = false;
    Message new_state;  // broadcast to the other shard members
};

// Collect NEW_LEADER_ACKs; once a quorum for the current ballot is in, merge
// the reported logs and take over as leader.
inline std::optional<NewLeaderAckOutcome> handle_new_leader_ack(ReplicaState& st,
                                                               const Message& m,
                                                               ProcessId sender,
                                                               const SystemConfig& cfg) {
    st.nl_acks[m.ballot][sender] = m;
    if (st.status != Status::Recovering || st.ballot != m.ballot) return std::nullopt;
    const auto& acks = st.nl_acks[m.ballot];
    if (static_cast<int>(acks.size()) < cfg.quorum_size()) return std::nullopt;

    int max_cballot = 0;
    for (const auto& [_, ack] : acks) max_cballot = std::max(max_cballot, ack.cballot);

    int max_len = 0;
    for (const auto& [_, ack] : acks) max_len = std::max(max_len, ack.state.size());

    LogArrays merged;
    merged.ensure(max_len - 1);
    for (int k = 0; k < max_len; ++k) {
        for (const auto& [_, ack] : acks) {
            if (ack.cballot != max_cballot) continue;
            if (k < ack.state.size() && ack.state.phase[k] != Phase::Start) {
                merged.txn[k] = ack.state.txn[k];
                merged.vote[k] = ack.state.vote[k];
                merged.phase[k] = Phase::Prepared;
                break;
            }
        }
        for (const auto& [_, ack] : acks) {
            if (k < ack.state.size() && ack.state.phase[k] == Phase::Decided) {
                if (merged.phase[k] == Phase::Start) {
                    merged.txn[k] = ack.state.txn[k];
                    merged.vote[k] = ack.state.vote[k];
                }
                merged.dec[k] = ack.state.dec[k];
                merged.phase[k] = Phase::Decided;
                break;
            }
        }
    }
    st.log = merged;
    st.next = -1;
    for (int k = 0; k < merged.size(); ++k)
        if (merged.phase[k] != Phase::Start) st.next = k;
    st.cballot = st.ballot;
    st.status = Status::Leader;

    NewLeaderAckOutcome out;
    out.became_leader = true;
    out.new_state.kind = MsgKind::NewState;
    out.new_state.ballot = st.ballot;
    out.new_state.state = st.log;
    return out;
}

inline bool handle_new_state(ReplicaState& st, const Message& m) {
    if (m.ballot < st.ballot) return false;
    st.status = Status::Follower;
    st.ballot = m.ballot;
    st.cballot = m.ballot;
    st.log = m.state;
    st.next = -1;
    for (int k = 0; k < st.log.size(); ++k)
        if (st.log.phase[k] != Phase::Start) st.next = k;
    return true;
}

// Coordinator takeover: re-send PREPARE for a prepared-but-undecided slot.
inline Message retry(const ReplicaState& st, int k) {
    if (k < 0 || k >= st.log.size() || st.log.phase[k] != Phase::Prepared)
        throw Error("NotPrepared", "slot " + std::to_string(k) + " at " + st.shard);
    Message m;
    m.kind = MsgKind::Prepare;
    m.txn = st.log.txn[k];
    return m;
}

// ---- vote aggregation ------------------------------------------------------

// Acks bucketed by the full (shard, ballot, slot, txn, vote) tuple; a quorum
// never mixes ballots.
struct AckQuorum {
    using Key = std::tuple<ShardId, int, int, TxnId, int>;
    std::map<Key, std::set<ProcessId>> buckets;
    std::set<TxnId> fired;
};

struct FtDecisionBundle {
    TxnId txn;
    Decision decision = Decision::Abort;
    std::map<ShardId, std::pair<int, int>> slots;  // shard -> (ballot b_s, pos_s)
};

inline std::optional<FtDecisionBundle> coordinator_step(AckQuorum& q, const Message& ack,
                                                        ProcessId sender,
                                                        const SystemConfig& cfg,
                                                        const TxnCatalog& catalog) {
    if (ack.kind != MsgKind::AcceptAck) throw Error("BadMessage", "expected ACCEPT_ACK");
    AckQuorum::Key key{ack.shard, ack.ballot, ack.slot, ack.txn,
                       static_cast<int>(*ack.decision)};
    auto& bucket = q.buckets[key];
    bucket.insert(sender);
    bool fresh_quorum = static_cast<int>(bucket.size()) == cfg.quorum_size();

    const Transaction& t = catalog.at(ack.txn);
    auto shards = shards_of(t, cfg);
    FtDecisionBundle b;
    b.txn = ack.txn;
    b.decision = Decision::Commit;
    for (const auto& s : shards) {
        bool found = false;
        for (const auto& [k, senders] : q.buckets) {
            if (std::get<0>(k) != s || std::get<3>(k) != ack.txn) continue;
            if (static_cast<int>(senders.size()) < cfg.quorum_size()) continue;
            b.decision = meet(b.decision, static_cast<Decision>(std::get<4>(k)));
            b.slots[s] = {std::get<1>(k), std::get<2>(k)};
            found = true;
            break;  // deterministic: smallest (ballot, slot, vote) bucket
        }
        if (!found) return std::nullopt;
    }
    if (!fresh_quorum && q.fired.count(ack.txn)) return std::nullopt;
    q.fired.insert(ack.txn);
    return b;
}

}  // namespace ft
}  // namespace tcs
