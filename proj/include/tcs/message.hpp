#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tcs/core.hpp"

namespace tcs {

enum class MsgKind {
    Prepare,
    PrepareAck,
    Accept,
    AcceptAck,
    Decision,
    NewLeader,
    NewLeaderAck,
    NewState,
};

inline const char* to_string(MsgKind k) {
    switch (k) {
        case MsgKind::Prepare: return "PREPARE";
        case MsgKind::PrepareAck: return "PREPARE_ACK";
        case MsgKind::Accept: return "ACCEPT";
        case MsgKind::AcceptAck: return "ACCEPT_ACK";
        case MsgKind::Decision: return "DECISION";
        case MsgKind::NewLeader: return "NEW_LEADER";
        case MsgKind::NewLeaderAck: return "NEW_LEADER_ACK";
        case MsgKind::NewState: return "NEW_STATE";
    }
    return "?";
}

// The slot-indexed log kept by shard processes: txn/vote/dec/phase arrays.
struct LogArrays {
    std::vector<TxnId> txn;
    std::vector<Decision> vote;
    std::vector<std::optional<Decision>> dec;
    std::vector<Phase> phase;

    int size() const { return static_cast<int>(phase.size()); }

    void ensure(int slot) {
        while (size() <= slot) {
            txn.emplace_back();
            vote.push_back(Decision::Abort);
            dec.emplace_back();
            phase.push_back(Phase::Start);
        }
    }

    bool operator==(const LogArrays& o) const {
        return txn == o.txn && vote == o.vote && dec == o.dec && phase == o.phase;
    }
};

struct Message {
    MsgKind kind = MsgKind::Prepare;
    TxnId txn;                         // Prepare / PrepareAck / Accept / AcceptAck / Decision-to-client
    ShardId shard;                     // PrepareAck / AcceptAck
    int slot = -1;                     // PrepareAck / Accept / AcceptAck / Decision-to-shard
    int ballot = 0;                    // FT messages
    int cballot = 0;                   // NewLeaderAck
    std::optional<Decision> decision;  // votes and decisions
    ProcessId coord = -1;              // Accept: designated coordinator for acks
    bool to_client = false;            // Decision addressed to the client
    LogArrays state;                   // NewLeaderAck / NewState payload

    bool operator==(const Message& o) const {
        return kind == o.kind && txn == o.txn && shard == o.shard && slot == o.slot &&
               ballot == o.ballot && cballot == o.cballot && decision == o.decision &&
               coord == o.coord && to_client == o.to_client && state == o.state;
    }
};

struct Outbound {
    ProcessId dst;
    Message msg;
};

}  // namespace tcs
