#pragma once

#include <vector>

#include "tcs/history_check.hpp"
#include "tcs/message.hpp"
#include "tcs/policy.hpp"

namespace tcs {

// T and P as captured at the instant a leader computed a vote; the raw
// material for checking constraints (15)-(17) on traces.
struct VoteProv {
    ShardId shard;
    TxnId txn;
    int slot = -1;
    int ballot = 0;  // 0 in the reliable protocol
    std::vector<TxnId> T;  // decided-committed prefix used by f_s
    std::vector<TxnId> P;  // prepared-with-commit-vote prefix used by g_s
};

struct VoteOutcome {
    Decision vote = Decision::Abort;
    VoteProv prov;
};

// vote = f_s(decided-committed slots below `upto`, t)
//        ⊓ g_s(prepared slots with COMMIT vote below `upto`, t)
inline VoteOutcome compute_vote(const SystemConfig& cfg, const IsolationPolicy& p,
                                const ShardId& shard, const LogArrays& log, int upto,
                                const Transaction& t, const TxnCatalog& catalog) {
    TxnSet decided_commit, prepared_commit;
    VoteOutcome out;
    for (int k = 0; k < upto && k < log.size(); ++k) {
        if (log.phase[k] == Phase::Decided && log.dec[k] == Decision::Commit) {
            decided_commit.push_back(catalog.at(log.txn[k]));
            out.prov.T.push_back(log.txn[k]);
        } else if (log.phase[k] == Phase::Prepared && log.vote[k] == Decision::Commit) {
            prepared_commit.push_back(catalog.at(log.txn[k]));
            out.prov.P.push_back(log.txn[k]);
        }
    }
    out.vote = meet(p.local_committed(cfg, shard, decided_commit, t),
                    p.local_prepared(cfg, shard, prepared_commit, t));
    out.prov.shard = shard;
    out.prov.txn = t.id;
    out.prov.slot = upto;
    return out;
}

}  // namespace tcs
