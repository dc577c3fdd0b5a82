#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcs {

using ObjectId = std::string;
using Version = std::uint64_t;
using Value = std::string;
using TxnId = std::string;
using ShardId = std::string;
using ProcessId = int;

inline constexpr Version kMinVersion = 0;

enum class Decision { Commit, Abort };

// d1 ⊓ d2: Commit only if both commit.
inline Decision meet(Decision d1, Decision d2) {
    return (d1 == Decision::Commit && d2 == Decision::Commit) ? Decision::Commit
                                                              : Decision::Abort;
}

inline const char* to_string(Decision d) {
    return d == Decision::Commit ? "COMMIT" : "ABORT";
}

inline Decision decision_from_string(const std::string& s) {
    if (s == "COMMIT") return Decision::Commit;
    if (s == "ABORT") return Decision::Abort;
    throw std::invalid_argument("bad decision: " + s);
}

enum class Phase { Start, Prepared, Decided };

inline const char* to_string(Phase p) {
    switch (p) {
        case Phase::Start: return "START";
        case Phase::Prepared: return "PREPARED";
        case Phase::Decided: return "DECIDED";
    }
    return "?";
}

// A domain-level error with a stable code usable in tests.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

struct Transaction {
    TxnId id;
    ProcessId client = -1;
    std::map<ObjectId, Version> read_set;
    std::map<ObjectId, Value> write_set;
    Version commit_version = 0;

    bool reads(const ObjectId& x) const { return read_set.count(x) != 0; }
    bool writes(const ObjectId& x) const { return write_set.count(x) != 0; }

    bool operator==(const Transaction& other) const { return id == other.id; }
};

struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

inline ValidationResult validate_transaction(const Transaction& t) {
    ValidationResult r;
    // read_set/write_set are maps, so at-most-one-version/value per object
    // holds by construction; DuplicateReadVersion can only arise from a
    // hand-built record outside this type.
    for (const auto& [x, _] : t.write_set) {
        if (!t.reads(x)) {
            r.violations.push_back("WriteWithoutRead");
            break;
        }
    }
    for (const auto& [x, v] : t.read_set) {
        if (t.commit_version <= v) {
            r.violations.push_back("CommitVersionNotAboveReads");
            break;
        }
    }
    return r;
}

struct SystemConfig {
    // Shard -> ordered member list. Length 1 per shard for multi-shot 2PC,
    // 2f+1 for the fault-tolerant protocol.
    std::map<ShardId, std::vector<ProcessId>> members;
    std::map<ObjectId, ShardId> ownership;
    int f = 0;

    const std::vector<ProcessId>& procs(const ShardId& s) const {
        auto it = members.find(s);
        if (it == members.end()) throw Error("UnknownShard", s);
        return it->second;
    }

    int quorum_size() const { return f + 1; }

    std::optional<ShardId> shard_of_process(ProcessId p) const {
        for (const auto& [s, ms] : members)
            for (ProcessId m : ms)
                if (m == p) return s;
        return std::nullopt;
    }

    bool owns(const ShardId& s, const ObjectId& x) const {
        auto it = ownership.find(x);
        return it != ownership.end() && it->second == s;
    }
};

// Owners of the objects in R(t). Written objects are a subset of read ones,
// so this covers the whole footprint.
inline std::set<ShardId> shards_of(const Transaction& t, const SystemConfig& cfg) {
    std::set<ShardId> out;
    for (const auto& [x, _] : t.read_set) {
        auto it = cfg.ownership.find(x);
        if (it == cfg.ownership.end()) throw Error("UnownedObject", x);
        out.insert(it->second);
    }
    return out;
}

// Default rule: first member of the smallest shard id touched by t.
inline ProcessId coord_of(const Transaction& t, const SystemConfig& cfg) {
    auto ss = shards_of(t, cfg);
    if (ss.empty()) throw Error("EmptyFootprint", t.id);
    return cfg.procs(*ss.begin()).front();
}

struct Action {
    enum class Kind { Certify, Decide };
    Kind kind = Kind::Certify;
    TxnId txn;
    std::optional<Decision> decision;  // Decide only

    static Action certify(TxnId t) { return {Kind::Certify, std::move(t), std::nullopt}; }
    static Action decide(TxnId t, Decision d) { return {Kind::Decide, std::move(t), d}; }

    bool operator==(const Action& o) const {
        return kind == o.kind && txn == o.txn && decision == o.decision;
    }
};

struct History {
    std::vector<Action> actions;

    bool operator==(const History& o) const { return actions == o.actions; }
};

inline void check_well_formed(const History& h) {
    std::set<TxnId> certified, decided;
    for (const auto& a : h.actions) {
        if (a.kind == Action::Kind::Certify) {
            if (!certified.insert(a.txn).second)
                throw Error("MalformedHistory", "duplicate certify for " + a.txn);
        } else {
            if (!certified.count(a.txn))
                throw Error("MalformedHistory", "decide without certify for " + a.txn);
            if (!decided.insert(a.txn).second)
                throw Error("MalformedHistory", "duplicate decide for " + a.txn);
        }
    }
}

inline std::set<TxnId> committed_txns(const History& h) {
    std::set<TxnId> out;
    for (const auto& a : h.actions)
        if (a.kind == Action::Kind::Decide && a.decision == Decision::Commit)
            out.insert(a.txn);
    return out;
}

// Projection of h to the certify/decide pairs of committed transactions.
inline History committed_projection(const History& h) {
    check_well_formed(h);
    auto committed = committed_txns(h);
    History out;
    for (const auto& a : h.actions)
        if (committed.count(a.txn)) out.actions.push_back(a);
    return out;
}

// ---- canonical textual encodings (trace / history files) -------------------

inline std::string encode_action(const Action& a) {
    std::ostringstream os;
    if (a.kind == Action::Kind::Certify) {
        os << "certify " << a.txn;
    } else {
        os << "decide " << a.txn << " " << to_string(*a.decision);
    }
    return os.str();
}

inline Action parse_action(const std::string& line) {
    std::istringstream is(line);
    std::string kind, txn, dec;
    is >> kind >> txn;
    if (kind == "certify") return Action::certify(txn);
    if (kind == "decide") {
        is >> dec;
        return Action::decide(txn, decision_from_string(dec));
    }
    throw Error("MalformedHistory", "bad action line: " + line);
}

inline std::string encode_transaction(const Transaction& t) {
    std::ostringstream os;
    os << "txn " << t.id << " client=" << t.client << " vc=" << t.commit_version << " R";
    bool first = true;
    for (const auto& [x, v] : t.read_set) {
        os << (first ? " " : ",") << x << ":" << v;
        first = false;
    }
    os << " W";
    first = true;
    for (const auto& [x, val] : t.write_set) {
        os << (first ? " " : ",") << x << "=" << val;
        first = false;
    }
    return os.str();
}

}  // namespace tcs
