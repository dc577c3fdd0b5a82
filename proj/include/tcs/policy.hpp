#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tcs/core.hpp"

namespace tcs {

using TxnSet = std::vector<Transaction>;  // set semantics, membership by id

// Bundle of a global certification function f and the per-shard pair
// (f_s, g_s). f_s certifies against decided-committed transactions, g_s
// against transactions merely prepared to commit.
struct IsolationPolicy {
    std::string name;
    std::function<Decision(const TxnSet&, const Transaction&)> global;
    std::function<Decision(const SystemConfig&, const ShardId&, const TxnSet&,
                           const Transaction&)>
        local_committed;  // f_s
    std::function<Decision(const SystemConfig&, const ShardId&, const TxnSet&,
                           const Transaction&)>
        local_prepared;  // g_s
};

namespace detail {

// Serializability, global: no version read by t was overwritten in T.
inline bool ser_global_ok(const TxnSet& T, const Transaction& t) {
    for (const auto& [x, v] : t.read_set)
        for (const auto& tp : T)
            if (tp.writes(x) && tp.commit_version > v) return false;
    return true;
}

// Snapshot isolation, global: same check restricted to objects t writes.
inline bool si_global_ok(const TxnSet& T, const Transaction& t) {
    for (const auto& [x, v] : t.read_set) {
        if (!t.writes(x)) continue;
        for (const auto& tp : T)
            if (tp.writes(x) && tp.commit_version > v) return false;
    }
    return true;
}

inline bool ser_fs_ok(const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                      const Transaction& t) {
    for (const auto& [x, v] : t.read_set) {
        if (!cfg.owns(s, x)) continue;
        for (const auto& tp : T)
            if (tp.writes(x) && tp.commit_version > v) return false;
    }
    return true;
}

inline bool ser_gs_ok(const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                      const Transaction& t) {
    for (const auto& tp : T) {
        for (const auto& [x, _] : t.read_set)
            if (cfg.owns(s, x) && tp.writes(x)) return false;
        for (const auto& [x, _] : t.write_set)
            if (cfg.owns(s, x) && tp.reads(x)) return false;
    }
    return true;
}

inline bool si_fs_ok(const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                     const Transaction& t) {
    for (const auto& [x, v] : t.read_set) {
        if (!cfg.owns(s, x) || !t.writes(x)) continue;
        for (const auto& tp : T)
            if (tp.writes(x) && tp.commit_version > v) return false;
    }
    return true;
}

inline bool si_gs_ok(const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                     const Transaction& t) {
    for (const auto& [x, _] : t.write_set) {
        if (!cfg.owns(s, x)) continue;
        for (const auto& tp : T)
            if (tp.writes(x)) return false;
    }
    return true;
}

inline Decision dec(bool commit) { return commit ? Decision::Commit : Decision::Abort; }

}  // namespace detail

inline IsolationPolicy ser_policy() {
    IsolationPolicy p;
    p.name = "ser";
    p.global = [](const TxnSet& T, const Transaction& t) {
        return detail::dec(detail::ser_global_ok(T, t));
    };
    p.local_committed = [](const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                           const Transaction& t) {
        return detail::dec(detail::ser_fs_ok(cfg, s, T, t));
    };
    p.local_prepared = [](const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                          const Transaction& t) {
        return detail::dec(detail::ser_gs_ok(cfg, s, T, t));
    };
    return p;
}

inline IsolationPolicy si_policy() {
    IsolationPolicy p;
    p.name = "si";
    p.global = [](const TxnSet& T, const Transaction& t) {
        return detail::dec(detail::si_global_ok(T, t));
    };
    p.local_committed = [](const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                           const Transaction& t) {
        return detail::dec(detail::si_fs_ok(cfg, s, T, t));
    };
    p.local_prepared = [](const SystemConfig& cfg, const ShardId& s, const TxnSet& T,
                          const Transaction& t) {
        return detail::dec(detail::si_gs_ok(cfg, s, T, t));
    };
    return p;
}

inline IsolationPolicy policy_by_name(const std::string& name) {
    if (name == "ser") return ser_policy();
    if (name == "si") return si_policy();
    throw Error("UnknownPolicy", name);
}

inline Decision evaluate_global(const IsolationPolicy& p, const TxnSet& T,
                                const Transaction& t) {
    return p.global(T, t);
}

inline Decision evaluate_local_committed(const IsolationPolicy& p, const SystemConfig& cfg,
                                         const ShardId& s, const TxnSet& T,
                                         const Transaction& t) {
    if (!shards_of(t, cfg).count(s)) throw Error("ShardNotRelevant", s + " for " + t.id);
    return p.local_committed(cfg, s, T, t);
}

inline Decision evaluate_local_prepared(const IsolationPolicy& p, const SystemConfig& cfg,
                                        const ShardId& s, const TxnSet& T,
                                        const Transaction& t) {
    if (!shards_of(t, cfg).count(s)) throw Error("ShardNotRelevant", s + " for " + t.id);
    return p.local_prepared(cfg, s, T, t);
}

// ---- law checking ----------------------------------------------------------

struct LawReport {
    bool distributivity = true;  // law (1), for f, f_s and g_s
    bool approximation = true;   // law (6)
    bool strength = true;        // law (7)
    bool commutativity = true;   // law (8)
    std::string counterexample;

    bool all_pass() const {
        return distributivity && approximation && strength && commutativity;
    }
};

namespace detail {

// Universe used to exercise the laws: 4 objects spread over 3 shards.
inline SystemConfig law_universe() {
    SystemConfig cfg;
    cfg.members = {{"s0", {0}}, {"s1", {1}}, {"s2", {2}}};
    cfg.ownership = {{"x0", "s0"}, {"x1", "s1"}, {"x2", "s2"}, {"x3", "s2"}};
    return cfg;
}

inline std::string describe(const Transaction& t) { return encode_transaction(t); }

inline std::string describe_set(const TxnSet& T) {
    std::string out = "{";
    for (const auto& t : T) out += (out.size() > 1 ? ", " : "") + describe(t);
    return out + "}";
}

template <class F>
inline bool check_laws_on(const IsolationPolicy& p, const SystemConfig& cfg,
                          const TxnSet& T1, const TxnSet& T2, const Transaction& t,
                          const Transaction& tp, LawReport& rep, F fail) {
    TxnSet u = T1;
    for (const auto& x : T2) u.push_back(x);

    // (1) distributivity, for f and both shard-local functions.
    if (p.global(u, t) != meet(p.global(T1, t), p.global(T2, t))) {
        rep.distributivity = false;
        fail(rep, "f not distributive: T1=" + describe_set(T1) +
                      " T2=" + describe_set(T2) + " t=" + describe(t));
        return false;
    }
    for (const auto& [s, _] : cfg.members) {
        if (p.local_committed(cfg, s, u, t) !=
            meet(p.local_committed(cfg, s, T1, t), p.local_committed(cfg, s, T2, t))) {
            rep.distributivity = false;
            fail(rep, "f_s not distributive at " + s);
            return false;
        }
        if (p.local_prepared(cfg, s, u, t) !=
            meet(p.local_prepared(cfg, s, T1, t), p.local_prepared(cfg, s, T2, t))) {
            rep.distributivity = false;
            fail(rep, "g_s not distributive at " + s);
            return false;
        }
    }

    // (6) f(T,t) = COMMIT iff every relevant shard's f_s commits on T|s.
    bool global_commit = p.global(u, t) == Decision::Commit;
    bool all_local = true;
    for (const auto& s : shards_of(t, cfg)) {
        TxnSet proj;
        for (const auto& x : u)
            if (shards_of(x, cfg).count(s)) proj.push_back(x);
        if (p.local_committed(cfg, s, proj, t) != Decision::Commit) all_local = false;
    }
    if (global_commit != all_local) {
        rep.approximation = false;
        fail(rep, "law (6) violated: T=" + describe_set(u) + " t=" + describe(t));
        return false;
    }

    // (7) g_s commit implies f_s commit, on relevant shards.
    for (const auto& s : shards_of(t, cfg)) {
        if (p.local_prepared(cfg, s, u, t) == Decision::Commit &&
            p.local_committed(cfg, s, u, t) != Decision::Commit) {
            rep.strength = false;
            fail(rep, "law (7) violated at " + s + ": T=" + describe_set(u) +
                          " t=" + describe(t));
            return false;
        }
    }

    // (8) commutativity between t and tp on shared shards.
    auto st = shards_of(t, cfg);
    for (const auto& s : shards_of(tp, cfg)) {
        if (!st.count(s)) continue;
        if (p.local_prepared(cfg, s, {t}, tp) == Decision::Commit &&
            p.local_committed(cfg, s, {tp}, t) != Decision::Commit) {
            rep.commutativity = false;
            fail(rep, "law (8) violated at " + s + ": t=" + describe(t) +
                          " t'=" + describe(tp));
            return false;
        }
    }
    return true;
}

}  // namespace detail

// Enumerate all valid transactions over the law universe with read sets of
// size <= 2, read versions drawn from `versions`, write set any subset of the
// reads, and commit version one above the highest read.
inline std::vector<Transaction> enumerate_law_transactions(
    const std::vector<Version>& versions) {
    const std::vector<ObjectId> objs = {"x0", "x1", "x2", "x3"};
    std::vector<Transaction> out;
    int id = 0;
    auto add = [&](const std::map<ObjectId, Version>& reads) {
        // every subset of the read objects as the write set
        std::vector<ObjectId> robjs;
        for (const auto& [x, _] : reads) robjs.push_back(x);
        for (std::uint32_t mask = 0; mask < (1u << robjs.size()); ++mask) {
            Transaction t;
            t.id = "e" + std::to_string(id++);
            t.client = 100;
            t.read_set = reads;
            Version maxv = 0;
            for (const auto& [_, v] : reads) maxv = std::max(maxv, v);
            t.commit_version = maxv + 1;
            for (std::size_t i = 0; i < robjs.size(); ++i)
                if (mask & (1u << i)) t.write_set[robjs[i]] = "w";
            out.push_back(t);
        }
    };
    for (std::size_t i = 0; i < objs.size(); ++i)
        for (Version v : versions) add({{objs[i], v}});
    for (std::size_t i = 0; i < objs.size(); ++i)
        for (std::size_t j = i + 1; j < objs.size(); ++j)
            for (Version v1 : versions)
                for (Version v2 : versions) add({{objs[i], v1}, {objs[j], v2}});
    return out;
}

// Random sampling plus a small exhaustive sweep over the law universe.
inline LawReport check_policy_laws(const IsolationPolicy& p, int sample_count,
                                   std::uint64_t seed) {
    if (sample_count <= 0) throw Error("InvalidArgument", "sample_count must be positive");
    SystemConfig cfg = detail::law_universe();
    LawReport rep;
    auto fail = [](LawReport& r, const std::string& msg) {
        if (r.counterexample.empty()) r.counterexample = msg;
    };

    std::mt19937_64 rng(seed);
    auto pick = [&](std::uint64_t n) { return rng() % n; };
    auto random_txn = [&](int id) {
        const std::vector<ObjectId> objs = {"x0", "x1", "x2", "x3"};
        Transaction t;
        t.id = "r" + std::to_string(id);
        t.client = 100;
        std::size_t nreads = 1 + pick(3);
        std::vector<ObjectId> shuffled = objs;
        for (std::size_t i = shuffled.size(); i > 1; --i)
            std::swap(shuffled[i - 1], shuffled[pick(i)]);
        Version maxv = 0;
        for (std::size_t i = 0; i < nreads; ++i) {
            Version v = pick(4);  // versions {0..3}
            t.read_set[shuffled[i]] = v;
            maxv = std::max(maxv, v);
        }
        t.commit_version = maxv + 1 + pick(2);  // within {1..4} plus slack above reads
        for (std::size_t i = 0; i < nreads; ++i)
            if (pick(2)) t.write_set[shuffled[i]] = "w";
        return t;
    };

    for (int i = 0; i < sample_count && rep.all_pass(); ++i) {
        TxnSet T1, T2;
        std::size_t n1 = pick(3), n2 = pick(3);
        int id = i * 8;
        for (std::size_t j = 0; j < n1; ++j) T1.push_back(random_txn(id++));
        for (std::size_t j = 0; j < n2; ++j) T2.push_back(random_txn(id++));
        Transaction t = random_txn(id++), tp = random_txn(id++);
        detail::check_laws_on(p, cfg, T1, T2, t, tp, rep, fail);
    }
    return rep;
}

// Exhaustive sweep: all transactions with read versions in `versions`, sets
// T of size <= 2 (sufficient for the laws given distributivity, which is
// itself checked pairwise).
inline LawReport check_policy_laws_exhaustive(const IsolationPolicy& p,
                                              const std::vector<Version>& versions) {
    SystemConfig cfg = detail::law_universe();
    LawReport rep;
    auto fail = [](LawReport& r, const std::string& msg) {
        if (r.counterexample.empty()) r.counterexample = msg;
    };
    auto txns = enumerate_law_transactions(versions);

    // Laws (1), (6), (7) over singleton and pair sets.
    for (const auto& a : txns) {
        for (const auto& b : txns) {
            if (!detail::check_laws_on(p, cfg, {a}, {b}, a, b, rep, fail)) return rep;
        }
    }
    // Law (8) over all ordered pairs (covered above via (t, tp) = (a, b)).
    return rep;
}

}  // namespace tcs
