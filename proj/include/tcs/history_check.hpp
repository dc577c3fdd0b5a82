#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tcs/core.hpp"
#include "tcs/policy.hpp"

namespace tcs {

using TxnCatalog = std::map<TxnId, Transaction>;

struct LinearizationWitness {
    std::vector<TxnId> order;  // committed transactions, legal in this order
};

struct CheckResult {
    bool correct = false;
    LinearizationWitness witness;
    std::string refutation;  // set when !correct
};

namespace detail {

// Real-time precedence edges between committed transactions: t -> t' when
// decide(t,_) precedes certify(t') in h, so t must come before t' in any
// linearization.
inline std::map<TxnId, std::set<TxnId>> rt_predecessors(const History& h,
                                                        const std::set<TxnId>& committed) {
    std::map<TxnId, std::set<TxnId>> preds;  // txn -> must-precede set
    std::set<TxnId> decided_so_far;
    for (const auto& a : h.actions) {
        if (a.kind == Action::Kind::Certify) {
            if (committed.count(a.txn))
                for (const auto& d : decided_so_far)
                    if (committed.count(d)) preds[a.txn].insert(d);
        } else {
            decided_so_far.insert(a.txn);
        }
    }
    return preds;
}

}  // namespace detail

// Search for a legal linearization of the committed projection of h.
// Legality under a distributive f depends only on the set of predecessors,
// so the search memoizes on subsets (2^n states) rather than permutations.
inline CheckResult is_correct(const History& h, const IsolationPolicy& p,
                              const TxnCatalog& catalog, int exhaustive_bound = 10) {
    check_well_formed(h);
    auto committed = committed_txns(h);
    if (static_cast<int>(committed.size()) > exhaustive_bound)
        throw Error("TooLarge", std::to_string(committed.size()) + " committed transactions");

    std::vector<TxnId> txns(committed.begin(), committed.end());
    const std::size_t n = txns.size();
    std::map<TxnId, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        index[txns[i]] = i;
        if (!catalog.count(txns[i])) throw Error("UnknownTransaction", txns[i]);
    }

    auto preds = detail::rt_predecessors(h, committed);
    std::vector<std::uint32_t> pred_mask(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& d : preds[txns[i]]) pred_mask[i] |= 1u << index[d];

    // dead[S] records subsets already known not to extend to a full order.
    std::set<std::uint32_t> dead;
    std::vector<TxnId> order;
    const std::uint32_t full = n == 32 ? ~0u : (1u << n) - 1;

    std::function<bool(std::uint32_t)> extend = [&](std::uint32_t placed) {
        if (placed == full) return true;
        if (dead.count(placed)) return false;
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t bit = 1u << i;
            if (placed & bit) continue;
            if ((pred_mask[i] & placed) != pred_mask[i]) continue;  // real-time order
            TxnSet prefix;
            for (std::size_t j = 0; j < n; ++j)
                if (placed & (1u << j)) prefix.push_back(catalog.at(txns[j]));
            if (p.global(prefix, catalog.at(txns[i])) != Decision::Commit) continue;
            order.push_back(txns[i]);
            if (extend(placed | bit)) return true;
            order.pop_back();
        }
        dead.insert(placed);
        return false;
    };

    CheckResult res;
    if (extend(0)) {
        res.correct = true;
        res.witness.order = order;
    } else {
        res.refutation = "no real-time-respecting order of " + std::to_string(n) +
                         " committed transactions is legal under " + p.name;
    }
    return res;
}

struct CertificateResult {
    bool pass = false;
    std::string code;    // NotALinearization | IllegalAtPosition | ""
    std::string detail;  // human-readable context
    int position = -1;   // for IllegalAtPosition
};

// Verify the linearization induced by per-transaction timestamps (e.g. the
// first DECISION send for each transaction) in linear time.
inline CertificateResult check_certificate(const History& h, const IsolationPolicy& p,
                                           const TxnCatalog& catalog,
                                           const std::map<TxnId, std::int64_t>& points) {
    check_well_formed(h);
    auto committed = committed_txns(h);

    std::vector<TxnId> order(committed.begin(), committed.end());
    std::set<std::int64_t> seen;
    for (const auto& t : order) {
        auto it = points.find(t);
        if (it == points.end()) throw Error("MissingPoint", t);
        if (!seen.insert(it->second).second)
            throw Error("DuplicateTimestamp", std::to_string(it->second));
    }
    std::sort(order.begin(), order.end(), [&](const TxnId& a, const TxnId& b) {
        return points.at(a) < points.at(b);
    });

    auto preds = detail::rt_predecessors(h, committed);
    std::set<TxnId> placed;
    CertificateResult res;
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (const auto& d : preds[order[i]]) {
            if (!placed.count(d)) {
                res.code = "NotALinearization";
                res.detail = d + " decided before certify(" + order[i] +
                             ") but ordered after it";
                return res;
            }
        }
        TxnSet prefix;
        for (const auto& t : placed) prefix.push_back(catalog.at(t));
        if (p.global(prefix, catalog.at(order[i])) != Decision::Commit) {
            res.code = "IllegalAtPosition";
            res.position = static_cast<int>(i);
            res.detail = order[i] + " cannot commit at position " + std::to_string(i);
            return res;
        }
        placed.insert(order[i]);
    }
    res.pass = true;
    return res;
}

}  // namespace tcs
