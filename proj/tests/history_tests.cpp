#include <doctest.h>

#include <algorithm>
#include <random>

#include "tcs/history_check.hpp"

using namespace tcs;

namespace {

Transaction mk(const TxnId& id, std::map<ObjectId, Version> reads,
               std::map<ObjectId, Value> writes, Version vc) {
    Transaction t;
    t.id = id;
    t.client = 100;
    t.read_set = std::move(reads);
    t.write_set = std::move(writes);
    t.commit_version = vc;
    return t;
}

// Reference oracle: try every permutation of the committed transactions.
bool correct_by_permutations(const History& h, const IsolationPolicy& p,
                             const TxnCatalog& catalog) {
    auto committed = committed_txns(h);
    std::vector<TxnId> order(committed.begin(), committed.end());
    auto preds = detail::rt_predecessors(h, committed);
    std::sort(order.begin(), order.end());
    do {
        bool ok = true;
        std::set<TxnId> placed;
        for (const auto& t : order) {
            for (const auto& d : preds[t])
                if (!placed.count(d)) ok = false;
            TxnSet prefix;
            for (const auto& q : placed) prefix.push_back(catalog.at(q));
            if (ok && p.global(prefix, catalog.at(t)) != Decision::Commit) ok = false;
            if (!ok) break;
            placed.insert(t);
        }
        if (ok) return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return order.empty();
}

}  // namespace

TEST_CASE("a serializable commit pair has a witness") {
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}}, {{"x", "a"}}, 1);
    cat["t2"] = mk("t2", {{"x", 1}}, {{"x", "b"}}, 2);
    History h{{Action::certify("t1"), Action::certify("t2"),
               Action::decide("t1", Decision::Commit),
               Action::decide("t2", Decision::Commit)}};
    auto r = is_correct(h, policy_by_name("ser"), cat);
    REQUIRE(r.correct);
    REQUIRE(r.witness.order.size() == 2);
    CHECK(r.witness.order[0] == "t1");  // t2 read x@1, so t1 must go first
    CHECK(r.witness.order[1] == "t2");
}

TEST_CASE("conflicting double commit is refuted under ser but not si") {
    // F1 write skew: both read {x@0,y@0}; t1 writes y, t2 writes x.
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}, {"y", 0}}, {{"y", "a"}}, 1);
    cat["t2"] = mk("t2", {{"x", 0}, {"y", 0}}, {{"x", "b"}}, 1);
    History h{{Action::certify("t1"), Action::certify("t2"),
               Action::decide("t1", Decision::Commit),
               Action::decide("t2", Decision::Commit)}};
    auto ser = is_correct(h, policy_by_name("ser"), cat);
    CHECK_FALSE(ser.correct);
    CHECK_FALSE(ser.refutation.empty());
    auto si = is_correct(h, policy_by_name("si"), cat);
    CHECK(si.correct);
}

TEST_CASE("real-time order constrains the linearization") {
    // t2 reads x@0 and commits, but only certifies after t1 (which bumped x
    // to 1) was already decided — no order can save it under ser.
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}}, {{"x", "a"}}, 1);
    cat["t2"] = mk("t2", {{"x", 0}}, {}, 1);
    History h{{Action::certify("t1"), Action::decide("t1", Decision::Commit),
               Action::certify("t2"), Action::decide("t2", Decision::Commit)}};
    CHECK_FALSE(is_correct(h, policy_by_name("ser"), cat).correct);

    // The same pair certified concurrently is fine: t2 can linearize first.
    History h2{{Action::certify("t1"), Action::certify("t2"),
                Action::decide("t1", Decision::Commit),
                Action::decide("t2", Decision::Commit)}};
    CHECK(is_correct(h2, policy_by_name("ser"), cat).correct);
}

TEST_CASE("aborted transactions do not constrain correctness") {
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}}, {{"x", "a"}}, 1);
    cat["t2"] = mk("t2", {{"x", 0}}, {{"x", "b"}}, 1);
    History h{{Action::certify("t1"), Action::certify("t2"),
               Action::decide("t1", Decision::Commit),
               Action::decide("t2", Decision::Abort)}};
    CHECK(is_correct(h, policy_by_name("ser"), cat).correct);
}

TEST_CASE("empty and abort-only histories are trivially correct") {
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}}, {}, 1);
    CHECK(is_correct(History{}, policy_by_name("ser"), cat).correct);
    History h{{Action::certify("t1"), Action::decide("t1", Decision::Abort)}};
    CHECK(is_correct(h, policy_by_name("ser"), cat).correct);
}

TEST_CASE("checker errors: size bound and unknown transactions") {
    TxnCatalog cat;
    History big;
    for (int i = 0; i < 12; ++i) {
        TxnId id = "t" + std::to_string(i);
        cat[id] = mk(id, {{"x", 0}}, {}, 1);
        big.actions.push_back(Action::certify(id));
        big.actions.push_back(Action::decide(id, Decision::Commit));
    }
    CHECK_THROWS_WITH_AS(is_correct(big, policy_by_name("ser"), cat, 10),
                         "TooLarge: 12 committed transactions", Error);

    History h{{Action::certify("zz"), Action::decide("zz", Decision::Commit)}};
    CHECK_THROWS_AS(is_correct(h, policy_by_name("ser"), TxnCatalog{}), Error);
}

TEST_CASE("memoized search agrees with the permutation oracle") {
    // Random histories over 4 objects and up to 5 committed transactions,
    // both policies, versions chosen so conflicts actually occur.
    std::mt19937_64 rng(2024);
    auto ser = policy_by_name("ser");
    auto si = policy_by_name("si");
    for (int iter = 0; iter < 200; ++iter) {
        int n = 2 + static_cast<int>(rng() % 4);
        TxnCatalog cat;
        History h;
        std::vector<TxnId> open;
        for (int i = 0; i < n; ++i) {
            TxnId id = "t" + std::to_string(i);
            Transaction t;
            t.id = id;
            t.client = 100;
            int nreads = 1 + static_cast<int>(rng() % 2);
            Version maxv = 0;
            for (int j = 0; j < nreads; ++j) {
                ObjectId x = "x" + std::to_string(rng() % 3);
                Version v = rng() % 3;
                t.read_set[x] = v;
                maxv = std::max(maxv, v);
            }
            t.commit_version = maxv + 1;
            for (const auto& [x, _] : t.read_set)
                if (rng() % 2) t.write_set[x] = "w";
            cat[id] = t;
            h.actions.push_back(Action::certify(id));
            open.push_back(id);
            // Randomly decide some open transactions to create real-time edges.
            while (!open.empty() && rng() % 2) {
                TxnId d = open.front();
                open.erase(open.begin());
                h.actions.push_back(Action::decide(
                    d, rng() % 4 ? Decision::Commit : Decision::Abort));
            }
        }
        for (const auto& d : open)
            h.actions.push_back(Action::decide(d, Decision::Commit));

        for (const auto* p : {&ser, &si}) {
            auto got = is_correct(h, *p, cat);
            bool want = correct_by_permutations(h, *p, cat);
            REQUIRE_MESSAGE(got.correct == want, "iter " << iter << " policy " << p->name);
            if (got.correct) {
                // The returned witness must itself be legal.
                std::map<TxnId, std::int64_t> points;
                std::int64_t k = 0;
                for (const auto& t : got.witness.order) points[t] = k++;
                auto cert = check_certificate(h, *p, cat, points);
                CHECK_MESSAGE(cert.pass, cert.code << " " << cert.detail);
            }
        }
    }
}

TEST_CASE("certificate checker accepts a legal order and names failures") {
    TxnCatalog cat;
    cat["t1"] = mk("t1", {{"x", 0}}, {{"x", "a"}}, 1);
    cat["t2"] = mk("t2", {{"x", 1}}, {{"x", "b"}}, 2);
    History h{{Action::certify("t1"), Action::certify("t2"),
               Action::decide("t1", Decision::Commit),
               Action::decide("t2", Decision::Commit)}};
    auto ser = policy_by_name("ser");

    auto good = check_certificate(h, ser, cat, {{"t1", 1}, {"t2", 2}});
    CHECK(good.pass);

    // Reversed order: t1 ordered after t2 sees its x@0 read overwritten.
    auto bad = check_certificate(h, ser, cat, {{"t1", 2}, {"t2", 1}});
    CHECK_FALSE(bad.pass);
    CHECK(bad.code == "IllegalAtPosition");
    CHECK(bad.position == 1);

    // Real-time violation: decide(t1) before certify(t3), yet t3 ordered first.
    cat["t3"] = mk("t3", {{"y", 0}}, {}, 1);
    History h2{{Action::certify("t1"), Action::decide("t1", Decision::Commit),
                Action::certify("t3"), Action::decide("t3", Decision::Commit)}};
    auto rt = check_certificate(h2, ser, cat, {{"t1", 5}, {"t3", 4}});
    CHECK_FALSE(rt.pass);
    CHECK(rt.code == "NotALinearization");

    CHECK_THROWS_AS(check_certificate(h, ser, cat, {{"t1", 1}}), Error);
    CHECK_THROWS_AS(check_certificate(h, ser, cat, {{"t1", 1}, {"t2", 1}}), Error);
}
