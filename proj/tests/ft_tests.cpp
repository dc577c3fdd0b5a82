#include <doctest.h>

#include "tcs/ft.hpp"

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

struct Fixture {
    SystemConfig cfg;
    TxnCatalog cat;
    IsolationPolicy ser = policy_by_name("ser");

    Fixture() {
        cfg.members = {{"s1", {0, 1, 2}}, {"s2", {3, 4, 5}}};
        cfg.ownership = {{"x", "s1"}, {"y", "s2"}};
        cfg.f = 1;
        cat["t1"] = mk("t1", {{"x", 0}, {"y", 0}}, {{"y", "a"}}, 1);
        cat["t2"] = mk("t2", {{"x", 0}, {"y", 0}}, {{"x", "b"}}, 1);
    }
};

}  // namespace

TEST_CASE("leader rotation is round-robin from ballot 1") {
    CHECK(ft::leader_index(1, 3) == 0);
    CHECK(ft::leader_index(2, 3) == 1);
    CHECK(ft::leader_index(3, 3) == 2);
    CHECK(ft::leader_index(4, 3) == 0);
}

TEST_CASE("initial replicas: member 0 leads at ballot 1") {
    auto r0 = ft::make_replica("s1", 0);
    auto r1 = ft::make_replica("s1", 1);
    CHECK(r0.status == ft::Status::Leader);
    CHECK(r1.status == ft::Status::Follower);
    CHECK(r0.ballot == 1);
    CHECK(r0.cballot == 1);
    CHECK(r0.next == -1);
}

TEST_CASE("leader assigns a slot and broadcasts ACCEPT; followers ignore prepare") {
    Fixture fx;
    auto leader = ft::make_replica("s1", 0);
    auto out = ft::handle_prepare(leader, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    REQUIRE(out.handled);
    CHECK(out.accept.kind == MsgKind::Accept);
    CHECK(out.accept.ballot == 1);
    CHECK(out.accept.slot == 0);
    CHECK(out.accept.txn == "t1");
    CHECK(out.accept.coord == 100);
    CHECK(*out.accept.decision == Decision::Commit);
    REQUIRE(out.prov.has_value());
    CHECK(out.prov->ballot == 1);
    CHECK(leader.log.phase[0] == Phase::Prepared);

    // A duplicate PREPARE re-broadcasts the same slot without a new vote.
    auto dup = ft::handle_prepare(leader, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    REQUIRE(dup.handled);
    CHECK(dup.accept.slot == 0);
    CHECK_FALSE(dup.prov.has_value());
    CHECK(leader.next == 0);

    auto follower = ft::make_replica("s1", 1);
    CHECK_FALSE(
        ft::handle_prepare(follower, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat)
            .handled);
}

TEST_CASE("followers copy accepted entries; stale ballots are ignored") {
    Fixture fx;
    auto leader = ft::make_replica("s1", 0);
    auto acc = ft::handle_prepare(leader, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);

    auto follower = ft::make_replica("s1", 1);
    auto ack = ft::handle_accept(follower, acc.accept);
    REQUIRE(ack.handled);
    CHECK(ack.ack.kind == MsgKind::AcceptAck);
    CHECK(ack.ack.ballot == 1);
    CHECK(ack.ack.slot == 0);
    CHECK(*ack.ack.decision == Decision::Commit);
    CHECK(follower.log.txn[0] == "t1");
    CHECK(follower.log.phase[0] == Phase::Prepared);
    CHECK(follower.next == 0);

    Message stale = acc.accept;
    stale.ballot = 7;
    CHECK_FALSE(ft::handle_accept(follower, stale).handled);

    follower.status = ft::Status::Recovering;
    CHECK_FALSE(ft::handle_accept(follower, acc.accept).handled);
}

TEST_CASE("decision application requires a prepared slot and current ballot") {
    Fixture fx;
    auto leader = ft::make_replica("s1", 0);
    ft::handle_prepare(leader, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    CHECK(ft::handle_decision(leader, 1, 0, Decision::Commit));
    CHECK(leader.log.phase[0] == Phase::Decided);
    CHECK(leader.log.dec[0] == Decision::Commit);
    CHECK_FALSE(ft::handle_decision(leader, 1, 0, Decision::Commit));  // already decided
    CHECK_FALSE(ft::handle_decision(leader, 1, 5, Decision::Commit));  // no such slot
    leader.ballot = 1;
    CHECK_FALSE(ft::handle_decision(leader, 9, 0, Decision::Commit));  // future ballot
}

TEST_CASE("recover picks the smallest ballot this member leads") {
    Fixture fx;
    auto m1 = ft::make_replica("s1", 1);
    CHECK(ft::recover(m1, fx.cfg).ballot == 2);  // leader(2) = 1
    auto m0 = ft::make_replica("s1", 0);
    CHECK(ft::recover(m0, fx.cfg).ballot == 4);  // leader(4) = 0, skipping 2 and 3
    m1.ballot = 5;
    CHECK(ft::recover(m1, fx.cfg).ballot == 8);  // next ballot led by member 1 above 5
}

TEST_CASE("new-leader handshake transfers and merges state") {
    Fixture fx;
    // Ballot-1 leader prepares t1 and decides it; follower 1 saw the ACCEPT,
    // follower 2 saw nothing.
    auto r0 = ft::make_replica("s1", 0);
    auto r1 = ft::make_replica("s1", 1);
    auto r2 = ft::make_replica("s1", 2);
    auto acc = ft::handle_prepare(r0, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    ft::handle_accept(r1, acc.accept);
    ft::handle_decision(r0, 1, 0, Decision::Commit);

    // r0 crashes; r1 recovers at ballot 2.
    auto nl = ft::recover(r1, fx.cfg);
    CHECK(nl.ballot == 2);

    auto self_ack = ft::handle_new_leader(r1, nl);
    REQUIRE(self_ack.has_value());
    CHECK(r1.status == ft::Status::Recovering);
    CHECK(r1.ballot == 2);
    CHECK(self_ack->cballot == 1);

    auto r2_ack = ft::handle_new_leader(r2, nl);
    REQUIRE(r2_ack.has_value());
    CHECK(r2.status == ft::Status::Recovering);

    // Quorum f+1 = 2: self ack plus r2's (empty-log) ack.
    auto got1 = ft::handle_new_leader_ack(r1, *self_ack, 1, fx.cfg);
    CHECK_FALSE(got1.has_value());
    auto got2 = ft::handle_new_leader_ack(r1, *r2_ack, 2, fx.cfg);
    REQUIRE(got2.has_value());
    CHECK(got2->became_leader);
    CHECK(r1.status == ft::Status::Leader);
    CHECK(r1.cballot == 2);
    // The merged log keeps t1's prepared entry (max-cballot reporter r1).
    CHECK(r1.log.txn[0] == "t1");
    CHECK(r1.log.phase[0] == Phase::Prepared);
    CHECK(r1.next == 0);

    // NEW_STATE adopts the merged log and demotes to follower.
    auto ns = got2->new_state;
    CHECK(ns.kind == MsgKind::NewState);
    CHECK(ft::handle_new_state(r2, ns));
    CHECK(r2.status == ft::Status::Follower);
    CHECK(r2.ballot == 2);
    CHECK(r2.cballot == 2);
    CHECK(r2.log.txn[0] == "t1");

    // Stale NEW_LEADER and NEW_STATE are ignored.
    Message old_nl = nl;
    old_nl.ballot = 1;
    CHECK_FALSE(ft::handle_new_leader(r2, old_nl).has_value());
    Message old_ns = ns;
    old_ns.ballot = 1;
    CHECK_FALSE(ft::handle_new_state(r2, old_ns));
}

TEST_CASE("recovery preserves decided entries from any reporter") {
    Fixture fx;
    // r2 holds a DECIDED entry but has the older cballot; r1 reports a longer
    // prepared log at the max cballot. The merge must keep both: prepared
    // entries from the max-cballot reporter, decisions from anyone.
    auto r1 = ft::make_replica("s1", 1);
    r1.cballot = 3;
    r1.ballot = 3;
    r1.next = 1;
    r1.log.ensure(1);
    r1.log.txn = {"t1", "t2"};
    r1.log.vote = {Decision::Commit, Decision::Commit};
    r1.log.phase = {Phase::Prepared, Phase::Prepared};

    auto r2 = ft::make_replica("s1", 2);
    r2.next = 0;
    r2.log.ensure(0);
    r2.log.txn = {"t1"};
    r2.log.vote = {Decision::Commit};
    r2.log.dec = {Decision::Commit};
    r2.log.phase = {Phase::Decided};

    auto nl = ft::recover(r1, fx.cfg);  // ballot 5: leader(5) = 1
    CHECK(nl.ballot == 5);
    auto a1 = ft::handle_new_leader(r1, nl);
    auto a2 = ft::handle_new_leader(r2, nl);
    REQUIRE(a1.has_value());
    REQUIRE(a2.has_value());
    ft::handle_new_leader_ack(r1, *a1, 1, fx.cfg);
    auto done = ft::handle_new_leader_ack(r1, *a2, 2, fx.cfg);
    REQUIRE(done.has_value());
    CHECK(r1.log.size() == 2);
    CHECK(r1.log.phase[0] == Phase::Decided);
    CHECK(r1.log.dec[0] == Decision::Commit);
    CHECK(r1.log.txn[1] == "t2");
    CHECK(r1.log.phase[1] == Phase::Prepared);
    CHECK(r1.next == 1);
}

TEST_CASE("retry replays the prepare for a stuck slot") {
    Fixture fx;
    auto leader = ft::make_replica("s1", 0);
    ft::handle_prepare(leader, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    auto m = ft::retry(leader, 0);
    CHECK(m.kind == MsgKind::Prepare);
    CHECK(m.txn == "t1");
    ft::handle_decision(leader, 1, 0, Decision::Commit);
    CHECK_THROWS_AS(ft::retry(leader, 0), Error);
    CHECK_THROWS_AS(ft::retry(leader, 3), Error);
}

TEST_CASE("vote aggregation fires once per quorum per transaction") {
    Fixture fx;
    auto lead1 = ft::make_replica("s1", 0);
    auto lead2 = ft::make_replica("s2", 0);
    lead2.shard = "s2";
    auto a1 = ft::handle_prepare(lead1, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);
    auto a2 = ft::handle_prepare(lead2, fx.cat["t1"], 100, true, fx.ser, fx.cfg, fx.cat);

    auto f1 = ft::make_replica("s1", 1);
    auto f2 = ft::make_replica("s2", 1);
    f2.shard = "s2";
    auto k1 = ft::handle_accept(f1, a1.accept);
    auto k2 = ft::handle_accept(f2, a2.accept);

    // Leaders ack their own ACCEPTs too.
    auto k0 = ft::handle_accept(lead1, a1.accept);
    auto k3 = ft::handle_accept(lead2, a2.accept);

    ft::AckQuorum q;
    CHECK_FALSE(ft::coordinator_step(q, k0.ack, 0, fx.cfg, fx.cat).has_value());
    CHECK_FALSE(ft::coordinator_step(q, k1.ack, 1, fx.cfg, fx.cat).has_value());
    CHECK_FALSE(ft::coordinator_step(q, k3.ack, 3, fx.cfg, fx.cat).has_value());
    auto b = ft::coordinator_step(q, k2.ack, 4, fx.cfg, fx.cat);
    REQUIRE(b.has_value());
    CHECK(b->txn == "t1");
    CHECK(b->decision == Decision::Commit);
    CHECK(b->slots.at("s1") == std::pair<int, int>{1, 0});
    CHECK(b->slots.at("s2") == std::pair<int, int>{1, 0});

    // A late third ack does not fire the bundle again.
    auto f1b = ft::make_replica("s1", 2);
    auto k4 = ft::handle_accept(f1b, a1.accept);
    CHECK_FALSE(ft::coordinator_step(q, k4.ack, 2, fx.cfg, fx.cat).has_value());

    Message wrong;
    wrong.kind = MsgKind::Accept;
    CHECK_THROWS_AS(ft::coordinator_step(q, wrong, 0, fx.cfg, fx.cat), Error);
}

TEST_CASE("quorums never mix ballots") {
    Fixture fx;
    // Same (slot, txn, vote) acked at ballots 1 and 2 by different members:
    // neither bucket alone reaches the f+1 = 2 quorum.
    Message ack;
    ack.kind = MsgKind::AcceptAck;
    ack.shard = "s1";
    ack.slot = 0;
    ack.txn = "t2";
    ack.decision = Decision::Commit;

    ft::AckQuorum q;
    ack.ballot = 1;
    CHECK_FALSE(ft::coordinator_step(q, ack, 0, fx.cfg, fx.cat).has_value());
    ack.ballot = 2;
    CHECK_FALSE(ft::coordinator_step(q, ack, 1, fx.cfg, fx.cat).has_value());
    CHECK(q.buckets.size() == 2);
}
