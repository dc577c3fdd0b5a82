#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tcs/ft.hpp"
#include "tcs/message.hpp"
#include "tcs/vote.hpp"

namespace tcs {

using Json = nlohmann::ordered_json;

enum class EventKind {
    Send,
    Deliver,
    Crash,
    HandlerFired,
    NondetFired,
    StateSnapshot,
    ClientAction,
};

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Send: return "Send";
        case EventKind::Deliver: return "Deliver";
        case EventKind::Crash: return "Crash";
        case EventKind::HandlerFired: return "HandlerFired";
        case EventKind::NondetFired: return "NondetFired";
        case EventKind::StateSnapshot: return "StateSnapshot";
        case EventKind::ClientAction: return "ClientAction";
    }
    return "?";
}

inline EventKind event_kind_from_string(const std::string& s) {
    for (EventKind k : {EventKind::Send, EventKind::Deliver, EventKind::Crash,
                        EventKind::HandlerFired, EventKind::NondetFired,
                        EventKind::StateSnapshot, EventKind::ClientAction})
        if (s == to_string(k)) return k;
    throw Error("MalformedTrace", "bad event kind: " + s);
}

// Copy of a replica's protocol state taken right after a handler ran.
struct SnapshotData {
    ShardId shard;
    std::string status;  // LEADER/FOLLOWER/RECOVERING, empty for 2PC processes
    int ballot = 0;
    int cballot = 0;
    int next = -1;
    LogArrays log;
};

// A decision computed by some aggregator (coordinator process or, in
// leaderless mode, any process or the client).
struct DecisionRecord {
    TxnId txn;
    Decision decision = Decision::Abort;
    std::map<ShardId, std::pair<int, int>> slots;  // shard -> (ballot, pos)
};

struct TraceEvent {
    std::int64_t seq = 0;
    std::int64_t time = 0;
    EventKind kind = EventKind::Send;
    ProcessId pid = -1;  // acting process (all kinds)

    // Send / Deliver
    std::int64_t env_seq = -1;
    ProcessId src = -1;
    ProcessId dst = -1;
    std::optional<Message> msg;

    // HandlerFired / NondetFired
    std::string handler;
    std::optional<VoteProv> prov;
    std::optional<DecisionRecord> decided;

    // StateSnapshot
    std::optional<SnapshotData> snap;

    // ClientAction
    std::optional<Action> client_action;
};

struct Trace {
    std::vector<TraceEvent> events;
};

inline History history_of(const Trace& tr) {
    History h;
    for (const auto& e : tr.events)
        if (e.kind == EventKind::ClientAction) h.actions.push_back(*e.client_action);
    return h;
}

// ---- JSON encoding (line-delimited; fixed field order for golden files) ----

inline Json to_json(const LogArrays& log) {
    Json j;
    j["txn"] = log.txn;
    Json votes = Json::array(), decs = Json::array(), phases = Json::array();
    for (int k = 0; k < log.size(); ++k) {
        votes.push_back(to_string(log.vote[k]));
        decs.push_back(log.dec[k] ? to_string(*log.dec[k]) : "");
        phases.push_back(to_string(log.phase[k]));
    }
    j["vote"] = votes;
    j["dec"] = decs;
    j["phase"] = phases;
    return j;
}

inline LogArrays log_from_json(const Json& j) {
    LogArrays log;
    auto n = j.at("txn").size();
    log.ensure(static_cast<int>(n) - 1);
    for (std::size_t k = 0; k < n; ++k) {
        log.txn[k] = j.at("txn")[k].get<std::string>();
        log.vote[k] = decision_from_string(j.at("vote")[k].get<std::string>());
        auto d = j.at("dec")[k].get<std::string>();
        if (!d.empty()) log.dec[k] = decision_from_string(d);
        auto ph = j.at("phase")[k].get<std::string>();
        log.phase[k] = ph == "START" ? Phase::Start
                       : ph == "PREPARED" ? Phase::Prepared
                                          : Phase::Decided;
    }
    return log;
}

inline Json to_json(const Message& m) {
    Json j;
    j["kind"] = to_string(m.kind);
    j["txn"] = m.txn;
    j["shard"] = m.shard;
    j["slot"] = m.slot;
    j["ballot"] = m.ballot;
    j["cballot"] = m.cballot;
    j["decision"] = m.decision ? to_string(*m.decision) : "";
    j["coord"] = m.coord;
    j["to_client"] = m.to_client;
    if (m.kind == MsgKind::NewLeaderAck || m.kind == MsgKind::NewState)
        j["state"] = to_json(m.state);
    return j;
}

inline Message message_from_json(const Json& j) {
    Message m;
    std::string kind = j.at("kind");
    for (MsgKind k : {MsgKind::Prepare, MsgKind::PrepareAck, MsgKind::Accept,
                      MsgKind::AcceptAck, MsgKind::Decision, MsgKind::NewLeader,
                      MsgKind::NewLeaderAck, MsgKind::NewState})
        if (kind == to_string(k)) m.kind = k;
    m.txn = j.at("txn").get<std::string>();
    m.shard = j.at("shard").get<std::string>();
    m.slot = j.at("slot");
    m.ballot = j.at("ballot");
    m.cballot = j.at("cballot");
    std::string d = j.at("decision");
    if (!d.empty()) m.decision = decision_from_string(d);
    m.coord = j.at("coord");
    m.to_client = j.at("to_client");
    if (j.contains("state")) m.state = log_from_json(j.at("state"));
    return m;
}

inline Json to_json(const TraceEvent& e) {
    Json j;
    j["seq"] = e.seq;
    j["time"] = e.time;
    j["kind"] = to_string(e.kind);
    j["pid"] = e.pid;
    if (e.kind == EventKind::Send || e.kind == EventKind::Deliver) {
        j["env_seq"] = e.env_seq;
        j["src"] = e.src;
        j["dst"] = e.dst;
        j["msg"] = to_json(*e.msg);
    }
    if (!e.handler.empty()) j["handler"] = e.handler;
    if (e.prov) {
        Json p;
        p["shard"] = e.prov->shard;
        p["txn"] = e.prov->txn;
        p["slot"] = e.prov->slot;
        p["ballot"] = e.prov->ballot;
        p["T"] = e.prov->T;
        p["P"] = e.prov->P;
        j["prov"] = p;
    }
    if (e.decided) {
        Json d;
        d["txn"] = e.decided->txn;
        d["decision"] = to_string(e.decided->decision);
        Json slots = Json::object();
        for (const auto& [s, bp] : e.decided->slots)
            slots[s] = Json::array({bp.first, bp.second});
        d["slots"] = slots;
        j["decided"] = d;
    }
    if (e.snap) {
        Json s;
        s["shard"] = e.snap->shard;
        s["status"] = e.snap->status;
        s["ballot"] = e.snap->ballot;
        s["cballot"] = e.snap->cballot;
        s["next"] = e.snap->next;
        s["log"] = to_json(e.snap->log);
        j["snap"] = s;
    }
    if (e.client_action) {
        Json a;
        a["kind"] = e.client_action->kind == Action::Kind::Certify ? "certify" : "decide";
        a["txn"] = e.client_action->txn;
        a["decision"] =
            e.client_action->decision ? to_string(*e.client_action->decision) : "";
        j["action"] = a;
    }
    return j;
}

inline TraceEvent event_from_json(const Json& j) {
    TraceEvent e;
    e.seq = j.at("seq");
    e.time = j.at("time");
    e.kind = event_kind_from_string(j.at("kind"));
    e.pid = j.at("pid");
    if (e.kind == EventKind::Send || e.kind == EventKind::Deliver) {
        e.env_seq = j.at("env_seq");
        e.src = j.at("src");
        e.dst = j.at("dst");
        e.msg = message_from_json(j.at("msg"));
    }
    if (j.contains("handler")) e.handler = j.at("handler").get<std::string>();
    if (j.contains("prov")) {
        VoteProv p;
        p.shard = j.at("prov").at("shard").get<std::string>();
        p.txn = j.at("prov").at("txn").get<std::string>();
        p.slot = j.at("prov").at("slot");
        p.ballot = j.at("prov").at("ballot");
        p.T = j.at("prov").at("T").get<std::vector<std::string>>();
        p.P = j.at("prov").at("P").get<std::vector<std::string>>();
        e.prov = p;
    }
    if (j.contains("decided")) {
        DecisionRecord d;
        d.txn = j.at("decided").at("txn").get<std::string>();
        d.decision = decision_from_string(j.at("decided").at("decision"));
        for (const auto& [s, bp] : j.at("decided").at("slots").items())
            d.slots[s] = {bp[0], bp[1]};
        e.decided = d;
    }
    if (j.contains("snap")) {
        SnapshotData s;
        s.shard = j.at("snap").at("shard").get<std::string>();
        s.status = j.at("snap").at("status").get<std::string>();
        s.ballot = j.at("snap").at("ballot");
        s.cballot = j.at("snap").at("cballot");
        s.next = j.at("snap").at("next");
        s.log = log_from_json(j.at("snap").at("log"));
        e.snap = s;
    }
    if (j.contains("action")) {
        Action a;
        std::string kind = j.at("action").at("kind");
        a.kind = kind == "certify" ? Action::Kind::Certify : Action::Kind::Decide;
        a.txn = j.at("action").at("txn").get<std::string>();
        std::string d = j.at("action").at("decision");
        if (!d.empty()) a.decision = decision_from_string(d);
        e.client_action = a;
    }
    return e;
}

inline Json to_json(const Transaction& t) {
    Json j;
    j["id"] = t.id;
    j["client"] = t.client;
    Json reads = Json::object(), writes = Json::object();
    for (const auto& [x, v] : t.read_set) reads[x] = v;
    for (const auto& [x, val] : t.write_set) writes[x] = val;
    j["reads"] = reads;
    j["writes"] = writes;
    j["vc"] = t.commit_version;
    return j;
}

inline Transaction transaction_from_json(const Json& j) {
    Transaction t;
    t.id = j.at("id").get<std::string>();
    t.client = j.at("client");
    for (const auto& [x, v] : j.at("reads").items()) t.read_set[x] = v.get<Version>();
    for (const auto& [x, val] : j.at("writes").items())
        t.write_set[x] = val.get<std::string>();
    t.commit_version = j.at("vc");
    return t;
}

inline Json to_json(const SystemConfig& cfg) {
    Json j;
    Json members = Json::object(), ownership = Json::object();
    for (const auto& [s, ms] : cfg.members) members[s] = ms;
    for (const auto& [x, s] : cfg.ownership) ownership[x] = s;
    j["members"] = members;
    j["ownership"] = ownership;
    j["f"] = cfg.f;
    return j;
}

inline SystemConfig config_from_json(const Json& j) {
    SystemConfig cfg;
    for (const auto& [s, ms] : j.at("members").items())
        cfg.members[s] = ms.get<std::vector<ProcessId>>();
    for (const auto& [x, s] : j.at("ownership").items())
        cfg.ownership[x] = s.get<std::string>();
    cfg.f = j.value("f", 0);
    return cfg;
}

// Trace file: one header line carrying metadata, then one event per line.
inline void write_trace(std::ostream& os, const Trace& tr, const TxnCatalog& catalog,
                        const SystemConfig& cfg, const std::string& protocol,
                        const std::string& policy, bool leaderless) {
    Json header;
    header["meta"] = Json::object();
    header["meta"]["protocol"] = protocol;
    header["meta"]["policy"] = policy;
    header["meta"]["leaderless"] = leaderless;
    header["meta"]["config"] = to_json(cfg);
    Json txns = Json::array();
    for (const auto& [_, t] : catalog) txns.push_back(to_json(t));
    header["meta"]["transactions"] = txns;
    os << header.dump() << "\n";
    for (const auto& e : tr.events) os << to_json(e).dump() << "\n";
}

struct TraceFile {
    Trace trace;
    TxnCatalog catalog;
    SystemConfig config;
    std::string protocol;
    std::string policy;
    bool leaderless = false;
};

inline TraceFile read_trace(std::istream& is) {
    TraceFile tf;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        Json j = Json::parse(line);
        if (first) {
            first = false;
            if (!j.contains("meta")) throw Error("MalformedTrace", "missing meta header");
            tf.protocol = j["meta"].at("protocol").get<std::string>();
            tf.policy = j["meta"].at("policy").get<std::string>();
            tf.leaderless = j["meta"].at("leaderless");
            if (j["meta"].contains("config"))
                tf.config = config_from_json(j["meta"].at("config"));
            for (const auto& t : j["meta"].at("transactions")) {
                Transaction txn = transaction_from_json(t);
                tf.catalog[txn.id] = txn;
            }
            continue;
        }
        tf.trace.events.push_back(event_from_json(j));
    }
    return tf;
}

}  // namespace tcs
