#include "syncnet/scenario_io.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "syncnet/errors.hpp"

namespace syncnet {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) known = known || item.key() == key;
        if (!known) {
            throw ConfigError("unknown key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
        }
    }
}

double get_number(const json& obj, const char* key, const std::string& where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
    return v.get<double>();
}

long long get_integer(const json& obj, const char* key, const std::string& where, long long fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
    return v.get<long long>();
}

int get_int(const json& obj, const char* key, const std::string& where, int fallback) {
    const long long v = get_integer(obj, key, where, fallback);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(where + "." + key + " out of range");
    }
    return static_cast<int>(v);
}

Range get_range(const json& obj, const char* key, const std::string& where, Range fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(where + "." + key + " must be a [lo, hi] pair");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

std::pair<int, int> get_pair(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        throw ConfigError(where + " entries must be [id, id] integer pairs");
    }
    return {v[0].get<int>(), v[1].get<int>()};
}

Topology parse_topology(const json& obj) {
    reject_unknown(obj, "topology", {"nodes", "edges", "gm", "kf_attachments"});
    for (const char* key : {"nodes", "edges", "gm"}) {
        if (!obj.contains(key)) throw ConfigError(std::string("topology.") + key + " is required");
    }
    Topology t;
    t.node_count = get_int(obj, "nodes", "topology", 0);
    if (t.node_count < 1) throw ConfigError("topology.nodes must be positive");
    const auto n = static_cast<std::size_t>(t.node_count);
    t.roles.assign(n, NodeRole::bp);
    t.kf_parent.assign(n, -1);

    auto to_index = [&](int id, const char* what) {
        if (id < 1 || id > t.node_count) {
            throw ConfigError(std::string(what) + " references unknown node " + std::to_string(id));
        }
        return id - 1;
    };

    const auto& edges = obj.at("edges");
    if (!edges.is_array()) throw ConfigError("topology.edges must be an array");
    for (const auto& e : edges) {
        const auto [a, b] = get_pair(e, "topology.edges");
        t.edges.push_back({to_index(a, "topology.edges"), to_index(b, "topology.edges")});
    }
    t.gm = to_index(get_int(obj, "gm", "topology", 0), "topology.gm");

    if (obj.contains("kf_attachments")) {
        const auto& att = obj.at("kf_attachments");
        if (!att.is_array()) throw ConfigError("topology.kf_attachments must be an array");
        for (const auto& entry : att) {
            const auto [leaf_id, parent_id] = get_pair(entry, "topology.kf_attachments");
            const int leaf = to_index(leaf_id, "topology.kf_attachments");
            const int parent = to_index(parent_id, "topology.kf_attachments");
            const auto li = static_cast<std::size_t>(leaf);
            if (t.roles[li] == NodeRole::kf) {
                throw ConfigError("node " + std::to_string(leaf_id) + " has more than one KF parent");
            }
            t.roles[li] = NodeRole::kf;
            t.kf_parent[li] = parent;
            t.edges.push_back({parent, leaf});
        }
    }
    return t;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed scenario JSON: ") + e.what());
    }
    reject_unknown(root, "", {"topology", "link", "clock", "exchange", "bp", "mc", "epoch_ns"});

    Scenario s;
    if (root.contains("topology")) s.topology = parse_topology(root.at("topology"));

    if (root.contains("link")) {
        const auto& o = root.at("link");
        reject_unknown(o, "link", {"delay_range_ns", "t_std_ns", "r_std_ns", "t_mean_ns", "r_mean_ns"});
        s.delay_range_ns = get_range(o, "delay_range_ns", "link", s.delay_range_ns);
        s.t_std_ns = get_number(o, "t_std_ns", "link", s.t_std_ns);
        s.r_std_ns = get_number(o, "r_std_ns", "link", s.r_std_ns);
        s.t_mean_ns = get_number(o, "t_mean_ns", "link", s.t_mean_ns);
        s.r_mean_ns = get_number(o, "r_mean_ns", "link", s.r_mean_ns);
    }
    if (root.contains("clock")) {
        const auto& o = root.at("clock");
        reject_unknown(o, "clock", {"offset_range_ns", "skew_ppm_range"});
        s.offset_range_ns = get_range(o, "offset_range_ns", "clock", s.offset_range_ns);
        s.skew_ppm_range = get_range(o, "skew_ppm_range", "clock", s.skew_ppm_range);
    }
    if (root.contains("exchange")) {
        const auto& o = root.at("exchange");
        reject_unknown(o, "exchange", {"k", "training_rounds", "delta_t_ns", "turnaround_ns"});
        s.k = get_int(o, "k", "exchange", s.k);
        s.training_rounds = get_int(o, "training_rounds", "exchange", s.training_rounds);
        s.delta_t_ns = get_number(o, "delta_t_ns", "exchange", s.delta_t_ns);
        s.turnaround_ns = get_number(o, "turnaround_ns", "exchange", s.turnaround_ns);
    }
    if (root.contains("bp")) {
        const auto& o = root.at("bp");
        reject_unknown(o, "bp", {"max_iters", "epsilon_ns", "damping"});
        s.bp_max_iters = get_int(o, "max_iters", "bp", s.bp_max_iters);
        s.bp_epsilon_ns = get_number(o, "epsilon_ns", "bp", s.bp_epsilon_ns);
        s.bp_damping = get_number(o, "damping", "bp", s.bp_damping);
    }
    if (root.contains("mc")) {
        const auto& o = root.at("mc");
        reject_unknown(o, "mc", {"runs", "seed"});
        s.mc_runs = get_int(o, "runs", "mc", s.mc_runs);
        if (o.contains("seed")) {
            const auto& v = o.at("seed");
            if (v.is_number_unsigned()) {
                s.master_seed = v.get<std::uint64_t>();
            } else if (v.is_number_integer() && v.get<long long>() >= 0) {
                s.master_seed = static_cast<std::uint64_t>(v.get<long long>());
            } else {
                throw ConfigError("mc.seed must be a non-negative integer");
            }
        }
    }
    s.epoch_ns = get_number(root, "epoch_ns", "", s.epoch_ns);
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

std::string scenario_to_json(const Scenario& s) {
    json edges = json::array();
    json attachments = json::array();
    for (std::size_t e = 0; e < s.topology.edges.size(); ++e) {
        const auto& edge = s.topology.edges[e];
        const auto leaf = static_cast<std::size_t>(edge.b);
        if (s.topology.roles[leaf] == NodeRole::kf && s.topology.kf_parent[leaf] == edge.a) {
            attachments.push_back({edge.b + 1, edge.a + 1});
        } else {
            edges.push_back({edge.a + 1, edge.b + 1});
        }
    }
    json root = {
        {"topology", {{"nodes", s.topology.node_count}, {"edges", edges}, {"gm", s.topology.gm + 1},
                      {"kf_attachments", attachments}}},
        {"link", {{"delay_range_ns", {s.delay_range_ns.lo, s.delay_range_ns.hi}},
                  {"t_std_ns", s.t_std_ns}, {"r_std_ns", s.r_std_ns},
                  {"t_mean_ns", s.t_mean_ns}, {"r_mean_ns", s.r_mean_ns}}},
        {"clock", {{"offset_range_ns", {s.offset_range_ns.lo, s.offset_range_ns.hi}},
                   {"skew_ppm_range", {s.skew_ppm_range.lo, s.skew_ppm_range.hi}}}},
        {"exchange", {{"k", s.k}, {"training_rounds", s.training_rounds},
                      {"delta_t_ns", s.delta_t_ns}, {"turnaround_ns", s.turnaround_ns}}},
        {"bp", {{"max_iters", s.bp_max_iters}, {"epsilon_ns", s.bp_epsilon_ns}, {"damping", s.bp_damping}}},
        {"mc", {{"runs", s.mc_runs}, {"seed", s.master_seed}}},
        {"epoch_ns", s.epoch_ns},
    };
    return root.dump(2) + "\n";
}

}  // namespace syncnet
