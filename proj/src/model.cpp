#include "syncnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

#include "syncnet/errors.hpp"
#include "syncnet/rng.hpp"

namespace syncnet {

double clock_read(const ClockState& clock, double t_ref) {
    return clock.skew * t_ref + clock.offset;
}

std::vector<int> Topology::neighbors(int node) const {
    std::vector<int> out;
    for (const auto& e : edges) {
        if (e.a == node) out.push_back(e.b);
        if (e.b == node) out.push_back(e.a);
    }
    return out;
}

bool Topology::is_bp_edge(std::size_t edge) const {
    const auto& e = edges.at(edge);
    return is_bp(e.a) && is_bp(e.b);
}

int Topology::attachment_edge(int kf_node) const {
    const auto idx = static_cast<std::size_t>(kf_node);
    if (idx >= roles.size() || roles[idx] != NodeRole::kf) return -1;
    const int parent = kf_parent[idx];
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].a == parent && edges[e].b == kf_node) return static_cast<int>(e);
    }
    return -1;
}

Topology Topology::all_bp() const {
    Topology out = *this;
    std::fill(out.roles.begin(), out.roles.end(), NodeRole::bp);
    std::fill(out.kf_parent.begin(), out.kf_parent.end(), -1);
    return out;
}

namespace {

std::string node_name(int node) { return "node " + std::to_string(node + 1); }

}  // namespace

void validate_topology(const Topology& topology) {
    const int n = topology.node_count;
    if (n < 1) throw ConfigError("topology must contain at least one node");
    if (topology.roles.size() != static_cast<std::size_t>(n) ||
        topology.kf_parent.size() != static_cast<std::size_t>(n)) {
        throw ConfigError("topology role tables do not match node count");
    }
    if (topology.gm < 0 || topology.gm >= n) throw ConfigError("grand master is not a valid node");
    if (!topology.is_bp(topology.gm)) throw ConfigError("grand master must be a BP-node");

    std::set<std::pair<int, int>> seen;
    for (const auto& e : topology.edges) {
        if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n) throw ConfigError("edge references unknown node");
        if (e.a == e.b) throw ConfigError("self-loop on " + node_name(e.a));
        const auto key = std::minmax(e.a, e.b);
        if (!seen.insert({key.first, key.second}).second) {
            throw ConfigError("duplicate edge " + node_name(e.a) + " - " + node_name(e.b));
        }
    }

    for (int v = 0; v < n; ++v) {
        const auto idx = static_cast<std::size_t>(v);
        if (topology.roles[idx] == NodeRole::bp) {
            if (topology.kf_parent[idx] != -1) throw ConfigError(node_name(v) + " is a BP-node with a KF parent");
            continue;
        }
        const int parent = topology.kf_parent[idx];
        if (parent < 0 || parent >= n) throw ConfigError(node_name(v) + " is a KF-node without a parent");
        if (!topology.is_bp(parent)) throw ConfigError(node_name(v) + " has a KF parent that is not a BP-node");
        const auto nb = topology.neighbors(v);
        if (nb.size() != 1 || nb.front() != parent || topology.attachment_edge(v) < 0) {
            throw ConfigError(node_name(v) + " must be linked to its parent only");
        }
    }

    // BP subgraph connected and containing the GM.
    std::vector<char> reached(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{topology.gm};
    reached[static_cast<std::size_t>(topology.gm)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : topology.neighbors(v)) {
            const auto wi = static_cast<std::size_t>(w);
            if (!reached[wi] && topology.is_bp(w)) {
                reached[wi] = 1;
                stack.push_back(w);
            }
        }
    }
    for (int v = 0; v < n; ++v) {
        if (topology.is_bp(v) && !reached[static_cast<std::size_t>(v)]) {
            throw ConfigError(node_name(v) + " is not connected to the grand master through BP-nodes");
        }
    }
}

Topology default_topology() {
    Topology t;
    t.node_count = 11;
    // 1-based pairs as drawn: ring 1..7, chords 2-6 and 3-5.
    const std::pair<int, int> backhaul[] = {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6},
                                            {6, 7}, {7, 1}, {2, 6}, {3, 5}};
    for (const auto& [a, b] : backhaul) t.edges.push_back({a - 1, b - 1});
    t.gm = 0;
    t.roles.assign(11, NodeRole::bp);
    t.kf_parent.assign(11, -1);
    const std::pair<int, int> leaves[] = {{8, 4}, {9, 4}, {10, 6}, {11, 6}};
    for (const auto& [leaf, parent] : leaves) {
        t.roles[static_cast<std::size_t>(leaf - 1)] = NodeRole::kf;
        t.kf_parent[static_cast<std::size_t>(leaf - 1)] = parent - 1;
        t.edges.push_back({parent - 1, leaf - 1});
    }
    return t;
}

namespace {

void check_range(const Range& r, const char* name) {
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) throw ConfigError(std::string(name) + " must be finite");
    if (r.lo > r.hi) throw ConfigError(std::string(name) + " has lo > hi");
}

}  // namespace

void validate_scenario(const Scenario& s) {
    validate_topology(s.topology);
    check_range(s.delay_range_ns, "link.delay_range_ns");
    check_range(s.offset_range_ns, "clock.offset_range_ns");
    check_range(s.skew_ppm_range, "clock.skew_ppm_range");
    if (s.delay_range_ns.lo < 0.0) throw ConfigError("propagation delay must be non-negative");
    if (!(s.t_std_ns >= 0.0) || !(s.r_std_ns >= 0.0)) throw ConfigError("stack-delay std must be non-negative");
    if (!std::isfinite(s.t_mean_ns) || !std::isfinite(s.r_mean_ns)) throw ConfigError("stack-delay mean must be finite");
    if (1.0 + s.skew_ppm_range.lo * 1e-6 <= 0.0) throw ConfigError("skew range allows non-positive skews");
    if (s.k < 2) throw ConfigError("exchange.k must be at least 2");
    if (s.training_rounds < 30) throw ConfigError("exchange.training_rounds must be at least 30");
    if (!(s.delta_t_ns > 0.0)) throw ConfigError("exchange.delta_t_ns must be positive");
    if (!(s.turnaround_ns >= 0.0)) throw ConfigError("exchange.turnaround_ns must be non-negative");
    if (s.bp_max_iters < 1) throw ConfigError("bp.max_iters must be at least 1");
    if (!(s.bp_epsilon_ns > 0.0)) throw ConfigError("bp.epsilon_ns must be positive");
    if (!(s.bp_damping > 0.0 && s.bp_damping <= 1.0)) throw ConfigError("bp.damping must be in (0, 1]");
    if (s.mc_runs < 1) throw ConfigError("mc.runs must be at least 1");
    if (!std::isfinite(s.epoch_ns)) throw ConfigError("epoch_ns must be finite");
}

WorldInstance sample_world(const Scenario& scenario, std::uint64_t seed, int trial_index) {
    check_range(scenario.delay_range_ns, "link.delay_range_ns");
    check_range(scenario.offset_range_ns, "clock.offset_range_ns");
    check_range(scenario.skew_ppm_range, "clock.skew_ppm_range");

    Rng rng(seed, static_cast<std::uint64_t>(trial_index), Stream::world);
    WorldInstance world;
    const auto n = static_cast<std::size_t>(scenario.topology.node_count);
    world.clocks.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        world.clocks[v].offset = rng.uniform(scenario.offset_range_ns.lo, scenario.offset_range_ns.hi);
        world.clocks[v].skew =
            1.0 + 1e-6 * rng.uniform(scenario.skew_ppm_range.lo, scenario.skew_ppm_range.hi);
    }
    world.clocks[static_cast<std::size_t>(scenario.topology.gm)] = ClockState{1.0, 0.0};

    world.links.reserve(scenario.topology.edges.size());
    for (std::size_t e = 0; e < scenario.topology.edges.size(); ++e) {
        LinkModel link;
        link.prop_delay = rng.uniform(scenario.delay_range_ns.lo, scenario.delay_range_ns.hi);
        link.t_mean = scenario.t_mean_ns;
        link.t_std = scenario.t_std_ns;
        link.r_mean = scenario.r_mean_ns;
        link.r_std = scenario.r_std_ns;
        world.links.push_back(link);
    }
    return world;
}

WorldInstance sample_scenario_instance(const Scenario& scenario, int trial_index) {
    if (trial_index < 0 || trial_index >= scenario.mc_runs) {
        throw ConfigError("trial index " + std::to_string(trial_index) + " outside [0, mc.runs)");
    }
    return sample_world(scenario, scenario.master_seed, trial_index);
}

}  // namespace syncnet
