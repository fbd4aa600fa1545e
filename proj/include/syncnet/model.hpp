#ifndef SYNCNET_MODEL_HPP
#define SYNCNET_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <vector>

namespace syncnet {

/// Affine clock: local time = skew * reference time + offset (ns).
struct ClockState {
    double skew = 1.0;
    double offset = 0.0;
};

double clock_read(const ClockState& clock, double t_ref);

enum class NodeRole { bp, kf };

/// Undirected link. In two-way exchanges node `a` is the initiator (stamps
/// c1/c4) and node `b` the responder (stamps c2/c3); attachment links of
/// KF-nodes are stored as {parent, kf_node}.
struct Edge {
    int a = 0;
    int b = 0;
};

/// Network topology with 0-based node indices. Scenario files and CSV
/// outputs use 1-based ids.
struct Topology {
    int node_count = 0;
    std::vector<Edge> edges;
    int gm = 0;
    std::vector<NodeRole> roles;
    std::vector<int> kf_parent;  // -1 for BP-nodes

    std::vector<int> neighbors(int node) const;
    bool is_bp(int node) const { return roles.at(static_cast<std::size_t>(node)) == NodeRole::bp; }
    /// True when both endpoints of the edge are BP-nodes.
    bool is_bp_edge(std::size_t edge) const;
    /// Index of the attachment edge of a KF-node, or -1.
    int attachment_edge(int kf_node) const;
    /// Copy with every node relabelled as a BP-node (scenario (a)).
    Topology all_bp() const;
};

/// Throws ConfigError when the topology invariants do not hold.
void validate_topology(const Topology& topology);

/// Seven-node backhaul ring with chords 2-6 and 3-5, GM = node 1, and two
/// KF leaves each on nodes 4 and 6 (1-based ids 8..11).
Topology default_topology();

struct LinkModel {
    double prop_delay = 0.0;
    double t_mean = 0.0;
    double t_std = 0.0;
    double r_mean = 0.0;
    double r_std = 0.0;
};

struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

struct Scenario {
    Topology topology = default_topology();
    Range delay_range_ns{200.0, 300.0};
    double t_mean_ns = 0.0;
    double t_std_ns = 4.0;
    double r_mean_ns = 0.0;
    double r_std_ns = 4.0;
    Range offset_range_ns{-50.0, 50.0};
    Range skew_ppm_range{0.0, 0.0};  // [0, 0] disables skew simulation
    int k = 10;
    int training_rounds = 1000;
    double delta_t_ns = 1e9;
    double turnaround_ns = 1000.0;
    int bp_max_iters = 20;
    double bp_epsilon_ns = 0.1;
    double bp_damping = 1.0;
    int mc_runs = 1000;
    std::uint64_t master_seed = 1;
    double epoch_ns = 1e9;
};

/// Throws ConfigError on any violated parameter or topology invariant.
void validate_scenario(const Scenario& scenario);

/// Concrete clocks and links of one Monte-Carlo trial. `links[e]` belongs to
/// `topology.edges[e]`.
struct WorldInstance {
    std::vector<ClockState> clocks;
    std::vector<LinkModel> links;
};

/// Draws clock offsets/skews and link delays for one trial. The result is a
/// pure function of (master_seed, trial_index); the GM is pinned to the
/// identity clock.
WorldInstance sample_scenario_instance(const Scenario& scenario, int trial_index);

/// Same draw with an explicit seed (the harness seed may differ from the
/// scenario's own).
WorldInstance sample_world(const Scenario& scenario, std::uint64_t seed, int trial_index);

}  // namespace syncnet

#endif  // SYNCNET_MODEL_HPP
