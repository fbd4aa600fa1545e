#include "syncnet/hybrid.hpp"

#include <algorithm>

#include "syncnet/errors.hpp"
#include "syncnet/rng.hpp"

namespace syncnet {

DomainPartition partition_domains(const Topology& topology) {
    validate_topology(topology);
    DomainPartition p;
    for (int v = 0; v < topology.node_count; ++v) {
        (topology.is_bp(v) ? p.bp_set : p.kf_set).push_back(v);
    }
    return p;
}

HybridSchedule make_schedule(const Scenario& scenario, const DomainPartition& partition) {
    return {scenario.k + 1, partition.bp_set, partition.kf_set};
}

double HybridTrace::error(int iteration, int node) const {
    const auto l = static_cast<std::size_t>(iteration);
    const auto v = static_cast<std::size_t>(node);
    if (!kf_round_estimate[v].empty()) return parent_error[l][v] + kf_error[l][v];
    return estimate[l][v] - true_offset[v];
}

HybridTrace run_hybrid(const WorldInstance& world, const Scenario& scenario, const Topology& topology,
                       TrialSeed seed) {
    const DomainPartition partition = partition_domains(topology);
    const HybridSchedule schedule = make_schedule(scenario, partition);
    const auto n = static_cast<std::size_t>(topology.node_count);
    const auto iterations = static_cast<std::size_t>(scenario.bp_max_iters);
    const std::size_t edge_count = topology.edges.size();
    const auto trial = static_cast<std::uint64_t>(seed.trial);
    if (world.clocks.size() != n || world.links.size() != edge_count) {
        throw ConfigError("world instance does not match the topology");
    }

    HybridTrace trace;
    trace.true_offset.resize(n);
    for (std::size_t v = 0; v < n; ++v) trace.true_offset[v] = world.clocks[v].offset;

    // Training phase on every link (separate calibration timeline).
    trace.sigma2_hat.resize(edge_count);
    for (std::size_t e = 0; e < edge_count; ++e) {
        Rng rng(seed.seed, trial, Stream::training, e);
        const double s2 = run_training(world, topology, e, scenario.training_rounds, rng, scenario.epoch_ns,
                                       scenario.delta_t_ns, scenario.turnaround_ns);
        trace.sigma2_hat[e] = std::max(s2, kMinSigma2);
    }

    // One K-round set on every BP link, then the factor graph.
    trace.pair_stats.assign(edge_count, std::nullopt);
    trace.sync_quads.assign(edge_count, {});
    for (std::size_t e = 0; e < edge_count; ++e) {
        if (!topology.is_bp_edge(e)) continue;
        Rng rng(seed.seed, trial, Stream::sync_set, e);
        auto quads = exchange_rounds(world, topology, e, scenario.epoch_ns, scenario.delta_t_ns, scenario.k, rng,
                                     scenario.turnaround_ns, 1);
        const double alpha = estimate_rel_skew(quads);
        trace.pair_stats[e] = pair_statistic(quads, alpha, trace.sigma2_hat[e]);
        trace.sync_quads[e] = std::move(quads);
    }
    FactorGraph graph = build_factor_graph(topology, trace.pair_stats, scenario.bp_damping);

    trace.estimate.assign(iterations, std::vector<double>(n, 0.0));
    trace.beliefs.assign(iterations, std::vector<GaussianBelief>(n, GaussianMsg::non_informative()));
    trace.parent_error.assign(iterations, std::vector<double>(n, 0.0));
    trace.kf_error.assign(iterations, std::vector<double>(n, 0.0));
    for (std::size_t l = 0; l < iterations; ++l) {
        if (trace.converged_iteration == 0) {
            const double change = bp_iterate(graph);
            trace.max_change.push_back(change);
            if (change <= scenario.bp_epsilon_ns) trace.converged_iteration = static_cast<int>(l + 1);
        }
        for (int v : schedule.bp_set) {
            const auto var = static_cast<std::size_t>(graph.variable_of_node[static_cast<std::size_t>(v)]);
            const GaussianBelief& b = graph.variables[var].belief;
            trace.beliefs[l][static_cast<std::size_t>(v)] = b;
            // A non-informative belief reports its prior mean.
            trace.estimate[l][static_cast<std::size_t>(v)] = b.is_informative() ? b.mean : graph.variables[var].prior.mean;
        }
    }

    // Pairwise KF of every KF-node against its parent, sampled at BP-iteration boundaries.
    trace.kf_round_estimate.assign(n, {});
    trace.kf_round_truth.assign(n, {});
    const int kf_rounds = scenario.bp_max_iters * schedule.kf_rounds_per_bp_iteration;
    for (int v : schedule.kf_set) {
        const auto vi = static_cast<std::size_t>(v);
        const auto e = static_cast<std::size_t>(topology.attachment_edge(v));
        const int parent = topology.kf_parent[vi];
        const auto pi = static_cast<std::size_t>(parent);
        Rng rng(seed.seed, trial, Stream::kf_exchange, e);
        auto quads = exchange_rounds(world, topology, e, scenario.epoch_ns, scenario.delta_t_ns, kf_rounds, rng,
                                     scenario.turnaround_ns, 1);

        KfConfig cfg;
        cfg.delta_t = scenario.delta_t_ns;
        cfg.sigma2 = trace.sigma2_hat[e];
        cfg.validate();
        KfState state = kf_initial_state(cfg);
        const ClockState& own = world.clocks[vi];
        const ClockState& par = world.clocks[pi];
        for (std::size_t r = 0; r < quads.size(); ++r) {
            state = kf_step(state, quads[r], r == 0 ? nullptr : &quads[r - 1], cfg);
            const double t_send = scenario.epoch_ns + static_cast<double>(r) * scenario.delta_t_ns;
            trace.kf_round_estimate[vi].push_back(state.x.offset);
            trace.kf_round_truth[vi].push_back((own.skew - par.skew) * t_send + (own.offset - par.offset));
        }
        trace.sync_quads[e] = std::move(quads);

        for (std::size_t l = 0; l < iterations; ++l) {
            const auto r = (l + 1) * static_cast<std::size_t>(schedule.kf_rounds_per_bp_iteration) - 1;
            const double rel = trace.kf_round_estimate[vi][r];
            trace.estimate[l][vi] = trace.estimate[l][pi] + rel;
            trace.parent_error[l][vi] = trace.estimate[l][pi] - trace.true_offset[pi];
            trace.kf_error[l][vi] = rel - trace.kf_round_truth[vi][r];
        }
    }
    return trace;
}

}  // namespace syncnet
