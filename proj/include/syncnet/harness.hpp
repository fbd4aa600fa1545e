#ifndef SYNCNET_HARNESS_HPP
#define SYNCNET_HARNESS_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "syncnet/hybrid.hpp"
#include "syncnet/model.hpp"

namespace syncnet {

enum class Mode {
    bp_whole,  // every node, edge nodes included, is a BP variable
    hybrid,    // BP on the backhaul, KF on the labelled edge nodes
};

std::string_view mode_name(Mode mode);
/// Accepts "bp", "bp_whole" and "hybrid"; throws ConfigError otherwise.
Mode parse_mode(std::string_view text);

struct RmseRow {
    std::string scenario;
    int node = 0;       // 1-based
    int iteration = 0;  // 1-based BP iteration
    std::string estimator;
    double rmse_ns = 0.0;
    int trials = 0;
};

struct RmseTable {
    std::vector<RmseRow> rows;

    /// Orders rows by (scenario, node, iteration).
    void sort();
    /// Row for a 1-based node id and iteration, or nullptr.
    const RmseRow* find(int node, int iteration) const;
};

struct MonteCarloOptions {
    int threads = 0;       // 0: SYNCNET_THREADS, then hardware concurrency
    int keep_traces = 0;   // keep the full traces of the first N trials
};

struct MonteCarloResult {
    RmseTable table;
    std::vector<int> convergence_iterations;  // per trial, 0 = not converged
    std::vector<HybridTrace> traces;          // first keep_traces trials
};

/// Worker count: an explicit positive request wins, then SYNCNET_THREADS
/// (0 = auto), then std::thread::hardware_concurrency().
int resolve_thread_count(int requested);

/// Runs `runs` independent trials (trial i seeded from (seed, i)) and
/// aggregates the per-node, per-iteration RMSE against reference time.
/// Per-trial squared errors are merged in trial order, so the table does not
/// depend on the worker count.
MonteCarloResult run_monte_carlo(const Scenario& scenario, Mode mode, int runs, std::uint64_t seed,
                                 const MonteCarloOptions& options = {});

/// CSV with header `scenario,node,iteration,estimator,rmse_ns,trials`, rows
/// sorted, shortest round-trip decimal formatting.
std::string format_results(const RmseTable& table);
void write_results(const RmseTable& table, const std::string& path);
RmseTable parse_results(std::string_view csv);

/// Debug dumps. Quads: `edge,k,c1,c2,c3,c4` (edge as "a-b", 1-based).
/// Beliefs: `trial,iteration,node,belief_mean_ns,belief_var_ns2` for BP-nodes.
std::string format_quads_csv(const Topology& topology, const std::vector<HybridTrace>& traces);
std::string format_beliefs_csv(const Topology& topology, const std::vector<HybridTrace>& traces);

/// Writes text to a file, throwing std::runtime_error on I/O failure.
void write_text_file(const std::string& path, const std::string& text);

/// Shortest decimal representation that round-trips, independent of locale.
std::string format_double(double value);

}  // namespace syncnet

#endif  // SYNCNET_HARNESS_HPP
