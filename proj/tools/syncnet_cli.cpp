// syncnet: command-line front end for the synchronization simulator.
//
//   syncnet run      --scenario <file> --mode bp|hybrid --runs N --seed S --out <csv>
//   syncnet oracle   --scenario <file> --trial I
//   syncnet train    --scenario <file>
//   syncnet validate --scenario <file>
//
// Exit codes: 0 success, 1 configuration/usage error, 2 runtime error.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "syncnet/errors.hpp"
#include "syncnet/harness.hpp"
#include "syncnet/hybrid.hpp"
#include "syncnet/oracle.hpp"
#include "syncnet/scenario_io.hpp"

namespace {

using namespace syncnet;

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

Scenario load_valid(const std::string& path) {
    Scenario s = load_scenario(path);
    validate_scenario(s);
    return s;
}

std::string edge_name(const Topology& t, std::size_t e) {
    return std::to_string(t.edges[e].a + 1) + "-" + std::to_string(t.edges[e].b + 1);
}

int cmd_run(const std::string& scenario_path, const std::string& mode_text, std::optional<int> runs,
            std::optional<std::uint64_t> seed, const std::string& out, int threads, const std::string& quads_out,
            const std::string& beliefs_out, int dump_trials) {
    const Scenario s = load_valid(scenario_path);
    const Mode mode = parse_mode(mode_text);
    MonteCarloOptions opts;
    opts.threads = threads;
    opts.keep_traces = (quads_out.empty() && beliefs_out.empty()) ? 0 : dump_trials;
    const int n = runs.value_or(s.mc_runs);
    if (n < 1) throw ConfigError("--runs must be at least 1");
    const auto result = run_monte_carlo(s, mode, n, seed.value_or(s.master_seed), opts);

    if (out.empty() || out == "-") {
        std::cout << format_results(result.table);
    } else {
        write_results(result.table, out);
    }
    const Topology topo = mode == Mode::bp_whole ? s.topology.all_bp() : s.topology;
    if (!quads_out.empty()) write_text_file(quads_out, format_quads_csv(topo, result.traces));
    if (!beliefs_out.empty()) write_text_file(beliefs_out, format_beliefs_csv(topo, result.traces));

    int converged = 0;
    for (int it : result.convergence_iterations) converged += it > 0 ? 1 : 0;
    std::cerr << mode_name(mode) << ": " << n << " trials, " << converged << " converged within "
              << s.bp_max_iters << " iterations\n";
    return 0;
}

int cmd_oracle(const std::string& scenario_path, int trial, const std::string& mode_text) {
    const Scenario s = load_valid(scenario_path);
    const Mode mode = parse_mode(mode_text);
    const Topology topo = mode == Mode::bp_whole ? s.topology.all_bp() : s.topology;
    const WorldInstance world = sample_scenario_instance(s, trial);
    const HybridTrace trace = run_hybrid(world, s, topo, TrialSeed{s.master_seed, trial});
    const FactorGraph graph = build_factor_graph(topo, trace.pair_stats, s.bp_damping);
    const ExactMarginals exact = exact_network_marginals(graph);

    std::cout << "node,true_offset_ns,posterior_mean_ns,posterior_var_ns2\n";
    for (std::size_t v = 0; v < graph.variables.size(); ++v) {
        const int node = graph.variables[v].node;
        std::cout << node + 1 << ',' << format_double(world.clocks[static_cast<std::size_t>(node)].offset) << ','
                  << format_double(exact.mean[v]) << ',' << format_double(exact.variance[v]) << '\n';
    }
    return 0;
}

int cmd_train(const std::string& scenario_path, int trial) {
    const Scenario s = load_valid(scenario_path);
    const WorldInstance world = sample_scenario_instance(s, trial);
    std::cout << "edge,sigma2_hat_ns2\n";
    for (std::size_t e = 0; e < s.topology.edges.size(); ++e) {
        Rng rng(s.master_seed, static_cast<std::uint64_t>(trial), Stream::training, e);
        const double s2 = run_training(world, s.topology, e, s.training_rounds, rng, s.epoch_ns, s.delta_t_ns,
                                       s.turnaround_ns);
        std::cout << edge_name(s.topology, e) << ',' << format_double(s2) << '\n';
    }
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    const Scenario s = load_valid(scenario_path);
    const auto part = partition_domains(s.topology);
    std::cout << "ok: " << s.topology.node_count << " nodes (" << part.bp_set.size() << " BP, " << part.kf_set.size()
              << " KF), " << s.topology.edges.size() << " links\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clock synchronization simulator: pairwise KF, Gaussian BP and hybrid synchronizers"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string mode = "bp";
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string quads_out;
    std::string beliefs_out;
    int dump_trials = 1;
    int threads = 0;
    int trial = 0;

    auto* run = app.add_subcommand("run", "Monte-Carlo RMSE experiment");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--mode", mode, "bp (whole network) or hybrid");
    run->add_option("--runs", runs, "Number of trials (default: mc.runs)");
    run->add_option("--seed", seed, "Master seed (default: mc.seed)");
    run->add_option("--out", out, "Results CSV path ('-' or omitted: stdout)");
    run->add_option("--threads", threads, "Worker threads (0: SYNCNET_THREADS or auto)");
    run->add_option("--quads-out", quads_out, "Dump time-stamp quads of the first trials");
    run->add_option("--beliefs-out", beliefs_out, "Dump per-iteration beliefs of the first trials");
    run->add_option("--dump-trials", dump_trials, "Trials included in the dumps");

    auto* oracle = app.add_subcommand("oracle", "Exact posterior marginals for one trial");
    oracle->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    oracle->add_option("--trial", trial, "Trial index");
    oracle->add_option("--mode", mode, "bp (whole network) or hybrid");

    auto* train = app.add_subcommand("train", "Print the trained noise variance of every link");
    train->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    train->add_option("--trial", trial, "Trial index");

    auto* validate = app.add_subcommand("validate", "Check scenario invariants");
    validate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*run) return cmd_run(scenario_path, mode, runs, seed, out, threads, quads_out, beliefs_out, dump_trials);
        if (*oracle) return cmd_oracle(scenario_path, trial, mode);
        if (*train) return cmd_train(scenario_path, trial);
        if (*validate) return cmd_validate(scenario_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitConfig;
}
