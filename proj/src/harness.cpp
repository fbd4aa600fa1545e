#include "syncnet/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "syncnet/errors.hpp"

namespace syncnet {

std::string_view mode_name(Mode mode) {
    return mode == Mode::bp_whole ? "bp_whole" : "hybrid";
}

Mode parse_mode(std::string_view text) {
    if (text == "bp" || text == "bp_whole") return Mode::bp_whole;
    if (text == "hybrid") return Mode::hybrid;
    throw ConfigError("unknown mode '" + std::string(text) + "' (expected bp or hybrid)");
}

void RmseTable::sort() {
    std::stable_sort(rows.begin(), rows.end(), [](const RmseRow& x, const RmseRow& y) {
        return std::tie(x.scenario, x.node, x.iteration) < std::tie(y.scenario, y.node, y.iteration);
    });
}

const RmseRow* RmseTable::find(int node, int iteration) const {
    for (const auto& r : rows) {
        if (r.node == node && r.iteration == iteration) return &r;
    }
    return nullptr;
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SYNCNET_THREADS")) {
        const std::string_view text(env);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
        if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
            throw ConfigError("SYNCNET_THREADS must be a non-negative integer");
        }
        if (value > 0) return value;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

namespace {

struct TrialOutcome {
    std::vector<double> squared_error;  // [iteration * nodes + node]
    int converged_iteration = 0;
};

}  // namespace

MonteCarloResult run_monte_carlo(const Scenario& scenario, Mode mode, int runs, std::uint64_t seed,
                                 const MonteCarloOptions& options) {
    validate_scenario(scenario);
    if (runs < 1) throw ConfigError("runs must be at least 1");

    const Topology topology = mode == Mode::bp_whole ? scenario.topology.all_bp() : scenario.topology;
    const auto nodes = static_cast<std::size_t>(topology.node_count);
    const auto iterations = static_cast<std::size_t>(scenario.bp_max_iters);
    const auto keep = static_cast<std::size_t>(std::clamp(options.keep_traces, 0, runs));

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(runs));
    std::vector<HybridTrace> kept(keep);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (int t = next++; t < runs; t = next++) {
            try {
                const WorldInstance world = sample_world(scenario, seed, t);
                HybridTrace trace = run_hybrid(world, scenario, topology, TrialSeed{seed, t});
                TrialOutcome& out = outcomes[static_cast<std::size_t>(t)];
                out.squared_error.resize(iterations * nodes);
                for (std::size_t l = 0; l < iterations; ++l) {
                    for (std::size_t v = 0; v < nodes; ++v) {
                        const double err = trace.error(static_cast<int>(l), static_cast<int>(v));
                        out.squared_error[l * nodes + v] = err * err;
                    }
                }
                out.converged_iteration = trace.converged_iteration;
                if (static_cast<std::size_t>(t) < keep) kept[static_cast<std::size_t>(t)] = std::move(trace);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = runs;
            }
        }
    };

    const int threads = std::min(resolve_thread_count(options.threads), runs);
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> sums(iterations * nodes, 0.0);
    MonteCarloResult result;
    result.convergence_iterations.reserve(outcomes.size());
    for (const auto& out : outcomes) {
        for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += out.squared_error[i];
        result.convergence_iterations.push_back(out.converged_iteration);
    }

    const std::string label(mode_name(mode));
    for (std::size_t v = 0; v < nodes; ++v) {
        const bool kf_node = !topology.is_bp(static_cast<int>(v));
        for (std::size_t l = 0; l < iterations; ++l) {
            RmseRow row;
            row.scenario = label;
            row.node = static_cast<int>(v) + 1;
            row.iteration = static_cast<int>(l) + 1;
            row.estimator = kf_node ? "hybrid" : "bp";
            row.rmse_ns = std::sqrt(sums[l * nodes + v] / runs);
            row.trials = runs;
            result.table.rows.push_back(std::move(row));
        }
    }
    result.table.sort();
    result.traces = std::move(kept);
    return result;
}

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    if (std::isnan(value)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string format_results(const RmseTable& table) {
    RmseTable sorted = table;
    sorted.sort();
    std::string out = "scenario,node,iteration,estimator,rmse_ns,trials\n";
    for (const auto& r : sorted.rows) {
        out += r.scenario + ',' + std::to_string(r.node) + ',' + std::to_string(r.iteration) + ',' + r.estimator +
               ',' + format_double(r.rmse_ns) + ',' + std::to_string(r.trials) + '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_results(const RmseTable& table, const std::string& path) {
    write_text_file(path, format_results(table));
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view text) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw std::runtime_error("malformed number '" + std::string(text) + "' in results CSV");
    }
    return value;
}

}  // namespace

RmseTable parse_results(std::string_view csv) {
    RmseTable table;
    bool header = true;
    while (!csv.empty()) {
        const auto eol = csv.find('\n');
        const std::string_view line = csv.substr(0, eol);
        csv = eol == std::string_view::npos ? std::string_view{} : csv.substr(eol + 1);
        if (line.empty()) continue;
        if (header) {
            if (line != "scenario,node,iteration,estimator,rmse_ns,trials") {
                throw std::runtime_error("unexpected results CSV header");
            }
            header = false;
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 6) throw std::runtime_error("results CSV row needs 6 columns");
        RmseRow row;
        row.scenario = std::string(cols[0]);
        row.node = parse_number<int>(cols[1]);
        row.iteration = parse_number<int>(cols[2]);
        row.estimator = std::string(cols[3]);
        row.rmse_ns = parse_number<double>(cols[4]);
        row.trials = parse_number<int>(cols[5]);
        table.rows.push_back(std::move(row));
    }
    if (header) throw std::runtime_error("results CSV is empty");
    return table;
}

std::string format_quads_csv(const Topology& topology, const std::vector<HybridTrace>& traces) {
    std::string out = "edge,k,c1,c2,c3,c4\n";
    for (const auto& trace : traces) {
        for (std::size_t e = 0; e < trace.sync_quads.size(); ++e) {
            const auto& edge = topology.edges[e];
            const std::string name = std::to_string(edge.a + 1) + '-' + std::to_string(edge.b + 1);
            for (const auto& q : trace.sync_quads[e]) {
                out += name + ',' + std::to_string(q.round_index) + ',' + format_double(q.c1) + ',' +
                       format_double(q.c2) + ',' + format_double(q.c3) + ',' + format_double(q.c4) + '\n';
            }
        }
    }
    return out;
}

std::string format_beliefs_csv(const Topology& topology, const std::vector<HybridTrace>& traces) {
    std::string out = "trial,iteration,node,belief_mean_ns,belief_var_ns2\n";
    for (std::size_t t = 0; t < traces.size(); ++t) {
        const auto& trace = traces[t];
        for (std::size_t l = 0; l < trace.beliefs.size(); ++l) {
            for (int v = 0; v < topology.node_count; ++v) {
                if (!topology.is_bp(v)) continue;
                const auto& b = trace.beliefs[l][static_cast<std::size_t>(v)];
                out += std::to_string(t) + ',' + std::to_string(l + 1) + ',' + std::to_string(v + 1) + ',' +
                       format_double(b.is_informative() ? b.mean : 0.0) + ',' + format_double(b.variance()) + '\n';
            }
        }
    }
    return out;
}

}  // namespace syncnet
