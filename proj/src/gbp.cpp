#include "syncnet/gbp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "syncnet/errors.hpp"

namespace syncnet {

GaussianMsg GaussianMsg::from_variance(double mean, double variance) {
    if (variance == 0.0) return anchored(mean);
    if (variance == std::numeric_limits<double>::infinity()) return non_informative();
    return {mean, 1.0 / variance};
}

double GaussianMsg::variance() const {
    if (is_anchored()) return 0.0;
    if (!is_informative()) return std::numeric_limits<double>::infinity();
    return 1.0 / precision;
}

GaussianMsg gaussian_product(std::span<const GaussianMsg> terms) {
    const GaussianMsg* anchor = nullptr;
    for (const auto& t : terms) {
        if (!t.is_anchored()) continue;
        if (anchor == nullptr) {
            anchor = &t;
        } else if (std::abs(anchor->mean - t.mean) > 1e-9 * std::max(1.0, std::abs(t.mean))) {
            throw EstimationError("conflicting anchored messages (" + std::to_string(anchor->mean) + " vs " +
                                  std::to_string(t.mean) + ")");
        }
    }
    if (anchor != nullptr) return GaussianMsg::anchored(anchor->mean);

    double precision = 0.0;
    double weighted = 0.0;
    for (const auto& t : terms) {
        if (!t.is_informative()) continue;
        precision += t.precision;
        weighted += t.precision * t.mean;
    }
    if (precision == 0.0) return GaussianMsg::non_informative();
    return {weighted / precision, precision};
}

std::size_t FactorGraph::add_variable(int node, GaussianMsg prior) {
    variables.push_back({node, prior, prior});
    adjacency.emplace_back();
    if (node >= 0) {
        if (static_cast<std::size_t>(node) >= variable_of_node.size()) {
            variable_of_node.resize(static_cast<std::size_t>(node) + 1, -1);
        }
        variable_of_node[static_cast<std::size_t>(node)] = static_cast<int>(variables.size() - 1);
    }
    return variables.size() - 1;
}

std::size_t FactorGraph::add_factor(std::size_t var_i, std::size_t var_j, const PairStats& stats) {
    if (var_i >= variables.size() || var_j >= variables.size() || var_i == var_j) {
        throw ConfigError("factor must connect two distinct existing variables");
    }
    if (!(stats.factor_var > 0.0)) throw EstimationError("factor variance must be positive");
    const std::size_t f = factors.size();
    factors.push_back({var_i, var_j, stats});
    to_factor.push_back({GaussianMsg::non_informative(), GaussianMsg::non_informative()});
    to_var.push_back({GaussianMsg::non_informative(), GaussianMsg::non_informative()});
    adjacency[var_i].emplace_back(f, FactorSide::i);
    adjacency[var_j].emplace_back(f, FactorSide::j);
    return f;
}

std::size_t FactorGraph::anchored_count() const {
    return static_cast<std::size_t>(
        std::count_if(variables.begin(), variables.end(), [](const Variable& v) { return v.prior.is_anchored(); }));
}

FactorGraph build_factor_graph(const Topology& topology, std::span<const std::optional<PairStats>> stats,
                               double damping) {
    validate_topology(topology);
    if (stats.size() != topology.edges.size()) throw ConfigError("one PairStats slot per edge is required");

    FactorGraph graph;
    graph.damping = damping;
    graph.variable_of_node.assign(static_cast<std::size_t>(topology.node_count), -1);
    for (int v = 0; v < topology.node_count; ++v) {
        if (!topology.is_bp(v)) continue;
        graph.add_variable(v, v == topology.gm ? GaussianMsg::anchored(0.0) : GaussianMsg::non_informative());
    }
    if (graph.anchored_count() != 1) throw ConfigError("factor graph needs exactly one grand master");

    for (std::size_t e = 0; e < topology.edges.size(); ++e) {
        if (!topology.is_bp_edge(e)) continue;
        if (!stats[e]) {
            throw ConfigError("missing pair statistics for edge " + std::to_string(topology.edges[e].a + 1) + " - " +
                              std::to_string(topology.edges[e].b + 1));
        }
        const auto& edge = topology.edges[e];
        const auto vi = static_cast<std::size_t>(graph.variable_of_node[static_cast<std::size_t>(edge.b)]);
        const auto vj = static_cast<std::size_t>(graph.variable_of_node[static_cast<std::size_t>(edge.a)]);
        graph.add_factor(vi, vj, *stats[e]);
    }
    return graph;
}

namespace {

std::size_t side_index(FactorSide s) { return static_cast<std::size_t>(s); }

FactorSide other(FactorSide s) { return s == FactorSide::i ? FactorSide::j : FactorSide::i; }

GaussianMsg product_excluding(const FactorGraph& graph, std::size_t var, std::optional<std::size_t> skip) {
    std::vector<GaussianMsg> terms;
    terms.reserve(graph.adjacency[var].size() + 1);
    terms.push_back(graph.variables[var].prior);
    for (const auto& [f, side] : graph.adjacency[var]) {
        if (skip && *skip == f) continue;
        terms.push_back(graph.to_var[f][side_index(side)]);
    }
    return gaussian_product(terms);
}

// Information-form blend of a freshly computed message with the previous one.
GaussianMsg damped(const GaussianMsg& fresh, const GaussianMsg& old, double damping) {
    if (damping >= 1.0 || fresh.is_anchored() || old.is_anchored() || !fresh.is_informative() ||
        !old.is_informative()) {
        return fresh;
    }
    const double precision = damping * fresh.precision + (1.0 - damping) * old.precision;
    const double info = damping * fresh.precision * fresh.mean + (1.0 - damping) * old.precision * old.mean;
    return {info / precision, precision};
}

}  // namespace

GaussianMsg msg_var_to_factor(const FactorGraph& graph, std::size_t var, std::size_t factor) {
    return product_excluding(graph, var, factor);
}

GaussianMsg msg_factor_to_var(const Factor& factor, FactorSide toward, const GaussianMsg& incoming) {
    const PairStats& s = factor.stats;
    if (!(s.factor_var > 0.0)) throw EstimationError("factor variance must be positive");
    if (!incoming.is_informative()) return GaussianMsg::non_informative();

    const double alpha = s.alpha_hat;
    const double v_in = incoming.variance();
    if (toward == FactorSide::j) {
        return GaussianMsg::from_variance(alpha * incoming.mean + s.delta_hat, alpha * alpha * v_in + s.factor_var);
    }
    return GaussianMsg::from_variance((incoming.mean - s.delta_hat) / alpha, (v_in + s.factor_var) / (alpha * alpha));
}

GaussianBelief update_belief(FactorGraph& graph, std::size_t var) {
    auto& v = graph.variables.at(var);
    v.belief = product_excluding(graph, var, std::nullopt);
    return v.belief;
}

double bp_iterate(FactorGraph& graph) {
    const std::size_t nf = graph.factors.size();

    // Variable -> factor from the previous iteration's factor -> variable mailboxes.
    std::vector<std::array<GaussianMsg, 2>> outgoing(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        const Factor& fac = graph.factors[f];
        outgoing[f][side_index(FactorSide::i)] = msg_var_to_factor(graph, fac.var_i, f);
        outgoing[f][side_index(FactorSide::j)] = msg_var_to_factor(graph, fac.var_j, f);
    }

    std::vector<std::array<GaussianMsg, 2>> incoming(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        const Factor& fac = graph.factors[f];
        for (FactorSide toward : {FactorSide::i, FactorSide::j}) {
            const GaussianMsg fresh = msg_factor_to_var(fac, toward, outgoing[f][side_index(other(toward))]);
            incoming[f][side_index(toward)] = damped(fresh, graph.to_var[f][side_index(toward)], graph.damping);
        }
    }
    graph.to_factor = std::move(outgoing);
    graph.to_var = std::move(incoming);

    double max_change = 0.0;
    bool any_informative = false;
    bool any_undefined = false;
    for (std::size_t v = 0; v < graph.variables.size(); ++v) {
        const GaussianBelief before = graph.variables[v].belief;
        const GaussianBelief after = update_belief(graph, v);
        if (before.is_informative() && after.is_informative()) {
            any_informative = true;
            max_change = std::max(max_change, std::abs(after.mean - before.mean));
        } else {
            any_informative = any_informative || after.is_informative();
            any_undefined = true;
        }
    }
    ++graph.iteration;
    if (any_undefined && any_informative) return std::numeric_limits<double>::infinity();
    return max_change;
}

}  // namespace syncnet
