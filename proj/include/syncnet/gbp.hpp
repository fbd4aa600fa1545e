#ifndef SYNCNET_GBP_HPP
#define SYNCNET_GBP_HPP

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "syncnet/model.hpp"
#include "syncnet/ptp.hpp"

namespace syncnet {

/// Gaussian in (mean, precision) form. Precision 0 is the improper uniform
/// N(0, +inf); precision +inf is a point mass (the anchored grand master).
struct GaussianMsg {
    double mean = 0.0;
    double precision = 0.0;

    static GaussianMsg non_informative() { return {0.0, 0.0}; }
    static GaussianMsg anchored(double mean) { return {mean, std::numeric_limits<double>::infinity()}; }
    /// variance 0 maps to an anchored message, +inf to non-informative.
    static GaussianMsg from_variance(double mean, double variance);

    bool is_anchored() const { return precision == std::numeric_limits<double>::infinity(); }
    bool is_informative() const { return precision > 0.0; }
    double variance() const;
};

using GaussianBelief = GaussianMsg;

/// Normalized product of Gaussian factors. An anchored term absorbs all
/// finite ones; anchored terms with different means throw EstimationError.
GaussianMsg gaussian_product(std::span<const GaussianMsg> terms);

struct Variable {
    int node = 0;  // topology node index
    GaussianMsg prior;
    GaussianBelief belief;
};

/// Pairwise factor theta_j - alpha * theta_i ~ N(delta_hat, factor_var), with
/// i = responder (`var_i`) and j = initiator (`var_j`).
struct Factor {
    std::size_t var_i = 0;
    std::size_t var_j = 0;
    PairStats stats;
};

enum class FactorSide : std::size_t { i = 0, j = 1 };

/// Bipartite variable/factor graph with one mailbox per directed
/// variable-factor connection. Mailboxes hold the messages of the last
/// completed iteration.
struct FactorGraph {
    std::vector<Variable> variables;
    std::vector<Factor> factors;
    std::vector<std::array<GaussianMsg, 2>> to_factor;  // [factor][side]: variable -> factor
    std::vector<std::array<GaussianMsg, 2>> to_var;     // [factor][side]: factor -> variable
    std::vector<std::vector<std::pair<std::size_t, FactorSide>>> adjacency;  // per variable
    std::vector<int> variable_of_node;  // -1 for nodes outside the graph
    int iteration = 0;
    double damping = 1.0;

    std::size_t add_variable(int node, GaussianMsg prior);
    std::size_t add_factor(std::size_t var_i, std::size_t var_j, const PairStats& stats);
    std::size_t anchored_count() const;
};

/// Graph over the BP-nodes of `topology`. `stats[e]` must be present for every
/// edge whose endpoints are both BP-nodes. Priors: GM anchored at 0, every
/// other variable non-informative; mailboxes start non-informative.
FactorGraph build_factor_graph(const Topology& topology, std::span<const std::optional<PairStats>> stats,
                               double damping = 1.0);

/// Prior times every incoming factor message except the one from `factor`.
GaussianMsg msg_var_to_factor(const FactorGraph& graph, std::size_t var, std::size_t factor);

/// Closed-form integral of the factor against the message arriving from the
/// opposite side, directed toward `toward`.
GaussianMsg msg_factor_to_var(const Factor& factor, FactorSide toward, const GaussianMsg& incoming);

/// Prior times all incoming factor messages; stores and returns the belief.
GaussianBelief update_belief(FactorGraph& graph, std::size_t var);

/// One synchronous (flooding) iteration. Returns the largest absolute change
/// of belief means; a variable that is non-informative before or after the
/// iteration counts as +inf, unless no variable is informative at all.
double bp_iterate(FactorGraph& graph);

}  // namespace syncnet

#endif  // SYNCNET_GBP_HPP
