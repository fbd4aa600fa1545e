// Shared fixtures for the unit and acceptance tests.
#ifndef SYNCNET_TESTS_SUPPORT_HPP
#define SYNCNET_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "syncnet/gbp.hpp"
#include "syncnet/model.hpp"
#include "syncnet/rng.hpp"

namespace syncnet::testing {

// Random tree over n nodes: node v > 0 attaches to a uniformly chosen earlier
// node, and the grand master is a random node. Edge orientation is random too.
inline Topology random_tree(int n, Rng& rng) {
    Topology t;
    t.node_count = n;
    t.roles.assign(static_cast<std::size_t>(n), NodeRole::bp);
    t.kf_parent.assign(static_cast<std::size_t>(n), -1);
    for (int v = 1; v < n; ++v) {
        const int u = std::min(v - 1, static_cast<int>(rng.uniform01() * v));
        if (rng.uniform01() < 0.5) {
            t.edges.push_back({u, v});
        } else {
            t.edges.push_back({v, u});
        }
    }
    t.gm = std::min(n - 1, static_cast<int>(rng.uniform01() * n));
    return t;
}

// Arbitrary (not simulated) pair statistics with a spread of skews and
// variances, one per edge.
inline std::vector<std::optional<PairStats>> random_stats(const Topology& t, Rng& rng) {
    std::vector<std::optional<PairStats>> stats(t.edges.size());
    for (auto& s : stats) {
        PairStats p;
        p.alpha_hat = 1.0 + 1e-5 * rng.uniform(-20.0, 20.0);
        p.sigma2_hat = rng.uniform(4.0, 64.0);
        p.k_used = 10;
        p.delta_hat = rng.uniform(-100.0, 100.0);
        p.factor_var = p.alpha_hat * p.alpha_hat * p.sigma2_hat / (4.0 * p.k_used);
        s = p;
    }
    return stats;
}

// Hop distance from the grand master to the farthest node.
inline int eccentricity_of_gm(const Topology& t) {
    std::vector<int> dist(static_cast<std::size_t>(t.node_count), -1);
    std::vector<int> queue{t.gm};
    dist[static_cast<std::size_t>(t.gm)] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const int v = queue[head];
        for (int w : t.neighbors(v)) {
            if (dist[static_cast<std::size_t>(w)] >= 0) continue;
            dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(v)] + 1;
            queue.push_back(w);
        }
    }
    return *std::max_element(dist.begin(), dist.end());
}

inline bool rel_close(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

}  // namespace syncnet::testing

#endif  // SYNCNET_TESTS_SUPPORT_HPP
