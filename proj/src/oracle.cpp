#include "syncnet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "syncnet/errors.hpp"

namespace syncnet {

ExactMarginals exact_network_marginals(const FactorGraph& graph) {
    const std::size_t n = graph.variables.size();
    std::vector<int> unknown_index(n, -1);
    int unknowns = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (!graph.variables[v].prior.is_anchored()) unknown_index[v] = unknowns++;
    }
    Eigen::MatrixXd precision = Eigen::MatrixXd::Zero(unknowns, unknowns);
    Eigen::VectorXd potential = Eigen::VectorXd::Zero(unknowns);

    for (std::size_t v = 0; v < n; ++v) {
        const GaussianMsg& prior = graph.variables[v].prior;
        const int u = unknown_index[v];
        if (u >= 0 && prior.is_informative()) {
            precision(u, u) += prior.precision;
            potential(u) += prior.precision * prior.mean;
        }
    }

    for (const Factor& f : graph.factors) {
        if (!(f.stats.factor_var > 0.0)) throw EstimationError("factor variance must be positive");
        // Residual theta_j - alpha theta_i - delta with weight 1 / factor_var.
        const double w = 1.0 / f.stats.factor_var;
        const std::size_t vars[2] = {f.var_i, f.var_j};
        const double coef[2] = {-f.stats.alpha_hat, 1.0};
        double known = -f.stats.delta_hat;  // anchored contributions moved to the constant
        for (int s = 0; s < 2; ++s) {
            if (unknown_index[vars[s]] < 0) known += coef[s] * graph.variables[vars[s]].prior.mean;
        }
        for (int s = 0; s < 2; ++s) {
            const int us = unknown_index[vars[s]];
            if (us < 0) continue;
            potential(us) -= w * coef[s] * known;
            for (int t = 0; t < 2; ++t) {
                const int ut = unknown_index[vars[t]];
                if (ut >= 0) precision(us, ut) += w * coef[s] * coef[t];
            }
        }
    }

    ExactMarginals out;
    out.mean.assign(n, 0.0);
    out.variance.assign(n, 0.0);
    if (unknowns > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(precision);
        if (llt.info() != Eigen::Success) {
            throw EstimationError("joint precision is singular: some variable is not tied to an anchor");
        }
        const Eigen::VectorXd mu = llt.solve(potential);
        const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(unknowns, unknowns));
        // LLT accepts tiny positive pivots; reject numerically singular systems too.
        const double scale = precision.diagonal().cwiseAbs().maxCoeff();
        if (!cov.allFinite() || cov.diagonal().maxCoeff() * scale > 1e14) {
            throw EstimationError("joint precision is numerically singular");
        }
        for (std::size_t v = 0; v < n; ++v) {
            const int u = unknown_index[v];
            if (u >= 0) {
                out.mean[v] = mu(u);
                out.variance[v] = cov(u, u);
            }
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (unknown_index[v] < 0) out.mean[v] = graph.variables[v].prior.mean;
    }
    return out;
}

namespace {

struct Axis {
    double lo = 0.0;
    double step = 0.0;
    int points = 0;

    double at(int k) const { return lo + step * k; }
    double hi() const { return at(points - 1); }
};

Axis make_axis(double lo, double hi, int points) {
    return {lo, (hi - lo) / (points - 1), points};
}

double log_gauss(double x, const GaussianMsg& g) {
    const double d = x - g.mean;
    return -0.5 * g.precision * d * d;
}

}  // namespace

PosteriorMoments grid_pair_posterior(std::span<const double> round_stats, const GaussianMsg& prior_i,
                                     const GaussianMsg& prior_j, double alpha, double sigma2,
                                     const GridOptions& options) {
    if (round_stats.empty()) throw EstimationError("grid_pair_posterior needs at least one round");
    if (!(alpha > 0.0) || !(sigma2 > 0.0)) throw EstimationError("alpha and sigma2 must be positive");
    if (options.points < 3 || !(options.half_width_std > 0.0)) throw ConfigError("invalid grid options");
    if (!prior_i.is_informative() && !prior_j.is_informative()) {
        throw EstimationError("grid_pair_posterior needs a proper prior on at least one offset");
    }
    if (prior_i.is_anchored()) return {prior_i.mean, 0.0};

    const double k = static_cast<double>(round_stats.size());
    double mean_c = 0.0;
    for (double c : round_stats) mean_c += c;
    mean_c /= k;
    double spread = 0.0;
    for (double c : round_stats) spread += (c - mean_c) * (c - mean_c);
    const double inv_two_var = 1.0 / (2.0 * alpha * alpha * sigma2);
    // sum_k (C^k + 2u)^2 = spread + K (mean_c + 2u)^2, u = theta_j - alpha theta_i
    auto log_likelihood = [&](double theta_i, double theta_j) {
        const double r = mean_c + 2.0 * (theta_j - alpha * theta_i);
        return -(spread + k * r * r) * inv_two_var;
    };

    const double width = options.half_width_std;
    const double lik_std = std::sqrt(alpha * alpha * sigma2 / (4.0 * k));  // spread of u
    const double implied_shift = -0.5 * mean_c;                             // likelihood peak of u

    // theta_i axis covers the prior and the value implied through theta_j.
    double lo_i = std::numeric_limits<double>::infinity();
    double hi_i = -lo_i;
    double scale_i = 0.0;
    if (prior_i.is_informative()) {
        lo_i = std::min(lo_i, prior_i.mean);
        hi_i = std::max(hi_i, prior_i.mean);
        scale_i = std::max(scale_i, std::sqrt(prior_i.variance()));
    }
    if (prior_j.is_informative()) {
        const double implied = (prior_j.mean - implied_shift) / alpha;
        lo_i = std::min(lo_i, implied);
        hi_i = std::max(hi_i, implied);
        scale_i = std::max(scale_i, std::sqrt(prior_j.variance() + lik_std * lik_std) / alpha);
    }
    const Axis axis_i = make_axis(lo_i - width * scale_i, hi_i + width * scale_i, options.points);

    std::vector<double> row_log_mass(static_cast<std::size_t>(axis_i.points));
    double boundary_log = -std::numeric_limits<double>::infinity();
    double density_peak = -std::numeric_limits<double>::infinity();

    if (prior_j.is_anchored()) {
        for (int a = 0; a < axis_i.points; ++a) {
            const double ti = axis_i.at(a);
            double lp = log_likelihood(ti, prior_j.mean);
            if (prior_i.is_informative()) lp += log_gauss(ti, prior_i);
            row_log_mass[static_cast<std::size_t>(a)] = lp;
        }
    } else if (!prior_j.is_informative()) {
        // The likelihood integrates to a constant over theta_j.
        for (int a = 0; a < axis_i.points; ++a) {
            row_log_mass[static_cast<std::size_t>(a)] = log_gauss(axis_i.at(a), prior_i);
        }
    } else {
        const double sj = std::sqrt(prior_j.variance());
        const double lo_j = std::min(prior_j.mean, alpha * axis_i.lo + implied_shift) - width * std::max(sj, lik_std);
        const double hi_j = std::max(prior_j.mean, alpha * axis_i.hi() + implied_shift) + width * std::max(sj, lik_std);
        const Axis axis_j = make_axis(lo_j, hi_j, options.points);
        std::vector<double> row(static_cast<std::size_t>(axis_j.points));
        for (int a = 0; a < axis_i.points; ++a) {
            const double ti = axis_i.at(a);
            const double base = prior_i.is_informative() ? log_gauss(ti, prior_i) : 0.0;
            double row_max = -std::numeric_limits<double>::infinity();
            for (int b = 0; b < axis_j.points; ++b) {
                const double tj = axis_j.at(b);
                const double lp = base + log_likelihood(ti, tj) + log_gauss(tj, prior_j);
                row[static_cast<std::size_t>(b)] = lp;
                row_max = std::max(row_max, lp);
            }
            boundary_log = std::max({boundary_log, row.front(), row.back()});
            density_peak = std::max(density_peak, row_max);
            double sum = 0.0;
            for (int b = 0; b < axis_j.points; ++b) {
                const double w = (b == 0 || b == axis_j.points - 1) ? 0.5 : 1.0;
                sum += w * std::exp(row[static_cast<std::size_t>(b)] - row_max);
            }
            row_log_mass[static_cast<std::size_t>(a)] = row_max + std::log(sum * axis_j.step);
        }
    }

    const double peak = *std::max_element(row_log_mass.begin(), row_log_mass.end());
    double mass = 0.0;
    double first = 0.0;
    for (int a = 0; a < axis_i.points; ++a) {
        const double w = (a == 0 || a == axis_i.points - 1) ? 0.5 : 1.0;
        const double p = w * std::exp(row_log_mass[static_cast<std::size_t>(a)] - peak);
        mass += p;
        first += p * axis_i.at(a);
    }
    const double mean = first / mass;
    double second = 0.0;
    for (int a = 0; a < axis_i.points; ++a) {
        const double w = (a == 0 || a == axis_i.points - 1) ? 0.5 : 1.0;
        const double d = axis_i.at(a) - mean;
        second += w * std::exp(row_log_mass[static_cast<std::size_t>(a)] - peak) * d * d;
    }
    const double variance = second / mass;

    const double sd = std::sqrt(variance);
    if (mean - 6.0 * sd < axis_i.lo || mean + 6.0 * sd > axis_i.hi()) {
        throw EstimationError("grid too narrow for the posterior of theta_i");
    }
    // Joint density on the theta_j boundary must be negligible (below the 6-sigma level).
    if (boundary_log - density_peak > -17.0) throw EstimationError("grid too narrow for theta_j");
    return {mean, variance};
}

}  // namespace syncnet
