#include "duprate/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace duprate::stats {

double pairwise_sum(std::span<const double> xs) {
    if (xs.size() <= 8) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const auto half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double mean(std::span<const double> xs) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

double variance(std::span<const double> xs) {
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

double sd(std::span<const double> xs) { return std::sqrt(variance(xs)); }

double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    if (std::isinf(xs[lo]) || std::isinf(xs[hi])) return h - static_cast<double>(lo) > 0 ? xs[hi] : xs[lo];
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("pearson: length mismatch");
    if (xs.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mx = mean(xs), my = mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> out;
    for (const auto& c : chains) {
        const auto half = c.size() / 2;
        out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
        out.emplace_back(c.end() - static_cast<std::ptrdiff_t>(half), c.end());
    }
    return out;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
    const auto parts = split_halves(chains);
    if (parts.empty() || parts.front().size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto m = static_cast<double>(parts.size());
    const auto n = static_cast<double>(parts.front().size());
    std::vector<double> means, vars;
    for (const auto& p : parts) {
        means.push_back(mean(p));
        vars.push_back(variance(p));
    }
    const double W = mean(vars);
    const double B = n * variance(means);
    if (!(W > 0.0)) return B > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    (void)m;
    const double var_plus = (n - 1.0) / n * W + B / n;
    return std::sqrt(var_plus / W);
}

double effective_sample_size(const std::vector<std::vector<double>>& chains) {
    if (chains.empty() || chains.front().size() < 4) return 0.0;
    const std::size_t m = chains.size();
    const std::size_t n = chains.front().size();
    std::vector<double> chain_means, chain_vars;
    for (const auto& c : chains) {
        chain_means.push_back(mean(c));
        chain_vars.push_back(variance(c));
    }
    const double W = mean(chain_vars);
    const double B_over_n = m > 1 ? variance(chain_means) : 0.0;
    const double var_plus = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * W + B_over_n;
    if (!(var_plus > 0.0)) return static_cast<double>(m * n);

    auto autocov = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            double s = 0.0;
            for (std::size_t t = 0; t + lag < n; ++t)
                s += (chains[c][t] - chain_means[c]) * (chains[c][t + lag] - chain_means[c]);
            acc += s / static_cast<double>(n);
        }
        return acc / static_cast<double>(m);
    };
    auto rho = [&](std::size_t lag) { return 1.0 - (W - autocov(lag)) / var_plus; };

    double tau = -1.0;
    double prev_pair = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
        double pair = rho(2 * k) + rho(2 * k + 1);
        if (pair < 0.0) break;
        pair = std::min(pair, prev_pair);  // initial monotone sequence
        tau += 2.0 * pair;
        prev_pair = pair;
    }
    tau = std::max(tau, 1.0 / std::log10(static_cast<double>(m * n)));
    return static_cast<double>(m * n) / tau;
}

}  // namespace duprate::stats
