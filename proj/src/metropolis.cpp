#include "duprate/metropolis.hpp"

#include <cmath>
#include <limits>

#include "duprate/rng.hpp"
#include "duprate/stats.hpp"

namespace duprate::metropolis {

namespace {

constexpr std::uint64_t kChainStream = 0x3c;

Eigen::VectorXd normal_vector(SplitMix64& g, Eigen::Index n) {
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = standard_normal(g);
    return z;
}

double safe_log_density(const LogDensity& f, const Eigen::VectorXd& x) {
    try {
        const double v = f(x);
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    } catch (const likelihood::NumericError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

}  // namespace

const ParameterSummary* SampleResult::find(const std::string& name) const {
    for (const auto& s : summary)
        if (s.name == name) return &s;
    return nullptr;
}

SampleResult sample(const LogDensity& log_density, const Eigen::VectorXd& center,
                    const Eigen::MatrixXd& proposal_cov, const OutputMap& outputs,
                    std::vector<std::string> output_names, const SamplerOptions& options) {
    const auto d = center.size();
    if (static_cast<std::size_t>(d) > options.max_dimension)
        throw SamplerError("posterior dimension " + std::to_string(d) + " exceeds the sampler cap of " +
                           std::to_string(options.max_dimension));
    if (options.chains < 1 || options.draws < 2 || options.warmup < 0)
        throw SamplerError("need at least one chain, two draws and non-negative warm-up");
    Eigen::LLT<Eigen::MatrixXd> llt(proposal_cov);
    if (llt.info() != Eigen::Success) throw SamplerError("proposal covariance is not positive definite");
    const Eigen::MatrixXd L = llt.matrixL();

    const auto n_out = static_cast<Eigen::Index>(output_names.size());
    SampleResult res;
    res.names = std::move(output_names);
    res.draws.resize(static_cast<Eigen::Index>(options.chains) * options.draws, n_out);

    for (int c = 0; c < options.chains; ++c) {
        auto g = substream(options.seed, kChainStream, c);
        Eigen::VectorXd x;
        double lp = -std::numeric_limits<double>::infinity();
        for (int attempt = 0; attempt < 100 && !std::isfinite(lp); ++attempt) {
            x = center + options.init_scale * (L * normal_vector(g, d));
            lp = safe_log_density(log_density, x);
        }
        if (!std::isfinite(lp)) {
            x = center;
            lp = safe_log_density(log_density, x);
            if (!std::isfinite(lp)) throw SamplerError("log density is not finite at the centre");
        }
        double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
        int accepted = 0;
        for (int it = 0; it < options.warmup + options.draws; ++it) {
            const Eigen::VectorXd prop = x + std::exp(log_scale) * (L * normal_vector(g, d));
            const double lp_prop = safe_log_density(log_density, prop);
            const double log_alpha = lp_prop - lp;
            const bool accept = std::log(uniform01(g)) < log_alpha;
            if (accept) {
                x = prop;
                lp = lp_prop;
            }
            if (it < options.warmup) {
                // Robbins-Monro step on the log proposal scale.
                const double alpha = std::isfinite(log_alpha) ? std::min(1.0, std::exp(log_alpha)) : 0.0;
                log_scale += (alpha - options.target_acceptance) / std::pow(it + 1.0, 0.6);
            } else {
                if (accept) ++accepted;
                res.draws.row(static_cast<Eigen::Index>(c) * options.draws + (it - options.warmup)) =
                    outputs(x).transpose();
            }
        }
        res.acceptance.push_back(static_cast<double>(accepted) / options.draws);
    }

    res.converged = true;
    for (Eigen::Index j = 0; j < n_out; ++j) {
        std::vector<std::vector<double>> chains(static_cast<std::size_t>(options.chains));
        std::vector<double> pooled;
        for (int c = 0; c < options.chains; ++c)
            for (int t = 0; t < options.draws; ++t) {
                const double v = res.draws(static_cast<Eigen::Index>(c) * options.draws + t, j);
                chains[static_cast<std::size_t>(c)].push_back(v);
                pooled.push_back(v);
            }
        ParameterSummary s;
        s.name = res.names[static_cast<std::size_t>(j)];
        s.mean = stats::mean(pooled);
        s.sd = stats::sd(pooled);
        s.q025 = stats::quantile(pooled, 0.025);
        s.q975 = stats::quantile(pooled, 0.975);
        s.rhat = stats::split_rhat(chains);
        s.ess = stats::effective_sample_size(chains);
        if (!(s.rhat <= options.rhat_threshold)) res.converged = false;
        res.summary.push_back(s);
    }
    return res;
}

SampleResult sample_posterior(const estimators::LogPosterior& posterior, const SamplerOptions& options,
                              const estimators::OptimizerOptions& optimizer) {
    if (posterior.dimension() > options.max_dimension)
        throw SamplerError("posterior dimension " + std::to_string(posterior.dimension()) +
                           " exceeds the sampler cap of " + std::to_string(options.max_dimension));
    auto fit = estimators::fit_map(posterior, optimizer);
    estimators::laplace_intervals(posterior, fit);
    const auto p = static_cast<Eigen::Index>(posterior.layout().free_size());
    const bool zi = posterior.zero_inflated();

    LogDensity density = [&posterior, p, zi](const Eigen::VectorXd& x) {
        double v = posterior.value(x);
        if (zi) {
            const double psi = x(p);
            // log gamma + log(1 - gamma) for the logit change of variables
            v += -std::abs(psi) - 2.0 * std::log1p(std::exp(-std::abs(psi)));
        }
        return v;
    };
    const design::Layout& layout = posterior.layout();
    OutputMap outputs = [&layout](const Eigen::VectorXd& x) {
        return estimators::full_coefficients(layout, x);
    };
    std::vector<std::string> names = layout.full_names;
    if (zi) names.emplace_back(estimators::kZeroInflationName);
    return sample(density, fit.free_params, fit.covariance, outputs, std::move(names), options);
}

}  // namespace duprate::metropolis
