#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "duprate/estimators.hpp"

namespace duprate::metropolis {

struct SamplerOptions {
    int chains = 4;
    int warmup = 500;
    int draws = 500;  // kept per chain
    std::uint64_t seed = 1;
    double target_acceptance = 0.234;
    std::size_t max_dimension = 200;
    double rhat_threshold = 1.05;
    double init_scale = 2.0;  // chain starts drawn from N(center, init_scale^2 * cov)
};

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q975 = 0.0;
    double rhat = 0.0;
    double ess = 0.0;
};

struct SampleResult {
    std::vector<std::string> names;
    Eigen::MatrixXd draws;  // (chains * draws) x outputs, chain-major
    std::vector<ParameterSummary> summary;
    std::vector<double> acceptance;  // post-warm-up rate per chain
    bool converged = false;          // every split-R-hat below the threshold

    const ParameterSummary* find(const std::string& name) const;
};

class SamplerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using LogDensity = std::function<double(const Eigen::VectorXd&)>;
using OutputMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Random-walk Metropolis with proposals N(0, s^2 * proposal_cov); s starts at
/// 2.38 / sqrt(d) and is tuned towards the target acceptance during warm-up.
SampleResult sample(const LogDensity& log_density, const Eigen::VectorXd& center,
                    const Eigen::MatrixXd& proposal_cov, const OutputMap& outputs,
                    std::vector<std::string> output_names, const SamplerOptions& options);

/// Samples the count-model posterior, centred and preconditioned by the
/// Laplace approximation. Outputs are the full coefficients and gamma. A
/// flat prior on gamma is used, so the log-Jacobian of the logit is added.
SampleResult sample_posterior(const estimators::LogPosterior& posterior,
                              const SamplerOptions& options,
                              const estimators::OptimizerOptions& optimizer = {});

}  // namespace duprate::metropolis
