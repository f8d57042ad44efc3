#pragma once

#include <span>
#include <stdexcept>

#include <Eigen/Dense>

#include "duprate/intervals.hpp"

namespace duprate::likelihood {

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Per-record design rows, observed counts and log exposures.
struct CountData {
    Eigen::MatrixXd X;
    Eigen::VectorXd counts;
    Eigen::VectorXd log_exposure;

    std::size_t size() const { return static_cast<std::size_t>(counts.size()); }
    static CountData from_records(std::span<const intervals::ObservationRecord> records,
                                  Eigen::MatrixXd X);
};

/// Value, gradient and (optionally) Hessian of a scalar objective.
struct Evaluation {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;  // empty when not requested
};

/// Poisson log-likelihood with log mean x*beta + log exposure, including the
/// -log(m!) term.
Evaluation poisson_loglik(const Eigen::VectorXd& beta, const CountData& data, bool hessian = true);

/// Zero-inflated Poisson with mixing weight gamma = sigmoid(psi). The
/// parameter vector is [beta..., psi].
Evaluation zip_loglik(const Eigen::VectorXd& params, const CountData& data, bool hessian = true);

/// Worker threads for likelihood evaluation. Results do not depend on the
/// thread count. Initialised from DUPRATE_THREADS, default 1.
unsigned evaluation_threads();
void set_evaluation_threads(unsigned n);

}  // namespace duprate::likelihood
