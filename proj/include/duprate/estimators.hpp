#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "duprate/design.hpp"
#include "duprate/graph.hpp"
#include "duprate/intervals.hpp"
#include "duprate/likelihood.hpp"

namespace duprate::estimators {

struct RateEstimate {
    double rate = 0.0;
    double standard_error = 0.0;  // sqrt(events) / exposure
    double events = 0.0;
    double exposure = 0.0;
};

/// Reports per unit time over a window of length `horizon`.
double naive_rate(std::uint64_t observed_reports, double horizon);

/// Pooled maximum-likelihood reporting rate: sum of counts over total exposure.
RateEstimate mle_rate(std::span<const intervals::ObservationRecord> records);

/// Normal prior scales on the full (reported) coefficients.
struct PriorScales {
    double intercept = 5.0;
    double covariate = 1.0;
    double penalized_factor = 1.0;  // factors carrying a graph penalty
    /// Per-factor or per-covariate override. Sum-to-zero factors without an
    /// override get 2 / sqrt(1 - 1/K); drop-one factors get `covariate`.
    std::map<std::string, double> overrides;
};

struct ModelSpec {
    design::DesignSpec design;
    bool zero_inflation = false;
    std::vector<graph::PenaltySpec> penalties;
    PriorScales priors;
    bool flat_priors = false;  // drops priors and penalties; MAP equals MLE
};

/// Log posterior over the free parameters [beta..., psi], psi = logit(gamma)
/// present only for zero-inflated models. Prior normalising constants are
/// omitted.
class LogPosterior {
public:
    LogPosterior(design::Design design, likelihood::CountData data, const ModelSpec& spec);
    static LogPosterior build(const ModelSpec& spec,
                              std::span<const intervals::ObservationRecord> records);

    std::size_t dimension() const;
    bool zero_inflated() const { return zero_inflation_; }
    const design::Layout& layout() const { return layout_; }
    const likelihood::CountData& data() const { return data_; }
    /// Precision of the Gaussian prior plus graph penalties, free beta coordinates.
    const Eigen::MatrixXd& prior_precision() const { return Q_; }

    likelihood::Evaluation evaluate(const Eigen::VectorXd& params, bool hessian = true) const;
    double value(const Eigen::VectorXd& params) const { return evaluate(params, false).value; }

    /// Pooled-rate intercept, zeros elsewhere, gamma = 0.5.
    Eigen::VectorXd initial_point() const;

    /// Prior sd applied to each full coefficient.
    std::vector<double> prior_sds() const { return prior_sds_; }

private:
    design::Layout layout_;
    likelihood::CountData data_;
    bool zero_inflation_ = false;
    Eigen::MatrixXd Q_;
    std::vector<double> prior_sds_;
};

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double sd = std::numeric_limits<double>::quiet_NaN();
    double lower = std::numeric_limits<double>::quiet_NaN();
    double upper = std::numeric_limits<double>::quiet_NaN();
};

inline constexpr const char* kZeroInflationName = "zero_inflation";

struct FitResult {
    /// Full coefficients in layout order, then "zero_inflation" when fitted.
    std::vector<Coefficient> coefficients;
    std::optional<double> zero_inflation;
    std::map<std::string, std::string> reference_levels;  // drop-one factors
    double log_posterior = 0.0;
    double gradient_norm = 0.0;  // infinity norm
    int iterations = 0;
    int regularized_steps = 0;  // Newton steps that needed a diagonal shift
    bool converged = false;
    std::vector<double> history;  // log posterior after each accepted step
    Eigen::VectorXd free_params;
    Eigen::MatrixXd covariance;  // free-parameter Laplace covariance; empty until computed
    design::Layout layout;

    const Coefficient* find(const std::string& name) const;
    /// Throws std::out_of_range naming the coefficient when absent.
    double estimate(const std::string& name) const;
};

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, FitResult partial)
        : std::runtime_error(what), partial_(std::move(partial)) {}
    const FitResult& partial() const { return partial_; }

private:
    FitResult partial_;
};

struct OptimizerOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;
    double armijo = 1e-4;
    double min_step = 1e-12;
    std::optional<Eigen::VectorXd> initial;
};

/// Damped Newton ascent to the posterior mode. Stops when the gradient norm
/// falls below the tolerance or the Newton decrement drops to the rounding
/// noise of the objective. Throws FitError with the last iterate otherwise.
FitResult fit_map(const LogPosterior& posterior, const OptimizerOptions& options = {});

/// Fills sd and 95% intervals from the inverse negative Hessian at the mode.
/// The zero-inflation interval is formed on the logit scale.
void laplace_intervals(const LogPosterior& posterior, FitResult& fit);

/// Builds the posterior, finds the mode and attaches Laplace intervals.
FitResult fit_model(const ModelSpec& spec, std::span<const intervals::ObservationRecord> records,
                    const OptimizerOptions& options = {});

/// Maps free parameters to full coefficients (and gamma when present).
Eigen::VectorXd full_coefficients(const design::Layout& layout, const Eigen::VectorXd& free_params);

}  // namespace duprate::estimators
