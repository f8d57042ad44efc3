#include <algorithm>
#include <cmath>
#include <limits>

#include "duprate/estimators.hpp"

namespace duprate::estimators {

namespace {

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double safe_value(const LogPosterior& post, const Eigen::VectorXd& x) {
    try {
        const double v = post.value(x);
        return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
    } catch (const likelihood::NumericError&) {
        return -std::numeric_limits<double>::infinity();
    }
}

void fill_point_estimates(const LogPosterior& post, FitResult& fit) {
    fit.layout = post.layout();
    fit.coefficients.clear();
    const Eigen::VectorXd full = full_coefficients(post.layout(), fit.free_params);
    for (std::size_t k = 0; k < post.layout().full_size(); ++k)
        fit.coefficients.push_back({post.layout().full_names[k], full(static_cast<Eigen::Index>(k))});
    if (post.zero_inflated()) {
        fit.zero_inflation = full(full.size() - 1);
        fit.coefficients.push_back({kZeroInflationName, *fit.zero_inflation});
    } else {
        fit.zero_inflation.reset();
    }
    fit.reference_levels.clear();
    for (const auto& b : post.layout().blocks)
        if (b.kind == design::Block::Kind::Factor && b.encoding == design::Encoding::DropOne)
            fit.reference_levels[b.name] = b.reference;
}

// Newton direction from -H; shifts the diagonal until the system is positive
// definite so the step is always an ascent direction.
Eigen::VectorXd newton_direction(const likelihood::Evaluation& e, bool& shifted) {
    const Eigen::MatrixXd N = -e.hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(N);
    shifted = false;
    if (llt.info() == Eigen::Success) return llt.solve(e.gradient);
    shifted = true;
    double tau = std::max(1e-8, 1e-3 * N.diagonal().cwiseAbs().maxCoeff());
    const auto n = N.rows();
    for (int attempt = 0; attempt < 60; ++attempt, tau *= 10.0) {
        llt.compute(N + tau * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt.solve(e.gradient);
    }
    return e.gradient;
}

}  // namespace

FitResult fit_map(const LogPosterior& post, const OptimizerOptions& options) {
    FitResult fit;
    Eigen::VectorXd x = options.initial ? *options.initial : post.initial_point();
    if (static_cast<std::size_t>(x.size()) != post.dimension())
        throw std::invalid_argument("initial point has the wrong length");

    auto finish = [&](const likelihood::Evaluation& e) {
        fit.free_params = x;
        fit.log_posterior = e.value;
        fit.gradient_norm = inf_norm(e.gradient);
        fill_point_estimates(post, fit);
    };

    likelihood::Evaluation e = post.evaluate(x, true);
    fit.history.push_back(e.value);
    for (fit.iterations = 0;; ++fit.iterations) {
        if (inf_norm(e.gradient) < options.gradient_tolerance) {
            fit.converged = true;
            finish(e);
            return fit;
        }
        if (fit.iterations >= options.max_iterations) {
            finish(e);
            throw FitError("optimizer hit " + std::to_string(options.max_iterations) +
                               " iterations with gradient norm " + std::to_string(fit.gradient_norm),
                           fit);
        }
        bool shifted = false;
        const Eigen::VectorXd d = newton_direction(e, shifted);
        if (shifted) ++fit.regularized_steps;
        const double slope = e.gradient.dot(d);
        // Once the predicted gain is within the rounding noise of a summed
        // objective, value comparisons can no longer rank points. Take the
        // Newton step if it shrinks the gradient and stop.
        const double noise = 1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(e.value));
        if (0.5 * slope <= noise) {
            const Eigen::VectorXd trial = x + d;
            if (safe_value(post, trial) >= e.value - noise) {
                auto next = post.evaluate(trial, true);
                if (inf_norm(next.gradient) <= inf_norm(e.gradient)) {
                    x = trial;
                    e = std::move(next);
                    fit.history.push_back(e.value);
                }
            }
            fit.converged = true;
            finish(e);
            return fit;
        }
        double step = 1.0;
        Eigen::VectorXd trial;
        bool accepted = false;
        while (step >= options.min_step) {
            trial = x + step * d;
            const double v = safe_value(post, trial);
            if (v >= e.value + options.armijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            finish(e);
            throw FitError("line search failed at iteration " + std::to_string(fit.iterations) +
                               " with gradient norm " + std::to_string(fit.gradient_norm),
                           fit);
        }
        x = trial;
        e = post.evaluate(x, true);
        fit.history.push_back(e.value);
    }
}

void laplace_intervals(const LogPosterior& post, FitResult& fit) {
    const auto e = post.evaluate(fit.free_params, true);
    Eigen::LLT<Eigen::MatrixXd> llt(-e.hessian);
    if (llt.info() != Eigen::Success)
        throw FitError("negative Hessian is not positive definite at the mode; use the Metropolis sampler", fit);
    const auto n = e.hessian.rows();
    fit.covariance = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const auto p = static_cast<Eigen::Index>(post.layout().free_size());
    const Eigen::MatrixXd A = post.layout().reconstruction();
    const Eigen::MatrixXd full_cov = A * fit.covariance.topLeftCorner(p, p) * A.transpose();
    constexpr double z = 1.959963984540054;
    for (Eigen::Index k = 0; k < A.rows(); ++k) {
        auto& c = fit.coefficients[static_cast<std::size_t>(k)];
        c.sd = std::sqrt(std::max(full_cov(k, k), 0.0));
        c.lower = c.estimate - z * c.sd;
        c.upper = c.estimate + z * c.sd;
    }
    if (post.zero_inflated()) {
        auto& c = fit.coefficients.back();
        const double psi = fit.free_params(p);
        const double sd_psi = std::sqrt(fit.covariance(p, p));
        const auto logistic = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        c.sd = c.estimate * (1.0 - c.estimate) * sd_psi;
        c.lower = logistic(psi - z * sd_psi);
        c.upper = logistic(psi + z * sd_psi);
    }
}

FitResult fit_model(const ModelSpec& spec, std::span<const intervals::ObservationRecord> records,
                    const OptimizerOptions& options) {
    const auto post = LogPosterior::build(spec, records);
    FitResult fit = fit_map(post, options);
    laplace_intervals(post, fit);
    return fit;
}

}  // namespace duprate::estimators
