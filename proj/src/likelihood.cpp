#include "duprate/likelihood.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace duprate::likelihood {

namespace {

constexpr Eigen::Index kBlockRows = 1024;

std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> n = [] {
        if (const char* env = std::getenv("DUPRATE_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<unsigned>(v);
        }
        return 1u;
    }();
    return n;
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

Evaluation zero_evaluation(Eigen::Index dim, bool hessian) {
    Evaluation e;
    e.gradient = Eigen::VectorXd::Zero(dim);
    if (hessian) e.hessian = Eigen::MatrixXd::Zero(dim, dim);
    return e;
}

void accumulate(Evaluation& into, const Evaluation& from) {
    into.value += from.value;
    into.gradient += from.gradient;
    if (into.hessian.size() > 0) into.hessian += from.hessian;
}

// Combines block results with a fixed binary tree so the sum never depends on
// how blocks were scheduled.
Evaluation tree_reduce(std::vector<Evaluation>& parts, std::size_t lo, std::size_t hi) {
    if (hi - lo == 1) return std::move(parts[lo]);
    const std::size_t mid = lo + (hi - lo) / 2;
    Evaluation left = tree_reduce(parts, lo, mid);
    accumulate(left, tree_reduce(parts, mid, hi));
    return left;
}

template <typename BlockFn>
Evaluation reduce_blocks(const CountData& data, Eigen::Index dim, bool hessian, BlockFn fn) {
    const Eigen::Index n = static_cast<Eigen::Index>(data.size());
    const std::size_t nblocks = static_cast<std::size_t>((n + kBlockRows - 1) / kBlockRows);
    if (nblocks == 0) return zero_evaluation(dim, hessian);
    std::vector<Evaluation> parts(nblocks);
    auto run = [&](std::size_t b) {
        const Eigen::Index begin = static_cast<Eigen::Index>(b) * kBlockRows;
        parts[b] = fn(begin, std::min(kBlockRows, n - begin));
    };
    const unsigned threads = std::min<unsigned>(evaluation_threads(), static_cast<unsigned>(nblocks));
    if (threads <= 1) {
        for (std::size_t b = 0; b < nblocks; ++b) run(b);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t b; (b = next.fetch_add(1)) < nblocks;) run(b);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    return tree_reduce(parts, 0, nblocks);
}

void check_dims(const CountData& data, Eigen::Index p) {
    if (data.X.cols() != p)
        throw std::invalid_argument("parameter length " + std::to_string(p) +
                                    " does not match design width " +
                                    std::to_string(data.X.cols()));
}

[[noreturn]] void non_finite(Eigen::Index row, const char* what) {
    throw NumericError(std::string("non-finite ") + what + " at record " + std::to_string(row));
}

}  // namespace

unsigned evaluation_threads() { return thread_setting().load(); }

void set_evaluation_threads(unsigned n) { thread_setting().store(n == 0 ? 1u : n); }

CountData CountData::from_records(std::span<const intervals::ObservationRecord> records,
                                  Eigen::MatrixXd X) {
    if (static_cast<std::size_t>(X.rows()) != records.size())
        throw std::invalid_argument("design rows do not match record count");
    CountData d;
    d.X = std::move(X);
    const auto n = static_cast<Eigen::Index>(records.size());
    d.counts.resize(n);
    d.log_exposure.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& r = records[static_cast<std::size_t>(i)];
        const double tau = r.exposure();
        if (!(tau > 0.0))
            throw std::invalid_argument("record " + r.incident_id + " has non-positive exposure");
        d.counts(i) = static_cast<double>(r.m_tilde);
        d.log_exposure(i) = std::log(tau);
    }
    return d;
}

Evaluation poisson_loglik(const Eigen::VectorXd& beta, const CountData& data, bool hessian) {
    const Eigen::Index p = beta.size();
    check_dims(data, p);
    return reduce_blocks(data, p, hessian, [&](Eigen::Index begin, Eigen::Index len) {
        const auto Xb = data.X.middleRows(begin, len);
        const auto y = data.counts.segment(begin, len);
        const Eigen::VectorXd eta = Xb * beta + data.log_exposure.segment(begin, len);
        Eigen::VectorXd mu(len);
        double value = 0.0;
        for (Eigen::Index i = 0; i < len; ++i) {
            mu(i) = std::exp(eta(i));
            if (!std::isfinite(mu(i))) non_finite(begin + i, "Poisson mean");
            value += y(i) * eta(i) - mu(i) - std::lgamma(y(i) + 1.0);
        }
        Evaluation e;
        e.value = value;
        e.gradient = Xb.transpose() * (y - mu);
        if (hessian) e.hessian = -(Xb.transpose() * (mu.asDiagonal() * Xb));
        return e;
    });
}

Evaluation zip_loglik(const Eigen::VectorXd& params, const CountData& data, bool hessian) {
    const Eigen::Index dim = params.size();
    if (dim < 1) throw std::invalid_argument("zip_loglik needs the zero-inflation parameter");
    const Eigen::Index p = dim - 1;
    check_dims(data, p);
    const Eigen::VectorXd beta = params.head(p);
    const double psi = params(p);
    const double gamma = 1.0 / (1.0 + std::exp(-psi));
    const double log_gamma = -softplus(-psi);
    const double log_1m_gamma = -softplus(psi);

    return reduce_blocks(data, dim, hessian, [&](Eigen::Index begin, Eigen::Index len) {
        const auto Xb = data.X.middleRows(begin, len);
        const auto y = data.counts.segment(begin, len);
        const Eigen::VectorXd eta = Xb * beta + data.log_exposure.segment(begin, len);
        Eigen::VectorXd r(len), hbb(len), hbp(len);
        double value = 0.0, g_psi = 0.0, h_pp = 0.0;
        for (Eigen::Index i = 0; i < len; ++i) {
            const double mu = std::exp(eta(i));
            if (!std::isfinite(mu)) non_finite(begin + i, "Poisson mean");
            if (y(i) > 0.0) {
                value += log_1m_gamma + y(i) * eta(i) - mu - std::lgamma(y(i) + 1.0);
                r(i) = y(i) - mu;
                hbb(i) = -mu;
                hbp(i) = 0.0;
                g_psi += -gamma;
                h_pp += -gamma * (1.0 - gamma);
            } else {
                const double a = log_gamma, b = log_1m_gamma - mu;
                const double m = std::max(a, b);
                const double lp = m + std::log(std::exp(a - m) + std::exp(b - m));
                const double w = std::exp(b - lp);  // posterior weight of the Poisson branch
                const double gp = (1.0 - w) * (1.0 - gamma) - w * gamma;
                value += lp;
                r(i) = -w * mu;
                hbb(i) = w * mu * (mu * (1.0 - w) - 1.0);
                hbp(i) = w * mu * (1.0 - w);
                g_psi += gp;
                h_pp += (1.0 - w) * ((1.0 - gamma) * (1.0 - gamma) - gamma * (1.0 - gamma)) +
                        w * (gamma * gamma - gamma * (1.0 - gamma)) - gp * gp;
            }
        }
        if (!std::isfinite(value)) non_finite(begin, "log-likelihood in block starting");
        Evaluation e;
        e.value = value;
        e.gradient.resize(dim);
        e.gradient.head(p) = Xb.transpose() * r;
        e.gradient(p) = g_psi;
        if (hessian) {
            e.hessian.resize(dim, dim);
            e.hessian.topLeftCorner(p, p) = Xb.transpose() * (hbb.asDiagonal() * Xb);
            const Eigen::VectorXd cross = Xb.transpose() * hbp;
            e.hessian.block(0, p, p, 1) = cross;
            e.hessian.block(p, 0, 1, p) = cross.transpose();
            e.hessian(p, p) = h_pp;
        }
        return e;
    });
}

}  // namespace duprate::likelihood
