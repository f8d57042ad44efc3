#include "duprate/estimators.hpp"

#include <cmath>
#include <unordered_map>

namespace duprate::estimators {

double naive_rate(std::uint64_t observed_reports, double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("naive_rate: horizon must be > 0");
    return static_cast<double>(observed_reports) / horizon;
}

RateEstimate mle_rate(std::span<const intervals::ObservationRecord> records) {
    RateEstimate est;
    for (const auto& r : records) {
        est.events += static_cast<double>(r.m_tilde);
        est.exposure += r.exposure();
    }
    if (!(est.exposure > 0.0))
        throw std::invalid_argument("mle_rate: total exposure is zero");
    est.rate = est.events / est.exposure;
    est.standard_error = std::sqrt(est.events) / est.exposure;
    return est;
}

namespace {

double block_prior_sd(const design::Block& b, const ModelSpec& spec) {
    const auto& pr = spec.priors;
    if (auto it = pr.overrides.find(b.name); it != pr.overrides.end()) return it->second;
    switch (b.kind) {
        case design::Block::Kind::Intercept:
            return pr.intercept;
        case design::Block::Kind::Covariate:
            return pr.covariate;
        case design::Block::Kind::Factor:
            for (const auto& p : spec.penalties)
                if (p.factor == b.name) return pr.penalized_factor;
            if (b.encoding == design::Encoding::SumZero) {
                const double K = static_cast<double>(b.full_size);
                return 2.0 / std::sqrt(1.0 - 1.0 / K);
            }
            return pr.covariate;
    }
    return pr.covariate;
}

}  // namespace

LogPosterior::LogPosterior(design::Design design, likelihood::CountData data, const ModelSpec& spec)
    : layout_(std::move(design.layout)), data_(std::move(data)), zero_inflation_(spec.zero_inflation) {
    const auto p = static_cast<Eigen::Index>(layout_.free_size());
    if (data_.X.cols() != p) throw std::invalid_argument("design width does not match layout");
    Q_ = Eigen::MatrixXd::Zero(p, p);
    for (const auto& b : layout_.blocks) {
        const double sd = block_prior_sd(b, spec);
        if (!(sd > 0.0)) throw std::invalid_argument("prior sd for '" + b.name + "' must be > 0");
        for (std::size_t k = 0; k < b.full_size; ++k) prior_sds_.push_back(sd);
    }
    if (spec.flat_priors) return;

    for (const auto& b : layout_.blocks) {
        const Eigen::MatrixXd A = layout_.reconstruction(b);
        const double sd = prior_sds_[b.full_offset];
        Q_.block(b.free_offset, b.free_offset, b.free_size, b.free_size) += A.transpose() * A / (sd * sd);
    }
    for (const auto& pen : spec.penalties) {
        const design::Block* b = layout_.find(pen.factor);
        if (!b || b->kind != design::Block::Kind::Factor)
            throw graph::GraphError("penalty targets unknown factor '" + pen.factor + "'");
        // Level index for every graph node; a node without a level is an error.
        std::unordered_map<std::string, std::size_t> level_pos;
        const std::size_t first = b->encoding == design::Encoding::DropOne ? 1 : 0;
        for (std::size_t k = first; k < b->levels.size(); ++k) level_pos.emplace(b->levels[k], k - first);
        const Eigen::MatrixXd Lg = pen.graph.laplacian();
        const auto n_nodes = static_cast<Eigen::Index>(pen.graph.labels().size());
        Eigen::MatrixXd S = Eigen::MatrixXd::Zero(n_nodes, static_cast<Eigen::Index>(b->full_size));
        for (Eigen::Index i = 0; i < n_nodes; ++i) {
            const auto& label = pen.graph.labels()[static_cast<std::size_t>(i)];
            if (first == 1 && label == b->reference) continue;  // fixed at zero
            auto it = level_pos.find(label);
            if (it == level_pos.end())
                throw graph::GraphError("graph node '" + label + "' is not a level of factor '" +
                                        pen.factor + "'");
            S(i, static_cast<Eigen::Index>(it->second)) = 1.0;
        }
        const Eigen::MatrixXd M = S * layout_.reconstruction(*b);
        Q_.block(b->free_offset, b->free_offset, b->free_size, b->free_size) +=
            2.0 * pen.weight * M.transpose() * Lg * M;
    }
}

LogPosterior LogPosterior::build(const ModelSpec& spec,
                                 std::span<const intervals::ObservationRecord> records) {
    auto d = design::assemble_design(records, spec.design);
    auto data = likelihood::CountData::from_records(records, d.X);
    return LogPosterior(std::move(d), std::move(data), spec);
}

std::size_t LogPosterior::dimension() const {
    return layout_.free_size() + (zero_inflation_ ? 1 : 0);
}

likelihood::Evaluation LogPosterior::evaluate(const Eigen::VectorXd& params, bool hessian) const {
    if (static_cast<std::size_t>(params.size()) != dimension())
        throw std::invalid_argument("parameter length " + std::to_string(params.size()) +
                                    " != posterior dimension " + std::to_string(dimension()));
    auto e = zero_inflation_ ? likelihood::zip_loglik(params, data_, hessian)
                             : likelihood::poisson_loglik(params, data_, hessian);
    const auto p = Q_.rows();
    const auto beta = params.head(p);
    const Eigen::VectorXd Qb = Q_ * beta;
    e.value -= 0.5 * beta.dot(Qb);
    e.gradient.head(p) -= Qb;
    if (hessian) e.hessian.topLeftCorner(p, p) -= Q_;
    return e;
}

Eigen::VectorXd LogPosterior::initial_point() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dimension()));
    const design::Block* icpt = layout_.find("Intercept");
    if (icpt && icpt->kind == design::Block::Kind::Intercept && data_.size() > 0) {
        const double events = data_.counts.sum();
        const double exposure = data_.log_exposure.array().exp().sum();
        x(static_cast<Eigen::Index>(icpt->free_offset)) = std::log(std::max(events, 0.5) / exposure);
    }
    return x;
}

const Coefficient* FitResult::find(const std::string& name) const {
    for (const auto& c : coefficients)
        if (c.name == name) return &c;
    return nullptr;
}

double FitResult::estimate(const std::string& name) const {
    const Coefficient* c = find(name);
    if (!c) throw std::out_of_range("no coefficient named '" + name + "'");
    return c->estimate;
}

Eigen::VectorXd full_coefficients(const design::Layout& layout, const Eigen::VectorXd& free_params) {
    const auto p = static_cast<Eigen::Index>(layout.free_size());
    const bool zi = free_params.size() == p + 1;
    Eigen::VectorXd out(static_cast<Eigen::Index>(layout.full_size()) + (zi ? 1 : 0));
    out.head(static_cast<Eigen::Index>(layout.full_size())) = layout.reconstruction() * free_params.head(p);
    if (zi) out(out.size() - 1) = 1.0 / (1.0 + std::exp(-free_params(p)));
    return out;
}

}  // namespace duprate::estimators
