#include "duprate/design.hpp"

#include <algorithm>
#include <set>

namespace duprate::design {

std::string level_name(const std::string& factor, const std::string& level) {
    return factor + "[" + level + "]";
}

const Block* Layout::find(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return &b;
    return nullptr;
}

Eigen::MatrixXd Layout::reconstruction(const Block& b) const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(b.full_size),
                                              static_cast<Eigen::Index>(b.free_size));
    if (b.kind == Block::Kind::Factor && b.encoding == Encoding::SumZero) {
        for (std::size_t k = 0; k < b.free_size; ++k) A(k, k) = 1.0;
        A.row(static_cast<Eigen::Index>(b.full_size) - 1).setConstant(-1.0);
    } else {
        A.setIdentity();
    }
    return A;
}

Eigen::MatrixXd Layout::reconstruction() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(full_size()),
                                              static_cast<Eigen::Index>(free_size()));
    for (const auto& b : blocks)
        A.block(b.full_offset, b.free_offset, b.full_size, b.free_size) = reconstruction(b);
    return A;
}

Design assemble_design(std::span<const intervals::ObservationRecord> records,
                       const DesignSpec& spec) {
    Design d;
    Layout& L = d.layout;
    if (spec.intercept) {
        Block b;
        b.kind = Block::Kind::Intercept;
        b.name = "Intercept";
        b.free_offset = b.full_offset = 0;
        b.free_size = b.full_size = 1;
        L.blocks.push_back(b);
        L.free_names.push_back("Intercept");
        L.full_names.push_back("Intercept");
    }
    for (const auto& f : spec.factors) {
        std::vector<std::string> levels = f.levels;
        if (levels.empty()) {
            std::set<std::string> seen;
            for (const auto& r : records) {
                auto it = r.labels.find(f.name);
                if (it == r.labels.end())
                    throw DesignError("record " + r.incident_id + " lacks factor '" + f.name + "'");
                seen.insert(it->second);
            }
            levels.assign(seen.begin(), seen.end());
        }
        if (levels.size() < 2)
            throw DesignError("factor '" + f.name + "' needs at least two levels");
        Block b;
        b.kind = Block::Kind::Factor;
        b.name = f.name;
        b.encoding = f.encoding;
        b.free_offset = L.free_size();
        b.full_offset = L.full_size();
        b.free_size = levels.size() - 1;
        if (f.encoding == Encoding::SumZero) {
            b.full_size = levels.size();
            b.levels = levels;
            for (std::size_t k = 0; k + 1 < levels.size(); ++k)
                L.free_names.push_back(level_name(f.name, levels[k]));
            for (const auto& l : levels) L.full_names.push_back(level_name(f.name, l));
        } else {
            b.reference = f.reference.value_or(levels.front());
            auto ref = std::find(levels.begin(), levels.end(), b.reference);
            if (ref == levels.end())
                throw DesignError("reference level '" + b.reference + "' not among levels of '" +
                                  f.name + "'");
            // Reference first so the free columns are the remaining levels in order.
            std::rotate(levels.begin(), ref, ref + 1);
            b.levels = levels;
            b.full_size = b.free_size;
            for (std::size_t k = 1; k < levels.size(); ++k) {
                L.free_names.push_back(level_name(f.name, levels[k]));
                L.full_names.push_back(level_name(f.name, levels[k]));
            }
        }
        L.blocks.push_back(b);
    }
    for (const auto& c : spec.covariates) {
        Block b;
        b.kind = Block::Kind::Covariate;
        b.name = c;
        b.free_offset = L.free_size();
        b.full_offset = L.full_size();
        b.free_size = b.full_size = 1;
        L.blocks.push_back(b);
        L.free_names.push_back(c);
        L.full_names.push_back(c);
    }
    d.X = encode(records, L);
    return d;
}

Eigen::MatrixXd encode(std::span<const intervals::ObservationRecord> records, const Layout& L) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(records.size()),
                                              static_cast<Eigen::Index>(L.free_size()));
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto row = static_cast<Eigen::Index>(i);
        for (const auto& b : L.blocks) {
            const auto col = static_cast<Eigen::Index>(b.free_offset);
            switch (b.kind) {
                case Block::Kind::Intercept:
                    X(row, col) = 1.0;
                    break;
                case Block::Kind::Covariate: {
                    auto it = r.covariates.find(b.name);
                    if (it == r.covariates.end())
                        throw DesignError("record " + r.incident_id + " lacks covariate '" +
                                          b.name + "'");
                    X(row, col) = it->second;
                    break;
                }
                case Block::Kind::Factor: {
                    auto it = r.labels.find(b.name);
                    if (it == r.labels.end())
                        throw DesignError("record " + r.incident_id + " lacks factor '" + b.name +
                                          "'");
                    auto pos = std::find(b.levels.begin(), b.levels.end(), it->second);
                    if (pos == b.levels.end())
                        throw DesignError("unseen level '" + it->second + "' for factor '" +
                                          b.name + "'");
                    const auto k = static_cast<std::size_t>(pos - b.levels.begin());
                    if (b.encoding == Encoding::SumZero) {
                        if (k + 1 == b.levels.size())
                            X.block(row, col, 1, static_cast<Eigen::Index>(b.free_size)).setConstant(-1.0);
                        else
                            X(row, col + static_cast<Eigen::Index>(k)) = 1.0;
                    } else if (k > 0) {
                        X(row, col + static_cast<Eigen::Index>(k) - 1) = 1.0;
                    }
                    break;
                }
            }
        }
    }
    return X;
}

}  // namespace duprate::design
