#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "duprate/intervals.hpp"

namespace duprate::design {

enum class Encoding {
    SumZero,  // K levels -> K-1 free columns, last level = -(sum of the others)
    DropOne,  // reference level absorbed into the intercept
};

struct FactorSpec {
    std::string name;
    Encoding encoding = Encoding::SumZero;
    std::optional<std::string> reference;  // DropOne only; default first level
    std::vector<std::string> levels;       // fixed level order; learned when empty
};

struct DesignSpec {
    bool intercept = true;
    std::vector<FactorSpec> factors;
    std::vector<std::string> covariates;
};

/// A contiguous block of coefficients, both in the free parameterization
/// used by the optimizer and in the full reported parameterization.
struct Block {
    enum class Kind { Intercept, Factor, Covariate };
    Kind kind = Kind::Covariate;
    std::string name;
    std::size_t free_offset = 0;
    std::size_t free_size = 0;
    std::size_t full_offset = 0;
    std::size_t full_size = 0;
    Encoding encoding = Encoding::SumZero;
    std::vector<std::string> levels;  // all levels, in column order
    std::string reference;            // DropOne only
};

/// Column layout learned from training records; reused to score new records.
struct Layout {
    std::vector<Block> blocks;
    std::vector<std::string> free_names;
    std::vector<std::string> full_names;

    std::size_t free_size() const { return free_names.size(); }
    std::size_t full_size() const { return full_names.size(); }

    /// Full coefficients = reconstruction() * free coefficients.
    Eigen::MatrixXd reconstruction() const;
    Eigen::MatrixXd reconstruction(const Block& block) const;

    const Block* find(const std::string& name) const;
};

struct Design {
    Layout layout;
    Eigen::MatrixXd X;  // records x free columns
};

class DesignError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Learns factor levels (sorted) unless fixed in the spec, then encodes.
Design assemble_design(std::span<const intervals::ObservationRecord> records, const DesignSpec& spec);

/// Encodes records with an existing layout; an unseen level throws.
Eigen::MatrixXd encode(std::span<const intervals::ObservationRecord> records, const Layout& layout);

/// Full coefficient name for a factor level, e.g. "borough[Queens]".
std::string level_name(const std::string& factor, const std::string& level);

}  // namespace duprate::design
