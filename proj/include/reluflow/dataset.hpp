#pragma once

#include "reluflow/core.hpp"

#include <array>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace reluflow {

/// Analysis assumptions on training data.
///   A1: inputs are entrywise nonnegative.
///   A2: labels are strictly positive.
///   A3: the input matrix has full row rank d.
enum class Assumption : std::uint8_t { A1 = 0, A2 = 1, A3 = 2 };

inline constexpr std::array<Assumption, 3> kAllAssumptions{Assumption::A1, Assumption::A2,
                                                           Assumption::A3};

inline std::string_view to_string(Assumption a) {
    switch (a) {
        case Assumption::A1: return "A1";
        case Assumption::A2: return "A2";
        case Assumption::A3: return "A3";
    }
    return "?";
}

inline Assumption assumption_from_string(std::string_view s) {
    if (s == "A1") return Assumption::A1;
    if (s == "A2") return Assumption::A2;
    if (s == "A3") return Assumption::A3;
    throw StructuralError("unknown assumption '" + std::string(s) + "'");
}

class AssumptionSet {
public:
    AssumptionSet() = default;
    AssumptionSet(std::initializer_list<Assumption> list) {
        for (auto a : list) insert(a);
    }

    static AssumptionSet all() { return {Assumption::A1, Assumption::A2, Assumption::A3}; }

    void insert(Assumption a) { bits_ |= mask(a); }
    void erase(Assumption a) { bits_ &= static_cast<std::uint8_t>(~mask(a)); }
    bool contains(Assumption a) const { return (bits_ & mask(a)) != 0; }
    bool empty() const { return bits_ == 0; }
    bool operator==(const AssumptionSet&) const = default;

    std::vector<Assumption> list() const {
        std::vector<Assumption> out;
        for (auto a : kAllAssumptions) {
            if (contains(a)) out.push_back(a);
        }
        return out;
    }

private:
    static std::uint8_t mask(Assumption a) {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(a));
    }
    std::uint8_t bits_ = 0;
};

/// Training data: columns of x are the inputs, y holds the labels.
/// Shapes are checked on construction; the analysis assumptions are only
/// carried as declared flags and checked by validate_dataset.
class Dataset {
public:
    Dataset() = default;

    Dataset(Matrix x, Vector y, AssumptionSet declared = {})
        : x_(std::move(x)), y_(std::move(y)), declared_(declared) {
        if (x_.cols() != y_.size()) {
            throw StructuralError("input matrix has " + std::to_string(x_.cols()) +
                                  " columns but " + std::to_string(y_.size()) + " labels");
        }
        if (x_.rows() < 1 || x_.cols() < 1) {
            throw StructuralError("dataset needs d >= 1 and n >= 1");
        }
        if (!x_.allFinite() || !y_.allFinite()) {
            throw StructuralError("dataset contains non-finite values");
        }
    }

    const Matrix& x() const { return x_; }
    const Vector& y() const { return y_; }
    auto input(Index i) const { return x_.col(i); }
    double label(Index i) const { return y_(i); }
    Index d() const { return x_.rows(); }
    Index n() const { return x_.cols(); }
    const AssumptionSet& declared() const { return declared_; }

    /// Full-data Gram matrix and moment vector (linear network quantities).
    Matrix gram() const { return x_ * x_.transpose(); }
    Vector moment() const { return x_ * y_; }

private:
    Matrix x_;
    Vector y_;
    AssumptionSet declared_;
};

inline Index numeric_rank(const Matrix& x) {
    if (x.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(x);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0) return 0;
    Index r = 0;
    for (Index k = 0; k < s.size(); ++k) {
        if (s(k) > kRankCutoff * s(0)) ++r;
    }
    return r;
}

struct AssumptionCheck {
    Assumption assumption;
    bool required = false;
    bool passed = false;
    std::vector<Index> offending;  // data indices (empty for A3)
};

struct ValidationReport {
    std::array<AssumptionCheck, 3> checks{};
    Index rank = 0;
    bool passed = false;

    const AssumptionCheck& check(Assumption a) const {
        return checks[static_cast<std::size_t>(a)];
    }
};

/// Checks the requested assumptions. Zero input columns are rejected
/// unconditionally.
inline ValidationReport validate_dataset(const Dataset& ds, const AssumptionSet& require) {
    if (ds.x().cols() != ds.y().size()) {
        throw StructuralError("shape mismatch between inputs and labels");
    }
    for (Index i = 0; i < ds.n(); ++i) {
        if (ds.input(i).norm() == 0.0) {
            throw StructuralError("input column " + std::to_string(i) + " is zero");
        }
    }

    ValidationReport report;
    for (auto a : kAllAssumptions) {
        auto& c = report.checks[static_cast<std::size_t>(a)];
        c.assumption = a;
        c.required = require.contains(a);
    }

    auto& a1 = report.checks[0];
    for (Index i = 0; i < ds.n(); ++i) {
        if ((ds.input(i).array() < 0.0).any()) a1.offending.push_back(i);
    }
    a1.passed = a1.offending.empty();

    auto& a2 = report.checks[1];
    for (Index i = 0; i < ds.n(); ++i) {
        if (!(ds.label(i) > 0.0)) a2.offending.push_back(i);
    }
    a2.passed = a2.offending.empty();

    auto& a3 = report.checks[2];
    report.rank = numeric_rank(ds.x());
    a3.passed = report.rank == ds.d();

    report.passed = true;
    for (const auto& c : report.checks) {
        if (c.required && !c.passed) report.passed = false;
    }
    return report;
}

/// Orthogonal projection onto range(x x^T) together with an orthonormal basis
/// of that range.
struct ReductionMap {
    Matrix projector;  // d x d
    Matrix basis;      // d x r
    Index rank = 0;

    Vector reduce(const Vector& w) const { return basis.transpose() * w; }
    Vector lift(const Vector& z) const { return basis * z; }
};

inline ReductionMap reduction_map(const Dataset& ds) {
    const SpectralDecomposition s = gram_spectrum(ds.x(), ds.d());
    ReductionMap map;
    map.rank = s.rank;
    map.basis = s.range_basis();
    map.projector = map.basis * map.basis.transpose();
    return map;
}

/// Re-expresses the data in the r-dimensional reduced coordinates. The result
/// has full rank by construction; nonnegativity of inputs is not preserved by
/// the change of basis, so only A2 is carried over from the declared flags.
inline Dataset reduce_dataset(const Dataset& ds, const ReductionMap& map) {
    if (map.basis.rows() != ds.d()) {
        throw StructuralError("reduction map does not match dataset dimension");
    }
    AssumptionSet flags;
    flags.insert(Assumption::A3);
    if (ds.declared().contains(Assumption::A2)) flags.insert(Assumption::A2);
    return Dataset(map.basis.transpose() * ds.x(), ds.y(), flags);
}

/// Appends a constant 1 to every input so that a bias term becomes an
/// ordinary weight coordinate.
inline Dataset augment_bias(const Dataset& ds) {
    Matrix x(ds.d() + 1, ds.n());
    x.topRows(ds.d()) = ds.x();
    x.row(ds.d()).setOnes();
    return Dataset(std::move(x), ds.y(), ds.declared());
}

}  // namespace reluflow
