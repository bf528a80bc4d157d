#pragma once

#include "reluflow/dataset.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace reluflow {

/// Bit i is set iff datum i is active. Serialized with data index 0 first.
class ActivationPattern {
public:
    ActivationPattern() = default;
    explicit ActivationPattern(Index n, bool value = false)
        : bits_(static_cast<std::size_t>(n), value) {}
    explicit ActivationPattern(std::vector<bool> bits) : bits_(std::move(bits)) {}

    static ActivationPattern from_string(std::string_view s) {
        ActivationPattern p(static_cast<Index>(s.size()));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1') {
                p.bits_[i] = true;
            } else if (s[i] != '0') {
                throw StructuralError("pattern string may only contain 0 and 1");
            }
        }
        return p;
    }

    Index size() const { return static_cast<Index>(bits_.size()); }
    bool operator[](Index i) const { return bits_[static_cast<std::size_t>(i)]; }
    void set(Index i, bool v) { bits_[static_cast<std::size_t>(i)] = v; }

    ActivationPattern flipped(Index i) const {
        ActivationPattern p = *this;
        p.set(i, !(*this)[i]);
        return p;
    }

    Index count() const {
        Index c = 0;
        for (bool b : bits_) c += b ? 1 : 0;
        return c;
    }

    std::vector<Index> active() const {
        std::vector<Index> out;
        for (Index i = 0; i < size(); ++i) {
            if ((*this)[i]) out.push_back(i);
        }
        return out;
    }

    std::vector<Index> inactive() const {
        std::vector<Index> out;
        for (Index i = 0; i < size(); ++i) {
            if (!(*this)[i]) out.push_back(i);
        }
        return out;
    }

    /// True iff every active index of this pattern is also active in other.
    bool subset_of(const ActivationPattern& other) const {
        for (Index i = 0; i < size(); ++i) {
            if ((*this)[i] && !other[i]) return false;
        }
        return true;
    }

    std::string str() const {
        std::string s(bits_.size(), '0');
        for (std::size_t i = 0; i < bits_.size(); ++i) {
            if (bits_[i]) s[i] = '1';
        }
        return s;
    }

    bool operator==(const ActivationPattern&) const = default;
    bool operator<(const ActivationPattern& o) const { return str() < o.str(); }

private:
    std::vector<bool> bits_;
};

/// Strict indicator: a datum on its boundary counts as inactive.
inline ActivationPattern pattern_of(const Dataset& ds, const Vector& w) {
    if (w.size() != ds.d()) {
        throw StructuralError("weight has dimension " + std::to_string(w.size()) +
                              ", data has " + std::to_string(ds.d()));
    }
    ActivationPattern p(ds.n());
    const Vector s = ds.x().transpose() * w;
    for (Index i = 0; i < ds.n(); ++i) {
        p.set(i, s(i) > 0.0);
    }
    return p;
}

/// Columns of x selected by the active bits.
inline Matrix active_columns(const Dataset& ds, const ActivationPattern& p) {
    const auto idx = p.active();
    Matrix out(ds.d(), static_cast<Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        out.col(static_cast<Index>(k)) = ds.input(idx[k]);
    }
    return out;
}

/// H_P and q_P of the quadratic piece attached to a pattern.
struct QuadraticPiece {
    Matrix h;
    Vector q;
    double c = 0.0;  // constant term: half the squared labels of the active data
    double rest = 0.0;  // half the squared labels of the inactive data
};

inline QuadraticPiece quadratic_piece(const Dataset& ds, const ActivationPattern& p) {
    if (p.size() != ds.n()) {
        throw StructuralError("pattern length does not match dataset");
    }
    QuadraticPiece out;
    out.h = Matrix::Zero(ds.d(), ds.d());
    out.q = Vector::Zero(ds.d());
    for (Index i = 0; i < ds.n(); ++i) {
        const double y2 = 0.5 * ds.label(i) * ds.label(i);
        if (p[i]) {
            out.h.noalias() += ds.input(i) * ds.input(i).transpose();
            out.q += ds.label(i) * ds.input(i);
            out.c += y2;
        } else {
            out.rest += y2;
        }
    }
    return out;
}

/// Loss of the quadratic piece at w (active terms without the ReLU, inactive
/// terms at their constant value).
inline double piece_loss(const Dataset& ds, const ActivationPattern& p, const Vector& w) {
    double s = 0.0;
    for (Index i = 0; i < ds.n(); ++i) {
        if (p[i]) {
            const double r = ds.input(i).dot(w) - ds.label(i);
            s += r * r;
        } else {
            s += ds.label(i) * ds.label(i);
        }
    }
    return 0.5 * s;
}

}  // namespace reluflow
