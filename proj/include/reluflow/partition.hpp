#pragma once

#include "reluflow/lp.hpp"
#include "reluflow/objective.hpp"

#include <algorithm>
#include <cstdint>
#include <numbers>
#include <vector>

namespace reluflow {

inline constexpr Index kMaxEnumerationSize = 24;

struct PartitionCell {
    ActivationPattern pattern;
    Vector witness;  // min_i |witness . x_i| == 1
};

/// Largest t with  sign_i * xhat_i . w >= t  over the box |w_k| <= 1.
/// Signs are +1 for active, -1 for inactive; xhat are the unit inputs.
inline MarginProgram::Solution pattern_margin(const Matrix& unit_x,
                                              const std::vector<double>& signs) {
    const Index d = unit_x.rows();
    std::vector<MarginProgram::Row> rows;
    rows.reserve(signs.size());
    for (std::size_t i = 0; i < signs.size(); ++i) {
        rows.push_back({unit_x.col(static_cast<Index>(i)), signs[i], true});
    }
    return MarginProgram::solve(Vector::Zero(d), Matrix::Identity(d, d), rows, 1.0);
}

inline Matrix unit_inputs(const Dataset& ds) {
    Matrix u = ds.x();
    for (Index i = 0; i < ds.n(); ++i) {
        const double nx = u.col(i).norm();
        if (nx == 0.0) throw StructuralError("input column " + std::to_string(i) + " is zero");
        u.col(i) /= nx;
    }
    return u;
}

/// True iff the open cone of the pattern is nonempty.
inline bool is_feasible(const Dataset& ds, const ActivationPattern& p) {
    if (p.size() != ds.n()) throw StructuralError("pattern length does not match dataset");
    std::vector<double> signs;
    for (Index i = 0; i < ds.n(); ++i) signs.push_back(p[i] ? 1.0 : -1.0);
    const auto sol = pattern_margin(unit_inputs(ds), signs);
    return sol.feasible && sol.margin > kFeasibilityMargin;
}

/// All feasible patterns with interior witnesses, grown one datum at a time
/// (a pattern can only be feasible if its prefix is). Sorted by bit string.
inline std::vector<PartitionCell> enumerate_partitions(const Dataset& ds) {
    if (ds.n() > kMaxEnumerationSize) {
        throw SizeError("enumeration limited to n <= " + std::to_string(kMaxEnumerationSize) +
                        ", got " + std::to_string(ds.n()));
    }
    const Matrix u = unit_inputs(ds);
    std::vector<std::vector<double>> prefixes{{}};
    std::vector<Vector> witnesses{Vector::Zero(ds.d())};
    for (Index m = 0; m < ds.n(); ++m) {
        std::vector<std::vector<double>> next;
        std::vector<Vector> next_w;
        const Matrix sub = u.leftCols(m + 1);
        for (const auto& pre : prefixes) {
            for (double s : {1.0, -1.0}) {
                auto cand = pre;
                cand.push_back(s);
                const auto sol = pattern_margin(sub, cand);
                if (sol.feasible && sol.margin > kFeasibilityMargin) {
                    next.push_back(std::move(cand));
                    next_w.push_back(sol.point);
                }
            }
        }
        prefixes = std::move(next);
        witnesses = std::move(next_w);
    }
    std::vector<PartitionCell> out;
    for (std::size_t k = 0; k < prefixes.size(); ++k) {
        PartitionCell cell;
        cell.pattern = ActivationPattern(ds.n());
        for (Index i = 0; i < ds.n(); ++i) cell.pattern.set(i, prefixes[k][i] > 0);
        const Vector s = ds.x().transpose() * witnesses[k];
        cell.witness = witnesses[k] / s.cwiseAbs().minCoeff();
        if (!(pattern_of(ds, cell.witness) == cell.pattern)) {
            throw NumericalError("interior witness for " + cell.pattern.str() +
                                 " does not reproduce its pattern");
        }
        out.push_back(std::move(cell));
    }
    std::sort(out.begin(), out.end(), [](const PartitionCell& a, const PartitionCell& b) {
        return a.pattern.str() > b.pattern.str();
    });
    return out;
}

struct PartitionOrdering {
    std::vector<ActivationPattern> ordered_patterns;  // cell k spans angles [k], [k+1]
    std::vector<double> boundary_angles;              // increasing, in [0, 2pi)
    bool single_flips = true;  // adjacent cells differ in exactly one bit
    bool nesting_holds = true;
    std::vector<std::pair<Index, Index>> nesting_violations;  // cell indices
};

/// Cyclic order of the cells of a planar arrangement.
inline PartitionOrdering partition_order_2d(const Dataset& ds) {
    if (ds.d() != 2) {
        throw DimensionError("partition ordering needs d = 2, got d = " + std::to_string(ds.d()));
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    auto wrap = [&](double a) {
        a = std::fmod(a, two_pi);
        return a < 0.0 ? a + two_pi : a;
    };
    std::vector<double> angles;
    for (Index i = 0; i < ds.n(); ++i) {
        if (ds.input(i).norm() == 0.0) throw StructuralError("zero input column");
        const double phi = std::atan2(ds.input(i)(1), ds.input(i)(0));
        angles.push_back(wrap(phi + std::numbers::pi / 2));
        angles.push_back(wrap(phi - std::numbers::pi / 2));
    }
    std::sort(angles.begin(), angles.end());
    PartitionOrdering out;
    for (double a : angles) {
        if (out.boundary_angles.empty() || a - out.boundary_angles.back() > 1e-12) {
            out.boundary_angles.push_back(a);
        }
    }
    if (out.boundary_angles.size() > 1 &&
        out.boundary_angles.back() - out.boundary_angles.front() > two_pi - 1e-12) {
        out.boundary_angles.pop_back();
    }
    const std::size_t m = out.boundary_angles.size();
    std::vector<std::pair<double, double>> spans;
    for (std::size_t k = 0; k < m; ++k) {
        const double lo = out.boundary_angles[k];
        const double hi = k + 1 < m ? out.boundary_angles[k + 1] : out.boundary_angles[0] + two_pi;
        const double mid = 0.5 * (lo + hi);
        Vector w(2);
        w << std::cos(mid), std::sin(mid);
        out.ordered_patterns.push_back(pattern_of(ds, w));
        spans.emplace_back(lo, hi);
    }
    for (std::size_t k = 0; k < m; ++k) {
        const auto& a = out.ordered_patterns[k];
        const auto& b = out.ordered_patterns[(k + 1) % m];
        Index diff = 0;
        for (Index i = 0; i < ds.n(); ++i) diff += a[i] != b[i] ? 1 : 0;
        if (diff != 1) out.single_flips = false;
    }
    // Quadrant of a cell, 2 or 4, when the whole angular span lies inside it.
    auto quadrant = [&](std::size_t k) {
        const double lo = spans[k].first, hi = spans[k].second;
        const double pi = std::numbers::pi;
        if (lo >= pi / 2 && hi <= pi) return 2;
        if (lo >= 1.5 * pi && hi <= two_pi) return 4;
        return 0;
    };
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = k + 1; l < m; ++l) {
            const int qk = quadrant(k);
            if (qk == 0 || qk != quadrant(l)) continue;
            const auto& a = out.ordered_patterns[k];
            const auto& b = out.ordered_patterns[l];
            if (!a.subset_of(b) && !b.subset_of(a)) {
                out.nesting_holds = false;
                out.nesting_violations.emplace_back(static_cast<Index>(k), static_cast<Index>(l));
            }
        }
    }
    return out;
}

/// Box spanned by the sign-fixed eigenvector coordinates of a minimizer. For
/// rank-deficient H only the range of H is kept (r columns).
struct Hyperrectangle {
    Vector eigenvalues;   // r, descending, positive
    Matrix eigenvectors;  // d x r
    Vector extents;       // c_k* >= 0

    Index dim() const { return extents.size(); }

    Vector coordinates(const Vector& w) const { return eigenvectors.transpose() * w; }

    /// Closed-box membership of the range component of w.
    bool contains(const Vector& w, double slack = 1e-12) const {
        const Vector c = coordinates(w);
        for (Index k = 0; k < dim(); ++k) {
            const double tol = slack * std::max(1.0, extents(k));
            if (c(k) < -tol || c(k) > extents(k) + tol) return false;
        }
        return true;
    }

    /// Point with box coordinates t_k * c_k*, t in [0,1]^r.
    Vector point(const Vector& t) const { return eigenvectors * t.cwiseProduct(extents); }

    std::vector<Vector> vertices() const {
        std::vector<Vector> out;
        const Index r = dim();
        if (r > 20) throw SizeError("too many hyperrectangle vertices");
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << r); ++mask) {
            Vector t = Vector::Zero(r);
            for (Index k = 0; k < r; ++k) {
                if (mask >> k & 1u) t(k) = 1.0;
            }
            out.push_back(point(t));
        }
        return out;
    }
};

inline Hyperrectangle hyperrectangle_of(const Matrix& h, const Vector& w_star) {
    if (h.rows() != h.cols() || h.rows() != w_star.size()) {
        throw StructuralError("hyperrectangle needs a square H matching w*");
    }
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw StructuralError("H is not symmetric");
    }
    const SpectralDecomposition s = spectral(h);
    Hyperrectangle box;
    box.eigenvalues = s.values.head(s.rank);
    box.eigenvectors = s.range_basis();
    box.extents.resize(s.rank);
    for (Index k = 0; k < s.rank; ++k) {
        auto e = box.eigenvectors.col(k);
        double c = e.dot(w_star);
        if (c == 0.0) {
            Index piv = 0;
            e.cwiseAbs().maxCoeff(&piv);
            if (e(piv) < 0.0) e = -e;
        } else if (c < 0.0) {
            e = -e;
            c = -c;
        }
        box.extents(k) = c;
    }
    return box;
}

}  // namespace reluflow
