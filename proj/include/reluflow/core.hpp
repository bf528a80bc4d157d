#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace reluflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent shapes, asymmetric inputs, malformed files.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Operation requested on a pattern that has no interior (or a point off its domain).
class GeometryError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Combinatorial guard exceeded.
class SizeError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

class DegenerateDirectionError : public Error {
public:
    using Error::Error;
};

/// Singular values below this fraction of the largest one are treated as zero.
inline constexpr double kRankCutoff = 1e-10;

/// Strictness margin for interior witnesses and containment programs.
inline constexpr double kFeasibilityMargin = 1e-9;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

/// Eigen-decomposition of a symmetric positive semidefinite matrix, sorted by
/// descending eigenvalue. Eigenvalues under the rank cutoff are clamped to zero.
struct SpectralDecomposition {
    Vector values;   // descending
    Matrix vectors;  // columns are orthonormal eigenvectors
    Index rank = 0;  // number of eigenvalues above the cutoff

    double lambda_max() const { return values.size() ? values(0) : 0.0; }
    double lambda_min_positive() const { return rank > 0 ? values(rank - 1) : 0.0; }
    Matrix range_basis() const { return vectors.leftCols(rank); }
    Matrix null_basis() const { return vectors.rightCols(vectors.cols() - rank); }
};

/// Cutoff on eigenvalues of a Gram matrix that corresponds to the singular-value
/// cutoff on the underlying data matrix (lambda = sigma^2).
inline double eigen_cutoff(double lambda_max) {
    return lambda_max * kRankCutoff * kRankCutoff;
}

/// Spectrum of an explicitly given symmetric PSD matrix. The cutoff is the
/// data rank cutoff expressed on eigenvalues, floored at the eigen-solver's
/// own resolution.
inline SpectralDecomposition spectral(const Matrix& h) {
    SpectralDecomposition out;
    const Index d = h.rows();
    if (d == 0) {
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigen-decomposition failed");
    }
    // Descending order; equal eigenvalues keep the solver's column order.
    std::vector<Index> order(static_cast<std::size_t>(d));
    for (Index k = 0; k < d; ++k) order[static_cast<std::size_t>(k)] = k;
    const Vector& ev = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a) > ev(b); });
    out.values.resize(d);
    out.vectors.resize(d, d);
    for (Index k = 0; k < d; ++k) {
        out.values(k) = ev(order[static_cast<std::size_t>(k)]);
        out.vectors.col(k) = solver.eigenvectors().col(order[static_cast<std::size_t>(k)]);
    }
    if (!out.values.allFinite() || !out.vectors.allFinite()) {
        throw NumericalError("non-finite spectrum");
    }
    const double top = std::max(out.values(0), 0.0);
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(d);
    const double cut = std::max({eigen_cutoff(top), noise * top, 1e-300});
    for (Index k = 0; k < d; ++k) {
        if (out.values(k) > cut) {
            ++out.rank;
        } else {
            out.values(k) = 0.0;
        }
    }
    return out;
}

/// Spectrum of cols * cols^T computed from the singular values of cols, so
/// the rank cutoff applies to singular values directly. cols may have zero
/// columns, in which case the spectrum is identically zero.
inline SpectralDecomposition gram_spectrum(const Matrix& cols, Index dim) {
    SpectralDecomposition out;
    out.values = Vector::Zero(dim);
    if (cols.cols() == 0 || dim == 0) {
        out.vectors = Matrix::Identity(dim, dim);
        return out;
    }
    Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeFullU);
    const Vector& s = svd.singularValues();
    out.vectors = svd.matrixU();
    if (!s.allFinite() || !out.vectors.allFinite()) {
        throw NumericalError("non-finite singular values");
    }
    const double top = s.size() ? s(0) : 0.0;
    for (Index k = 0; k < s.size(); ++k) {
        if (top > 0.0 && s(k) > kRankCutoff * top) {
            out.values(k) = s(k) * s(k);
            ++out.rank;
        }
    }
    return out;
}

/// Moore-Penrose pseudoinverse applied to a vector, through the spectrum.
inline Vector pseudo_solve(const SpectralDecomposition& s, const Vector& rhs) {
    Vector out = Vector::Zero(rhs.size());
    for (Index k = 0; k < s.rank; ++k) {
        out += (s.vectors.col(k).dot(rhs) / s.values(k)) * s.vectors.col(k);
    }
    return out;
}

inline double binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) {
        return 0.0;
    }
    double r = 1.0;
    for (int i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return std::round(r);
}

/// Upper bound on the number of cells cut out by n central hyperplanes in R^d.
inline double partition_bound(int n, int d) {
    double s = 0.0;
    for (int k = 0; k <= d - 1; ++k) {
        s += binomial(n - 1, k);
    }
    return 2.0 * s;
}

}  // namespace reluflow
