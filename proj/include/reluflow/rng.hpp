#pragma once

#include "reluflow/core.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace reluflow {

/// Seeded generator with library-independent real draws, so that campaign
/// outputs are reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [lo, hi].
    int integer(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(engine_() % span);
    }

    /// Standard normal via Box-Muller.
    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Vector uniform_vector(Index n, double lo, double hi) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) {
            v(i) = uniform(lo, hi);
        }
        return v;
    }

    Vector normal_vector(Index n) {
        Vector v(n);
        for (Index i = 0; i < n; ++i) {
            v(i) = normal();
        }
        return v;
    }

    Matrix uniform_matrix(Index rows, Index cols, double lo, double hi) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                m(i, j) = uniform(lo, hi);
            }
        }
        return m;
    }

    Matrix normal_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index j = 0; j < cols; ++j) {
            for (Index i = 0; i < rows; ++i) {
                m(i, j) = normal();
            }
        }
        return m;
    }

    /// Unit vector drawn uniformly on the sphere.
    Vector unit_vector(Index n) {
        Vector v = normal_vector(n);
        while (v.norm() < 1e-12) {
            v = normal_vector(n);
        }
        return v / v.norm();
    }

    /// Seed for an independent child stream.
    std::uint64_t next_seed() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace reluflow
