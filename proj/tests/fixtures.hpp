#pragma once

#include "reluflow/dataset.hpp"
#include "reluflow/rng.hpp"

#include <vector>

namespace fixtures {

using reluflow::Assumption;
using reluflow::AssumptionSet;
using reluflow::Dataset;
using reluflow::Index;
using reluflow::Matrix;
using reluflow::Rng;
using reluflow::Vector;

// Rows of the printed input matrices: row k holds coordinate k of all inputs.
inline Dataset example_5_1() {
    Matrix x(2, 5);
    x << 0.8858, 0.4338, 0.6739, 0.0221, 0.2322,
         0.0244, 0.8852, 0.0399, 0.4778, 0.8717;
    Vector y(5);
    y << 0.6111, 0.9397, 1.8694, 2.7104, 1.3089;
    return Dataset(x, y, AssumptionSet::all());
}

inline Dataset example_5_2() {
    Matrix x(3, 3);
    x << 1, 1, 2,
         0, 2, 0,
         2, 0, 0;
    Vector y(3);
    y << 0.05, 6, 0.5;
    return Dataset(x, y, AssumptionSet::all());
}

inline Dataset example_5_3() {
    Matrix x(3, 4);
    x << 1, 1, 1, 0,
         0, 2, 0, 1,
         1, 1, 2, 0;
    Vector y(4);
    y << 0.1, 0.2, 4, 0.1;
    return Dataset(x, y, AssumptionSet::all());
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double a : v) out(i++) = a;
    return out;
}

// Random A1-A3 data: inputs uniform in (0.05, 1), labels uniform in (0.1, 2).
inline Dataset random_a123(Rng& rng, Index d, Index n) {
    for (;;) {
        Matrix x = rng.uniform_matrix(d, n, 0.05, 1.0);
        Vector y = rng.uniform_vector(n, 0.1, 2.0);
        Eigen::JacobiSVD<Matrix> svd(x);
        const Vector& s = svd.singularValues();
        if (s(s.size() - 1) > 1e-3 * s(0) || n < d) {
            return Dataset(x, y, AssumptionSet::all());
        }
    }
}

// Random data with signed inputs and labels, for properties that do not
// need the analysis assumptions.
inline Dataset random_signed(Rng& rng, Index d, Index n) {
    Matrix x = rng.normal_matrix(d, n);
    Vector y = rng.normal_vector(n);
    return Dataset(x, y);
}

// Interpolable A1 data: y_i = x_i . w_gm with w_gm in the positive orthant.
struct Realizable {
    Dataset ds;
    Vector w_gm;
};

inline Realizable random_realizable(Rng& rng, Index d, Index n) {
    Vector w = rng.uniform_vector(d, 0.2, 1.5);
    for (;;) {
        Matrix x = rng.uniform_matrix(d, n, 0.0, 1.0);
        Eigen::JacobiSVD<Matrix> svd(x);
        const Vector& s = svd.singularValues();
        if (s(s.size() - 1) < 1e-2 * s(0)) continue;
        bool ok = true;
        for (Index i = 0; i < n; ++i) ok = ok && x.col(i).norm() > 0.05;
        if (!ok) continue;
        Vector y = x.transpose() * w;
        return {Dataset(x, y, AssumptionSet::all()), w};
    }
}

}  // namespace fixtures
