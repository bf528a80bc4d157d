#pragma once

#include "reluflow/dataset.hpp"
#include "reluflow/deep.hpp"
#include "reluflow/rng.hpp"

#include <cmath>
#include <vector>

// Seeded random instances shared by the campaigns.
namespace reluflow::gen {

/// A1-A3 data: inputs uniform in (0.05, 1), labels uniform in (0.1, 2),
/// redrawn until the smallest singular value is not tiny.
inline Dataset a123(Rng& rng, Index d, Index n) {
    for (;;) {
        Matrix x = rng.uniform_matrix(d, n, 0.05, 1.0);
        Vector y = rng.uniform_vector(n, 0.1, 2.0);
        Eigen::JacobiSVD<Matrix> svd(x);
        const Vector& s = svd.singularValues();
        if (n < d || s(s.size() - 1) > 1e-3 * s(0)) return Dataset(x, y, AssumptionSet::all());
    }
}

inline Dataset signed_data(Rng& rng, Index d, Index n) {
    return Dataset(rng.normal_matrix(d, n), rng.normal_vector(n));
}

struct Realizable {
    Dataset ds;
    Vector w_gm;
};

/// A1 data with labels x_i . w_gm for a positive w_gm.
inline Realizable realizable(Rng& rng, Index d, Index n) {
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

/// Layer widths dims[0] -> dims[1] -> ..., scaled by 1/sqrt(fan-in).
inline DeepNet net(Rng& rng, const std::vector<Index>& dims) {
    std::vector<Matrix> w;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        w.push_back(rng.normal_matrix(dims[k + 1], dims[k]) / std::sqrt(static_cast<double>(dims[k])));
    }
    return DeepNet(std::move(w));
}

}  // namespace reluflow::gen
