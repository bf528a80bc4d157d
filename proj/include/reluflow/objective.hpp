#pragma once

#include "reluflow/pattern.hpp"

namespace reluflow {

/// Half the sum of squared residuals of the single ReLU neuron.
inline double loss(const Dataset& ds, const Vector& w) {
    const Vector s = ds.x().transpose() * w;
    double acc = 0.0;
    for (Index i = 0; i < ds.n(); ++i) {
        const double r = std::max(s(i), 0.0) - ds.label(i);
        acc += r * r;
    }
    return 0.5 * acc;
}

/// Strict-indicator gradient: data on their boundary contribute nothing.
inline Vector gradient(const Dataset& ds, const Vector& w) {
    const Vector s = ds.x().transpose() * w;
    Vector g = Vector::Zero(ds.d());
    for (Index i = 0; i < ds.n(); ++i) {
        if (s(i) > 0.0) g += (s(i) - ds.label(i)) * ds.input(i);
    }
    return g;
}

/// Minus the time derivative of half the squared norm along the flow.
inline double g_value(const Dataset& ds, const Vector& w) { return w.dot(gradient(ds, w)); }

/// Least-squares loss of the linear neuron.
inline double linear_loss(const Dataset& ds, const Vector& w) {
    return 0.5 * (ds.x().transpose() * w - ds.y()).squaredNorm();
}

}  // namespace reluflow
