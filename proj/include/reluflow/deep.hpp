#pragma once

#include "reluflow/dataset.hpp"
#include "reluflow/objective.hpp"

#include <string>
#include <vector>

namespace reluflow {

/// l-layer network x -> W_l [ ... [W_1 x]_+ ... ]_+ with a linear last layer.
class DeepNet {
public:
    DeepNet() = default;

    explicit DeepNet(std::vector<Matrix> weights) : weights_(std::move(weights)) {
        if (weights_.empty()) throw StructuralError("network needs at least one layer");
        for (std::size_t m = 0; m < weights_.size(); ++m) {
            const auto& w = weights_[m];
            if (w.rows() < 1 || w.cols() < 1) throw StructuralError("empty weight matrix");
            if (!w.allFinite()) throw StructuralError("non-finite weight in layer " + std::to_string(m + 1));
            if (m > 0 && w.cols() != weights_[m - 1].rows()) {
                throw StructuralError("layer " + std::to_string(m + 1) + " expects input dimension " +
                                      std::to_string(w.cols()) + ", previous layer gives " +
                                      std::to_string(weights_[m - 1].rows()));
            }
        }
    }

    Index depth() const { return static_cast<Index>(weights_.size()); }
    Index input_dim() const { return weights_.front().cols(); }
    Index output_dim() const { return weights_.back().rows(); }
    /// Layer m, counted from 1.
    const Matrix& weight(Index m) const { return weights_.at(static_cast<std::size_t>(m - 1)); }
    Matrix& weight(Index m) { return weights_.at(static_cast<std::size_t>(m - 1)); }
    const std::vector<Matrix>& weights() const { return weights_; }

private:
    std::vector<Matrix> weights_;
};

struct LayerTrace {
    Vector input;   // x^(m)
    Vector output;  // o^(m)
};

inline std::vector<LayerTrace> forward_trace(const DeepNet& net, const Vector& x) {
    if (x.size() != net.input_dim()) {
        throw StructuralError("input has dimension " + std::to_string(x.size()) + ", network expects " +
                              std::to_string(net.input_dim()));
    }
    std::vector<LayerTrace> out;
    Vector cur = x;
    for (Index m = 1; m <= net.depth(); ++m) {
        LayerTrace t;
        t.input = cur;
        t.output = net.weight(m) * cur;
        if (m < net.depth()) t.output = t.output.cwiseMax(0.0);
        cur = t.output;
        out.push_back(std::move(t));
    }
    return out;
}

inline double network_loss(const DeepNet& net, const Vector& x, const Vector& y) {
    if (y.size() != net.output_dim()) throw StructuralError("label dimension mismatch");
    return 0.5 * (forward_trace(net, x).back().output - y).squaredNorm();
}

/// One layer seen as a single-layer problem with its backpropagated label.
struct LayerProblem {
    Index layer = 1;
    bool linear = false;  // the last layer has no ReLU
    Vector input;   // x^(m)
    Vector output;  // o^(m)
    Vector label;   // y^(m) = o^(m) - d^(m)
    Vector delta;   // d^(m)
};

inline std::vector<LayerProblem> backprop_labels(const DeepNet& net, const Vector& x, const Vector& y) {
    if (y.size() != net.output_dim()) {
        throw StructuralError("label has dimension " + std::to_string(y.size()) + ", network outputs " +
                              std::to_string(net.output_dim()));
    }
    const auto trace = forward_trace(net, x);
    const Index l = net.depth();
    std::vector<LayerProblem> out(static_cast<std::size_t>(l));
    Vector d = trace.back().output - y;
    for (Index m = l; m >= 1; --m) {
        auto& p = out[static_cast<std::size_t>(m - 1)];
        const auto& t = trace[static_cast<std::size_t>(m - 1)];
        p.layer = m;
        p.linear = m == l;
        p.input = t.input;
        p.output = t.output;
        if (m < l) {
            const Vector next_in = trace[static_cast<std::size_t>(m)].input;  // x^(m+1)
            d = (next_in.array() > 0.0).cast<double>() * (net.weight(m + 1).transpose() * d).array();
        }
        p.delta = d;
        p.label = t.output - d;
    }
    return out;
}

/// Gradient of 1/2 |[W x]_+ - y|^2 (or of the linear loss) at the given W,
/// computed from the problem's own data pair.
inline Matrix layer_gradient(const Matrix& w, const LayerProblem& p) {
    if (w.cols() != p.input.size() || w.rows() != p.label.size()) {
        throw StructuralError("weight does not match the layer problem");
    }
    const Vector pre = w * p.input;
    Vector r;
    if (p.linear) {
        r = pre - p.label;
    } else {
        r = (pre.array() > 0.0).cast<double>() * (pre.cwiseMax(0.0) - p.label).array();
    }
    return r * p.input.transpose();
}

/// Full-network gradient assembled layer by layer from the problems.
inline std::vector<Matrix> network_gradient(const DeepNet& net, const Vector& x, const Vector& y) {
    const auto probs = backprop_labels(net, x, y);
    std::vector<Matrix> out;
    for (const auto& p : probs) out.push_back(layer_gradient(net.weight(p.layer), p));
    return out;
}

/// Inputs as columns (d_in x n), labels as columns (d_out x n).
struct MultiDataset {
    Matrix x;
    Matrix y;

    MultiDataset() = default;
    MultiDataset(Matrix inputs, Matrix labels) : x(std::move(inputs)), y(std::move(labels)) {
        if (x.cols() != y.cols()) throw StructuralError("inputs and labels disagree on n");
        if (x.rows() < 1 || y.rows() < 1 || x.cols() < 1) throw StructuralError("empty multi-output dataset");
    }
    Index n() const { return x.cols(); }
};

inline double multi_loss(const Matrix& w, const MultiDataset& md) {
    if (w.cols() != md.x.rows() || w.rows() != md.y.rows()) throw StructuralError("weight shape mismatch");
    return 0.5 * ((w * md.x).cwiseMax(0.0) - md.y).squaredNorm();
}

inline Matrix multi_gradient(const Matrix& w, const MultiDataset& md) {
    if (w.cols() != md.x.rows() || w.rows() != md.y.rows()) throw StructuralError("weight shape mismatch");
    const Matrix pre = w * md.x;
    const Matrix r = (pre.array() > 0.0).cast<double>() * (pre.cwiseMax(0.0) - md.y).array();
    return r * md.x.transpose();
}

struct RowProblem {
    Index row = 0;
    Dataset ds;
    Vector weight;
    bool labels_positive = true;  // A2 for this row; reported, not enforced
};

inline std::vector<RowProblem> row_decompose(const Matrix& w, const MultiDataset& md) {
    if (w.cols() != md.x.rows() || w.rows() != md.y.rows()) throw StructuralError("weight shape mismatch");
    std::vector<RowProblem> out;
    for (Index j = 0; j < w.rows(); ++j) {
        RowProblem p;
        p.row = j;
        p.ds = Dataset(md.x, md.y.row(j).transpose());
        p.weight = w.row(j).transpose();
        p.labels_positive = (md.y.row(j).array() > 0.0).all();
        out.push_back(std::move(p));
    }
    return out;
}

struct DriftSeries {
    Index layer = 1;  // pair (layer, layer + 1)
    std::vector<double> drift;
    double max() const {
        double m = 0.0;
        for (double v : drift) m = std::max(m, v);
        return m;
    }
};

struct BalancednessReport {
    std::vector<DriftSeries> pairs;
    std::vector<double> loss;
    bool unstable = false;
    double max_drift() const {
        double m = 0.0;
        for (const auto& p : pairs) m = std::max(m, p.max());
        return m;
    }
};

/// Gradient descent on one pair; tracks the change of
/// |W_m|_F^2 - |W_{m+1}|_F^2 from its initial value.
inline BalancednessReport balancedness_drift(const DeepNet& net, const Vector& x, const Vector& y,
                                             double step, long iters) {
    if (!(step > 0.0)) throw PreconditionError("step must be positive");
    if (iters < 0) throw PreconditionError("iteration count must be nonnegative");
    DeepNet cur = net;
    const Index l = net.depth();
    auto gap = [&](Index m) {
        return cur.weight(m).squaredNorm() - cur.weight(m + 1).squaredNorm();
    };
    BalancednessReport rep;
    std::vector<double> base;
    for (Index m = 1; m < l; ++m) {
        rep.pairs.push_back({m, {}});
        base.push_back(gap(m));
    }
    rep.loss.push_back(network_loss(cur, x, y));
    for (long k = 0; k < iters; ++k) {
        const auto g = network_gradient(cur, x, y);
        for (Index m = 1; m <= l; ++m) cur.weight(m) -= step * g[static_cast<std::size_t>(m - 1)];
        const double lv = network_loss(cur, x, y);
        if (!std::isfinite(lv) || lv > 1e12) {
            rep.unstable = true;
            break;
        }
        rep.loss.push_back(lv);
        for (Index m = 1; m < l; ++m) {
            rep.pairs[static_cast<std::size_t>(m - 1)].drift.push_back(
                std::abs(gap(m) - base[static_cast<std::size_t>(m - 1)]));
        }
    }
    return rep;
}

}  // namespace reluflow
