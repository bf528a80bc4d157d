#include "fixtures.hpp"

#include "reluflow/deep.hpp"

#include <gtest/gtest.h>

using namespace reluflow;
using fixtures::vec;

namespace {

DeepNet random_net(Rng& rng, const std::vector<Index>& dims) {
    std::vector<Matrix> w;
    for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
        w.push_back(rng.normal_matrix(dims[k + 1], dims[k]) / std::sqrt(static_cast<double>(dims[k])));
    }
    return DeepNet(std::move(w));
}

// Direct evaluation without the library's trace.
Vector evaluate(const DeepNet& net, const Vector& x) {
    Vector h = x;
    for (Index m = 1; m <= net.depth(); ++m) {
        h = net.weight(m) * h;
        if (m < net.depth()) {
            for (Index i = 0; i < h.size(); ++i) h(i) = h(i) > 0.0 ? h(i) : 0.0;
        }
    }
    return h;
}

// Reverse-mode chain rule with masks taken from each layer's pre-activation.
std::vector<Matrix> chain_rule(const DeepNet& net, const Vector& x, const Vector& y) {
    std::vector<Vector> inputs, pre;
    Vector h = x;
    for (Index m = 1; m <= net.depth(); ++m) {
        inputs.push_back(h);
        const Vector z = net.weight(m) * h;
        pre.push_back(z);
        h = m < net.depth() ? Vector(z.cwiseMax(0.0)) : z;
    }
    std::vector<Matrix> g(static_cast<std::size_t>(net.depth()));
    Vector back = h - y;  // dL/dz for the last layer
    for (Index m = net.depth(); m >= 1; --m) {
        g[static_cast<std::size_t>(m - 1)] = back * inputs[static_cast<std::size_t>(m - 1)].transpose();
        if (m == 1) break;
        Vector up = net.weight(m).transpose() * back;
        const Vector& z = pre[static_cast<std::size_t>(m - 2)];
        for (Index i = 0; i < up.size(); ++i) up(i) = z(i) > 0.0 ? up(i) : 0.0;
        back = up;
    }
    return g;
}

std::vector<Index> random_dims(Rng& rng, int depth) {
    std::vector<Index> dims;
    for (int k = 0; k <= depth; ++k) dims.push_back(1 + rng.integer(0, 7));
    return dims;
}

}  // namespace

TEST(Forward, SingleLayerIsLinear) {
    Matrix w(2, 2);
    w << 1, -2,
         -3, 0.5;
    DeepNet net({w});
    const Vector x = vec({1.0, 1.0});
    const auto tr = forward_trace(net, x);
    ASSERT_EQ(tr.size(), 1u);
    EXPECT_TRUE(tr[0].output.isApprox(w * x));
    EXPECT_LT(tr[0].output(0), 0.0);
}

TEST(Forward, PositiveNetIsLinearChain) {
    Rng rng(41);
    std::vector<Matrix> w{rng.uniform_matrix(3, 2, 0.1, 1.0), rng.uniform_matrix(4, 3, 0.1, 1.0),
                          rng.uniform_matrix(2, 4, 0.1, 1.0)};
    DeepNet net(w);
    const Vector x = rng.uniform_vector(2, 0.1, 1.0);
    EXPECT_LE((forward_trace(net, x).back().output - w[2] * w[1] * w[0] * x).norm(), 1e-14);
}

TEST(Forward, RandomNetsMatchDirectEvaluation) {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        const auto net = random_net(rng, random_dims(rng, 3));
        const Vector x = rng.normal_vector(net.input_dim());
        const auto tr = forward_trace(net, x);
        EXPECT_LE((tr.back().output - evaluate(net, x)).norm(), 1e-14);
        for (std::size_t m = 1; m < tr.size(); ++m) EXPECT_EQ(tr[m].input, tr[m - 1].output);
    }
}

TEST(Forward, ShapeErrors) {
    Rng rng(43);
    EXPECT_THROW(DeepNet({rng.normal_matrix(3, 2), rng.normal_matrix(2, 4)}), StructuralError);
    EXPECT_THROW(DeepNet(std::vector<Matrix>{}), StructuralError);
    Matrix bad = Matrix::Ones(2, 2);
    bad(0, 0) = NAN;
    EXPECT_THROW(DeepNet({bad}), StructuralError);
    DeepNet net({rng.normal_matrix(2, 3)});
    EXPECT_THROW(forward_trace(net, vec({1, 2})), StructuralError);
    EXPECT_THROW(backprop_labels(net, vec({1, 2, 3}), vec({1})), StructuralError);
}

TEST(Backprop, DepthOneIsLeastSquares) {
    Rng rng(44);
    DeepNet net({rng.normal_matrix(2, 3)});
    const Vector x = rng.normal_vector(3), y = rng.normal_vector(2);
    const auto probs = backprop_labels(net, x, y);
    ASSERT_EQ(probs.size(), 1u);
    EXPECT_TRUE(probs[0].linear);
    EXPECT_LE((probs[0].label - y).norm(), 1e-14 * std::max(1.0, y.norm()));
    EXPECT_LE((layer_gradient(net.weight(1), probs[0]) - (net.weight(1) * x - y) * x.transpose()).norm(),
              1e-14);
}

TEST(Backprop, LabelsAreOutputMinusDelta) {
    Rng rng(45);
    const auto net = random_net(rng, {3, 5, 4, 2});
    const auto probs = backprop_labels(net, rng.normal_vector(3), rng.normal_vector(2));
    for (const auto& p : probs) EXPECT_EQ(p.label, Vector(p.output - p.delta));
}

TEST(BackpropProperty, GradientEquivalence) {
    Rng rng(46);
    for (int trial = 0; trial < 100; ++trial) {
        const auto net = random_net(rng, random_dims(rng, 1 + rng.integer(0, 3)));
        const Vector x = rng.normal_vector(net.input_dim());
        const Vector y = rng.normal_vector(net.output_dim());
        const auto ours = network_gradient(net, x, y);
        const auto oracle = chain_rule(net, x, y);
        const auto probs = backprop_labels(net, x, y);
        for (std::size_t m = 0; m < ours.size(); ++m) {
            EXPECT_LE((ours[m] - oracle[m]).cwiseAbs().maxCoeff(), 1e-10);
            const Matrix outer = probs[m].delta * probs[m].input.transpose();
            EXPECT_LE((outer - oracle[m]).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(Backprop, FiniteDifferenceSpotCheck) {
    Rng rng(47);
    const auto net = random_net(rng, {3, 4, 4, 2});
    const Vector x = rng.normal_vector(3), y = rng.normal_vector(2);
    const auto g = network_gradient(net, x, y);
    const double h = 1e-6;
    for (Index m = 1; m <= net.depth(); ++m) {
        for (Index r = 0; r < net.weight(m).rows(); ++r) {
            for (Index c = 0; c < net.weight(m).cols(); ++c) {
                DeepNet a = net, b = net;
                a.weight(m)(r, c) += h;
                b.weight(m)(r, c) -= h;
                const double fd = (network_loss(a, x, y) - network_loss(b, x, y)) / (2 * h);
                EXPECT_NEAR(g[static_cast<std::size_t>(m - 1)](r, c), fd, 1e-6);
            }
        }
    }
}

TEST(Backprop, DeadLayerGivesZeroGradients) {
    Rng rng(48);
    std::vector<Matrix> w{-rng.uniform_matrix(4, 3, 0.1, 1.0), rng.normal_matrix(3, 4), rng.normal_matrix(2, 3)};
    DeepNet net(w);
    const Vector x = rng.uniform_vector(3, 0.1, 1.0);
    const Vector y = rng.normal_vector(2);
    const auto probs = backprop_labels(net, x, y);
    EXPECT_TRUE(probs[0].output.isZero());
    EXPECT_TRUE(probs[0].delta.isZero());
    const auto ours = network_gradient(net, x, y);
    const auto oracle = chain_rule(net, x, y);
    EXPECT_TRUE(ours[0].isZero());
    EXPECT_TRUE(oracle[0].isZero());
    EXPECT_TRUE(ours[1].isZero());
    EXPECT_TRUE(oracle[1].isZero());
}

TEST(BackpropProperty, ZeroDeltaPropagatesDown) {
    Rng rng(49);
    int seen = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const auto net = random_net(rng, random_dims(rng, 2 + rng.integer(0, 2)));
        const auto probs = backprop_labels(net, rng.normal_vector(net.input_dim()),
                                           rng.normal_vector(net.output_dim()));
        for (std::size_t m = probs.size(); m-- > 1;) {
            if (!probs[m].delta.isZero()) continue;
            ++seen;
            for (std::size_t k = 0; k < m; ++k) EXPECT_TRUE(probs[k].delta.isZero());
        }
    }
    EXPECT_GT(seen, 0);
}

TEST(RowDecompose, SingleOutputIsIdentity) {
    Rng rng(50);
    MultiDataset md(rng.normal_matrix(3, 5), rng.normal_matrix(1, 5));
    const Matrix w = rng.normal_matrix(1, 3);
    const auto rows = row_decompose(w, md);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].ds.x(), md.x);
    EXPECT_EQ(rows[0].ds.y(), Vector(md.y.row(0).transpose()));
    EXPECT_DOUBLE_EQ(loss(rows[0].ds, rows[0].weight), multi_loss(w, md));
}

TEST(RowDecomposeProperty, LossAndGradientAdd) {
    Rng rng(51);
    for (int trial = 0; trial < 100; ++trial) {
        const Index din = 1 + rng.integer(0, 5), dout = 1 + rng.integer(0, 4), n = 1 + rng.integer(0, 8);
        MultiDataset md(rng.normal_matrix(din, n), rng.normal_matrix(dout, n));
        const Matrix w = rng.normal_matrix(dout, din);
        const auto rows = row_decompose(w, md);
        double total = 0.0;
        Matrix stacked(dout, din);
        for (const auto& r : rows) {
            total += loss(r.ds, r.weight);
            stacked.row(r.row) = gradient(r.ds, r.weight).transpose();
        }
        // Direct oracle: elementwise loss and gradient.
        double direct = 0.0;
        Matrix g = Matrix::Zero(dout, din);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < dout; ++j) {
                const double z = w.row(j).dot(md.x.col(i));
                const double r = (z > 0 ? z : 0.0) - md.y(j, i);
                direct += 0.5 * r * r;
                if (z > 0) g.row(j) += r * md.x.col(i).transpose();
            }
        }
        EXPECT_NEAR(total, direct, 1e-12 * std::max(1.0, direct));
        EXPECT_NEAR(multi_loss(w, md), direct, 1e-12 * std::max(1.0, direct));
        EXPECT_LE((stacked - g).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()));
        EXPECT_LE((multi_gradient(w, md) - g).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()));
    }
}

TEST(RowDecompose, ZeroLabelRowIsFlagged) {
    Rng rng(52);
    Matrix y = rng.uniform_matrix(3, 4, 0.1, 1.0);
    y.row(2).setZero();
    MultiDataset md(rng.uniform_matrix(2, 4, 0.1, 1.0), y);
    const auto rows = row_decompose(rng.normal_matrix(3, 2), md);
    EXPECT_TRUE(rows[0].labels_positive);
    EXPECT_FALSE(rows[2].labels_positive);
    EXPECT_TRUE(rows[2].ds.y().isZero());
    EXPECT_FALSE(validate_dataset(rows[2].ds, AssumptionSet{Assumption::A2}).passed);
}

TEST(RowDecompose, ShapeErrors) {
    Rng rng(53);
    MultiDataset md(rng.normal_matrix(2, 4), rng.normal_matrix(3, 4));
    EXPECT_THROW(row_decompose(rng.normal_matrix(3, 3), md), StructuralError);
    EXPECT_THROW(MultiDataset(rng.normal_matrix(2, 4), rng.normal_matrix(3, 5)), StructuralError);
}

TEST(Balancedness, InterpolatingStartHasNoDrift) {
    Rng rng(54);
    const auto net = random_net(rng, {3, 4, 2});
    const Vector x = rng.normal_vector(3);
    const Vector y = forward_trace(net, x).back().output;
    const auto rep = balancedness_drift(net, x, y, 1e-2, 100);
    EXPECT_EQ(rep.max_drift(), 0.0);
}

TEST(Balancedness, SingleLayerHasNoPairs) {
    Rng rng(55);
    DeepNet net({rng.normal_matrix(2, 3)});
    const auto rep = balancedness_drift(net, rng.normal_vector(3), rng.normal_vector(2), 1e-2, 10);
    EXPECT_TRUE(rep.pairs.empty());
    EXPECT_THROW(balancedness_drift(net, rng.normal_vector(3), rng.normal_vector(2), 0.0, 10),
                 PreconditionError);
}

TEST(Balancedness, HalvingStepHalvesDrift) {
    Rng rng(56);
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        auto net = random_net(rng, {3, 4, 2});
        const Vector x = rng.normal_vector(3), y = rng.normal_vector(2);
        const double horizon = 2.0;
        const auto a = balancedness_drift(net, x, y, 1e-3, static_cast<long>(horizon / 1e-3));
        const auto b = balancedness_drift(net, x, y, 5e-4, static_cast<long>(horizon / 5e-4));
        ASSERT_FALSE(a.unstable);
        ASSERT_FALSE(b.unstable);
        if (a.max_drift() < 1e-12) continue;  // the pattern can freeze the gradients
        ++checked;
        const double ratio = a.max_drift() / b.max_drift();
        EXPECT_GE(ratio, 1.33) << "trial " << trial;
        EXPECT_LE(ratio, 3.0) << "trial " << trial;
    }
    EXPECT_GT(checked, 5);
}

TEST(Balancedness, LargeStepIsFlaggedUnstable) {
    Rng rng(57);
    // A linear layer with step * |x|^2 > 2 grows geometrically.
    DeepNet net({rng.normal_matrix(2, 3)});
    const auto rep = balancedness_drift(net, vec({1.0, 1.0, 1.0}), vec({1.0, 1.0}), 5.0, 200);
    EXPECT_TRUE(rep.unstable);
}
