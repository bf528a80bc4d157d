#pragma once

#include "reluflow/partition.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace reluflow {

struct VirtualMinimizer {
    ActivationPattern pattern;
    Vector point;       // minimum-norm minimizer of the piece
    Matrix null_basis;  // d x (d - rank)
    Index rank = 0;
    bool contained = false;
    double loss = 0.0;
    /// A point of the minimizer set inside the pattern's region (active data
    /// strictly positive, inactive data nonpositive). Equal to point when the
    /// piece has full rank; empty when not contained.
    Vector witness;
    double margin = 0.0;  // min over active i of witness . xhat_i
};

/// Spectrum of the active Gram matrix, via the active columns.
inline SpectralDecomposition piece_spectrum(const Dataset& ds, const ActivationPattern& p) {
    return gram_spectrum(active_columns(ds, p), ds.d());
}

/// Minimizer of the piece without the feasibility check on the pattern.
inline VirtualMinimizer piece_minimizer(const Dataset& ds, const ActivationPattern& p) {
    VirtualMinimizer vm;
    vm.pattern = p;
    const QuadraticPiece piece = quadratic_piece(ds, p);
    const SpectralDecomposition s = piece_spectrum(ds, p);
    vm.rank = s.rank;
    vm.point = pseudo_solve(s, piece.q);
    vm.null_basis = s.null_basis();
    vm.loss = piece_loss(ds, p, vm.point);

    const Vector proj = ds.x().transpose() * vm.point;
    if (vm.rank == ds.d() || vm.rank == 0) {
        bool ok = true;
        double margin = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < ds.n(); ++i) {
            if (p[i]) {
                ok = ok && proj(i) > 0.0;
                margin = std::min(margin, proj(i) / ds.input(i).norm());
            } else {
                ok = ok && proj(i) <= 0.0;
            }
        }
        vm.contained = ok;
        if (ok) {
            vm.witness = vm.point;
            vm.margin = p.count() == 0 ? 0.0 : margin;
        }
        return vm;
    }

    const Matrix u = unit_inputs(ds);
    const double need = kFeasibilityMargin * std::max(1.0, vm.point.norm());
    std::vector<MarginProgram::Row> rows;
    for (Index i = 0; i < ds.n(); ++i) {
        rows.push_back({u.col(i), p[i] ? 1.0 : -1.0, static_cast<bool>(p[i])});
    }
    const auto weak = MarginProgram::solve(vm.point, vm.null_basis, rows);
    if (!weak.feasible || weak.margin <= need) {
        return vm;
    }
    vm.contained = true;
    // Prefer a witness off the inactive boundaries as well.
    for (auto& r : rows) r.strict = true;
    const auto strict = MarginProgram::solve(vm.point, vm.null_basis, rows);
    Vector w = weak.point;
    double margin = weak.margin;
    if (strict.feasible && strict.margin > need) {
        w = strict.point;
        margin = strict.margin;
    } else {
        // Inactive rows left slightly positive by the solver: move back onto
        // their hyperplanes inside the minimizer set.
        std::vector<Index> slip;
        const Vector pw = ds.x().transpose() * w;
        for (Index i = 0; i < ds.n(); ++i) {
            if (!p[i] && pw(i) > 0.0) slip.push_back(i);
        }
        if (!slip.empty()) {
            Matrix a(static_cast<Index>(slip.size()), vm.null_basis.cols());
            Vector rhs(static_cast<Index>(slip.size()));
            for (std::size_t k = 0; k < slip.size(); ++k) {
                a.row(static_cast<Index>(k)) = ds.input(slip[k]).transpose() * vm.null_basis;
                rhs(static_cast<Index>(k)) = -pw(slip[k]);
            }
            w += vm.null_basis * a.completeOrthogonalDecomposition().solve(rhs);
        }
    }
    vm.witness = w;
    vm.margin = margin;
    return vm;
}

inline VirtualMinimizer virtual_minimizer(const Dataset& ds, const ActivationPattern& p) {
    if (p.size() != ds.n()) throw StructuralError("pattern length does not match dataset");
    if (!is_feasible(ds, p)) {
        throw GeometryError("pattern " + p.str() + " has an empty interior");
    }
    return piece_minimizer(ds, p);
}

struct MinimaCensus {
    std::vector<VirtualMinimizer> minima;  // contained, nonzero patterns
    Index global_index = -1;
    std::vector<std::vector<Index>> support_sets;
    /// The all-inactive cone is stationary with constant loss; it is kept
    /// apart from the point-like entries.
    bool stationary_cone = false;
    double stationary_cone_loss = 0.0;
    Index partition_count = 0;

    const VirtualMinimizer& global() const {
        if (global_index < 0) throw GeometryError("census has no minimum");
        return minima[static_cast<std::size_t>(global_index)];
    }

    /// Entry whose minimizer set contains w (within radius), or -1.
    Index match(const Vector& w, double radius) const {
        for (std::size_t k = 0; k < minima.size(); ++k) {
            const auto& m = minima[k];
            Vector diff = w - m.point;
            if (m.null_basis.cols() > 0) diff -= m.null_basis * (m.null_basis.transpose() * diff);
            if (diff.norm() <= radius) return static_cast<Index>(k);
        }
        return -1;
    }
};

inline MinimaCensus minima_census(const Dataset& ds) {
    const auto cells = enumerate_partitions(ds);
    MinimaCensus census;
    census.partition_count = static_cast<Index>(cells.size());
    for (const auto& cell : cells) {
        if (cell.pattern.count() == 0) {
            census.stationary_cone = true;
            census.stationary_cone_loss = 0.5 * ds.y().squaredNorm();
            continue;
        }
        VirtualMinimizer vm = piece_minimizer(ds, cell.pattern);
        if (!vm.contained) continue;
        census.support_sets.push_back(cell.pattern.active());
        census.minima.push_back(std::move(vm));
    }
    for (std::size_t k = 0; k < census.minima.size(); ++k) {
        if (census.global_index < 0) {
            census.global_index = static_cast<Index>(k);
            continue;
        }
        const auto& a = census.minima[k];
        const auto& b = census.minima[static_cast<std::size_t>(census.global_index)];
        const double tie = 1e-12 * std::max(1.0, std::abs(b.loss));
        bool better = false;
        if (a.loss < b.loss - tie) {
            better = true;
        } else if (std::abs(a.loss - b.loss) <= tie) {
            if (a.pattern.count() != b.pattern.count()) {
                better = a.pattern.count() < b.pattern.count();
            } else {
                better = a.pattern.str() < b.pattern.str();
            }
        }
        if (better) census.global_index = static_cast<Index>(k);
    }
    return census;
}

struct SupportPair {
    Index larger = 0;   // census index with the bigger support set S_1
    Index smaller = 0;  // census index with S_2 a strict subset of S_1
    double margin = 0.0;  // L(w_2*) - L(w_1*)
    bool holds = true;
};

struct SupportOrderingReport {
    std::vector<SupportPair> pairs;
    bool holds = true;
};

inline SupportOrderingReport compare_support_losses(const MinimaCensus& census,
                                                    double slack = 1e-10) {
    SupportOrderingReport rep;
    const std::size_t m = census.minima.size();
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = 0; b < m; ++b) {
            if (a == b) continue;
            const auto& big = census.minima[a].pattern;
            const auto& small = census.minima[b].pattern;
            if (!small.subset_of(big) || small == big) continue;
            SupportPair pr;
            pr.larger = static_cast<Index>(a);
            pr.smaller = static_cast<Index>(b);
            pr.margin = census.minima[b].loss - census.minima[a].loss;
            const double scale = std::max(1.0, std::abs(census.minima[a].loss));
            pr.holds = pr.margin >= -slack * scale;
            rep.holds = rep.holds && pr.holds;
            rep.pairs.push_back(pr);
        }
    }
    return rep;
}

/// Minimum-norm least-squares weight over all data.
inline Vector least_squares(const Dataset& ds) {
    return pseudo_solve(gram_spectrum(ds.x(), ds.d()), ds.moment());
}

struct LossGap {
    double relu_global_loss = 0.0;
    double linear_global_loss = 0.0;
    bool holds = true;
};

inline LossGap relu_vs_linear_gap(const Dataset& ds, const MinimaCensus& census) {
    LossGap gap;
    gap.linear_global_loss = linear_loss(ds, least_squares(ds));
    double relu = census.stationary_cone ? census.stationary_cone_loss
                                         : std::numeric_limits<double>::infinity();
    if (census.global_index >= 0) relu = std::min(relu, census.global().loss);
    gap.relu_global_loss = relu;
    gap.holds = relu <= gap.linear_global_loss + 1e-10 * std::max(1.0, gap.linear_global_loss);
    return gap;
}

inline LossGap relu_vs_linear_gap(const Dataset& ds) {
    return relu_vs_linear_gap(ds, minima_census(ds));
}

}  // namespace reluflow
