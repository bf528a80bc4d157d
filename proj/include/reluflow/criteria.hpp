#pragma once

#include "reluflow/flow.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace reluflow {

struct AlphaThreshold {
    double alpha = 0.0;
    /// x_j . H w0 < 0: the gradient sign test holds for alpha <= alpha*
    /// instead of alpha >= alpha*.
    bool reversed = false;
};

inline AlphaThreshold alpha_threshold(const Dataset& ds, const Vector& w0, Index j) {
    if (w0.size() != ds.d()) throw StructuralError("w0 has the wrong dimension");
    if (j < 0 || j >= ds.n()) throw StructuralError("data index out of range");
    const double scale = std::max(1e-300, w0.norm());
    for (Index i = 0; i < ds.n(); ++i) {
        if (std::abs(ds.input(i).dot(w0)) <= 1e-12 * ds.input(i).norm() * scale) {
            throw PreconditionError("w0 lies on the boundary of datum " + std::to_string(i));
        }
    }
    const QuadraticPiece piece = quadratic_piece(ds, pattern_of(ds, w0));
    const Vector xj = ds.input(j);
    const double den = xj.dot(piece.h * w0);
    if (std::abs(den) < 1e-12) throw DegenerateDirectionError("x_j . H w0 vanishes");
    return {xj.dot(piece.q) / den, den < 0.0};
}

inline double alpha_star(const Dataset& ds, const Vector& w0, Index j) {
    return alpha_threshold(ds, w0, j).alpha;
}

namespace detail {

inline void require_interpolating(const Dataset& ds, const Vector& w_gm) {
    if (w_gm.size() != ds.d()) throw StructuralError("w_gm has the wrong dimension");
    if (!(loss(ds, w_gm) <= 1e-10)) {
        throw PreconditionError("w_gm does not interpolate the data (loss " +
                                std::to_string(loss(ds, w_gm)) + ")");
    }
}

}  // namespace detail

/// y_j / |x_j| > |w0 - w_gm|. A start with x_j . w0 = 0 is accepted as the
/// limiting case; x_j . w0 < 0 violates the hypothesis.
inline bool no_deactivation_certificate(const Dataset& ds, const Vector& w0, const Vector& w_gm,
                                        Index j) {
    detail::require_interpolating(ds, w_gm);
    if (w0.size() != ds.d()) throw StructuralError("w0 has the wrong dimension");
    if (j < 0 || j >= ds.n()) throw StructuralError("data index out of range");
    if (ds.input(j).dot(w0) < 0.0) throw PreconditionError("datum is inactive at w0");
    return ds.label(j) / ds.input(j).norm() > (w0 - w_gm).norm();
}

struct ExclusionEntry {
    Index minimum = 0;  // census index
    bool vacuous = false;        // S^c empty
    double literal_lhs = -std::numeric_limits<double>::infinity();  // max over S^c
    double active_lhs = -std::numeric_limits<double>::infinity();   // max over S^c active at w0
    double rhs = 0.0;
    bool excluded_literal = false;  // literal_lhs >= rhs
    bool excluded = false;          // active_lhs > rhs
};

struct ExclusionReport {
    std::vector<ExclusionEntry> entries;
    std::vector<Index> excluded() const {
        std::vector<Index> out;
        for (const auto& e : entries) {
            if (e.excluded) out.push_back(e.minimum);
        }
        return out;
    }
};

inline ExclusionReport exclusion_report(const Dataset& ds, const Vector& w0, const Vector& w_gm,
                                        const MinimaCensus& census) {
    detail::require_interpolating(ds, w_gm);
    ExclusionReport rep;
    const double rhs = (w0 - w_gm).norm();
    for (std::size_t k = 0; k < census.minima.size(); ++k) {
        const auto& p = census.minima[k].pattern;
        ExclusionEntry e;
        e.minimum = static_cast<Index>(k);
        e.rhs = rhs;
        e.vacuous = p.count() == ds.n();
        for (Index j : p.inactive()) {
            const double v = ds.label(j) / ds.input(j).norm();
            e.literal_lhs = std::max(e.literal_lhs, v);
            if (ds.input(j).dot(w0) > 0.0) e.active_lhs = std::max(e.active_lhs, v);
        }
        if (!e.vacuous) {
            e.excluded_literal = e.literal_lhs >= rhs;
            e.excluded = e.active_lhs > rhs;
        }
        rep.entries.push_back(e);
    }
    return rep;
}

inline std::vector<Index> bad_minimum_exclusion(const Dataset& ds, const Vector& w0,
                                                const Vector& w_gm, const MinimaCensus& census) {
    return exclusion_report(ds, w0, w_gm, census).excluded();
}

struct CosineForm {
    double lhs = -std::numeric_limits<double>::infinity();
    double rhs = 0.0;
    bool vacuous = false;
    bool holds = false;  // lhs > rhs
};

inline CosineForm cosine_form(const Dataset& ds, const Vector& w0, const Vector& w_gm,
                              const std::vector<Index>& support) {
    detail::require_interpolating(ds, w_gm);
    const double ng = w_gm.norm();
    if (ng == 0.0) throw PreconditionError("w_gm is zero");
    CosineForm out;
    std::vector<bool> in(static_cast<std::size_t>(ds.n()), false);
    for (Index i : support) {
        if (i < 0 || i >= ds.n()) throw StructuralError("support index out of range");
        in[static_cast<std::size_t>(i)] = true;
    }
    out.vacuous = true;
    for (Index j = 0; j < ds.n(); ++j) {
        if (in[static_cast<std::size_t>(j)]) continue;
        out.vacuous = false;
        const Vector xj = ds.input(j);
        out.lhs = std::max(out.lhs, xj.dot(w_gm) / (xj.norm() * ng));
    }
    out.rhs = (w0 - w_gm).norm() / ng;
    out.holds = !out.vacuous && out.lhs > out.rhs;
    return out;
}

/// Data needed to evaluate the boundary conditions at one crossing.
struct BoundaryCrossingContext {
    Vector w0;
    Index index = -1;
    Vector x0;
    double y0 = 0.0;
    bool activating = false;
    ActivationPattern pre, post;
    Matrix h, h_post;
    Vector eig_pre, eig_post;  // descending; eig_post permuted to pair with eig_pre
    Matrix vec_pre, vec_post;  // columns paired and sign aligned
    Index rank_pre = 0, rank_post = 0;
    Vector w_pre, w_post;  // virtual minimizers (min-norm)
    Vector c, cstar, c_post, cstar_post;
};

namespace detail {

// Permutation of post columns maximizing total |overlap| with the pre columns.
inline std::vector<Index> pair_eigenvectors(const Matrix& a, const Matrix& b) {
    const Index d = a.cols();
    const Matrix ov = (a.transpose() * b).cwiseAbs();
    std::vector<Index> perm(static_cast<std::size_t>(d));
    std::iota(perm.begin(), perm.end(), 0);
    if (d > 8) {
        std::vector<bool> used(static_cast<std::size_t>(d), false);
        for (Index k = 0; k < d; ++k) {
            Index best = -1;
            for (Index l = 0; l < d; ++l) {
                if (!used[static_cast<std::size_t>(l)] && (best < 0 || ov(k, l) > ov(k, best))) best = l;
            }
            used[static_cast<std::size_t>(best)] = true;
            perm[static_cast<std::size_t>(k)] = best;
        }
        return perm;
    }
    std::vector<Index> best = perm;
    double best_score = -1.0;
    do {
        double s = 0.0;
        for (Index k = 0; k < d; ++k) s += ov(k, perm[static_cast<std::size_t>(k)]);
        if (s > best_score + 1e-14) {
            best_score = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace detail

inline BoundaryCrossingContext crossing_context(const Dataset& ds, const Vector& w0, Index index,
                                                const ActivationPattern& pre,
                                                const ActivationPattern& post) {
    if (w0.size() != ds.d()) throw StructuralError("w0 has the wrong dimension");
    if (pre.size() != ds.n() || post.size() != ds.n()) throw StructuralError("pattern length mismatch");
    for (Index i = 0; i < ds.n(); ++i) {
        if ((pre[i] != post[i]) != (i == index)) {
            throw StructuralError("patterns must differ exactly at the crossing datum");
        }
    }
    BoundaryCrossingContext ctx;
    ctx.w0 = w0;
    ctx.index = index;
    ctx.x0 = ds.input(index);
    ctx.y0 = ds.label(index);
    ctx.activating = post[index];
    ctx.pre = pre;
    ctx.post = post;
    const QuadraticPiece a = quadratic_piece(ds, pre);
    const QuadraticPiece b = quadratic_piece(ds, post);
    ctx.h = a.h;
    ctx.h_post = b.h;
    const SpectralDecomposition sa = piece_spectrum(ds, pre);
    const SpectralDecomposition sb = piece_spectrum(ds, post);
    if (!sa.values.allFinite() || !sb.values.allFinite()) throw NumericalError("eigen-solve failed");
    ctx.rank_pre = sa.rank;
    ctx.rank_post = sb.rank;
    ctx.w_pre = pseudo_solve(sa, a.q);
    ctx.w_post = pseudo_solve(sb, b.q);
    ctx.eig_pre = sa.values;
    ctx.vec_pre = sa.vectors;
    // Pre eigenvectors signed so that the virtual minimizer has c* >= 0.
    for (Index k = 0; k < ds.d(); ++k) {
        if (ctx.vec_pre.col(k).dot(ctx.w_pre) < 0.0) ctx.vec_pre.col(k) *= -1.0;
    }
    const auto perm = detail::pair_eigenvectors(ctx.vec_pre, sb.vectors);
    ctx.eig_post.resize(ds.d());
    ctx.vec_post.resize(ds.d(), ds.d());
    for (Index k = 0; k < ds.d(); ++k) {
        const Index l = perm[static_cast<std::size_t>(k)];
        ctx.eig_post(k) = sb.values(l);
        Vector v = sb.vectors.col(l);
        if (v.dot(ctx.vec_pre.col(k)) < 0.0) v = -v;
        ctx.vec_post.col(k) = v;
    }
    ctx.c = ctx.vec_pre.transpose() * w0;
    ctx.cstar = ctx.vec_pre.transpose() * ctx.w_pre;
    ctx.c_post = ctx.vec_post.transpose() * w0;
    ctx.cstar_post = ctx.vec_post.transpose() * ctx.w_post;
    return ctx;
}

/// Context of the k-th event of a trajectory (transversal events only).
inline BoundaryCrossingContext crossing_context(const Trajectory& tr, std::size_t event) {
    if (event >= tr.events.size() || event + 1 >= tr.segments.size()) {
        throw StructuralError("no crossing with that event number");
    }
    const auto& e = tr.events[event];
    const auto& a = tr.segments[event];
    const auto& b = tr.segments[event + 1];
    if (a.sliding || b.sliding) throw PreconditionError("sliding events have no crossing context");
    return crossing_context(tr.ds, e.point, e.index, a.pattern, b.pattern);
}

struct BConditionReport {
    std::vector<double> b1_lhs, b1_rhs;  // per k
    bool b1 = false;
    double b2_lhs = 0.0, b2_rhs = 0.0;
    bool b2 = false;
    bool b3 = false;
    double b4_value = 0.0;
    bool b4 = false;
    bool all() const { return b1 && b2 && b3 && b4; }
};

inline BConditionReport check_B_conditions(const BoundaryCrossingContext& ctx) {
    BConditionReport r;
    const Index d = ctx.w0.size();
    const Index rk = ctx.rank_pre;
    const double wn = ctx.w0.norm();
    const double lmax = rk > 0 ? ctx.eig_pre(0) : 0.0;
    const double lmin = rk > 0 ? ctx.eig_pre(rk - 1) : 0.0;
    r.b1 = rk > 0 && wn > 0.0;
    for (Index k = 0; k < d; ++k) {
        const double lhs = (ctx.vec_post.col(k) - ctx.vec_pre.col(k)).norm();
        const double rhs = (rk > 0 && wn > 0.0) ? lmin / lmax * ctx.c(k) / wn
                                                : -std::numeric_limits<double>::infinity();
        r.b1_lhs.push_back(lhs);
        r.b1_rhs.push_back(rhs);
        r.b1 = r.b1 && lhs < rhs;
    }

    // H^-1 is taken as the pseudo-inverse; the minimum runs over positive modes.
    double quad = 0.0;
    for (Index k = 0; k < rk; ++k) {
        const double p = ctx.vec_pre.col(k).dot(ctx.x0);
        quad += p * p / ctx.eig_pre(k);
    }
    double m = std::numeric_limits<double>::infinity();
    const double dist = (ctx.w_post - ctx.w0).norm();
    for (Index k = 0; k < rk; ++k) {
        const double lk = ctx.eig_pre(k);
        double term;
        if (ctx.c(k) > 0.0 && wn > 0.0) {
            term = ((ctx.cstar(k) / ctx.c(k) - 1.0) / lk - dist / (wn * lmax)) * ctx.c(k) * lk * lk;
        } else {
            term = -std::numeric_limits<double>::infinity();
        }
        m = std::min(m, term);
    }
    if (rk == 0) m = -std::numeric_limits<double>::infinity();
    r.b2_lhs = ctx.y0;
    r.b2_rhs = ctx.x0.dot(ctx.w_pre) + (1.0 - quad) / ctx.x0.norm() * m;
    r.b2 = std::isfinite(m) && r.b2_lhs < r.b2_rhs;
    r.b3 = ctx.rank_post == d;
    r.b4_value = ctx.x0.dot(ctx.w_pre);
    r.b4 = r.b4_value < 0.0;
    return r;
}

}  // namespace reluflow
