#pragma once

#include "reluflow/expsum.hpp"
#include "reluflow/landscape.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace reluflow {

struct FlowConfig {
    double event_tol = 1e-12;     // boundary tolerance in units of |x_j| max(1, |w|)
    double converge_tol = 1e-10;  // residual gradient threshold (relative to max(1, |q|))
    double t_max = 1e6;
    Index max_events = 0;  // 0 means 10 n d
    double bracket_factor = 2.0;

    void check() const {
        if (!(event_tol > 0 && converge_tol > 0 && t_max > 0 && bracket_factor > 1.0) ||
            max_events < 0) {
            throw PreconditionError("flow configuration values must be positive");
        }
    }
};

enum class EventKind { Activation, Deactivation, Sliding };

inline std::string to_string(EventKind k) {
    switch (k) {
        case EventKind::Activation: return "activation";
        case EventKind::Deactivation: return "deactivation";
        case EventKind::Sliding: return "sliding";
    }
    return "?";
}

enum class TerminalKind { Converged, HorizonReached, EventCap };

inline std::string to_string(TerminalKind k) {
    switch (k) {
        case TerminalKind::Converged: return "converged";
        case TerminalKind::HorizonReached: return "horizon-reached";
        case TerminalKind::EventCap: return "event-cap";
    }
    return "?";
}

/// Exact solution of  dw/dt = q - H w  from w_start, written in the
/// eigenbasis of H. Modes with zero eigenvalue keep their coordinate.
struct FlowSegment {
    ActivationPattern pattern;
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::infinity();
    Vector w_start;
    Vector eigenvalues;   // d, descending; zero beyond rank
    Matrix eigenvectors;  // d x d
    Vector c0;            // eigen-coordinates of w_start
    Vector cstar;         // target coordinates; equal to c0 on null modes
    Index rank = 0;
    Matrix h;  // effective field: dw/dt = q - h w
    Vector q;
    bool sliding = false;
    Index sliding_index = -1;          // smallest index in sliding_set
    std::vector<Index> sliding_set;    // data held on their boundary, sorted

    double duration() const { return t_end - t_start; }

    Vector at(double t) const {
        const double tau = t - t_start;
        Vector w = w_start;
        for (Index k = 0; k < rank; ++k) {
            w += ((cstar(k) - c0(k)) * -std::expm1(-eigenvalues(k) * tau)) * eigenvectors.col(k);
        }
        return w;
    }

    Vector velocity(double t) const {
        const double tau = t - t_start;
        Vector v = Vector::Zero(w_start.size());
        for (Index k = 0; k < rank; ++k) {
            v += ((cstar(k) - c0(k)) * eigenvalues(k) * std::exp(-eigenvalues(k) * tau)) *
                 eigenvectors.col(k);
        }
        return v;
    }

    Vector limit() const {
        Vector w = w_start;
        for (Index k = 0; k < rank; ++k) w += (cstar(k) - c0(k)) * eigenvectors.col(k);
        return w;
    }

    Vector end_point() const { return std::isinf(t_end) ? limit() : at(t_end); }

    double lambda_min_positive() const { return rank > 0 ? eigenvalues(rank - 1) : 0.0; }

    /// alpha + beta . w(t_start + tau) as an exponential sum in tau.
    ExpSum affine(const Vector& beta, double alpha) const {
        std::vector<double> rates, coefs;
        for (Index k = 0; k < rank; ++k) {
            rates.push_back(eigenvalues(k));
            coefs.push_back((c0(k) - cstar(k)) * beta.dot(eigenvectors.col(k)));
        }
        return ExpSum(alpha + beta.dot(limit()), rates, coefs);
    }
};

struct FlowEvent {
    double t = 0.0;
    Index index = -1;
    EventKind kind = EventKind::Deactivation;
    Vector point;
    bool tie = false;  // another boundary was hit within tolerance at the same time
};

struct Trajectory {
    Dataset ds;
    bool linear = false;
    std::vector<FlowSegment> segments;
    std::vector<FlowEvent> events;
    TerminalKind terminal = TerminalKind::Converged;
    Vector terminal_point;
    bool limit_on_boundary = false;
    double gradient_norm = 0.0;
    // Largest root count seen for one boundary function on one segment, and
    // the term count of that function.
    Index max_roots = 0;
    Index max_root_terms = 0;
    bool root_bound_held = true;

    const FlowSegment& segment_at(double t) const {
        for (const auto& s : segments) {
            if (t <= s.t_end) return s;
        }
        return segments.back();
    }

    Vector point_at(double t) const { return segment_at(t).at(t); }

    double end_time() const { return segments.empty() ? 0.0 : segments.back().t_end; }
};

namespace detail {

/// Orthogonal projector onto the span of the given inputs.
inline Matrix span_projector(const Dataset& ds, const std::vector<Index>& set) {
    Matrix xs(ds.d(), static_cast<Index>(set.size()));
    for (std::size_t k = 0; k < set.size(); ++k) xs.col(static_cast<Index>(k)) = ds.input(set[k]);
    const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(xs);
    return xs * cod.pseudoInverse();
}

/// Filippov weights of the sliding data: lambda_j = alpha_j + beta_j . w, with
/// lambda 0 meaning the inactive side field and 1 the active side field.
struct SlidingWeights {
    Vector alpha;
    Matrix beta;  // row j
};

inline SlidingWeights sliding_weights(const Dataset& ds, const ActivationPattern& p,
                                      const std::vector<Index>& set) {
    const Index m = static_cast<Index>(set.size());
    Matrix xs(ds.d(), m);
    for (Index k = 0; k < m; ++k) xs.col(k) = ds.input(set[static_cast<std::size_t>(k)]);
    const Matrix pinv = Eigen::CompleteOrthogonalDecomposition<Matrix>(xs).pseudoInverse();
    const QuadraticPiece piece = quadratic_piece(ds, p);
    SlidingWeights sw{Vector(m), Matrix(m, ds.d())};
    for (Index k = 0; k < m; ++k) {
        const double y = ds.label(set[static_cast<std::size_t>(k)]);
        if (y == 0.0) throw NumericalError("sliding on a datum with zero label");
        sw.alpha(k) = -pinv.row(k).dot(piece.q) / y;
        sw.beta.row(k) = (piece.h * pinv.row(k).transpose()).transpose() / y;
    }
    return sw;
}

inline FlowSegment make_segment(const Dataset& ds, const ActivationPattern& p, const Vector& w,
                                double t, const std::vector<Index>& sliding_set) {
    FlowSegment seg;
    seg.pattern = p;
    seg.t_start = t;
    seg.w_start = w;
    Matrix cols = active_columns(ds, p);
    const QuadraticPiece piece = quadratic_piece(ds, p);
    seg.h = piece.h;
    seg.q = piece.q;
    if (!sliding_set.empty()) {
        const Matrix f = Matrix::Identity(ds.d(), ds.d()) - span_projector(ds, sliding_set);
        cols = f * cols;
        seg.h = f * piece.h * f;
        seg.q = f * piece.q;
        seg.sliding = true;
        seg.sliding_index = sliding_set.front();
        seg.sliding_set = sliding_set;
    }
    const SpectralDecomposition s = gram_spectrum(cols, ds.d());
    seg.eigenvalues = s.values;
    seg.eigenvectors = s.vectors;
    seg.rank = s.rank;
    seg.c0 = s.vectors.transpose() * w;
    seg.cstar = seg.c0;
    for (Index k = 0; k < s.rank; ++k) {
        seg.cstar(k) = s.vectors.col(k).dot(seg.q) / s.values(k);
    }
    if (!seg.cstar.allFinite() || !seg.c0.allFinite()) {
        throw NumericalError("non-finite spectral coordinates");
    }
    return seg;
}

struct Candidate {
    double tau = std::numeric_limits<double>::infinity();
    Index index = -1;
    int exit = 0;  // 0: data boundary, -1 / +1: sliding exit to inactive / active side
    bool tie = false;
};

inline void offer(Candidate& best, double tau, Index index, int exit, double tol) {
    const double slack = tol * std::max(1.0, std::abs(tau));
    if (tau < best.tau - slack) {
        const bool tie = std::abs(best.tau - tau) <= slack;
        best = {tau, index, exit, tie};
    } else if (std::abs(tau - best.tau) <= slack) {
        best.tie = true;
        if (index < best.index) {
            best.tau = tau;
            best.index = index;
            best.exit = exit;
        }
    }
}

}  // namespace detail

/// Gradient flow of the ReLU loss, solved exactly on each partition.
inline Trajectory simulate_flow(const Dataset& ds, const Vector& w0, const FlowConfig& cfg = {}) {
    cfg.check();
    if (w0.size() != ds.d()) throw StructuralError("initial weight has the wrong dimension");
    if (!w0.allFinite()) throw PreconditionError("initial weight is not finite");
    const Index max_events = cfg.max_events > 0 ? cfg.max_events : 10 * ds.n() * ds.d();

    Trajectory tr;
    tr.ds = ds;
    Vector w = w0;
    double t = 0.0;
    ActivationPattern p = pattern_of(ds, w0);
    std::vector<Index> sliding;
    Index released = -1;
    auto is_sliding = [&](Index j) { return std::binary_search(sliding.begin(), sliding.end(), j); };
    // A sliding set is admissible when its weights lie in [0, 1], up to slack.
    auto admissible = [&](const ActivationPattern& pat, const std::vector<Index>& set, const Vector& at) {
        if (set.empty()) return true;
        const detail::SlidingWeights sw = detail::sliding_weights(ds, pat, set);
        const Vector lam = sw.alpha + sw.beta * at;
        constexpr double slack = 1e-7;
        return lam.allFinite() && lam.minCoeff() >= -slack && lam.maxCoeff() <= 1.0 + slack;
    };
    auto projected_velocity = [&](const ActivationPattern& pat, const std::vector<Index>& set,
                                  const Vector& at) {
        const QuadraticPiece piece = quadratic_piece(ds, pat);
        Vector v = piece.q - piece.h * at;
        if (!set.empty()) v -= detail::span_projector(ds, set) * v;
        return v;
    };

    for (;;) {
        FlowSegment seg = detail::make_segment(ds, p, w, t, sliding);
        const double lmax = seg.rank > 0 ? seg.eigenvalues(0) : 1.0;
        RootOptions opt;
        opt.first_step = 1e-6 / lmax;
        opt.factor = cfg.bracket_factor;
        detail::Candidate best;
        const double wscale = std::max(1.0, w.norm());

        auto consider = [&](const ExpSum& f, double tol0, bool want_up, Index idx, int exit,
                            bool grazing = false) {
            // want_up: the event is f crossing from negative to positive.
            int s0 = side_sign(f, 0.0, +1, tol0);
            double tau_min = 0.0;
            if (grazing && std::abs(f(0.0)) <= tol0 &&
                std::abs(f.derivative(0.0, 1)) <= 1e-8 * f.magnitude(0.0, 1)) {
                // Released from sliding: the first derivative is zero up to round-off.
                const double d2 = f.derivative(0.0, 2);
                if (d2 != 0.0) s0 = d2 > 0 ? 1 : -1;
                tau_min = 1e-9 / lmax;
            }
            if (std::abs(f(0.0)) <= tol0) {
                if ((want_up && s0 > 0) || (!want_up && s0 < 0)) {
                    detail::offer(best, 0.0, idx, exit, cfg.event_tol);
                    return;
                }
            }
            opt.zero_tol = tol0;
            const auto roots = expsum_roots(f, 0.0, std::numeric_limits<double>::infinity(), opt);
            if (static_cast<Index>(roots.size()) > tr.max_roots) {
                tr.max_roots = static_cast<Index>(roots.size());
                tr.max_root_terms = static_cast<Index>(f.terms());
            }
            if (roots.size() > f.terms() + 1) tr.root_bound_held = false;
            if (roots.empty()) return;
            // Sign changes alternate; the first one in the wanted direction.
            int s = s0;
            for (double r : roots) {
                if (r <= tau_min) continue;
                const bool up = s < 0;
                if (s != 0 && up == want_up) {
                    detail::offer(best, r, idx, exit, cfg.event_tol);
                    return;
                }
                s = -s;
            }
        };

        for (Index j = 0; j < ds.n(); ++j) {
            if (is_sliding(j)) continue;
            const Vector xj = ds.input(j);
            const double tol0 = cfg.event_tol * xj.norm() * wscale;
            consider(seg.affine(xj, 0.0), tol0, !p[j], j, 0, j == released);
        }
        if (!sliding.empty()) {
            // Leaving at weight 0 goes to the inactive side, at weight 1 to the active side.
            const detail::SlidingWeights sw = detail::sliding_weights(ds, p, sliding);
            for (std::size_t k = 0; k < sliding.size(); ++k) {
                const Index r = static_cast<Index>(k);
                const Vector beta = sw.beta.row(r).transpose();
                const double alpha = sw.alpha(r);
                const double tol0 = cfg.event_tol * std::max(1.0, std::abs(alpha) + beta.norm() * wscale);
                consider(seg.affine(beta, alpha), tol0, false, sliding[k], -1);
                consider(seg.affine(beta, alpha - 1.0), tol0, true, sliding[k], +1);
            }
        }

        if (best.index < 0) {
            seg.t_end = std::numeric_limits<double>::infinity();
            const Vector lim = seg.limit();
            tr.terminal = TerminalKind::Converged;
            tr.terminal_point = lim;
            tr.gradient_norm = (seg.q - seg.h * lim).norm();
            const double margin = kFeasibilityMargin * std::max(1.0, lim.norm());
            for (Index j = 0; j < ds.n(); ++j) {
                const double s = ds.input(j).dot(lim) / ds.input(j).norm();
                if (std::abs(s) <= margin) tr.limit_on_boundary = true;
            }
            if (tr.gradient_norm >= cfg.converge_tol * std::max(1.0, seg.q.norm())) {
                throw NumericalError("segment limit is not stationary");
            }
            tr.segments.push_back(std::move(seg));
            break;
        }
        if (t + best.tau > cfg.t_max) {
            seg.t_end = cfg.t_max;
            tr.terminal = TerminalKind::HorizonReached;
            tr.terminal_point = seg.at(cfg.t_max);
            tr.gradient_norm = (seg.q - seg.h * tr.terminal_point).norm();
            tr.segments.push_back(std::move(seg));
            break;
        }
        seg.t_end = t + best.tau;
        Vector we = seg.at(seg.t_end);
        if (!we.allFinite()) throw NumericalError("non-finite point at event");
        if (static_cast<Index>(tr.events.size()) >= max_events) {
            tr.terminal = TerminalKind::EventCap;
            tr.terminal_point = we;
            tr.gradient_norm = (seg.q - seg.h * we).norm();
            tr.segments.push_back(std::move(seg));
            break;
        }
        tr.segments.push_back(seg);

        const Index j = best.index;
        const Vector xj = ds.input(j);
        we -= (xj.dot(we) / xj.squaredNorm()) * xj;

        FlowEvent ev;
        ev.t = seg.t_end;
        ev.index = j;
        ev.tie = best.tie;
        if (we.norm() <= 1e-10 * std::max(1.0, w0.norm())) {
            // Every boundary passes through the origin and the gradient vanishes there.
            ev.kind = p[j] ? EventKind::Deactivation : EventKind::Sliding;
            ev.point = Vector::Zero(ds.d());
            tr.events.push_back(std::move(ev));
            FlowSegment rest = detail::make_segment(ds, ActivationPattern(ds.n(), false),
                                                       Vector::Zero(ds.d()), seg.t_end, {});
            tr.segments.push_back(std::move(rest));
            tr.terminal = TerminalKind::Converged;
            tr.terminal_point = Vector::Zero(ds.d());
            tr.gradient_norm = 0.0;
            tr.limit_on_boundary = true;
            break;
        }
        released = best.exit != 0 ? j : -1;
        if (best.exit != 0) {
            sliding.erase(std::find(sliding.begin(), sliding.end(), j));
            if (best.exit > 0) {
                p.set(j, true);
                ev.kind = EventKind::Activation;
            } else {
                ev.kind = EventKind::Deactivation;
            }
        } else if (sliding.empty()) {
            const ActivationPattern flip = p.flipped(j);
            const double vx = xj.dot(projected_velocity(flip, sliding, we));
            if (p[j] ? vx <= 0.0 : vx >= 0.0) {
                ev.kind = p[j] ? EventKind::Deactivation : EventKind::Activation;
                p = flip;
            } else {
                p.set(j, false);
                sliding = {j};
                ev.kind = EventKind::Sliding;
            }
        } else {
            // Junction: choose states for the datum and the sliding set together.
            std::vector<Index> tight;
            for (Index i = 0; i < ds.n(); ++i) {
                const double tol = cfg.event_tol * ds.input(i).norm() * wscale;
                if (i == j || is_sliding(i) || std::abs(ds.input(i).dot(we)) <= tol) tight.push_back(i);
            }
            const std::size_t m = tight.size();
            if (m > 10) throw NumericalError("too many data on the boundary at a junction");
            std::size_t combos = 1;
            for (std::size_t k = 0; k < m; ++k) combos *= 3;
            std::vector<int> best_state;
            ActivationPattern best_p = p;
            std::vector<Index> best_set;
            std::pair<std::size_t, std::size_t> best_cost{m + 1, m + 1};
            std::vector<int> state(m);
            for (std::size_t code = 0; code < combos; ++code) {
                std::size_t c = code;
                for (std::size_t k = 0; k < m; ++k, c /= 3) state[k] = static_cast<int>(c % 3);
                ActivationPattern pat = p;
                std::vector<Index> set;
                std::size_t changed = 0;
                bool skip = false;
                for (std::size_t k = 0; k < m; ++k) {
                    const Index b = tight[k];
                    if (b == j && state[k] == (p[j] ? 1 : 0)) skip = true;
                    if (b != j && state[k] != (is_sliding(b) ? 2 : (p[b] ? 1 : 0))) ++changed;
                    pat.set(b, state[k] == 1);
                    if (state[k] == 2) set.push_back(b);
                }
                if (skip) continue;
                const std::pair<std::size_t, std::size_t> cost{set.size(), changed};
                if (!(cost < best_cost)) continue;
                if (!admissible(pat, set, we)) continue;
                const Vector v = projected_velocity(pat, set, we);
                bool ok = true;
                for (std::size_t k = 0; k < m && ok; ++k) {
                    if (state[k] == 2) continue;
                    const Vector xb = ds.input(tight[k]);
                    const double vb = xb.dot(v);
                    const double slack = cfg.event_tol * xb.norm() * std::max(1.0, v.norm());
                    ok = state[k] == 1 ? vb >= -slack : vb <= slack;
                }
                if (!ok) continue;
                best_cost = cost;
                best_state = state;
                best_p = pat;
                best_set = set;
            }
            if (best_state.empty()) throw NumericalError("no consistent sliding mode");
            static constexpr EventKind kinds[] = {EventKind::Deactivation, EventKind::Activation,
                                                  EventKind::Sliding};
            // One event per boundary; released sliding data show up in the next pattern.
            for (std::size_t k = 0; k < m; ++k) {
                if (tight[k] == j) ev.kind = kinds[best_state[k]];
            }
            ev.tie = ev.tie || best_cost.second > 0;
            p = best_p;
            sliding = best_set;
        }
        ev.point = we;
        tr.events.push_back(std::move(ev));
        w = we;
        t = seg.t_end;
    }
    return tr;
}

/// Gradient flow of the linear neuron: one segment with the full-data H, q.
inline Trajectory simulate_linear_flow(const Dataset& ds, const Vector& w0, const FlowConfig& cfg = {}) {
    cfg.check();
    if (w0.size() != ds.d()) throw StructuralError("initial weight has the wrong dimension");
    if (!w0.allFinite()) throw PreconditionError("initial weight is not finite");
    Trajectory tr;
    tr.ds = ds;
    tr.linear = true;
    FlowSegment seg = detail::make_segment(ds, ActivationPattern(ds.n(), true), w0, 0.0, {});
    tr.terminal_point = seg.limit();
    tr.gradient_norm = (seg.q - seg.h * tr.terminal_point).norm();
    tr.terminal = TerminalKind::Converged;
    tr.segments.push_back(std::move(seg));
    return tr;
}

struct ProfileSample {
    double t = 0.0;
    double norm = 0.0;
    double loss = 0.0;
    double g = 0.0;
};

/// Samples per segment, uniform in segment-local time, with shared segment
/// endpoints listed once. The unbounded final segment is sampled over 25 of its slowest time constants.
inline std::vector<ProfileSample> norm_profile(const Trajectory& tr, int samples) {
    if (samples < 2) throw PreconditionError("norm profile needs at least 2 samples");
    std::vector<ProfileSample> out;
    for (const auto& seg : tr.segments) {
        double dur = seg.duration();
        if (std::isinf(dur)) {
            const double lmin = seg.lambda_min_positive();
            dur = lmin > 0.0 ? 25.0 / lmin : 0.0;
        }
        // Segments after the first skip their start, already the previous end.
        for (int k = out.empty() ? 0 : 1; k < samples; ++k) {
            const double t = k == samples - 1 && !std::isinf(seg.t_end)
                                 ? seg.t_end
                                 : seg.t_start + dur * k / (samples - 1);
            const Vector w = seg.at(t);
            ProfileSample s;
            s.t = t;
            s.norm = w.norm();
            if (tr.linear) {
                s.loss = linear_loss(tr.ds, w);
                s.g = w.dot(seg.h * w - seg.q);
            } else {
                s.loss = loss(tr.ds, w);
                s.g = g_value(tr.ds, w);
            }
            out.push_back(s);
        }
    }
    return out;
}

/// Sign changes of v . w(t) - c along the trajectory. A zero at t = 0 counts
/// when the function leaves zero immediately afterwards.
inline Index count_hyperplane_crossings(const Trajectory& tr, const Vector& v, double c,
                                        double tol = 1e-12) {
    Index count = 0;
    int last = 0;
    bool first = true;
    for (const auto& seg : tr.segments) {
        const ExpSum f = seg.affine(v, -c);
        const double ztol = tol * std::max(1.0, f.magnitude(0.0, 0));
        const int s0 = side_sign(f, 0.0, +1, ztol);
        if (first) {
            if (std::abs(f(0.0)) <= ztol && s0 != 0) ++count;
            first = false;
        } else if (last != 0 && s0 != 0 && s0 != last) {
            ++count;
        }
        if (s0 != 0) last = s0;
        RootOptions opt;
        opt.zero_tol = ztol;
        const double hi = std::isinf(seg.t_end) ? std::numeric_limits<double>::infinity() : seg.duration();
        const auto roots = expsum_roots(f, 0.0, hi, opt);
        count += static_cast<Index>(roots.size());
        if (!roots.empty() && last != 0 && roots.size() % 2 == 1) last = -last;
    }
    return count;
}

struct RevisitReport {
    std::vector<Index> revisited;
    bool empty() const { return revisited.empty(); }
};

inline RevisitReport revisit_report(const Trajectory& tr) {
    RevisitReport rep;
    std::vector<bool> off(static_cast<std::size_t>(tr.ds.n()), false);
    for (const auto& e : tr.events) {
        const auto i = static_cast<std::size_t>(e.index);
        if (e.kind == EventKind::Deactivation) {
            off[i] = true;
        } else if (e.kind == EventKind::Activation && off[i]) {
            if (std::find(rep.revisited.begin(), rep.revisited.end(), e.index) == rep.revisited.end()) {
                rep.revisited.push_back(e.index);
            }
        }
    }
    return rep;
}

/// Full-batch gradient descent as a discrete proxy of the flow.
struct GdRun {
    Vector final_point;
    std::vector<FlowEvent> events;  // t = iteration * lr
    std::vector<std::pair<double, Vector>> samples;
    bool diverged = false;
};

inline GdRun simulate_gd(const Dataset& ds, const Vector& w0, double lr, long iters,
                         long sample_every = 0) {
    if (!(lr > 0.0) || iters < 0) throw PreconditionError("gradient descent needs lr > 0");
    GdRun run;
    Vector w = w0;
    ActivationPattern p = pattern_of(ds, w);
    if (sample_every > 0) run.samples.emplace_back(0.0, w);
    for (long k = 1; k <= iters; ++k) {
        w -= lr * gradient(ds, w);
        if (!w.allFinite() || loss(ds, w) > 1e12) {
            run.diverged = true;
            break;
        }
        const ActivationPattern np = pattern_of(ds, w);
        if (!(np == p)) {
            for (Index i = 0; i < ds.n(); ++i) {
                if (np[i] == p[i]) continue;
                FlowEvent ev;
                ev.t = static_cast<double>(k) * lr;
                ev.index = i;
                ev.kind = np[i] ? EventKind::Activation : EventKind::Deactivation;
                ev.point = w;
                run.events.push_back(std::move(ev));
            }
            p = np;
        }
        if (sample_every > 0 && k % sample_every == 0) {
            run.samples.emplace_back(static_cast<double>(k) * lr, w);
        }
    }
    run.final_point = w;
    return run;
}

/// Spread scale for "infinitesimally small" initial norms.
inline double small_norm_scale(const Dataset& ds) {
    double m = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < ds.n(); ++i) m = std::min(m, ds.label(i) / ds.input(i).norm());
    return 1e-4 * m;
}

}  // namespace reluflow
