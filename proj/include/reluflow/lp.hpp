#pragma once

#include "reluflow/core.hpp"

#include <limits>
#include <utility>
#include <vector>

namespace reluflow {

/// Dense two-phase simplex for   maximize c.x  s.t.  A x <= b,  x >= 0.
/// Small problems only (tens of rows and columns).
class SimplexLP {
public:
    enum class Status { Optimal, Infeasible, Unbounded };

    struct Result {
        Status status = Status::Infeasible;
        double value = -std::numeric_limits<double>::infinity();
        std::vector<double> x;
    };

    static Result solve(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
                        const std::vector<double>& c, double eps = 1e-11) {
        SimplexLP lp(a, b, c, eps);
        return lp.run();
    }

private:
    using Row = std::vector<double>;

    SimplexLP(const std::vector<std::vector<double>>& a, const std::vector<double>& b,
              const std::vector<double>& c, double eps)
        : m_(static_cast<int>(b.size())),
          n_(static_cast<int>(c.size())),
          eps_(eps),
          nn_(n_ + 1),
          bb_(static_cast<std::size_t>(m_)),
          d_(static_cast<std::size_t>(m_ + 2), Row(static_cast<std::size_t>(n_ + 2), 0.0)) {
        for (int i = 0; i < m_; ++i) {
            for (int j = 0; j < n_; ++j) at(i, j) = a[i][j];
        }
        for (int i = 0; i < m_; ++i) {
            bb_[i] = n_ + i;
            at(i, n_) = -1.0;
            at(i, n_ + 1) = b[i];
        }
        for (int j = 0; j < n_; ++j) {
            nn_[j] = j;
            at(m_, j) = -c[j];
        }
        nn_[n_] = -1;
        at(m_ + 1, n_) = 1.0;
    }

    double& at(int i, int j) { return d_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }

    void pivot(int r, int s) {
        const double inv = 1.0 / at(r, s);
        for (int i = 0; i < m_ + 2; ++i) {
            if (i == r || std::abs(at(i, s)) <= eps_) continue;
            const double b = at(i, s) * inv;
            for (int j = 0; j < n_ + 2; ++j) at(i, j) -= at(r, j) * b;
            at(i, s) = at(r, s) * b;
        }
        for (int j = 0; j < n_ + 2; ++j) {
            if (j != s) at(r, j) *= inv;
        }
        for (int i = 0; i < m_ + 2; ++i) {
            if (i != r) at(i, s) *= -inv;
        }
        at(r, s) = inv;
        std::swap(bb_[r], nn_[s]);
    }

    bool simplex(int phase) {
        const int x = m_ + phase - 1;
        // Steepest reduced cost first; Bland's rule once degeneracy stalls it.
        const int switch_at = 20 * (m_ + n_ + 2);
        for (int guard = 0; guard < 100000; ++guard) {
            const bool bland = guard >= switch_at;
            int s = -1;
            for (int j = 0; j <= n_; ++j) {
                if (nn_[j] == -phase) continue;
                if (bland) {
                    if (at(x, j) < -eps_ && (s == -1 || nn_[j] < nn_[s])) s = j;
                } else if (s == -1 || at(x, j) < at(x, s) - eps_ ||
                           (std::abs(at(x, j) - at(x, s)) <= eps_ && nn_[j] < nn_[s])) {
                    s = j;
                }
            }
            if (s == -1 || at(x, s) >= -eps_) return true;
            int r = -1;
            for (int i = 0; i < m_; ++i) {
                if (at(i, s) <= eps_) continue;
                if (r == -1) {
                    r = i;
                    continue;
                }
                const double lhs = at(i, n_ + 1) / at(i, s);
                const double rhs = at(r, n_ + 1) / at(r, s);
                if (lhs < rhs - eps_ || (std::abs(lhs - rhs) <= eps_ && bb_[i] < bb_[r])) r = i;
            }
            if (r == -1) return false;
            pivot(r, s);
        }
        throw NumericalError("simplex iteration limit reached");
    }

    Result run() {
        Result res;
        int r = 0;
        for (int i = 1; i < m_; ++i) {
            if (at(i, n_ + 1) < at(r, n_ + 1)) r = i;
        }
        if (m_ > 0 && at(r, n_ + 1) < -eps_) {
            pivot(r, n_);
            if (!simplex(2) || at(m_ + 1, n_ + 1) < -eps_) {
                res.status = Status::Infeasible;
                return res;
            }
            for (int i = 0; i < m_; ++i) {
                if (bb_[i] == -1) {
                    int s = 0;
                    for (int j = 1; j <= n_; ++j) {
                        if (s == -1 || at(i, j) < at(i, s) ||
                            (at(i, j) == at(i, s) && nn_[j] < nn_[s])) {
                            s = j;
                        }
                    }
                    pivot(i, s);
                }
            }
        }
        const bool ok = simplex(1);
        res.x.assign(static_cast<std::size_t>(n_), 0.0);
        for (int i = 0; i < m_; ++i) {
            if (bb_[i] < n_) res.x[static_cast<std::size_t>(bb_[i])] = at(i, n_ + 1);
        }
        if (!ok) {
            res.status = Status::Unbounded;
            res.value = std::numeric_limits<double>::infinity();
            return res;
        }
        res.status = Status::Optimal;
        res.value = at(m_, n_ + 1);
        return res;
    }

    int m_, n_;
    double eps_;
    std::vector<int> nn_, bb_;
    std::vector<Row> d_;
};

/// Maximum t such that  sign_i * (a_i . (p + N z)) >= t * scale_i  for the
/// strict rows and  sign_i * (a_i . (p + N z)) >= 0  for the weak rows, with
/// t capped at 1 and z free. Returns t (or -inf when infeasible) and p + N z.
struct MarginProgram {
    struct Row {
        Vector a;
        double sign = 1.0;
        bool strict = true;
    };

    struct Solution {
        bool feasible = false;
        double margin = -std::numeric_limits<double>::infinity();
        Vector point;
    };

    static Solution solve(const Vector& p, const Matrix& null_dirs, const std::vector<Row>& rows,
                          double box = 0.0) {
        const Index k = null_dirs.cols();
        // Variables: z+ (k), z- (k), t.
        const int nv = static_cast<int>(2 * k + 1);
        std::vector<std::vector<double>> a;
        std::vector<double> b;
        for (const auto& row : rows) {
            const Vector an = row.sign * (null_dirs.transpose() * row.a);
            const double ap = row.sign * row.a.dot(p);
            std::vector<double> r(static_cast<std::size_t>(nv), 0.0);
            for (Index j = 0; j < k; ++j) {
                r[static_cast<std::size_t>(j)] = -an(j);
                r[static_cast<std::size_t>(k + j)] = an(j);
            }
            r[static_cast<std::size_t>(2 * k)] = row.strict ? 1.0 : 0.0;
            a.push_back(std::move(r));
            b.push_back(ap);
        }
        {
            std::vector<double> r(static_cast<std::size_t>(nv), 0.0);
            r[static_cast<std::size_t>(2 * k)] = 1.0;
            a.push_back(std::move(r));
            b.push_back(1.0);
        }
        if (box > 0.0) {
            for (Index j = 0; j < 2 * k; ++j) {
                std::vector<double> r(static_cast<std::size_t>(nv), 0.0);
                r[static_cast<std::size_t>(j)] = 1.0;
                a.push_back(std::move(r));
                b.push_back(box);
            }
        }
        std::vector<double> c(static_cast<std::size_t>(nv), 0.0);
        c[static_cast<std::size_t>(2 * k)] = 1.0;

        const auto res = SimplexLP::solve(a, b, c);
        Solution sol;
        if (res.status != SimplexLP::Status::Optimal) {
            return sol;
        }
        Vector z(k);
        for (Index j = 0; j < k; ++j) {
            z(j) = res.x[static_cast<std::size_t>(j)] - res.x[static_cast<std::size_t>(k + j)];
        }
        sol.point = p + null_dirs * z;
        sol.margin = res.x[static_cast<std::size_t>(2 * k)];
        sol.feasible = true;
        return sol;
    }
};

}  // namespace reluflow
