#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "gifkit/types.hpp"

namespace gifkit::lp {

// ----------------------------------------------------------------------------
// Narrow LP interface: min c.x  s.t.  A x = b, x >= 0, with columns supplied
// lazily through a callback so the caller can enumerate them without storing
// the matrix. Revised simplex, Bland's rule (deterministic, cycle-free),
// explicit basis inverse with periodic refactorization.
// ----------------------------------------------------------------------------

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Result {
    Status status = Status::iteration_limit;
    double objective = 0.0;
    std::vector<double> solution;
    long iterations = 0;
};

struct Options {
    double tol = 1e-9;
    long max_iterations = 200000;
    long refactor_every = 64;
};

namespace detail {

class SimplexState {
public:
    SimplexState(int m, std::vector<double> rhs) : m_(m), rhs_(std::move(rhs)) {
        row_sign_.assign(static_cast<std::size_t>(m), 1.0);
        for (int i = 0; i < m; ++i)
            if (rhs_[static_cast<std::size_t>(i)] < 0.0) {
                row_sign_[static_cast<std::size_t>(i)] = -1.0;
                rhs_[static_cast<std::size_t>(i)] = -rhs_[static_cast<std::size_t>(i)];
            }
        binv_ = Eigen::MatrixXd::Identity(m, m);
        xb_ = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m);
    }

    double row_sign(int i) const { return row_sign_[static_cast<std::size_t>(i)]; }
    const Eigen::MatrixXd& binv() const { return binv_; }
    const Eigen::VectorXd& xb() const { return xb_; }
    Eigen::VectorXd& xb() { return xb_; }

    void pivot(int row, const Eigen::VectorXd& direction, double theta) {
        const double piv = direction(row);
        for (int i = 0; i < m_; ++i) {
            if (i == row) continue;
            const double factor = direction(i) / piv;
            binv_.row(i) -= factor * binv_.row(row);
            xb_(i) -= theta * direction(i);
            if (xb_(i) < 0.0 && xb_(i) > -1e-11) xb_(i) = 0.0;
        }
        binv_.row(row) /= piv;
        xb_(row) = theta;
    }

    template <class DenseColumnFn>
    void refactor(const std::vector<std::size_t>& basis, DenseColumnFn&& dense_column) {
        Eigen::MatrixXd B(m_, m_);
        for (int r = 0; r < m_; ++r) B.col(r) = dense_column(basis[static_cast<std::size_t>(r)]);
        binv_ = B.partialPivLu().inverse();
        xb_ = binv_ * Eigen::Map<const Eigen::VectorXd>(rhs_.data(), m_);
        for (int i = 0; i < m_; ++i)
            if (xb_(i) < 0.0 && xb_(i) > -1e-9) xb_(i) = 0.0;
    }

private:
    int m_;
    std::vector<double> rhs_;
    std::vector<double> row_sign_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
};

}  // namespace detail

/// Solves min c.x s.t. A x = b, x >= 0. `cost(j)` returns c_j;
/// `column(j, out)` fills (row, value) pairs of A's column j. Columns are
/// scanned in index order (Bland), so results are deterministic.
template <class CostFn, class ColumnFn>
Result solve_equality_form(int n_rows, const std::vector<double>& rhs, std::size_t n_cols,
                           CostFn&& cost, ColumnFn&& column, const Options& opt = {}) {
    if (static_cast<std::size_t>(n_rows) != rhs.size())
        throw precondition_error("lp: rhs size does not match row count");
    const int m = n_rows;
    detail::SimplexState state(m, rhs);

    std::vector<std::pair<int, double>> col_buf;
    auto dense_column = [&](std::size_t j) -> Eigen::VectorXd {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(m);
        if (j >= n_cols) {
            const int r = static_cast<int>(j - n_cols);
            v(r) = 1.0;  // artificial for row r (post sign normalization)
        } else {
            col_buf.clear();
            column(j, col_buf);
            for (auto [r, val] : col_buf) v(r) += state.row_sign(r) * val;
        }
        return v;
    };

    // Basis starts as the artificial identity.
    std::vector<std::size_t> basis(static_cast<std::size_t>(m));
    for (int r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n_cols + static_cast<std::size_t>(r);
    std::vector<char> in_basis(n_cols + static_cast<std::size_t>(m), 0);
    for (std::size_t j : basis) in_basis[j] = 1;

    Result result;
    long since_refactor = 0;

    auto run_phase = [&](bool phase1) -> Status {
        auto phase_cost = [&](std::size_t j) -> double {
            if (phase1) return j >= n_cols ? 1.0 : 0.0;
            return j >= n_cols ? 0.0 : cost(j);
        };
        // Dantzig pricing by default; after a stretch of degenerate pivots
        // switch to Bland's rule until progress resumes, which rules out
        // cycling while keeping the pivot count low. Both rules break ties by
        // lowest column index, so the path is deterministic.
        long degenerate_streak = 0;
        while (true) {
            if (result.iterations++ > opt.max_iterations) return Status::iteration_limit;
            if (++since_refactor >= opt.refactor_every) {
                state.refactor(basis, dense_column);
                since_refactor = 0;
            }
            const bool bland = degenerate_streak > 30;
            Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
            for (int r = 0; r < m; ++r)
                y += phase_cost(basis[static_cast<std::size_t>(r)]) * state.binv().row(r).transpose();

            // Artificials never re-enter once phase 1 is done.
            std::size_t entering = n_cols + static_cast<std::size_t>(m);
            double best_rc = -opt.tol;
            const std::size_t scan_limit = phase1 ? n_cols + static_cast<std::size_t>(m) : n_cols;
            for (std::size_t j = 0; j < scan_limit; ++j) {
                if (in_basis[j]) continue;
                double rc = phase_cost(j);
                if (j >= n_cols) {
                    rc -= y(static_cast<int>(j - n_cols));
                } else {
                    col_buf.clear();
                    column(j, col_buf);
                    for (auto [r, val] : col_buf) rc -= y(r) * state.row_sign(r) * val;
                }
                if (rc < best_rc) {
                    entering = j;
                    if (bland) break;
                    best_rc = rc;
                }
            }
            if (entering == n_cols + static_cast<std::size_t>(m)) return Status::optimal;

            const Eigen::VectorXd d = state.binv() * dense_column(entering);

            // Ratio test with Bland tie-breaking; in phase 2 a basic
            // artificial whose value would grow blocks at theta = 0.
            int leave_row = -1;
            double theta = std::numeric_limits<double>::infinity();
            for (int r = 0; r < m; ++r) {
                double ratio = std::numeric_limits<double>::infinity();
                if (d(r) > opt.tol) {
                    ratio = state.xb()(r) / d(r);
                    if (ratio < 0.0) ratio = 0.0;
                } else if (!phase1 && basis[static_cast<std::size_t>(r)] >= n_cols &&
                           d(r) < -opt.tol) {
                    ratio = 0.0;
                } else {
                    continue;
                }
                if (ratio < theta - 1e-12 ||
                    (ratio <= theta + 1e-12 &&
                     (leave_row < 0 || basis[static_cast<std::size_t>(r)] <
                                           basis[static_cast<std::size_t>(leave_row)]))) {
                    theta = ratio;
                    leave_row = r;
                }
            }
            if (leave_row < 0) return phase1 ? Status::infeasible : Status::unbounded;
            degenerate_streak = theta <= 1e-12 ? degenerate_streak + 1 : 0;

            in_basis[basis[static_cast<std::size_t>(leave_row)]] = 0;
            in_basis[entering] = 1;
            basis[static_cast<std::size_t>(leave_row)] = entering;
            state.pivot(leave_row, d, theta);
        }
    };

    Status s = run_phase(true);
    if (s != Status::optimal) {
        result.status = s;
        return result;
    }
    double artificial_mass = 0.0;
    for (int r = 0; r < m; ++r)
        if (basis[static_cast<std::size_t>(r)] >= n_cols) artificial_mass += state.xb()(r);
    if (artificial_mass > 1e-7) {
        result.status = Status::infeasible;
        return result;
    }

    // Drive basic artificials out where a structural pivot exists; rows with
    // no pivot are redundant and their artificials stay basic at zero.
    for (int r = 0; r < m; ++r) {
        if (basis[static_cast<std::size_t>(r)] < n_cols) continue;
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (in_basis[j]) continue;
            const Eigen::VectorXd d = state.binv() * dense_column(j);
            if (std::abs(d(r)) > 1e-7) {
                in_basis[basis[static_cast<std::size_t>(r)]] = 0;
                in_basis[j] = 1;
                basis[static_cast<std::size_t>(r)] = j;
                state.pivot(r, d, state.xb()(r) / d(r));
                break;
            }
        }
    }

    s = run_phase(false);
    result.status = s;
    if (s != Status::optimal) return result;

    state.refactor(basis, dense_column);
    result.solution.assign(n_cols, 0.0);
    double obj = 0.0;
    for (int r = 0; r < m; ++r) {
        const std::size_t j = basis[static_cast<std::size_t>(r)];
        double v = state.xb()(r);
        if (v < 0.0) v = 0.0;
        if (j < n_cols) {
            result.solution[j] = v;
            obj += cost(j) * v;
        }
    }
    result.objective = obj;
    return result;
}

}  // namespace gifkit::lp
