#pragma once

#include <cmath>
#include <compare>
#include <cstdlib>
#include <vector>

#include "gifkit/types.hpp"

namespace gifkit {

enum class SpaceKind { circle, torus2d };

/// Finite metric state space: a uniform grid discretization of the circle S^1
/// or the square torus T^2. Cells have uniform volume; distances are geodesic
/// distances between cell centers (wrap-around per axis).
class StateSpace {
public:
    static StateSpace circle(int n_cells, double circumference = kTwoPi) {
        return StateSpace(SpaceKind::circle, n_cells, circumference);
    }

    static StateSpace torus2d(int n_cells_per_dim, double circumference = kTwoPi) {
        return StateSpace(SpaceKind::torus2d, n_cells_per_dim, circumference);
    }

    SpaceKind kind() const { return kind_; }

    /// Cells per dimension.
    int n_cells() const { return n_cells_; }

    /// Total number of cells (n for the circle, n^2 for the torus).
    int cell_count() const {
        return kind_ == SpaceKind::circle ? n_cells_ : n_cells_ * n_cells_;
    }

    double circumference() const { return circumference_; }

    double cell_width() const { return circumference_ / n_cells_; }

    double total_volume() const {
        return kind_ == SpaceKind::circle ? circumference_
                                          : circumference_ * circumference_;
    }

    /// Uniform volume of a single cell.
    double cell_volume() const { return total_volume() / cell_count(); }

    /// Geodesic distance between the centers of cells i and j.
    double geodesic_distance(cell_t i, cell_t j) const {
        check_cell(i);
        check_cell(j);
        if (kind_ == SpaceKind::circle) {
            return axis_distance(i, j);
        }
        const double dx = axis_distance(i % n_cells_, j % n_cells_);
        const double dy = axis_distance(i / n_cells_, j / n_cells_);
        return std::sqrt(dx * dx + dy * dy);
    }

    /// Signed number of cells of the shortest arc from i to j on the circle;
    /// ties (antipodal) resolve to the positive direction.
    int signed_cell_steps(cell_t i, cell_t j) const {
        if (kind_ != SpaceKind::circle)
            throw precondition_error("signed_cell_steps: circle space required");
        check_cell(i);
        check_cell(j);
        int fwd = (static_cast<int>(j) - static_cast<int>(i) + n_cells_) % n_cells_;
        return fwd <= n_cells_ - fwd ? fwd : fwd - n_cells_;
    }

    /// True when the shortest arc between i and j is ambiguous (antipodal).
    bool antipodal(cell_t i, cell_t j) const {
        if (kind_ != SpaceKind::circle) return false;
        int fwd = (static_cast<int>(j) - static_cast<int>(i) + n_cells_) % n_cells_;
        return n_cells_ % 2 == 0 && fwd == n_cells_ / 2;
    }

    bool contains(cell_t c) const { return c >= 0 && c < cell_count(); }

    friend bool operator==(const StateSpace&, const StateSpace&) = default;

private:
    StateSpace(SpaceKind kind, int n_cells, double circumference)
        : kind_(kind), n_cells_(n_cells), circumference_(circumference) {
        if (n_cells <= 0) throw config_error("StateSpace: n_cells must be positive");
        if (!(circumference > 0.0))
            throw config_error("StateSpace: circumference must be positive");
    }

    double axis_distance(int a, int b) const {
        int diff = std::abs(a - b);
        return cell_width() * std::min(diff, n_cells_ - diff);
    }

    void check_cell(cell_t c) const {
        if (!contains(c)) throw precondition_error("StateSpace: cell index out of range");
    }

    SpaceKind kind_;
    int n_cells_;
    double circumference_;
};

enum class GridMode { window, periodic };

/// Uniform time grid on [0, T]. Window grids carry N+1 path samples
/// z(t_0)..z(t_N); periodic grids identify t_N with t_0 and carry N samples,
/// which makes the time shift an exact bijection on paths.
class TimeGrid {
public:
    TimeGrid(double horizon, int n_steps, GridMode mode)
        : horizon_(horizon), n_steps_(n_steps), mode_(mode) {
        if (!(horizon > 0.0)) throw config_error("TimeGrid: horizon must be positive");
        if (n_steps <= 0) throw config_error("TimeGrid: n_steps must be positive");
    }

    double horizon() const { return horizon_; }
    int n_steps() const { return n_steps_; }
    GridMode mode() const { return mode_; }

    double dt() const { return horizon_ / n_steps_; }

    double time(int k) const { return k * dt(); }

    /// Number of cell samples a path on this grid stores.
    int path_length() const {
        return mode_ == GridMode::window ? n_steps_ + 1 : n_steps_;
    }

    /// Largest valid marginal index (N for window, N-1 for periodic).
    int last_time_index() const {
        return mode_ == GridMode::window ? n_steps_ : n_steps_ - 1;
    }

    /// Sample index for marginal index k (wraps in periodic mode).
    int sample_index(int k) const {
        if (k < 0 || k > last_time_index())
            throw precondition_error("TimeGrid: time index out of range");
        return k;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double horizon_;
    int n_steps_;
    GridMode mode_;
};

/// A discrete path: the sequence of cells visited at grid times.
struct DiscretePath {
    std::vector<cell_t> cells;

    friend auto operator<=>(const DiscretePath&, const DiscretePath&) = default;
};

/// Left rotation of a periodic path by s steps: result[j] = p[(j+s) mod N].
inline DiscretePath rotate(const DiscretePath& p, int s) {
    const int n = static_cast<int>(p.cells.size());
    if (n == 0) return p;
    int r = ((s % n) + n) % n;
    DiscretePath out;
    out.cells.reserve(p.cells.size());
    for (int j = 0; j < n; ++j) out.cells.push_back(p.cells[(j + r) % n]);
    return out;
}

}  // namespace gifkit
