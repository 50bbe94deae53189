#pragma once

#include <cmath>
#include <vector>

#include "gifkit/path_measure.hpp"

namespace gifkit {

// ----------------------------------------------------------------------------
// Canonical generalized-flow constructors
// ----------------------------------------------------------------------------

/// Deterministic cell dynamics: one step map applied per grid step.
struct DiscreteClassicalFlow {
    StateSpace space;
    std::vector<cell_t> step_map;

    void validate() const {
        if (step_map.size() != static_cast<std::size_t>(space.cell_count()))
            throw precondition_error("DiscreteClassicalFlow: step_map size mismatch");
        for (cell_t c : step_map)
            if (!space.contains(c))
                throw precondition_error("DiscreteClassicalFlow: step_map target out of range");
    }

    bool invertible() const {
        std::vector<char> seen(step_map.size(), 0);
        for (cell_t c : step_map) {
            if (seen[static_cast<std::size_t>(c)]) return false;
            seen[static_cast<std::size_t>(c)] = 1;
        }
        return true;
    }

    /// Pushforward of mu under one step of the flow.
    Marginal pushforward(const Marginal& mu) const {
        Marginal out{std::vector<double>(step_map.size(), 0.0)};
        for (std::size_t c = 0; c < step_map.size(); ++c)
            out.masses[static_cast<std::size_t>(step_map[c])] += mu.masses[c];
        return out;
    }

    /// Exact check that one flow step preserves mu.
    bool preserves(const Marginal& mu, double tol = kProbTol) const {
        return tv_distance(pushforward(mu), mu) <= tol;
    }
};

/// Generalized flow induced by a classical measure-preserving flow: one atom
/// per positive-mass starting cell c, weight mu(c), path k -> flow^k(c).
inline PathMeasure from_classical_flow(const DiscreteClassicalFlow& flow, const Marginal& mu,
                                       const TimeGrid& grid) {
    flow.validate();
    if (mu.masses.size() != static_cast<std::size_t>(flow.space.cell_count()))
        throw precondition_error("from_classical_flow: marginal size mismatch");
    mu.validate();
    if (!flow.preserves(mu))
        throw precondition_error("from_classical_flow: flow does not preserve the marginal");

    std::vector<PathMeasure::Atom> atoms;
    const int len = grid.path_length();
    for (int c = 0; c < flow.space.cell_count(); ++c) {
        const double w = mu.masses[static_cast<std::size_t>(c)];
        if (w == 0.0) continue;
        DiscretePath p;
        p.cells.reserve(static_cast<std::size_t>(len));
        cell_t z = static_cast<cell_t>(c);
        for (int k = 0; k < len; ++k) {
            p.cells.push_back(z);
            z = flow.step_map[static_cast<std::size_t>(z)];
        }
        atoms.push_back({std::move(p), w});
    }
    return PathMeasure(flow.space, grid, std::move(atoms));
}

namespace detail {

/// Round half down: the integer nearest to x, with .5 ties going down.
inline int round_half_down(double x) { return static_cast<int>(std::ceil(x - 0.5)); }

/// Cell shift of the rotation by arc length t. Cell centers are equally
/// spaced, so a common offset moves every center by the same whole number of
/// cells; ties at cell boundaries snap to the lower cell.
inline int rotation_cell_shift(double t, double cell_width) {
    return round_half_down(t / cell_width);
}

}  // namespace detail

/// The stopping rotation on the circle: each atom rotates at unit speed until
/// time pi/2 and is frozen afterwards. Uniform weights over starting cells.
/// A generalized incompressible flow whose atoms never return to their
/// starting cell once they have moved: weak recurrence without pointwise
/// recurrence.
inline PathMeasure stopping_rotation(const StateSpace& space, const TimeGrid& grid) {
    if (space.kind() != SpaceKind::circle)
        throw precondition_error("stopping_rotation: circle space required");
    if (grid.mode() != GridMode::window)
        throw mode_error("stopping_rotation: window grid required");
    constexpr double kStopTime = kTwoPi / 4.0;
    if (!(grid.horizon() > kStopTime))
        throw precondition_error("stopping_rotation: horizon must exceed pi/2");

    const int n = space.cell_count();
    std::vector<PathMeasure::Atom> atoms;
    atoms.reserve(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        DiscretePath p;
        p.cells.reserve(static_cast<std::size_t>(grid.path_length()));
        for (int k = 0; k < grid.path_length(); ++k) {
            const double t = std::min(grid.time(k), kStopTime);
            const int s = detail::rotation_cell_shift(t, space.cell_width());
            p.cells.push_back(static_cast<cell_t>((x + s) % n));
        }
        atoms.push_back({std::move(p), 1.0 / n});
    }
    return PathMeasure(space, grid, std::move(atoms));
}

/// Krylov-Bogolioubov averaging: (1/n) sum of the first n shifts of omega.
/// With n = N the result is an exact fixed point of the shift; for smaller n
/// the invariance defect of any bounded path observable is at most
/// 2 s ||f||_inf / n for a shift by s (telescoping bound).
inline PathMeasure krylov_bogolioubov_average(const PathMeasure& omega, int n) {
    if (omega.grid().mode() != GridMode::periodic)
        throw mode_error("krylov_bogolioubov_average: periodic grid required");
    if (n < 1 || n > omega.grid().n_steps())
        throw precondition_error("krylov_bogolioubov_average: need 1 <= n <= N");
    std::vector<PathMeasure> shifted;
    shifted.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) shifted.push_back(shift(omega, s));
    return mix(shifted, std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

}  // namespace gifkit
