#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gifkit/state_space.hpp"
#include "gifkit/types.hpp"

namespace gifkit {

// ----------------------------------------------------------------------------
// Single-time distributions and observables
// ----------------------------------------------------------------------------

/// Probability distribution over cells (the common single-time marginal of an
/// incompressible measure).
struct Marginal {
    std::vector<double> masses;

    double total() const { return std::accumulate(masses.begin(), masses.end(), 0.0); }

    void validate() const {
        for (double m : masses)
            if (!(m >= 0.0) || !std::isfinite(m))
                throw precondition_error("Marginal: masses must be finite and nonnegative");
        if (std::abs(total() - 1.0) > kProbTol)
            throw precondition_error("Marginal: masses must sum to 1");
    }

    static Marginal uniform(int cell_count) {
        return Marginal{std::vector<double>(cell_count, 1.0 / cell_count)};
    }
};

/// Total variation distance: sup over cell sets of the mass difference,
/// equal to half the L1 distance of the mass vectors.
inline double tv_distance(const Marginal& a, const Marginal& b) {
    if (a.masses.size() != b.masses.size())
        throw precondition_error("tv_distance: mismatched cell counts");
    double s = 0.0;
    for (std::size_t i = 0; i < a.masses.size(); ++i)
        s += std::abs(a.masses[i] - b.masses[i]);
    return 0.5 * s;
}

/// Real-valued function on cells (a discretized L1(X) element).
struct Observable {
    std::vector<double> values;

    void validate() const {
        for (double v : values)
            if (!std::isfinite(v)) throw precondition_error("Observable: values must be finite");
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }

    static Observable indicator(int cell_count, std::span<const cell_t> cells) {
        Observable f{std::vector<double>(cell_count, 0.0)};
        for (cell_t c : cells) f.values.at(static_cast<std::size_t>(c)) = 1.0;
        return f;
    }

    static Observable zero(int cell_count) {
        return Observable{std::vector<double>(cell_count, 0.0)};
    }
};

/// Integral of f against mu, as the finite sum over cells.
inline double integral(const Observable& f, const Marginal& mu) {
    if (f.values.size() != mu.masses.size())
        throw precondition_error("integral: observable/marginal size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) s += f.values[i] * mu.masses[i];
    return s;
}

/// L1 norm of f against mu.
inline double l1_norm(const Observable& f, const Marginal& mu) {
    if (f.values.size() != mu.masses.size())
        throw precondition_error("l1_norm: observable/marginal size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
        s += std::abs(f.values[i]) * mu.masses[i];
    return s;
}

// ----------------------------------------------------------------------------
// Path events
// ----------------------------------------------------------------------------

/// Borel-style event on path space, deterministic and total on any support.
/// Two representations: a conjunction of cylinder constraints
/// {z(t_k) in E_k}, or an explicit path set. Either may be negated.
class PathEvent {
public:
    struct CylinderConstraint {
        int time = 0;                 // marginal index
        std::vector<cell_t> cells;    // sorted, unique

        friend bool operator==(const CylinderConstraint&, const CylinderConstraint&) = default;
    };

    /// The whole path space (an empty conjunction).
    static PathEvent whole() { return PathEvent(std::vector<CylinderConstraint>{}, false); }

    static PathEvent empty() { return whole().complement(); }

    /// Conjunction of cylinder constraints.
    static PathEvent cylinder(std::vector<CylinderConstraint> constraints) {
        for (auto& c : constraints) {
            std::sort(c.cells.begin(), c.cells.end());
            c.cells.erase(std::unique(c.cells.begin(), c.cells.end()), c.cells.end());
        }
        std::sort(constraints.begin(), constraints.end(),
                  [](const auto& a, const auto& b) { return a.time < b.time; });
        return PathEvent(std::move(constraints), false);
    }

    /// {z(0) in E}: events determined by the starting cell.
    static PathEvent starts_in(std::vector<cell_t> cells) {
        return cylinder({CylinderConstraint{0, std::move(cells)}});
    }

    /// Explicit path subset (e.g. a support subset).
    static PathEvent support_subset(std::vector<DiscretePath> paths) {
        std::sort(paths.begin(), paths.end());
        paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
        return PathEvent(std::move(paths), false);
    }

    PathEvent complement() const {
        PathEvent e = *this;
        e.negated_ = !e.negated_;
        return e;
    }

    bool is_cylinder() const {
        return std::holds_alternative<std::vector<CylinderConstraint>>(body_);
    }

    const std::vector<CylinderConstraint>& constraints() const {
        return std::get<std::vector<CylinderConstraint>>(body_);
    }

    const std::vector<DiscretePath>& paths() const {
        return std::get<std::vector<DiscretePath>>(body_);
    }

    bool negated() const { return negated_; }

    /// Membership test. Cylinder times index the grid (wrapping in periodic
    /// mode); out-of-range times on a window grid are an error, keeping
    /// evaluation total on the measure's support.
    bool contains(const DiscretePath& p, const TimeGrid& grid) const {
        bool in = true;
        if (is_cylinder()) {
            for (const auto& c : constraints()) {
                int k = c.time;
                if (grid.mode() == GridMode::periodic) {
                    const int n = grid.n_steps();
                    k = ((k % n) + n) % n;
                } else if (k < 0 || k > grid.n_steps()) {
                    throw precondition_error("PathEvent: cylinder time outside window grid");
                }
                const cell_t z = p.cells.at(static_cast<std::size_t>(k));
                if (!std::binary_search(c.cells.begin(), c.cells.end(), z)) {
                    in = false;
                    break;
                }
            }
        } else {
            in = std::binary_search(paths().begin(), paths().end(), p);
        }
        return negated_ ? !in : in;
    }

    /// Preimage under the shift: Gamma^{-s} Phi = {z : Gamma^s z in Phi}.
    /// Cylinder times move forward by s; explicit sets rotate by -s
    /// (periodic grids only for the explicit form).
    PathEvent shifted_preimage(int s, const TimeGrid& grid) const {
        PathEvent e = *this;
        if (is_cylinder()) {
            for (auto& c : std::get<std::vector<CylinderConstraint>>(e.body_)) {
                c.time += s;
                if (grid.mode() == GridMode::periodic) {
                    const int n = grid.n_steps();
                    c.time = ((c.time % n) + n) % n;
                } else if (c.time < 0 || c.time > grid.n_steps()) {
                    throw precondition_error(
                        "PathEvent: shifted cylinder time outside window grid");
                }
            }
        } else {
            if (grid.mode() != GridMode::periodic)
                throw mode_error("PathEvent: explicit-set shift requires a periodic grid");
            std::vector<DiscretePath> shifted;
            shifted.reserve(paths().size());
            for (const auto& p : paths()) shifted.push_back(rotate(p, -s));
            std::sort(shifted.begin(), shifted.end());
            e.body_ = std::move(shifted);
        }
        return e;
    }

private:
    using Body = std::variant<std::vector<CylinderConstraint>, std::vector<DiscretePath>>;

    PathEvent(std::vector<CylinderConstraint> c, bool neg) : body_(std::move(c)), negated_(neg) {}
    PathEvent(std::vector<DiscretePath> p, bool neg) : body_(std::move(p)), negated_(neg) {}

    Body body_;
    bool negated_ = false;
};

// ----------------------------------------------------------------------------
// Path measures
// ----------------------------------------------------------------------------

/// Finitely supported probability measure on discrete paths; the central
/// representation of a generalized flow. Immutable after construction and
/// kept in canonical form: atoms sorted lexicographically by cell sequence,
/// duplicates merged, all weights positive, total weight 1 within 1e-12.
class PathMeasure {
public:
    struct Atom {
        DiscretePath path;
        double weight = 0.0;
    };

    PathMeasure(StateSpace space, TimeGrid grid, std::vector<Atom> atoms)
        : space_(std::move(space)), grid_(std::move(grid)), atoms_(std::move(atoms)) {
        canonicalize();
        validate();
    }

    const StateSpace& space() const { return space_; }
    const TimeGrid& grid() const { return grid_; }
    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t support_size() const { return atoms_.size(); }

    /// Exact equality: same space, grid, support and bit-identical weights.
    friend bool operator==(const PathMeasure& a, const PathMeasure& b) {
        if (!(a.space_ == b.space_) || !(a.grid_ == b.grid_)) return false;
        if (a.atoms_.size() != b.atoms_.size()) return false;
        for (std::size_t i = 0; i < a.atoms_.size(); ++i)
            if (a.atoms_[i].path != b.atoms_[i].path ||
                a.atoms_[i].weight != b.atoms_[i].weight)
                return false;
        return true;
    }

private:
    // Duplicate weights are summed in ascending order so that equal weight
    // multisets produce bit-identical sums regardless of input order.
    void canonicalize() {
        std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) {
            return a.path != b.path ? a.path < b.path : a.weight < b.weight;
        });
        std::vector<Atom> merged;
        std::size_t i = 0;
        while (i < atoms_.size()) {
            std::size_t j = i;
            double w = 0.0;
            while (j < atoms_.size() && atoms_[j].path == atoms_[i].path) {
                w += atoms_[j].weight;
                ++j;
            }
            merged.push_back(Atom{std::move(atoms_[i].path), w});
            i = j;
        }
        atoms_ = std::move(merged);
    }

    void validate() const {
        if (atoms_.empty()) throw precondition_error("PathMeasure: empty support");
        const std::size_t len = static_cast<std::size_t>(grid_.path_length());
        double total = 0.0;
        for (const Atom& a : atoms_) {
            if (a.path.cells.size() != len)
                throw precondition_error("PathMeasure: path length does not match grid");
            for (cell_t c : a.path.cells)
                if (!space_.contains(c))
                    throw precondition_error("PathMeasure: cell index outside state space");
            if (!(a.weight > 0.0) || !std::isfinite(a.weight))
                throw precondition_error("PathMeasure: weights must be positive and finite");
            total += a.weight;
        }
        if (std::abs(total - 1.0) > kProbTol)
            throw precondition_error("PathMeasure: weights must sum to 1 within 1e-12");
    }

    StateSpace space_;
    TimeGrid grid_;
    std::vector<Atom> atoms_;
};

// ----------------------------------------------------------------------------
// Operations
// ----------------------------------------------------------------------------

/// Distribution of z(t_k) under q.
inline Marginal marginal_at(const PathMeasure& q, int k) {
    const int idx = q.grid().sample_index(k);
    Marginal m{std::vector<double>(q.space().cell_count(), 0.0)};
    for (const auto& a : q.atoms())
        m.masses[static_cast<std::size_t>(a.path.cells[static_cast<std::size_t>(idx)])] +=
            a.weight;
    return m;
}

struct IncompressibilityReport {
    double max_tv_deviation = 0.0;
    int worst_time = 0;
    bool pass = false;
};

/// Incompressibility verifier: max over grid times of the total-variation
/// distance between the time-k marginal and the time-0 marginal. Checking
/// the marginal identity for all indicator observables over the cell algebra
/// is equivalent to the defining condition on continuous observables.
inline IncompressibilityReport check_incompressible(const PathMeasure& q, double tol) {
    const Marginal m0 = marginal_at(q, 0);
    IncompressibilityReport r;
    for (int k = 1; k <= q.grid().last_time_index(); ++k) {
        const double d = tv_distance(marginal_at(q, k), m0);
        if (d > r.max_tv_deviation) {
            r.max_tv_deviation = d;
            r.worst_time = k;
        }
    }
    r.pass = r.max_tv_deviation <= tol;
    return r;
}

/// Pushforward of q under the time shift Gamma^s (periodic grids only):
/// every atom's cell sequence is rotated left by s.
inline PathMeasure shift(const PathMeasure& q, int s) {
    if (q.grid().mode() != GridMode::periodic)
        throw mode_error("shift: periodic grid required (window mode has no exact shift)");
    std::vector<PathMeasure::Atom> atoms;
    atoms.reserve(q.atoms().size());
    for (const auto& a : q.atoms()) atoms.push_back({rotate(a.path, s), a.weight});
    return PathMeasure(q.space(), q.grid(), std::move(atoms));
}

/// q(Phi): total weight of support atoms satisfying the event.
inline double event_mass(const PathMeasure& q, const PathEvent& phi) {
    double s = 0.0;
    for (const auto& a : q.atoms())
        if (phi.contains(a.path, q.grid())) s += a.weight;
    return s;
}

/// Convex combination of measures on a shared space and grid.
inline PathMeasure mix(const std::vector<PathMeasure>& measures,
                       const std::vector<double>& weights) {
    if (measures.empty() || measures.size() != weights.size())
        throw precondition_error("mix: need equally many measures and weights");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw precondition_error("mix: weights must be nonnegative");
        total += w;
    }
    if (std::abs(total - 1.0) > kProbTol)
        throw precondition_error("mix: weights must sum to 1");
    for (const auto& m : measures)
        if (!(m.space() == measures.front().space()) || !(m.grid() == measures.front().grid()))
            throw precondition_error("mix: measures must share space and grid");
    std::vector<PathMeasure::Atom> atoms;
    for (std::size_t i = 0; i < measures.size(); ++i) {
        if (weights[i] == 0.0) continue;
        for (const auto& a : measures[i].atoms())
            atoms.push_back({a.path, weights[i] * a.weight});
    }
    return PathMeasure(measures.front().space(), measures.front().grid(), std::move(atoms));
}

/// Conditional measure q( . | Phi): atoms restricted to Phi, weights divided
/// by q(Phi).
inline PathMeasure condition(const PathMeasure& q, const PathEvent& phi) {
    const double p = event_mass(q, phi);
    if (!(p > 0.0)) throw precondition_error("condition: event has zero mass");
    std::vector<PathMeasure::Atom> atoms;
    for (const auto& a : q.atoms())
        if (phi.contains(a.path, q.grid())) atoms.push_back({a.path, a.weight / p});
    return PathMeasure(q.space(), q.grid(), std::move(atoms));
}

/// Support of q as an explicit-set event.
inline PathEvent support_event(const PathMeasure& q) {
    std::vector<DiscretePath> paths;
    paths.reserve(q.atoms().size());
    for (const auto& a : q.atoms()) paths.push_back(a.path);
    return PathEvent::support_subset(std::move(paths));
}

}  // namespace gifkit
