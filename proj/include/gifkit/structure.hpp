#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "gifkit/path_measure.hpp"

namespace gifkit {

// ----------------------------------------------------------------------------
// Shift orbits and ergodicity
// ----------------------------------------------------------------------------

inline bool is_shift_invariant(const PathMeasure& q) {
    return q.grid().mode() == GridMode::periodic && shift(q, 1) == q;
}

struct OrbitPartition {
    std::vector<std::vector<std::size_t>> orbits;  // atom indices per orbit
    std::vector<double> masses;                    // total weight per orbit
};

/// Partition of the support atoms into orbits of the shift action. Every
/// shift-invariant support event is a union of these orbits, so they realize
/// the invariant sigma-algebra of the finite system.
inline OrbitPartition shift_orbit_partition(const PathMeasure& q) {
    if (!is_shift_invariant(q))
        throw precondition_error("shift_orbit_partition: exact shift invariance required");
    std::map<DiscretePath, std::size_t> orbit_of;  // canonical rotation -> orbit id
    OrbitPartition part;
    for (std::size_t i = 0; i < q.atoms().size(); ++i) {
        const DiscretePath& p = q.atoms()[i].path;
        DiscretePath rep = p;
        for (int s = 1; s < q.grid().n_steps(); ++s) {
            DiscretePath r = rotate(p, s);
            if (r < rep) rep = r;
        }
        auto [it, inserted] = orbit_of.try_emplace(rep, part.orbits.size());
        if (inserted) {
            part.orbits.emplace_back();
            part.masses.push_back(0.0);
        }
        part.orbits[it->second].push_back(i);
        part.masses[it->second] += q.atoms()[i].weight;
    }
    return part;
}

struct InvariantWitness {
    PathEvent event;      // shift-invariant support event
    double defect = 0.0;  // max over s of q(Gamma^s Phi symdiff Phi)
    double mass = 0.0;
};

struct ErgodicityReport {
    bool ergodic = false;
    std::optional<InvariantWitness> witness;
};

/// q(Gamma^s B symdiff B) evaluated on the support.
inline double shift_defect(const PathMeasure& q, const PathEvent& b, int s) {
    double d = 0.0;
    for (const auto& a : q.atoms()) {
        // z in Gamma^s B  <=>  Gamma^{-s} z in B
        const bool in_shifted = b.contains(rotate(a.path, -s), q.grid());
        if (in_shifted != b.contains(a.path, q.grid())) d += a.weight;
    }
    return d;
}

inline double max_shift_defect(const PathMeasure& q, const PathEvent& b) {
    double d = 0.0;
    for (int s = 1; s < q.grid().n_steps(); ++s) d = std::max(d, shift_defect(q, b, s));
    return d;
}

/// Ergodicity test for an exactly shift-invariant measure: ergodic iff the
/// orbit partition has a single orbit of positive mass; otherwise one orbit
/// is returned as an invariant witness with mass strictly inside (0, 1).
inline ErgodicityReport is_ergodic(const PathMeasure& q) {
    const OrbitPartition part = shift_orbit_partition(q);
    ErgodicityReport rep;
    rep.ergodic = part.orbits.size() <= 1;
    if (!rep.ergodic) {
        std::vector<DiscretePath> paths;
        for (std::size_t i : part.orbits.front()) paths.push_back(q.atoms()[i].path);
        InvariantWitness w{PathEvent::support_subset(std::move(paths)), 0.0,
                           part.masses.front()};
        w.defect = max_shift_defect(q, w.event);
        rep.witness = std::move(w);
    }
    return rep;
}

/// Strictly invariant hull (the exact event behind an almost-invariant one):
/// F = intersection over all grid shifts s of Gamma^s B, materialized on the
/// support plus any explicit paths B carries. Gamma^s F = F exactly and
/// q(F symdiff B) = 0.
inline PathEvent strict_invariant_hull(const PathMeasure& q, const PathEvent& b) {
    if (!is_shift_invariant(q))
        throw precondition_error("strict_invariant_hull: shift-invariant measure required");
    for (int s = 1; s < q.grid().n_steps(); ++s)
        if (shift_defect(q, b, s) > 0.0)
            throw precondition_error("strict_invariant_hull: event has positive shift defect");

    std::vector<DiscretePath> candidates;
    for (const auto& a : q.atoms()) candidates.push_back(a.path);
    if (!b.is_cylinder() && !b.negated())
        for (const auto& p : b.paths()) candidates.push_back(p);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<DiscretePath> hull;
    for (const auto& p : candidates) {
        bool all_in = true;
        for (int s = 0; s < q.grid().n_steps() && all_in; ++s)
            all_in = b.contains(rotate(p, -s), q.grid());
        if (all_in) hull.push_back(p);
    }
    return PathEvent::support_subset(std::move(hull));
}

// ----------------------------------------------------------------------------
// Weak ergodicity and extreme-point decomposition
// ----------------------------------------------------------------------------

namespace detail {

/// Per-atom bitmask of visited cells (cell_count <= 64).
inline std::vector<std::uint64_t> visited_masks(const PathMeasure& q) {
    std::vector<std::uint64_t> masks;
    masks.reserve(q.atoms().size());
    for (const auto& a : q.atoms()) {
        std::uint64_t m = 0;
        for (cell_t c : a.path.cells) m |= (std::uint64_t{1} << c);
        masks.push_back(m);
    }
    return masks;
}

/// Whether Phi = {z(0) in E} is invariant under every grid shift as an event
/// on the support: each support atom either never leaves E or never enters
/// it.
inline bool starts_in_invariant_on_support(std::uint64_t E,
                                           const std::vector<std::uint64_t>& masks) {
    for (std::uint64_t m : masks)
        if ((m & E) != 0 && (m & ~E) != 0) return false;
    return true;
}

inline double invariant_mass(const PathMeasure& q, std::uint64_t E,
                             const std::vector<std::uint64_t>& masks) {
    double mass = 0.0;
    for (std::size_t i = 0; i < masks.size(); ++i)
        if ((masks[i] & E) != 0) mass += q.atoms()[i].weight;
    return mass;
}

}  // namespace detail

struct WeakErgodicityReport {
    bool weak_ergodic = false;
    std::optional<std::vector<cell_t>> witness_cells;  // E with 0 < q({z(0) in E}) < 1
    double witness_mass = 0.0;
    bool exhaustive = true;  // false when the component-generated algebra was used
};

/// Weak ergodicity: every cell set E whose event {z(0) in E} is invariant
/// under all grid shifts (on the support) has mass 0 or 1. Exhaustive over
/// all 2^m cell sets for m <= 16 cells; beyond that the scan runs over the
/// algebra generated by the support atoms' visited-cell components, which
/// contains every invariant event of the support.
inline WeakErgodicityReport is_weak_ergodic(const PathMeasure& q) {
    if (!check_incompressible(q, kProbTol).pass)
        throw precondition_error("is_weak_ergodic: incompressible measure required");
    if (q.grid().mode() != GridMode::periodic)
        throw mode_error("is_weak_ergodic: periodic grid required for exact shift events");
    const int m = q.space().cell_count();
    if (m > 64)
        throw precondition_error("is_weak_ergodic: state space too large");
    const auto masks = detail::visited_masks(q);

    WeakErgodicityReport rep;
    rep.weak_ergodic = true;

    auto consider = [&](std::uint64_t E) {
        if (!detail::starts_in_invariant_on_support(E, masks)) return false;
        const double mass = detail::invariant_mass(q, E, masks);
        if (mass > kProbTol && mass < 1.0 - kProbTol) {
            rep.weak_ergodic = false;
            std::vector<cell_t> cells;
            for (int c = 0; c < m; ++c)
                if (E & (std::uint64_t{1} << c)) cells.push_back(static_cast<cell_t>(c));
            rep.witness_cells = std::move(cells);
            rep.witness_mass = mass;
            return true;
        }
        return false;
    };

    if (m <= 16) {
        const std::uint64_t limit = std::uint64_t{1} << m;
        for (std::uint64_t E = 1; E + 1 < limit; ++E)
            if (consider(E)) break;
        return rep;
    }

    // Merge overlapping visited-cell sets into components; every invariant E
    // decomposes over them.
    rep.exhaustive = false;
    std::vector<std::uint64_t> comps;
    for (std::uint64_t vm : masks) {
        std::uint64_t merged = vm;
        std::vector<std::uint64_t> next;
        for (std::uint64_t c : comps) {
            if (c & merged)
                merged |= c;
            else
                next.push_back(c);
        }
        next.push_back(merged);
        comps = std::move(next);
    }
    std::sort(comps.begin(), comps.end());
    if (comps.size() <= 20) {
        const std::uint64_t subsets = std::uint64_t{1} << comps.size();
        for (std::uint64_t sel = 1; sel + 1 < subsets; ++sel) {
            std::uint64_t E = 0;
            for (std::size_t i = 0; i < comps.size(); ++i)
                if (sel & (std::uint64_t{1} << i)) E |= comps[i];
            if (consider(E)) break;
        }
    } else {
        for (std::uint64_t c : comps)
            if (consider(c)) break;
    }
    return rep;
}

struct Decomposition {
    double p = 0.0;
    PathMeasure q1;
    PathMeasure q2;
};

/// Extreme-point decomposition along an invariant starting set: for
/// Phi = {z(0) in E} invariant on the support with 0 < q(Phi) < 1, returns
/// p = q(Phi), q1 = q|Phi, q2 = q|not Phi; mixing them back with (p, 1-p)
/// reproduces q.
inline Decomposition decompose(const PathMeasure& q, const std::vector<cell_t>& E) {
    const int m = q.space().cell_count();
    if (m > 64) throw precondition_error("decompose: state space too large");
    std::uint64_t Emask = 0;
    for (cell_t c : E) {
        if (!q.space().contains(c)) throw precondition_error("decompose: cell out of range");
        Emask |= (std::uint64_t{1} << c);
    }
    const auto masks = detail::visited_masks(q);
    if (!detail::starts_in_invariant_on_support(Emask, masks))
        throw precondition_error("decompose: {z(0) in E} is not invariant on the support");
    const PathEvent phi = PathEvent::starts_in(E);
    const double p = event_mass(q, phi);
    if (!(p > kProbTol) || !(p < 1.0 - kProbTol))
        throw precondition_error("decompose: event mass must lie strictly in (0, 1)");
    return Decomposition{p, condition(q, phi), condition(q, phi.complement())};
}

// ----------------------------------------------------------------------------
// Per-atom support ergodicity (classical flows inside an ergodic GIF)
// ----------------------------------------------------------------------------

struct AtomErgodicityVerdict {
    std::size_t atom = 0;
    bool well_defined = false;  // consistent successor map on the atom's image
    bool bijective = false;
    bool single_cycle = false;
    bool pass = false;
};

/// For each support atom of an ergodic measure, reconstructs the cell-level
/// flow T: z(t) -> z(t + dt) on the atom's image and checks that it is a
/// well-defined bijection whose orbit is a single cycle covering the image,
/// i.e. an ergodic classical flow for the atom's empirical measure.
inline std::vector<AtomErgodicityVerdict> check_support_ergodicity(const PathMeasure& q) {
    const ErgodicityReport erg = is_ergodic(q);
    if (!erg.ergodic)
        throw precondition_error("check_support_ergodicity: measure is not ergodic");

    std::vector<AtomErgodicityVerdict> verdicts;
    const int N = q.grid().n_steps();
    for (std::size_t i = 0; i < q.atoms().size(); ++i) {
        const auto& cells = q.atoms()[i].path.cells;
        AtomErgodicityVerdict v;
        v.atom = i;
        std::map<cell_t, cell_t> succ;
        v.well_defined = true;
        for (int j = 0; j < N; ++j) {
            const cell_t from = cells[static_cast<std::size_t>(j)];
            const cell_t to = cells[static_cast<std::size_t>((j + 1) % N)];
            auto [it, inserted] = succ.try_emplace(from, to);
            if (!inserted && it->second != to) {
                v.well_defined = false;
                break;
            }
        }
        if (v.well_defined) {
            std::map<cell_t, int> indegree;
            for (const auto& [from, to] : succ) ++indegree[to];
            v.bijective = true;
            for (const auto& [from, to] : succ)
                if (indegree[from] != 1) v.bijective = false;
            if (v.bijective) {
                // Follow the cycle from the starting cell.
                std::size_t steps = 0;
                cell_t z = cells[0];
                do {
                    z = succ.at(z);
                    ++steps;
                } while (z != cells[0] && steps <= succ.size());
                v.single_cycle = (steps == succ.size());
            }
        }
        v.pass = v.well_defined && v.bijective && v.single_cycle;
        verdicts.push_back(v);
    }
    return verdicts;
}

// ----------------------------------------------------------------------------
// Shift balance of starting-cell events
// ----------------------------------------------------------------------------

struct Lemma53Report {
    double lhs = 0.0;  // q(Gamma^{-s} Phi)
    double rhs = 0.0;  // q(Phi)
    bool equal = false;
};

/// q(Gamma^{-s}{z(0) in E}) = q({z(0) in E}) for incompressible q; evaluated
/// exactly as finite sums and compared within the probability tolerance.
inline Lemma53Report lemma53_check(const PathMeasure& q, const std::vector<cell_t>& E, int s) {
    const PathEvent phi = PathEvent::starts_in(E);
    Lemma53Report rep;
    rep.lhs = event_mass(q, phi.shifted_preimage(s, q.grid()));
    rep.rhs = event_mass(q, phi);
    rep.equal = std::abs(rep.lhs - rep.rhs) <= kProbTol;
    return rep;
}

}  // namespace gifkit
