#include <catch2/catch_amalgamated.hpp>

#include "gifkit/constructors.hpp"
#include "gifkit/structure.hpp"
#include "gifkit/suite.hpp"

using namespace gifkit;

namespace {

PathMeasure rotation_orbit(int n, int N) {
    std::vector<cell_t> rot(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) rot[static_cast<std::size_t>(i)] = static_cast<cell_t>((i + 1) % n);
    return from_classical_flow({StateSpace::circle(n), rot}, Marginal::uniform(n),
                               TimeGrid(1.0, N, GridMode::periodic));
}

PathMeasure even_odd_measure() {
    // two-cell-period rotation on 4 cells: orbits {0,2} and {1,3}
    const StateSpace space = StateSpace::circle(4);
    return from_classical_flow({space, {2, 3, 0, 1}}, Marginal::uniform(4),
                               TimeGrid(1.0, 4, GridMode::periodic));
}

}  // namespace

TEST_CASE("shift orbit partition", "[structure]") {
    SECTION("uniform measure on one rotation orbit is a single orbit") {
        const auto part = shift_orbit_partition(rotation_orbit(4, 4));
        REQUIRE(part.orbits.size() == 1);
        CHECK(part.masses[0] == 1.0);
        CHECK(part.orbits[0].size() == 4);
    }
    SECTION("mixture of two disjoint orbits yields two classes") {
        const auto part = shift_orbit_partition(even_odd_measure());
        REQUIRE(part.orbits.size() == 2);
        CHECK(part.masses[0] + part.masses[1] == 1.0);
    }
    SECTION("non-invariant input is rejected") {
        const StateSpace space = StateSpace::circle(4);
        const PathMeasure q(space, TimeGrid(1.0, 4, GridMode::periodic),
                            {{DiscretePath{{0, 0, 1, 2}}, 1.0}});
        CHECK_THROWS_AS(shift_orbit_partition(q), precondition_error);
    }
}

TEST_CASE("ergodicity verdicts", "[structure]") {
    SECTION("single-orbit rotation measure is ergodic") {
        CHECK(is_ergodic(rotation_orbit(4, 4)).ergodic);
    }
    SECTION("two-orbit mixture is not; witness has mass one half and zero defect") {
        const auto rep = is_ergodic(even_odd_measure());
        CHECK_FALSE(rep.ergodic);
        REQUIRE(rep.witness.has_value());
        CHECK(rep.witness->mass == 0.5);
        CHECK(rep.witness->defect == 0.0);
    }
    SECTION("any transitive cell permutation induces an ergodic measure") {
        suite::Rng rng(31);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 3 + rng.below(6);
            const auto cycle = rng.full_cycle(n);
            const PathMeasure q =
                from_classical_flow({StateSpace::circle(n), cycle}, Marginal::uniform(n),
                                    TimeGrid(1.0, n, GridMode::periodic));
            CHECK(is_ergodic(q).ergodic);
        }
    }
}

TEST_CASE("is_ergodic agrees with exhaustive orbit-union enumeration", "[structure]") {
    // Independent route: enumerate every union of orbits and look for an
    // invariant event with mass strictly inside (eps, 1-eps).
    suite::Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 4 + 2 * rng.below(3);
        const int N = n;
        const StateSpace space = StateSpace::circle(n);
        // random mixture of 1..3 orbit measures
        const int pieces = 1 + rng.below(3);
        std::vector<PathMeasure> parts;
        for (int p = 0; p < pieces; ++p) {
            DiscretePath seed;
            for (int k = 0; k < N; ++k) seed.cells.push_back(static_cast<cell_t>(rng.below(n)));
            parts.push_back(krylov_bogolioubov_average(
                PathMeasure(space, TimeGrid(1.0, N, GridMode::periodic), {{seed, 1.0}}), N));
        }
        std::vector<double> weights(parts.size(), 1.0 / parts.size());
        const PathMeasure q = mix(parts, weights);
        REQUIRE(is_shift_invariant(q));

        const auto part = shift_orbit_partition(q);
        bool witness_found = false;
        for (std::uint64_t sel = 1; sel + 1 < (std::uint64_t{1} << part.orbits.size()); ++sel) {
            double mass = 0.0;
            for (std::size_t o = 0; o < part.orbits.size(); ++o)
                if (sel & (std::uint64_t{1} << o)) mass += part.masses[o];
            if (mass > 1e-12 && mass < 1.0 - 1e-12) witness_found = true;
        }
        CHECK(is_ergodic(q).ergodic == !witness_found);
    }
}

TEST_CASE("strict invariant hull", "[structure]") {
    const PathMeasure q = rotation_orbit(4, 4);

    SECTION("a strictly invariant event is its own hull") {
        std::vector<DiscretePath> orbit;
        for (const auto& a : q.atoms()) orbit.push_back(a.path);
        const PathEvent b = PathEvent::support_subset(orbit);
        const PathEvent f = strict_invariant_hull(q, b);
        for (const auto& a : q.atoms()) CHECK(f.contains(a.path, q.grid()));
        CHECK(max_shift_defect(q, f) == 0.0);
    }
    SECTION("null non-invariant additions are dropped") {
        std::vector<DiscretePath> paths;
        for (const auto& a : q.atoms()) paths.push_back(a.path);
        paths.push_back(DiscretePath{{0, 0, 0, 1}});  // off the support, not rotation-closed
        const PathEvent b = PathEvent::support_subset(paths);
        REQUIRE(max_shift_defect(q, b) == 0.0);  // the junk path carries no mass
        const PathEvent f = strict_invariant_hull(q, b);
        CHECK_FALSE(f.contains(DiscretePath{{0, 0, 0, 1}}, q.grid()));
        // q(F symdiff B) = 0 and Gamma^s F = F exactly
        for (int s = 0; s < 4; ++s)
            for (const auto& a : q.atoms())
                CHECK(f.contains(rotate(a.path, -s), q.grid()) == f.contains(a.path, q.grid()));
    }
    SECTION("positive-defect events are rejected") {
        const PathEvent half = PathEvent::support_subset({q.atoms()[0].path});
        CHECK_THROWS_AS(strict_invariant_hull(q, half), precondition_error);
    }
    SECTION("random orbit unions plus null noise hull back to the orbit union") {
        suite::Rng rng(33);
        const PathMeasure eo = even_odd_measure();
        const auto part = shift_orbit_partition(eo);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t pick = static_cast<std::size_t>(rng.below(2));
            std::vector<DiscretePath> paths;
            for (std::size_t idx : part.orbits[pick]) paths.push_back(eo.atoms()[idx].path);
            DiscretePath junk;
            for (int k = 0; k < 4; ++k) junk.cells.push_back(static_cast<cell_t>(rng.below(4)));
            std::vector<DiscretePath> noisy = paths;
            bool junk_on_support = false;
            for (const auto& a : eo.atoms())
                if (a.path == junk) junk_on_support = true;
            if (!junk_on_support) noisy.push_back(junk);
            const PathEvent hull = strict_invariant_hull(eo, PathEvent::support_subset(noisy));
            double sym_diff = 0.0;
            const PathEvent clean = PathEvent::support_subset(paths);
            for (const auto& a : eo.atoms())
                if (hull.contains(a.path, eo.grid()) != clean.contains(a.path, eo.grid()))
                    sym_diff += a.weight;
            CHECK(sym_diff == 0.0);
        }
    }
}

TEST_CASE("weak ergodicity", "[structure]") {
    SECTION("ergodic rotation measures are weak ergodic") {
        const auto rep = is_weak_ergodic(rotation_orbit(4, 4));
        CHECK(rep.weak_ergodic);
        CHECK(rep.exhaustive);
    }
    SECTION("two classical flows with the same marginal: weak ergodic but not ergodic") {
        const StateSpace space = StateSpace::circle(4);
        const TimeGrid grid(1.0, 4, GridMode::periodic);
        const PathMeasure fwd = from_classical_flow({space, {1, 2, 3, 0}},
                                                    Marginal::uniform(4), grid);
        const PathMeasure bwd = from_classical_flow({space, {3, 0, 1, 2}},
                                                    Marginal::uniform(4), grid);
        const PathMeasure q = mix({fwd, bwd}, {0.5, 0.5});
        CHECK(is_weak_ergodic(q).weak_ergodic);
        CHECK_FALSE(is_ergodic(q).ergodic);
    }
    SECTION("orbits with separated starting cells produce a witness") {
        const auto rep = is_weak_ergodic(even_odd_measure());
        REQUIRE_FALSE(rep.weak_ergodic);
        REQUIRE(rep.witness_cells.has_value());
        CHECK(rep.witness_mass == 0.5);
        // the witness is a union of one orbit's visited cells
        const auto& cells = *rep.witness_cells;
        const bool evens = cells == std::vector<cell_t>{0, 2};
        const bool odds = cells == std::vector<cell_t>{1, 3};
        CHECK((evens || odds));
    }
    SECTION("window-mode input is rejected") {
        const StateSpace space = StateSpace::circle(4);
        DiscretePath c;
        c.cells.assign(5, 0);
        const PathMeasure q(space, TimeGrid(1.0, 4, GridMode::window), {{c, 1.0}});
        CHECK_THROWS_AS(is_weak_ergodic(q), mode_error);
    }
    SECTION("above 16 cells the scan falls back to the component algebra") {
        const int n = 20;
        const StateSpace space = StateSpace::circle(n);
        const TimeGrid grid(1.0, n, GridMode::periodic);
        // two disjoint 10-cycles
        std::vector<cell_t> step(static_cast<std::size_t>(n));
        for (int i = 0; i < 10; ++i) step[static_cast<std::size_t>(i)] = static_cast<cell_t>((i + 1) % 10);
        for (int i = 10; i < 20; ++i)
            step[static_cast<std::size_t>(i)] = static_cast<cell_t>(10 + (i - 10 + 1) % 10);
        const PathMeasure split =
            from_classical_flow({space, step}, Marginal::uniform(n), grid);
        const auto rep = is_weak_ergodic(split);
        CHECK_FALSE(rep.exhaustive);
        REQUIRE_FALSE(rep.weak_ergodic);
        CHECK(rep.witness_mass == Catch::Approx(0.5).margin(1e-12));  // ten copies of 1/20
        CHECK(rep.witness_cells->size() == 10);

        suite::Rng rng(37);
        const PathMeasure whole = from_classical_flow({space, rng.full_cycle(n)},
                                                      Marginal::uniform(n), grid);
        const auto rep2 = is_weak_ergodic(whole);
        CHECK_FALSE(rep2.exhaustive);
        CHECK(rep2.weak_ergodic);
    }
}

TEST_CASE("decompose", "[structure]") {
    SECTION("two constant atoms split into deltas") {
        const StateSpace space = StateSpace::circle(4);
        const TimeGrid grid(1.0, 4, GridMode::periodic);
        DiscretePath a, b;
        a.cells.assign(4, 0);
        b.cells.assign(4, 1);
        const PathMeasure q(space, grid, {{a, 0.5}, {b, 0.5}});
        const auto dec = decompose(q, {0});
        CHECK(dec.p == 0.5);
        CHECK(dec.q1.support_size() == 1);
        CHECK(dec.q2.support_size() == 1);
        CHECK(dec.q1.atoms().front().path == a);
        CHECK(check_incompressible(dec.q1, 0.0).pass);
        CHECK(mix({dec.q1, dec.q2}, {dec.p, 1.0 - dec.p}) == q);
    }
    SECTION("two-orbit rotation mixture recombines exactly") {
        const PathMeasure q = even_odd_measure();
        const auto dec = decompose(q, {0, 2});
        CHECK(dec.p == 0.5);
        CHECK(check_incompressible(dec.q1, 1e-12).pass);
        CHECK(check_incompressible(dec.q2, 1e-12).pass);
        CHECK(mix({dec.q1, dec.q2}, {dec.p, 1.0 - dec.p}) == q);
    }
    SECTION("weak-ergodic measures admit no decomposition") {
        const PathMeasure q = rotation_orbit(4, 4);
        for (std::uint64_t E = 1; E + 1 < 16; ++E) {
            std::vector<cell_t> cells;
            for (int c = 0; c < 4; ++c)
                if (E & (1u << c)) cells.push_back(static_cast<cell_t>(c));
            CHECK_THROWS_AS(decompose(q, cells), precondition_error);
        }
    }
    SECTION("non-invariant or degenerate events are rejected") {
        const PathMeasure q = even_odd_measure();
        CHECK_THROWS_AS(decompose(q, {0}), precondition_error);      // not invariant
        CHECK_THROWS_AS(decompose(q, {0, 1, 2, 3}), precondition_error);  // mass 1
    }
}

TEST_CASE("support ergodicity of atoms", "[structure]") {
    SECTION("single-cycle rotations pass on every atom") {
        for (const auto& v : check_support_ergodicity(rotation_orbit(4, 4))) {
            CHECK(v.well_defined);
            CHECK(v.bijective);
            CHECK(v.single_cycle);
            CHECK(v.pass);
        }
    }
    SECTION("random ergodic single-orbit measures pass (cycle detection oracle)") {
        suite::Rng rng(34);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 3 + rng.below(6);
            const PathMeasure q =
                from_classical_flow({StateSpace::circle(n), rng.full_cycle(n)},
                                    Marginal::uniform(n), TimeGrid(1.0, n, GridMode::periodic));
            REQUIRE(is_ergodic(q).ergodic);
            for (const auto& v : check_support_ergodicity(q)) {
                CHECK(v.pass);
                // oracle: the atom visits exactly n distinct cells in one cycle
                std::vector<char> seen(static_cast<std::size_t>(n), 0);
                for (cell_t c : q.atoms()[v.atom].path.cells) seen[static_cast<std::size_t>(c)] = 1;
                for (char s : seen) CHECK(s == 1);
            }
        }
    }
    SECTION("non-ergodic input is rejected by the precondition") {
        CHECK_THROWS_AS(check_support_ergodicity(even_odd_measure()), precondition_error);
    }
}

TEST_CASE("lemma53 balance checks", "[structure]") {
    SECTION("the whole cell set always balances") {
        const PathMeasure q = rotation_orbit(4, 4);
        const auto rep = lemma53_check(q, {0, 1, 2, 3}, 2);
        CHECK(rep.lhs == 1.0);
        CHECK(rep.rhs == 1.0);
        CHECK(rep.equal);
    }
    SECTION("stopping rotation balances at every shift") {
        const PathMeasure q = stopping_rotation(StateSpace::circle(8),
                                                TimeGrid(kTwoPi / 2.0, 16, GridMode::window));
        for (int s = 1; s <= 16; ++s) {
            const auto rep = lemma53_check(q, {3}, s);
            CHECK(rep.equal);
        }
    }
    SECTION("a deliberately non-incompressible measure shows the imbalance") {
        const StateSpace space = StateSpace::circle(4);
        const PathMeasure q(space, TimeGrid(1.0, 2, GridMode::window),
                            {{DiscretePath{{0, 1, 1}}, 1.0}});
        const auto rep = lemma53_check(q, {0}, 1);
        CHECK_FALSE(rep.equal);
        CHECK(rep.lhs == 0.0);
        CHECK(rep.rhs == 1.0);
    }
}

TEST_CASE("ergodic implies weak ergodic across the seeded family", "[structure]") {
    suite::Rng rng(35);
    for (int trial = 0; trial < 25; ++trial) {
        const auto c = suite::make_structure_case(rng, trial);
        if (!is_shift_invariant(c.measure)) continue;
        if (is_ergodic(c.measure).ergodic) CHECK(is_weak_ergodic(c.measure).weak_ergodic);
    }
}

TEST_CASE("extreme points are exactly the weak ergodic measures at desk scale",
          "[structure]") {
    suite::Rng rng(36);
    for (int trial = 0; trial < 30; ++trial) {
        const auto c = suite::make_structure_case(rng, trial);
        const auto weak = is_weak_ergodic(c.measure);
        bool decomposable = false;
        const int m = c.measure.space().cell_count();
        for (std::uint64_t E = 1; E + 1 < (std::uint64_t{1} << m) && !decomposable; ++E) {
            std::vector<cell_t> cells;
            for (int b = 0; b < m; ++b)
                if (E & (std::uint64_t{1} << b)) cells.push_back(static_cast<cell_t>(b));
            try {
                const auto dec = decompose(c.measure, cells);
                decomposable = true;
                // proper decomposition into two distinct measures
                CHECK(dec.p > 0.0);
                CHECK(dec.p < 1.0);
                CHECK_FALSE(dec.q1 == dec.q2);
            } catch (const precondition_error&) {
            }
        }
        CHECK(weak.weak_ergodic == !decomposable);
    }
}
