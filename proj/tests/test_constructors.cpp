#include <catch2/catch_amalgamated.hpp>

#include "gifkit/constructors.hpp"
#include "gifkit/structure.hpp"
#include "gifkit/suite.hpp"

using namespace gifkit;

TEST_CASE("identity flow yields constant paths with the given weights", "[constructors]") {
    const StateSpace space = StateSpace::circle(4);
    const TimeGrid grid(1.0, 3, GridMode::window);
    const std::vector<cell_t> identity{0, 1, 2, 3};
    const PathMeasure q = from_classical_flow({space, identity}, Marginal::uniform(4), grid);
    REQUIRE(q.support_size() == 4);
    for (const auto& a : q.atoms()) {
        CHECK(a.weight == 0.25);
        for (cell_t c : a.path.cells) CHECK(c == a.path.cells[0]);
    }
}

TEST_CASE("rotation flow induces an incompressible measure", "[constructors]") {
    const StateSpace space = StateSpace::circle(4);
    const std::vector<cell_t> rot{1, 2, 3, 0};
    const PathMeasure q = from_classical_flow({space, rot}, Marginal::uniform(4),
                                              TimeGrid(1.0, 4, GridMode::periodic));
    CHECK(check_incompressible(q, 1e-12).pass);
    CHECK(q.atoms().front().path == DiscretePath{{0, 1, 2, 3}});
}

TEST_CASE("two-cell-period rotation is incompressible but splits into two orbits",
          "[constructors]") {
    const StateSpace space = StateSpace::circle(4);
    const std::vector<cell_t> two_step{2, 3, 0, 1};
    const PathMeasure q = from_classical_flow({space, two_step}, Marginal::uniform(4),
                                              TimeGrid(1.0, 4, GridMode::periodic));
    CHECK(check_incompressible(q, 1e-12).pass);
    const OrbitPartition part = shift_orbit_partition(q);
    REQUIRE(part.orbits.size() == 2);  // even cells vs odd cells
    CHECK(part.masses[0] == 0.5);
    CHECK(part.masses[1] == 0.5);
}

TEST_CASE("non-measure-preserving flows are rejected", "[constructors]") {
    const StateSpace space = StateSpace::circle(4);
    const std::vector<cell_t> collapse{0, 0, 0, 0};
    CHECK_THROWS_AS(from_classical_flow({space, collapse}, Marginal::uniform(4),
                                        TimeGrid(1.0, 4, GridMode::window)),
                    precondition_error);
    // A non-uniform marginal that the map does preserve is accepted.
    const std::vector<cell_t> swap01{1, 0, 2, 3};
    const Marginal mu{{0.25, 0.25, 0.5, 0.0}};
    const PathMeasure q =
        from_classical_flow({space, swap01}, mu, TimeGrid(1.0, 4, GridMode::window));
    CHECK(q.support_size() == 3);  // zero-mass cell contributes no atom
    CHECK(check_incompressible(q, 1e-12).pass);
}

TEST_CASE("preserving the uniform marginal forces a bijection", "[constructors]") {
    suite::Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 3 + rng.below(6);
        std::vector<cell_t> step(static_cast<std::size_t>(n));
        for (auto& c : step) c = static_cast<cell_t>(rng.below(n));
        const DiscreteClassicalFlow flow{StateSpace::circle(n), step};
        CHECK(flow.preserves(Marginal::uniform(n)) == flow.invertible());
    }
}

TEST_CASE("classical flows satisfy the marginal identity for every observable",
          "[constructors]") {
    suite::Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + rng.below(6);
        const StateSpace space = StateSpace::circle(n);
        const TimeGrid grid(1.0, 3 + rng.below(8), GridMode::window);
        const Marginal mu = Marginal::uniform(n);
        const PathMeasure q = from_classical_flow({space, rng.permutation(n)}, mu, grid);
        const Observable f = suite::random_observable(rng, n, false);
        const double expected = integral(f, mu);
        for (int k = 0; k <= grid.last_time_index(); ++k) {
            double lhs = 0.0;
            for (const auto& a : q.atoms())
                lhs += a.weight *
                       f.values[static_cast<std::size_t>(
                           a.path.cells[static_cast<std::size_t>(k)])];
            CHECK(std::abs(lhs - expected) <= 1e-12);
        }
    }
}

TEST_CASE("stopping rotation reproduces the frozen quarter-turn structure", "[constructors]") {
    const StateSpace space = StateSpace::circle(8);
    const TimeGrid grid(kTwoPi / 2.0, 16, GridMode::window);  // T = pi
    const PathMeasure q = stopping_rotation(space, grid);

    SECTION("final cell is the start shifted by a quarter circle") {
        for (const auto& a : q.atoms())
            CHECK(a.path.cells.back() == (a.path.cells.front() + 2) % 8);
    }
    SECTION("atoms freeze after ceil((pi/2)/dt) steps") {
        const int freeze = static_cast<int>(std::ceil((kTwoPi / 4.0) / grid.dt()));
        REQUIRE(freeze == 8);
        for (const auto& a : q.atoms())
            for (int k = freeze; k <= 16; ++k)
                CHECK(a.path.cells[static_cast<std::size_t>(k)] ==
                      a.path.cells[static_cast<std::size_t>(freeze)]);
    }
    SECTION("no atom revisits its initial cell once it has moved") {
        int revisits = 0;
        for (const auto& a : q.atoms())
            for (int k = 1; k <= 16; ++k)
                if (grid.time(k) >= space.cell_width() &&
                    a.path.cells[static_cast<std::size_t>(k)] == a.path.cells[0])
                    ++revisits;
        CHECK(revisits == 0);
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(stopping_rotation(space, TimeGrid(1.0, 8, GridMode::window)),
                        precondition_error);  // horizon <= pi/2
        CHECK_THROWS_AS(stopping_rotation(space, TimeGrid(4.0, 8, GridMode::periodic)),
                        mode_error);
        CHECK_THROWS_AS(stopping_rotation(StateSpace::torus2d(4), grid), precondition_error);
    }
}

TEST_CASE("krylov-bogolioubov averaging", "[constructors]") {
    const StateSpace space = StateSpace::circle(4);
    const TimeGrid grid(1.0, 4, GridMode::periodic);

    SECTION("a shift-invariant input is a fixed point") {
        const std::vector<cell_t> rot{1, 2, 3, 0};
        const PathMeasure q =
            from_classical_flow({space, rot}, Marginal::uniform(4), grid);
        REQUIRE(is_shift_invariant(q));
        for (int n : {1, 2, 4}) CHECK(krylov_bogolioubov_average(q, n) == q);
    }

    SECTION("averaging a single rotation path over the full period equidistributes") {
        const PathMeasure omega(space, grid, {{DiscretePath{{0, 1, 2, 3}}, 1.0}});
        const PathMeasure q = krylov_bogolioubov_average(omega, 4);
        REQUIRE(q.support_size() == 4);
        for (const auto& a : q.atoms()) CHECK(a.weight == 0.25);
        CHECK(shift(q, 1) == q);  // exactly shift-invariant
    }

    SECTION("telescoping defect bound for a non-invariant atom") {
        const PathMeasure omega(space, grid, {{DiscretePath{{0, 0, 1, 2}}, 1.0}});
        for (int n : {2, 3, 4}) {
            const PathMeasure q = krylov_bogolioubov_average(omega, n);
            const PathEvent phi = PathEvent::cylinder({{0, {0}}});
            const double defect =
                std::abs(event_mass(q, phi.shifted_preimage(1, grid)) - event_mass(q, phi));
            CHECK(defect <= 2.0 / n + 1e-15);
        }
    }

    SECTION("full-period averages of random starts are exact fixed points of the shift") {
        suite::Rng rng(9);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 3 + rng.below(5);
            const int N = 4 + rng.below(9);
            const StateSpace sp = StateSpace::circle(n);
            const TimeGrid g(1.0, N, GridMode::periodic);
            std::vector<PathMeasure::Atom> atoms;
            DiscretePath p;
            for (int k = 0; k < N; ++k) p.cells.push_back(static_cast<cell_t>(rng.below(n)));
            atoms.push_back({p, 1.0});
            const PathMeasure q = krylov_bogolioubov_average(PathMeasure(sp, g, atoms), N);
            CHECK(shift(q, 1) == q);
        }
    }

    SECTION("preconditions") {
        const PathMeasure window_q(space, TimeGrid(1.0, 4, GridMode::window),
                                   {{DiscretePath{{0, 0, 0, 0, 0}}, 1.0}});
        CHECK_THROWS_AS(krylov_bogolioubov_average(window_q, 2), mode_error);
        const PathMeasure omega(space, grid, {{DiscretePath{{0, 1, 2, 3}}, 1.0}});
        CHECK_THROWS_AS(krylov_bogolioubov_average(omega, 0), precondition_error);
        CHECK_THROWS_AS(krylov_bogolioubov_average(omega, 5), precondition_error);
    }
}
