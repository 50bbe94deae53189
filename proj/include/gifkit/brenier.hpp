#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gifkit/constructors.hpp"
#include "gifkit/lp.hpp"
#include "gifkit/path_measure.hpp"

namespace gifkit {

// ----------------------------------------------------------------------------
// Final configurations (endpoint couplings)
// ----------------------------------------------------------------------------

/// Doubly stochastic endpoint coupling eta(x, y): every row and column sums
/// to 1/n, prescribing the joint law of (z(0), z(T)).
struct FinalConfiguration {
    int n = 0;                     // cell count
    std::vector<double> coupling;  // row-major n*n

    double at(int x, int y) const {
        return coupling[static_cast<std::size_t>(x) * static_cast<std::size_t>(n) +
                        static_cast<std::size_t>(y)];
    }

    double& at(int x, int y) {
        return coupling[static_cast<std::size_t>(x) * static_cast<std::size_t>(n) +
                        static_cast<std::size_t>(y)];
    }

    /// Max deviation of any row/column sum from 1/n.
    double stochasticity_defect() const {
        const double target = 1.0 / n;
        double worst = 0.0;
        for (int x = 0; x < n; ++x) {
            double row = 0.0, col = 0.0;
            for (int y = 0; y < n; ++y) {
                row += at(x, y);
                col += at(y, x);
            }
            worst = std::max({worst, std::abs(row - target), std::abs(col - target)});
        }
        return worst;
    }

    void validate(double tol = kSolverTol) const {
        if (n <= 0 || coupling.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
            throw precondition_error("FinalConfiguration: bad dimensions");
        for (double v : coupling)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw precondition_error("FinalConfiguration: entries must be nonnegative");
        if (stochasticity_defect() > tol)
            throw precondition_error("FinalConfiguration: not doubly stochastic within tolerance");
    }

    static FinalConfiguration identity(int n) {
        FinalConfiguration eta{n, std::vector<double>(static_cast<std::size_t>(n) *
                                                          static_cast<std::size_t>(n),
                                                      0.0)};
        for (int x = 0; x < n; ++x) eta.at(x, x) = 1.0 / n;
        return eta;
    }
};

/// Deterministic coupling of a volume-preserving cell map:
/// eta_h(x, y) = (1/n) [y = h(x)].
inline FinalConfiguration eta_from_map(std::span<const cell_t> h, const StateSpace& space) {
    const int n = space.cell_count();
    if (h.size() != static_cast<std::size_t>(n))
        throw precondition_error("eta_from_map: map size mismatch");
    std::vector<char> hit(static_cast<std::size_t>(n), 0);
    for (cell_t c : h) {
        if (!space.contains(c)) throw precondition_error("eta_from_map: target out of range");
        if (hit[static_cast<std::size_t>(c)])
            throw precondition_error("eta_from_map: map is not a bijection");
        hit[static_cast<std::size_t>(c)] = 1;
    }
    FinalConfiguration eta{n, std::vector<double>(static_cast<std::size_t>(n) *
                                                      static_cast<std::size_t>(n),
                                                  0.0)};
    for (int x = 0; x < n; ++x) eta.at(x, h[static_cast<std::size_t>(x)]) = 1.0 / n;
    return eta;
}

// ----------------------------------------------------------------------------
// Energies
// ----------------------------------------------------------------------------

/// Generalized kinetic energy: sum over atoms of
/// w * rho(z(0)) * sum_k d(z_k, z_{k+1})^2 / (2 dt), the forward-difference
/// discretization of the integrated (1/2)||z'||^2.
inline double kinetic_energy(const PathMeasure& q, const Observable& rho) {
    if (q.grid().mode() != GridMode::window)
        throw mode_error("kinetic_energy: window grid required");
    if (rho.values.size() != static_cast<std::size_t>(q.space().cell_count()))
        throw precondition_error("kinetic_energy: rho size mismatch");
    const double dt = q.grid().dt();
    double total = 0.0;
    for (const auto& a : q.atoms()) {
        double path_cost = 0.0;
        for (int k = 0; k < q.grid().n_steps(); ++k) {
            const double d = q.space().geodesic_distance(
                a.path.cells[static_cast<std::size_t>(k)],
                a.path.cells[static_cast<std::size_t>(k + 1)]);
            path_cost += d * d / (2.0 * dt);
        }
        total += a.weight * rho.values[static_cast<std::size_t>(a.path.cells[0])] * path_cost;
    }
    return total;
}

/// Minimum-action problem data: endpoint coupling, optional per-step
/// potential (left-endpoint quadrature) and initial density rho (default 1,
/// the homogeneous incompressible case).
struct ActionProblem {
    StateSpace space;
    TimeGrid grid;
    FinalConfiguration eta;
    Observable rho;                    // empty = constant 1
    std::vector<Observable> potential; // empty = zero; 1 entry = broadcast; else N entries

    Observable resolved_rho() const {
        if (rho.values.empty())
            return Observable{std::vector<double>(static_cast<std::size_t>(space.cell_count()), 1.0)};
        return rho;
    }

    const Observable* potential_at(int k) const {
        if (potential.empty()) return nullptr;
        if (potential.size() == 1) return &potential.front();
        return &potential[static_cast<std::size_t>(k)];
    }

    void validate() const {
        if (grid.mode() != GridMode::window)
            throw mode_error("ActionProblem: window grid required");
        eta.validate();
        if (eta.n != space.cell_count())
            throw precondition_error("ActionProblem: eta dimension mismatch");
        if (!rho.values.empty() &&
            rho.values.size() != static_cast<std::size_t>(space.cell_count()))
            throw precondition_error("ActionProblem: rho size mismatch");
        if (!potential.empty() && potential.size() != 1 &&
            potential.size() != static_cast<std::size_t>(grid.n_steps()))
            throw precondition_error("ActionProblem: potential must have 1 or N entries");
        for (const auto& u : potential) {
            u.validate();
            if (u.values.size() != static_cast<std::size_t>(space.cell_count()))
                throw precondition_error("ActionProblem: potential size mismatch");
        }
    }
};

/// Action of one path under the problem's cost: rho(z0) * (kinetic - potential).
inline double path_action(const ActionProblem& problem, const DiscretePath& p) {
    const double dt = problem.grid.dt();
    double kinetic = 0.0;
    double potential = 0.0;
    for (int k = 0; k < problem.grid.n_steps(); ++k) {
        const double d = problem.space.geodesic_distance(
            p.cells[static_cast<std::size_t>(k)], p.cells[static_cast<std::size_t>(k + 1)]);
        kinetic += d * d / (2.0 * dt);
        if (const Observable* u = problem.potential_at(k))
            potential += u->values[static_cast<std::size_t>(p.cells[static_cast<std::size_t>(k)])] * dt;
    }
    const Observable rho = problem.resolved_rho();
    return rho.values[static_cast<std::size_t>(p.cells[0])] * (kinetic - potential);
}

/// Generalized action of a measure: kinetic energy minus the integrated
/// potential term.
inline double action(const PathMeasure& q, const ActionProblem& problem) {
    problem.validate();
    if (!(q.space() == problem.space) || !(q.grid() == problem.grid))
        throw precondition_error("action: measure does not match problem space/grid");
    double total = 0.0;
    for (const auto& a : q.atoms()) total += a.weight * path_action(problem, a.path);
    return total;
}

// ----------------------------------------------------------------------------
// Minimum-action solver
// ----------------------------------------------------------------------------

struct SolveOptions {
    std::uint64_t enumeration_cap = 1000000;
    double tol = kSolverTol;
    bool probe_degeneracy = true;
    std::optional<PathMeasure> warm_start;  // feasible candidate to bound the optimum
};

struct SolveReport {
    std::optional<PathMeasure> optimal;  // canonical, renormalized measure
    double value = 0.0;
    lp::Status status = lp::Status::iteration_limit;
    double incompressibility_tv = 0.0;
    double coupling_tv = 0.0;
    bool degenerate = false;
    long iterations = 0;
    std::optional<double> oracle_gap;       // filled by callers running the oracle
    std::optional<double> warm_start_gap;   // action(warm start) - optimum, >= -tol
};

namespace detail {

/// Mixed-radix path decoding; index order equals lexicographic path order.
inline DiscretePath decode_path(std::uint64_t index, int n_cells, int length) {
    DiscretePath p;
    p.cells.assign(static_cast<std::size_t>(length), 0);
    for (int k = length - 1; k >= 0; --k) {
        p.cells[static_cast<std::size_t>(k)] =
            static_cast<cell_t>(index % static_cast<std::uint64_t>(n_cells));
        index /= static_cast<std::uint64_t>(n_cells);
    }
    return p;
}

inline std::uint64_t checked_path_count(int n_cells, int length, std::uint64_t cap) {
    std::uint64_t count = 1;
    for (int i = 0; i < length; ++i) {
        if (count > cap / static_cast<std::uint64_t>(n_cells) + 1)
            return cap + 1;
        count *= static_cast<std::uint64_t>(n_cells);
        if (count > cap) return cap + 1;
    }
    return count;
}

inline double hash01(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Endpoint coupling of a measure as a matrix.
inline FinalConfiguration endpoint_coupling(const PathMeasure& q) {
    const int n = q.space().cell_count();
    FinalConfiguration eta{n, std::vector<double>(static_cast<std::size_t>(n) *
                                                      static_cast<std::size_t>(n),
                                                  0.0)};
    const std::size_t last = q.atoms().front().path.cells.size() - 1;
    for (const auto& a : q.atoms())
        eta.at(a.path.cells[0], a.path.cells[last]) += a.weight;
    return eta;
}

/// Solves the discrete minimum-action problem as a finite LP over all
/// enumerated paths: one weight per path, uniform marginal constraints at
/// each interior grid time, endpoint masses matching eta. Deterministic.
inline SolveReport solve_min_action(const ActionProblem& problem, const SolveOptions& options = {}) {
    problem.validate();
    const int n = problem.space.cell_count();
    const int N = problem.grid.n_steps();
    const int length = N + 1;
    const std::uint64_t n_paths =
        detail::checked_path_count(n, length, options.enumeration_cap);
    if (n_paths > options.enumeration_cap)
        throw precondition_error(
            "solve_min_action: enumeration cap exceeded; use a coarser grid");

    // Rows: interior marginals (k = 1..N-1, cell c), then coupling (x, y).
    const int marginal_rows = n * std::max(0, N - 1);
    const int n_rows = marginal_rows + n * n;
    std::vector<double> rhs(static_cast<std::size_t>(n_rows));
    for (int r = 0; r < marginal_rows; ++r) rhs[static_cast<std::size_t>(r)] = 1.0 / n;
    for (int x = 0; x < n; ++x)
        for (int y = 0; y < n; ++y)
            rhs[static_cast<std::size_t>(marginal_rows + x * n + y)] = problem.eta.at(x, y);

    // Costs and constraint rows are looked up millions of times during
    // pricing; cache them per path when the enumeration is small enough.
    const bool cache = n_paths <= 262144;
    std::vector<double> cost_cache;
    std::vector<std::int32_t> row_cache;  // N+1 row ids per path
    const int rows_per_path = N;          // N-1 marginal rows + 1 coupling row
    if (cache) {
        cost_cache.reserve(n_paths);
        row_cache.reserve(n_paths * static_cast<std::uint64_t>(rows_per_path));
        for (std::uint64_t j = 0; j < n_paths; ++j) {
            const DiscretePath p = detail::decode_path(j, n, length);
            cost_cache.push_back(path_action(problem, p));
            for (int k = 1; k < N; ++k)
                row_cache.push_back((k - 1) * n + p.cells[static_cast<std::size_t>(k)]);
            row_cache.push_back(marginal_rows + p.cells[0] * n +
                                p.cells[static_cast<std::size_t>(N)]);
        }
    }
    auto cost = [&](std::size_t j) {
        if (cache) return cost_cache[j];
        return path_action(problem, detail::decode_path(j, n, length));
    };
    auto column = [&](std::size_t j, std::vector<std::pair<int, double>>& out) {
        if (cache) {
            const std::int32_t* rows = row_cache.data() + j * static_cast<std::size_t>(rows_per_path);
            for (int k = 0; k < rows_per_path; ++k) out.emplace_back(rows[k], 1.0);
            return;
        }
        const DiscretePath p = detail::decode_path(j, n, length);
        for (int k = 1; k < N; ++k)
            out.emplace_back((k - 1) * n + p.cells[static_cast<std::size_t>(k)], 1.0);
        out.emplace_back(marginal_rows + p.cells[0] * n +
                             p.cells[static_cast<std::size_t>(N)],
                         1.0);
    };

    lp::Options lp_opt;
    lp_opt.tol = options.tol;
    lp::Result lp_result =
        lp::solve_equality_form(n_rows, rhs, n_paths, cost, column, lp_opt);

    SolveReport report;
    report.status = lp_result.status;
    report.iterations = lp_result.iterations;
    if (lp_result.status == lp::Status::infeasible)
        throw precondition_error("solve_min_action: infeasible final configuration");
    if (lp_result.status != lp::Status::optimal) return report;
    report.value = lp_result.objective;

    std::vector<PathMeasure::Atom> atoms;
    double total = 0.0;
    for (std::size_t j = 0; j < lp_result.solution.size(); ++j)
        if (lp_result.solution[j] > kProbTol) total += lp_result.solution[j];
    for (std::size_t j = 0; j < lp_result.solution.size(); ++j)
        if (lp_result.solution[j] > kProbTol)
            atoms.push_back(
                {detail::decode_path(j, n, length), lp_result.solution[j] / total});
    PathMeasure optimal(problem.space, problem.grid, std::move(atoms));
    report.incompressibility_tv = check_incompressible(optimal, 0.0).max_tv_deviation;
    const FinalConfiguration realized = endpoint_coupling(optimal);
    double coupling_l1 = 0.0;
    for (std::size_t i = 0; i < realized.coupling.size(); ++i)
        coupling_l1 += std::abs(realized.coupling[i] - problem.eta.coupling[i]);
    report.coupling_tv = 0.5 * coupling_l1;
    report.optimal = std::move(optimal);

    if (options.warm_start)
        report.warm_start_gap = action(*options.warm_start, problem) - report.value;

    if (options.probe_degeneracy) {
        double cost_scale = 1.0;
        for (std::size_t j = 0; j < n_paths; ++j)
            cost_scale = std::max(cost_scale, std::abs(cost(j)));
        for (int probe_id = 0; probe_id < 2 && !report.degenerate; ++probe_id) {
            const double sign = probe_id == 0 ? 1.0 : -1.0;
            auto perturbed_cost = [&](std::size_t j) {
                return cost(j) + sign * 1e-7 * cost_scale * detail::hash01(j);
            };
            lp::Result probe = lp::solve_equality_form(n_rows, rhs, n_paths, perturbed_cost,
                                                       column, lp_opt);
            if (probe.status != lp::Status::optimal) continue;
            double original_value = 0.0;
            double diff = 0.0;
            for (std::size_t j = 0; j < n_paths; ++j) {
                if (probe.solution[j] > 0.0) original_value += cost(j) * probe.solution[j];
                diff = std::max(diff, std::abs(probe.solution[j] - lp_result.solution[j]));
            }
            const double scale = std::max(1.0, std::abs(report.value));
            if (original_value <= report.value + options.tol * scale && diff > 1e-6)
                report.degenerate = true;
        }
    }
    return report;
}

// ----------------------------------------------------------------------------
// Classical baseline
// ----------------------------------------------------------------------------

struct ClassicalFlowEnergy {
    double value = 0.0;
    std::optional<double> alternate_value;  // set when antipodal ties exist
    std::optional<PathMeasure> measure;
};

/// Energy of the deterministic flow realizing the bijection h by
/// constant-speed geodesic interpolation snapped to cells. Antipodal moves
/// make the geodesic ambiguous; both branch energies are reported then.
inline ClassicalFlowEnergy classical_flow_energy(std::span<const cell_t> h,
                                                 const StateSpace& space,
                                                 const TimeGrid& grid) {
    if (grid.mode() != GridMode::window)
        throw mode_error("classical_flow_energy: window grid required");
    eta_from_map(h, space);  // validates the bijection

    const int N = grid.n_steps();
    const int n = space.n_cells();
    bool ambiguous = false;

    auto build = [&](bool positive_branch) {
        std::vector<PathMeasure::Atom> atoms;
        for (int flat = 0; flat < space.cell_count(); ++flat) {
            DiscretePath p;
            p.cells.reserve(static_cast<std::size_t>(N + 1));
            const cell_t target = h[static_cast<std::size_t>(flat)];
            // Per-axis signed displacement in cells (one axis for the circle).
            const int axes = space.kind() == SpaceKind::circle ? 1 : 2;
            int start[2] = {0, 0}, steps[2] = {0, 0};
            for (int ax = 0; ax < axes; ++ax) {
                const int a = ax == 0 ? flat % n : flat / n;
                const int b = ax == 0 ? target % n : target / n;
                int fwd = ((b - a) % n + n) % n;
                int signed_steps = fwd <= n - fwd ? fwd : fwd - n;
                if (n % 2 == 0 && fwd == n - fwd && fwd != 0) {
                    ambiguous = true;
                    signed_steps = positive_branch ? fwd : fwd - n;
                }
                start[ax] = a;
                steps[ax] = signed_steps;
            }
            for (int k = 0; k <= N; ++k) {
                const double frac = static_cast<double>(k) / N;
                int coord[2];
                for (int ax = 0; ax < axes; ++ax) {
                    const int off = detail::round_half_down(frac * steps[ax]);
                    coord[ax] = ((start[ax] + off) % n + n) % n;
                }
                const cell_t cell = axes == 1
                                        ? static_cast<cell_t>(coord[0])
                                        : static_cast<cell_t>(coord[0] + coord[1] * n);
                p.cells.push_back(cell);
            }
            atoms.push_back({std::move(p), 1.0 / space.cell_count()});
        }
        return PathMeasure(space, grid, std::move(atoms));
    };

    const Observable rho{std::vector<double>(static_cast<std::size_t>(space.cell_count()), 1.0)};
    ClassicalFlowEnergy result;
    PathMeasure primary = build(true);
    result.value = kinetic_energy(primary, rho);
    if (ambiguous) result.alternate_value = kinetic_energy(build(false), rho);
    result.measure = std::move(primary);
    return result;
}

}  // namespace gifkit
