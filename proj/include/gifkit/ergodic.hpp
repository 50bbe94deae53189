#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "gifkit/path_measure.hpp"

namespace gifkit {

// ----------------------------------------------------------------------------
// Ergodic averages and maximal functions
// ----------------------------------------------------------------------------

/// Running ergodic average A_k(f)(z) = (1/k) sum_{j<k} f(z(t_j)), the
/// left-endpoint discretization of (1/T) int_0^T f(z(t)) dt at T = k dt.
inline double ergodic_average(const DiscretePath& z, const Observable& f, int k,
                              const TimeGrid& grid) {
    if (k < 1 || k > grid.n_steps())
        throw precondition_error("ergodic_average: need 1 <= k <= N");
    double s = 0.0;
    for (int j = 0; j < k; ++j)
        s += f.values.at(static_cast<std::size_t>(z.cells[static_cast<std::size_t>(j)]));
    return s / k;
}

/// All partial averages A_1..A_N along one path.
struct AverageProfile {
    std::vector<double> values;  // values[k-1] = A_k

    double at(int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
};

inline AverageProfile average_profile(const DiscretePath& z, const Observable& f,
                                      const TimeGrid& grid) {
    AverageProfile prof;
    prof.values.reserve(static_cast<std::size_t>(grid.n_steps()));
    double s = 0.0;
    for (int k = 1; k <= grid.n_steps(); ++k) {
        s += f.values.at(static_cast<std::size_t>(z.cells[static_cast<std::size_t>(k - 1)]));
        prof.values.push_back(s / k);
    }
    return prof;
}

/// Discrete maximal function f*(z) = max_{1<=k<=N} A_k(f)(z).
inline double maximal_function(const DiscretePath& z, const Observable& f,
                               const TimeGrid& grid) {
    const AverageProfile prof = average_profile(z, f, grid);
    return *std::max_element(prof.values.begin(), prof.values.end());
}

/// q{ f* > alpha }: mass of the strict super-level set of the maximal
/// function.
inline double maximal_level_mass(const PathMeasure& q, const Observable& f, double alpha) {
    double mass = 0.0;
    for (const auto& a : q.atoms())
        if (maximal_function(a.path, f, q.grid()) > alpha) mass += a.weight;
    return mass;
}

struct MaximalInequalityRow {
    double alpha = 0.0;
    double lhs = 0.0;     // alpha * q(E_alpha)
    double bound1 = 0.0;  // ||f||_1
    double bound3 = 0.0;  // 3 ||f||_1
    bool pass1 = false;   // reported only, never asserted
    bool pass3 = false;   // the guaranteed bound
};

/// Maximal ergodic inequality check over a list of levels. The factor-3
/// bound must hold; the factor-1 variant is reported without being asserted.
inline std::vector<MaximalInequalityRow> check_maximal_inequality(
    const PathMeasure& q, const Observable& f, const std::vector<double>& alphas) {
    const auto inc = check_incompressible(q, kProbTol);
    if (!inc.pass)
        throw precondition_error("check_maximal_inequality: measure is not incompressible");
    for (double v : f.values)
        if (v < 0.0)
            throw precondition_error("check_maximal_inequality: observable must be nonnegative");
    const double norm1 = l1_norm(f, marginal_at(q, 0));

    // One pass over atoms; levels share the per-atom maximal values.
    std::vector<double> fstar;
    fstar.reserve(q.atoms().size());
    for (const auto& a : q.atoms()) fstar.push_back(maximal_function(a.path, f, q.grid()));

    std::vector<MaximalInequalityRow> rows;
    rows.reserve(alphas.size());
    for (double alpha : alphas) {
        if (!(alpha > 0.0))
            throw precondition_error("check_maximal_inequality: alpha must be positive");
        double mass = 0.0;
        for (std::size_t i = 0; i < fstar.size(); ++i)
            if (fstar[i] > alpha) mass += q.atoms()[i].weight;
        MaximalInequalityRow r;
        r.alpha = alpha;
        r.lhs = alpha * mass;
        r.bound1 = norm1;
        r.bound3 = 3.0 * norm1;
        r.pass1 = r.lhs <= r.bound1 + kProbTol;
        r.pass3 = r.lhs <= r.bound3 + kProbTol;
        rows.push_back(r);
    }
    return rows;
}

// ----------------------------------------------------------------------------
// Vitali covering
// ----------------------------------------------------------------------------

/// Closed interval [left, left + length].
struct Interval {
    double left = 0.0;
    double length = 0.0;

    Interval() = default;
    Interval(double a, double l) : left(a), length(l) {
        if (!(l > 0.0)) throw precondition_error("Interval: length must be positive");
    }

    double right() const { return left + length; }

    bool intersects(const Interval& o) const {
        return left <= o.right() && o.left <= right();
    }
};

/// Finite Vitali covering selection: greedy by decreasing length (ties by
/// smaller left endpoint, then input order), keeping intervals disjoint from
/// all previous selections. Every input interval is contained in some
/// selected interval expanded to [a - l, a + 2l].
inline std::vector<std::size_t> vitali_select(const std::vector<Interval>& intervals) {
    if (intervals.empty()) throw precondition_error("vitali_select: empty collection");
    std::vector<std::size_t> order(intervals.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (intervals[a].length != intervals[b].length)
            return intervals[a].length > intervals[b].length;
        if (intervals[a].left != intervals[b].left)
            return intervals[a].left < intervals[b].left;
        return a < b;
    });
    std::vector<std::size_t> selected;
    for (std::size_t idx : order) {
        bool disjoint = true;
        for (std::size_t s : selected)
            if (intervals[idx].intersects(intervals[s])) {
                disjoint = false;
                break;
            }
        if (disjoint) selected.push_back(idx);
    }
    return selected;
}

// ----------------------------------------------------------------------------
// Pointwise and L1 ergodic diagnostics
// ----------------------------------------------------------------------------

struct PointwiseLimitOptions {
    int min_steps = 4;                 // smallest grid for a meaningful estimate
    double tail_start_fraction = 0.5;  // K = max(1, fraction * N)
};

struct PointwiseLimitReport {
    std::vector<double> limit_estimate;    // per atom: Phi(z) estimated as A_N
    std::vector<double> tail_oscillation;  // per atom: sup_{k>=K} |A_k - A_N|
    double integral_of_estimates = 0.0;    // int Phi dq
    double observable_integral = 0.0;      // int f dmu at time 0
    double integral_check = 0.0;           // |int Phi dq - int f dmu|
    double effective_constant = 0.0;       // C with integral_check = C/N * max|f|
    int tail_start = 0;
};

/// Pointwise ergodic estimate: the time-T average at the full horizon plus a
/// tail-oscillation certificate per atom, and the exactly checkable integral
/// identity int Phi dq = int f dmu.
inline PointwiseLimitReport pointwise_limit(const PathMeasure& q, const Observable& f,
                                            const PointwiseLimitOptions& opt = {}) {
    if (q.grid().mode() != GridMode::window)
        throw mode_error("pointwise_limit: window grid required");
    if (q.grid().n_steps() < opt.min_steps)
        throw precondition_error("pointwise_limit: grid below configured minimum");
    const int N = q.grid().n_steps();
    const int K = std::max(1, static_cast<int>(opt.tail_start_fraction * N));

    PointwiseLimitReport rep;
    rep.tail_start = K;
    for (const auto& a : q.atoms()) {
        const AverageProfile prof = average_profile(a.path, f, q.grid());
        const double limit = prof.at(N);
        double osc = 0.0;
        for (int k = K; k <= N; ++k) osc = std::max(osc, std::abs(prof.at(k) - limit));
        rep.limit_estimate.push_back(limit);
        rep.tail_oscillation.push_back(osc);
        rep.integral_of_estimates += a.weight * limit;
    }
    rep.observable_integral = integral(f, marginal_at(q, 0));
    rep.integral_check = std::abs(rep.integral_of_estimates - rep.observable_integral);
    if (f.max_abs() > 0.0) rep.effective_constant = rep.integral_check * N / f.max_abs();
    return rep;
}

struct L1ConvergenceReport {
    std::vector<int> horizons;
    std::vector<std::vector<double>> deltas;  // ||A_k - A_k'||_{L1_q}
    int shrink_threshold = 0;  // consecutive deltas nonincreasing from here on

    double delta(std::size_t i, std::size_t j) const { return deltas[i][j]; }
};

/// Pairwise L1(q) distances between average profiles at the given horizons,
/// diagnosing the Cauchy property of the ergodic averages.
inline L1ConvergenceReport l1_convergence_diagnostic(const PathMeasure& q, const Observable& f,
                                                     std::vector<int> horizons) {
    if (q.grid().mode() != GridMode::window)
        throw mode_error("l1_convergence_diagnostic: window grid required");
    if (horizons.empty())
        throw precondition_error("l1_convergence_diagnostic: no horizons given");
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    for (int k : horizons)
        if (k < 1 || k > q.grid().n_steps())
            throw precondition_error("l1_convergence_diagnostic: horizon out of range");

    std::vector<AverageProfile> profiles;
    profiles.reserve(q.atoms().size());
    for (const auto& a : q.atoms()) profiles.push_back(average_profile(a.path, f, q.grid()));

    L1ConvergenceReport rep;
    rep.horizons = horizons;
    const std::size_t H = horizons.size();
    rep.deltas.assign(H, std::vector<double>(H, 0.0));
    for (std::size_t i = 0; i < H; ++i)
        for (std::size_t j = i + 1; j < H; ++j) {
            double d = 0.0;
            for (std::size_t a = 0; a < profiles.size(); ++a)
                d += q.atoms()[a].weight *
                     std::abs(profiles[a].at(horizons[i]) - profiles[a].at(horizons[j]));
            rep.deltas[i][j] = rep.deltas[j][i] = d;
        }

    // Smallest index from which the consecutive-horizon deltas never grow.
    int threshold = 0;
    for (std::size_t i = 0; i + 2 < H; ++i)
        if (rep.deltas[i + 1][i + 2] > rep.deltas[i][i + 1])
            threshold = static_cast<int>(i) + 1;
    rep.shrink_threshold = threshold;
    return rep;
}

// ----------------------------------------------------------------------------
// Recurrence
// ----------------------------------------------------------------------------

struct RecurrenceReport {
    std::optional<int> weak_witness;     // s with q(Phi and Gamma^{-s} Phi) > 0
    double weak_witness_mass = 0.0;
    double pointwise_recurrent_mass = 0.0;
};

/// Recurrence diagnosis for Phi = {z(0) in E}: the first shift s whose
/// overlap q(Phi and Gamma^{-s}Phi) is positive (absence after a full scan is
/// reported honestly), and the mass of atoms starting in E that revisit E at
/// some grid time >= t_min.
inline RecurrenceReport recurrence_report(const PathMeasure& q, const std::vector<cell_t>& E,
                                          double t_min) {
    const PathEvent phi = PathEvent::starts_in(E);
    if (!(event_mass(q, phi) > 0.0))
        throw precondition_error("recurrence_report: starting set has zero mass");

    RecurrenceReport rep;
    const int max_shift =
        q.grid().mode() == GridMode::window ? q.grid().n_steps() : q.grid().n_steps() - 1;
    for (int s = 1; s <= max_shift; ++s) {
        const PathEvent shifted = phi.shifted_preimage(s, q.grid());
        double overlap = 0.0;
        for (const auto& a : q.atoms())
            if (phi.contains(a.path, q.grid()) && shifted.contains(a.path, q.grid()))
                overlap += a.weight;
        if (overlap > 0.0) {
            rep.weak_witness = s;
            rep.weak_witness_mass = overlap;
            break;
        }
    }

    std::vector<cell_t> sorted(E);
    std::sort(sorted.begin(), sorted.end());
    const int len = q.grid().path_length();
    for (const auto& a : q.atoms()) {
        if (!std::binary_search(sorted.begin(), sorted.end(), a.path.cells[0])) continue;
        for (int k = 1; k < len; ++k) {
            if (q.grid().time(k) < t_min) continue;
            if (std::binary_search(sorted.begin(), sorted.end(),
                                   a.path.cells[static_cast<std::size_t>(k)])) {
                rep.pointwise_recurrent_mass += a.weight;
                break;
            }
        }
    }
    return rep;
}

}  // namespace gifkit
