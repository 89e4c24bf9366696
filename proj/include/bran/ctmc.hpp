#pragma once
// Exact steady state of the (i, j) chain on a truncated rectangle.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bran/model.hpp"

namespace bran::ctmc {

class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

class SolveFailed : public std::runtime_error {
public:
    SolveFailed(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

inline constexpr std::size_t kDefaultMaxStates = 4'000'000;
inline constexpr std::size_t kDenseSolveLimit = 2'000;

/// Rectangle {0..i_max} x {0..j_max} with the row-major dense index
/// (i, j) -> i*(j_max+1) + j.
class StateSpace {
public:
    StateSpace(std::int64_t i_max, std::int64_t j_max) : i_max_(i_max), j_max_(j_max) {
        if (i_max < 0 || j_max < 0) throw InvalidParam("i_max/j_max", "must be >= 0");
    }

    std::int64_t i_max() const { return i_max_; }
    std::int64_t j_max() const { return j_max_; }
    std::size_t size() const { return static_cast<std::size_t>((i_max_ + 1) * (j_max_ + 1)); }

    bool contains(const SystemState& st) const {
        return st.i >= 0 && st.j >= 0 && st.i <= i_max_ && st.j <= j_max_;
    }
    std::size_t index(const SystemState& st) const {
        return static_cast<std::size_t>(st.i * (j_max_ + 1) + st.j);
    }
    SystemState state(std::size_t idx) const {
        const auto n = static_cast<std::int64_t>(idx);
        return {n / (j_max_ + 1), n % (j_max_ + 1)};
    }

private:
    std::int64_t i_max_;
    std::int64_t j_max_;
};

using Generator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Infinitesimal generator restricted to `space`. Transitions whose target
/// leaves the rectangle are dropped (blocking truncation).
inline Generator build_generator(const StateSpace& space, const SystemParams& params,
                                 std::size_t max_states = kDefaultMaxStates) {
    validate(params);
    const std::size_t n = space.size();
    if (n > max_states)
        throw CapacityError("state space of " + std::to_string(n) + " states exceeds limit " +
                            std::to_string(max_states));

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(n * 5);
    for (std::size_t row = 0; row < n; ++row) {
        const SystemState from = space.state(row);
        double out_rate = 0.0;
        for (const Transition& t : transitions(from, params)) {
            if (!space.contains(t.target)) continue;
            entries.emplace_back(static_cast<int>(row), static_cast<int>(space.index(t.target)), t.rate);
            out_rate += t.rate;
        }
        entries.emplace_back(static_cast<int>(row), static_cast<int>(row), -out_rate);
    }
    Generator q(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    q.setFromTriplets(entries.begin(), entries.end());
    return q;
}

struct SteadyState {
    std::vector<double> pi;
    double mass_at_boundary = 0.0;
    double residual = 0.0;  // max |(pi Q)_x|
};

/// Solves pi Q = 0, sum(pi) = 1 by swapping the balance equation of state 0
/// for the normalisation row. Dense LU for small spaces, sparse LU above.
inline SteadyState steady_state(const Generator& q, const StateSpace& space) {
    const auto n = q.rows();
    if (n != q.cols() || static_cast<std::size_t>(n) != space.size())
        throw std::invalid_argument("generator does not match state space");

    // A = Q^T with row 0 replaced by ones; A pi = e_0.
    Eigen::SparseMatrix<double, Eigen::ColMajor> a = q.transpose();
    {
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(static_cast<std::size_t>(a.nonZeros()) + static_cast<std::size_t>(n));
        for (Eigen::Index col = 0; col < a.outerSize(); ++col)
            for (decltype(a)::InnerIterator it(a, col); it; ++it)
                if (it.row() != 0) entries.emplace_back(static_cast<int>(it.row()), static_cast<int>(col), it.value());
        for (Eigen::Index col = 0; col < n; ++col) entries.emplace_back(0, static_cast<int>(col), 1.0);
        a.setZero();
        a.setFromTriplets(entries.begin(), entries.end());
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 1.0;

    Eigen::VectorXd x;
    if (static_cast<std::size_t>(n) <= kDenseSolveLimit) {
        const Eigen::MatrixXd dense(a);
        x = dense.partialPivLu().solve(rhs);
    } else {
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.analyzePattern(a);
        lu.factorize(a);
        if (lu.info() != Eigen::Success) throw SolveFailed("sparse LU factorisation failed: " + lu.lastErrorMessage(), INFINITY);
        x = lu.solve(rhs);
        if (lu.info() != Eigen::Success) throw SolveFailed("sparse LU solve failed", INFINITY);
    }

    SteadyState ss;
    ss.pi.assign(x.data(), x.data() + n);
    double total = 0.0;
    for (double& v : ss.pi) {
        if (!std::isfinite(v) || v < -1e-9) throw SolveFailed("steady-state vector has invalid entry", INFINITY);
        v = std::max(v, 0.0);
        total += v;
    }
    for (double& v : ss.pi) v /= total;

    Eigen::Map<const Eigen::RowVectorXd> pi(ss.pi.data(), n);
    const Eigen::RowVectorXd balance = pi * q;
    ss.residual = n > 0 ? balance.cwiseAbs().maxCoeff() : 0.0;
    double scale = 1.0;
    for (Eigen::Index row = 0; row < n; ++row) scale = std::max(scale, std::abs(q.coeff(row, row)));
    if (ss.residual > 1e-9 * scale) throw SolveFailed("balance residual too large", ss.residual);

    for (std::size_t idx = 0; idx < ss.pi.size(); ++idx) {
        const SystemState st = space.state(idx);
        if (st.i == space.i_max() || st.j == space.j_max()) ss.mass_at_boundary += ss.pi[idx];
    }
    return ss;
}

struct Metrics {
    double mean_i = 0.0;
    double mean_j = 0.0;
    double little_latency = 0.0;  // (E[i] + E[j]) / effective throughput
    double effective_arrival_rate = 0.0;
    double boundary_mass = 0.0;
    bool truncation_warning = false;  // boundary_mass > 1e-6
};

/// Queue-length means and a Little's-law latency. Rejected requests never
/// complete, so the throughput is lambda_a - lambda_r * E[min(i, r)].
inline Metrics metrics(const SteadyState& ss, const StateSpace& space, const SystemParams& params) {
    Metrics m;
    double removed = 0.0;
    for (std::size_t idx = 0; idx < ss.pi.size(); ++idx) {
        const SystemState st = space.state(idx);
        const double w = ss.pi[idx];
        m.mean_i += w * static_cast<double>(st.i);
        m.mean_j += w * static_cast<double>(st.j);
        removed += w * static_cast<double>(std::min<std::int64_t>(st.i, params.r));
    }
    m.effective_arrival_rate = params.lambda_a - params.lambda_r * removed;
    m.little_latency = params.lambda_a > 0.0 && m.effective_arrival_rate > 0.0
                           ? (m.mean_i + m.mean_j) / m.effective_arrival_rate
                           : 0.0;
    m.boundary_mass = ss.mass_at_boundary;
    m.truncation_warning = m.boundary_mass > 1e-6;
    return m;
}

struct Solution {
    StateSpace space;
    SteadyState steady;
    Metrics metrics;
};

inline Solution solve(const SystemParams& params, const StateSpace& space,
                      std::size_t max_states = kDefaultMaxStates) {
    const Generator q = build_generator(space, params, max_states);
    SteadyState ss = steady_state(q, space);
    Metrics m = metrics(ss, space, params);
    return {space, std::move(ss), m};
}

/// Square truncation grown by doubling from `initial` until the boundary
/// carries less than `target_boundary_mass`. When the next doubling would
/// exceed `max_states` the last solution is returned as is; callers read its
/// boundary mass.
inline Solution solve_adaptive(const SystemParams& params, std::int64_t initial = 16,
                               double target_boundary_mass = 1e-8,
                               std::size_t max_states = kDefaultMaxStates) {
    std::int64_t bound = std::max<std::int64_t>(initial, 1);
    Solution sol = solve(params, StateSpace(bound, bound), max_states);
    while (sol.metrics.boundary_mass >= target_boundary_mass) {
        const std::int64_t next = bound * 2;
        if (static_cast<std::size_t>((next + 1) * (next + 1)) > max_states) break;
        bound = next;
        sol = solve(params, StateSpace(bound, bound), max_states);
    }
    return sol;
}

}  // namespace bran::ctmc
