#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "misfit/core.hpp"
#include "misfit/numerics.hpp"

namespace misfit {

/// N points on the unit circle with circular separation >= rho.
struct CircleConfig {
    std::vector<double> points; // sorted, in [0,1)
    double rho = 0.0;
    double lambda = 1.0;

    int n() const { return static_cast<int>(points.size()); }
};

/// Wraps into [0,1), sorts, checks 0 < rho < 1/N and pairwise separation.
CircleConfig validate_circle_config(std::vector<double> points, double rho, double lambda = 1.0);

/// Circular distance on [0,1): min(|x−y|, 1−|x−y|).
inline double circ_dist(double x, double y) {
    double d = std::abs(x - y);
    d = d - std::floor(d);
    return std::min(d, 1.0 - d);
}

/// Pair potential f(y) = −log(y ∧ (1−y)) + 2(y ∧ (1−y)) on (0,1);
/// strictly convex, C¹ across the antipodal junction y = 1/2.
double pair_potential(double y);

/// Piecewise-constant periodic-drift profile: h' = −jump_size · Σ δ_{y_i},
/// with jump locations extended over [−1, 2].
struct StepProfile {
    std::vector<double> jumps; // sorted
    double jump_size = 0.0;    // lambda / N
    double base = 0.0;         // value just left of the window start

    double value(double t) const;
};

StepProfile step_profile(const CircleConfig& config);

/// 1-periodic displacement with N cores of width δ = λ/(N(λ+Λ)); the δ
/// choice makes v(0) = v(1).
struct PeriodicDisplacement {
    PiecewiseAffine v; // on [0,1]
    double lambda = 1.0;
    double Lambda = 1.0;
    double delta = 0.0;
    int n = 0;

    double value(double t) const { return v.value(fract(t)); }
    double h(double t) const { return value(t) - lambda * t; }
};

PeriodicDisplacement make_periodic_displacement(const std::vector<double>& points,
                                                double lambda, double Lambda);

/// Cutoff energy of the step profile h: the double integral of
/// |h(y+z)−h(y)|²/z² over y in [0,1] and rho < |z| < 1/2, computed exactly:
/// the squared difference is (λ/N)²·(jump count)², piecewise linear in z
/// between consecutive pairwise offsets, so each slab integrates in closed
/// form. Refuses when rho >= the minimal pairwise distance.
double cutoff_energy(const CircleConfig& config);

/// Pair-sum energy 2 Σ_{i≠j} f(d(x_i,x_j)); rho-independent.
double pair_energy(const CircleConfig& config);

/// Analytic first variation: component i sums (±1 − 2(y−x_i))/|y−x_i| over
/// the periodic copies y in the half-open window around x_i. Requires all
/// pairwise distances strictly above rho.
std::vector<double> pair_energy_gradient(const CircleConfig& config);

/// Offset-k decomposition: d_i spans k consecutive circular gaps; the d_i
/// sum to k, and twice the sum of the per-offset terms over all k recovers
/// pair_energy.
std::pair<double, std::vector<double>> offset_decomposition(const CircleConfig& config, int k);

struct CircleSolverOptions {
    int max_iterations = 50'000;
    double tol = 1e-11; // on the unit-step projected gradient norm
};

struct CircleMinimizeResult {
    CircleConfig config;
    double energy = 0.0;
    double start_energy = 0.0;
    double max_gap_error = 0.0; // max |gap − 1/N| over circular gaps
    int iterations = 0;
    bool converged = false;
};

/// Projected gradient descent on the torus from a seeded random feasible
/// start; the separation constraint is enforced by exact projection in
/// consecutive-gap coordinates.
CircleMinimizeResult minimize_circle(int n, double rho, std::uint64_t seed,
                                     const CircleSolverOptions& opts = {});

/// Evenly spaced configuration anchored at x_1 = offset.
CircleConfig evenly_spaced_circle(int n, double rho, double lambda = 1.0, double offset = 0.0);

/// Uniform sample from the separation-constrained torus configurations.
CircleConfig random_circle_config(int n, double rho, std::mt19937_64& rng, double lambda = 1.0);

/// [cutoff_energy(X1)/(λ/N)² − pair_energy(X1)] minus the same expression at
/// X2; ≈ 0 because the two functionals share their first variation on the
/// connected feasible set.
double constancy_check(const CircleConfig& x1, const CircleConfig& x2);

struct PeriodicIdentity {
    double lhs = 0.0; // ∬ |v(x)−v(y)|²/d(x−y)²
    double rhs = 0.0; // ∬ |h(y+z)−h(y)|²/z² − λ²
};

/// Both sides of the change-of-variables identity, by quadrature.
PeriodicIdentity periodic_energy_identity(const PeriodicDisplacement& v, double quad_tol);

/// Finite-Λ cutoff energy E^Λ_ρ(h^Λ) by quadrature over [0,1]×I_ρ.
double finite_core_cutoff_energy(const PeriodicDisplacement& v, double rho, double quad_tol);

/// Gap between the finite-core cutoff energy and the step-profile limit for
/// each Λ in the list; decreasing in Λ. Requires rho > δ(Λ)/2 for every Λ.
std::vector<double> lambda_limit_convergence(const CircleConfig& config,
                                             const std::vector<double>& Lambda_list,
                                             double quad_tol = 1e-7);

} // namespace misfit
