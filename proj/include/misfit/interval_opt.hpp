#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "misfit/core.hpp"
#include "misfit/halfline_energy.hpp"

namespace misfit {

struct SolverOptions {
    int max_iterations = 10'000;
    double grad_tol = 1e-8;       // stop when pg-norm <= grad_tol * max(1, |E|)
    bool require_convergence = true;
    bool record_trace = false;    // keep per-iteration energies (tests)
};

struct SolveResult {
    DislocationConfig config;
    double energy = 0.0;
    int iterations = 0;
    double pg_norm = 0.0;
    bool converged = false;
    std::vector<double> energy_trace;
};

struct ClOptions {
    SolverOptions solver;
    int restarts = 16;
    int n_window = 2;       // always scan N in [N0-w, N0+w]; hill-extend beyond
    std::uint64_t seed = 0;
};

struct ClEstimate {
    double l = 0.0;
    long N_star = 0;
    std::vector<double> centers_star;
    double c_l = 0.0;
    int restarts = 0;
    double solver_tol = 0.0; // energy-scale stopping tolerance of the inner solver
};

struct DensityHistogram {
    std::vector<double> bin_edges;         // bins+1 values on [0,1]
    std::vector<long> counts;
    std::vector<double> normalized_density; // counts / (l * bin width)
};

/// Euclidean projection onto {lo <= x_1, x_{i+1} - x_i >= delta, x_N <= hi}.
/// Pool-adjacent-violators in shifted coordinates, then clipping.
std::vector<double> project_ordered_separation(std::vector<double> x, double delta,
                                               double lo, double hi);

/// Uniform sample from the admissible polytope (exact, no rejection).
std::vector<double> random_admissible_centers(const ModelParams& params, std::size_t n,
                                              std::mt19937_64& rng);

/// Local minimization of the energy over center positions at fixed N.
/// Spectral projected gradient with monotone Armijo line search; analytic
/// gradients; projection keeps every iterate admissible.
SolveResult minimize_positions(long n, const ModelParams& params,
                               const SolverOptions& opts = {},
                               const std::optional<std::vector<double>>& initial = std::nullopt);

/// Outer scan over the dislocation count around the predicted density
/// n* = λ/(δ(Λ+λ)), multistart inner solves; ties broken toward smaller N.
ClEstimate estimate_cl(const ModelParams& params, const ClOptions& opts = {});

/// Predicted dislocation density per unit length (zero-mean strain balance).
inline double predicted_density(const ModelParams& p) {
    return p.lambda / (p.delta * (p.Lambda + p.lambda));
}

struct SubadditivityDetail {
    double c_h = 0.0;
    double c_l = 0.0;
    double factor = 0.0; // l / (l - r(h,l))
    double remainder = 0.0;
    double slack = 0.0;
    bool holds = false;
};

/// Checks c_h <= l/(l - r(h,l)) * c_l with r = l - h*floor(l/h), within
/// 2x the solvers' tolerances. Precomputed estimates may be supplied.
bool subadditivity_check(double h, double l, const ModelParams& params,
                         const ClOptions& opts = {}, SubadditivityDetail* detail = nullptr,
                         const ClEstimate* pre_h = nullptr, const ClEstimate* pre_l = nullptr);

/// Histogram of centers/l over [0,1].
DensityHistogram dislocation_density(const DislocationConfig& config, int bins);

/// (1/l) * cross-term energy over (0, x_split) x (x_split, l).
double split_energy_diagnostic(const PiecewiseAffine& u, double l, double x_split);

struct RecoveryOptions {
    double max_gap_factor = 2.0; // coverage constant for the no-hole check
};

struct RecoveryBuild {
    DislocationConfig config;     // combined admissible config at scale l
    std::vector<double> markers;  // insertion points, rescaled in (0,1)
    double stretch = 0.0;         // total inserted physical length
    double F_l = 0.0;             // rescaled energy of the combined config
    double max_gap_ratio = 0.0;   // worst marker gap / prescribed spacing
};

/// Recovery construction: inserts length-δ stretches at markers spaced
/// uplam·δ/(|α_j|√l) in each slope region of w (uplam = λ for α_j > 0,
/// Λ for α_j < 0); a marker in a negative-slope region carries a new core,
/// a marker in a positive-slope region dilutes the existing ones. Existing
/// dislocations shift right past each insertion; everything stays >= δ apart.
RecoveryBuild build_recovery_sequence(const PiecewiseAffine& w, double l,
                                      const ModelParams& base_params,
                                      const DislocationConfig& minimizer,
                                      const RecoveryOptions& opts = {});

/// Convenience overload: obtains the base minimizer via estimate_cl.
RecoveryBuild build_recovery_sequence(const PiecewiseAffine& w, double l,
                                      const ModelParams& base_params,
                                      const ClOptions& cl_opts = {},
                                      const RecoveryOptions& opts = {});

} // namespace misfit
