#pragma once

#include <utility>
#include <vector>

#include "misfit/core.hpp"
#include "misfit/quadrature.hpp"

namespace misfit {

enum class EnergyMethod { ClosedForm, AdaptiveQuadrature };

struct EnergyReport {
    double value = 0.0;
    EnergyMethod method = EnergyMethod::ClosedForm;
    double abs_error_estimate = 0.0;
};

/// E(u) = ∬_{[0,L]²} |u(x)−u(y)|² / (x−y)² dx dy, evaluated in closed form.
///
/// Route: u(x)−u(y) = ∫ u' turns the double integral into
///   Σ_{segments i,j} s_i s_j ∬ k(t,s) dt ds,
/// k(t,s) = 2 log( b(L−a) / (L(b−a)) ), a = min(t,s), b = max(t,s);
/// the remaining rectangle integrals of logarithms have elementary
/// antiderivatives (x log x family, see numerics.hpp). The diagonal
/// singularity of log|s−t| is integrable and handled by the same primitive.
EnergyReport energy_exact(const PiecewiseAffine& u, double L);

/// Independent oracle: adaptive 2D quadrature of the (bounded) integrand,
/// with cells aligned to segment boundaries. abs_error_estimate <= tol on
/// success; throws BudgetExceeded otherwise.
EnergyReport energy_quadrature(const PiecewiseAffine& u, double L, double tol,
                               std::size_t max_cells = 2'000'000);

/// w(x) = u(l·x)/√l on [0,1] and F = ‖w‖², so that E(u) = l·F.
std::pair<RescaledDisplacement, double> rescaled_energy(const PiecewiseAffine& u, double l);

struct LinearGrowthCertificate {
    double M = 0.0;    // oscillation of u
    double C = 0.0;    // 2M² + 2·Lip(u)²
    bool holds = false; // energy <= C·L
    double energy = 0.0;
};

/// Linear-growth certificate: M = osc(u), C = 2M² + 2Λ² with Λ the Lipschitz
/// constant of u; holds iff E(u) <= C·L. Requires L > 1.
LinearGrowthCertificate linear_growth_certificate(const PiecewiseAffine& u, double L);

/// Periodic competitor with period γ = (λ+Λ)δ/λ: N = ⌊l/γ⌋ cores at
/// iγ − δ/2. The induced displacement returns to zero at Nγ and oscillates
/// by exactly Λδ there. Throws TooShort if l <= γ.
DislocationConfig evenly_spaced_config(const ModelParams& params);

// --- fast configuration-level evaluation -------------------------------
//
// Expanding u' = λ − (λ+Λ) Σ χ_core reduces the energy to closed-form
// interactions between truncated cores; O(N²) with O(1) work per pair.
// Algebraically identical to energy_exact(displacement_from_config(·)).

double config_energy(const DislocationConfig& config);

/// Energy and its analytic gradient with respect to the centers.
/// Edges pinned by truncation at 0 or l contribute zero sensitivity.
double config_energy_gradient(const DislocationConfig& config, std::vector<double>& grad);

} // namespace misfit
