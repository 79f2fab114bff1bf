#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "misfit/errors.hpp"

namespace misfit {

/// Physical and geometric constants of the interface model.
///
/// lambda: misfit strain (slope outside cores), Lambda: core strain
/// (negative slope inside cores), delta: core width, l: interface length.
struct ModelParams {
    double lambda = 1.0;
    double Lambda = 1.0;
    double delta = 0.1;
    double l = 1.0;

    void validate() const;
    bool is_valid() const;
};

/// Ordered dislocation centers on (−δ/2, l+δ/2) with pairwise gaps ≥ δ.
/// Immutable after construction through validate_config.
struct DislocationConfig {
    std::vector<double> centers; // sorted ascending
    ModelParams params;

    std::size_t size() const { return centers.size(); }
    bool empty() const { return centers.empty(); }
};

/// Continuous piecewise-affine function on [0, L].
/// breakpoints.front() == 0, strictly increasing, one slope per segment.
struct PiecewiseAffine {
    std::vector<double> breakpoints;
    std::vector<double> slopes;
    double value_at_zero = 0.0;

    PiecewiseAffine() = default;
    PiecewiseAffine(std::vector<double> bp, std::vector<double> sl, double v0 = 0.0);

    double length() const { return breakpoints.back() - breakpoints.front(); }
    std::size_t segment_count() const { return slopes.size(); }

    /// Value at x (clamped to the domain).
    double value(double x) const;

    /// Values at all breakpoints, cached at construction.
    const std::vector<double>& node_values() const { return node_values_; }

    double max_abs_slope() const;

private:
    std::vector<double> node_values_;
    void rebuild_nodes();
};

/// w(x) = u(l·x)/√l on [0,1].
struct RescaledDisplacement {
    PiecewiseAffine w;
    double scale = 1.0;
};

/// Absolute slack used when checking the non-strict separation and range
/// constraints (absorbs floating-point drift of projected iterates).
inline constexpr double kAdmissibilityTol = 1e-12;

/// Sorts, checks range and minimal separation. Throws SeparationViolation /
/// OutOfRange / InvalidParams.
DislocationConfig validate_config(std::vector<double> centers, const ModelParams& params);

/// Displacement induced by a configuration: u(0) = 0, u' = λ off cores and
/// −Λ on cores, cores truncated to (0, l).
PiecewiseAffine displacement_from_config(const DislocationConfig& config);

/// Core intervals (x_i − δ/2, x_i + δ/2) ∩ (0, l), empty ones dropped.
std::vector<std::pair<double, double>> truncated_cores(const DislocationConfig& config);

/// max u − min u over the domain.
double oscillation(const PiecewiseAffine& u);

/// Restriction of u to [x0, x1], shifted to start at 0.
PiecewiseAffine restrict(const PiecewiseAffine& u, double x0, double x1);

/// Rescale u on [0, l] to w(x) = u(l·x)/√l on [0, 1].
RescaledDisplacement rescale_displacement(const PiecewiseAffine& u, double l);

/// Reads the center set back off the slope pattern of a displacement.
/// Boundary-truncated cores are reported with their truncated midpoint.
std::vector<double> centers_from_displacement(const PiecewiseAffine& u, const ModelParams& params);

// JSON: {"lambda":…, "Lambda":…, "delta":…, "l":…, "centers":[…]}
nlohmann::json to_json(const DislocationConfig& config);
DislocationConfig config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PiecewiseAffine& u);
PiecewiseAffine piecewise_affine_from_json(const nlohmann::json& j);

} // namespace misfit
