#include "misfit/core.hpp"

#include <algorithm>
#include <cmath>

#include "misfit/numerics.hpp"

namespace misfit {

void ModelParams::validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw InvalidParams("lambda must be positive");
    if (!(Lambda > 0.0) || !std::isfinite(Lambda))
        throw InvalidParams("Lambda must be positive");
    if (Lambda < lambda)
        throw InvalidParams("Lambda must be >= lambda");
    if (!(delta > 0.0) || !std::isfinite(delta))
        throw InvalidParams("delta must be positive");
    if (!(l > 0.0) || !std::isfinite(l))
        throw InvalidParams("l must be positive");
}

bool ModelParams::is_valid() const {
    return lambda > 0.0 && Lambda >= lambda && delta > 0.0 && l > 0.0 &&
           std::isfinite(lambda) && std::isfinite(Lambda) && std::isfinite(delta) &&
           std::isfinite(l);
}

PiecewiseAffine::PiecewiseAffine(std::vector<double> bp, std::vector<double> sl, double v0)
    : breakpoints(std::move(bp)), slopes(std::move(sl)), value_at_zero(v0) {
    if (breakpoints.size() < 2 || slopes.size() + 1 != breakpoints.size())
        throw Error("piecewise affine: need n+1 breakpoints for n segments");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw DegenerateSegment("piecewise affine: breakpoints must be strictly increasing");
    rebuild_nodes();
}

void PiecewiseAffine::rebuild_nodes() {
    node_values_.resize(breakpoints.size());
    node_values_[0] = value_at_zero;
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
        node_values_[i + 1] =
            node_values_[i] + slopes[i] * (breakpoints[i + 1] - breakpoints[i]);
}

double PiecewiseAffine::value(double x) const {
    if (x <= breakpoints.front()) return node_values_.front();
    if (x >= breakpoints.back()) return node_values_.back();
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    std::size_t seg = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    return node_values_[seg] + slopes[seg] * (x - breakpoints[seg]);
}

double PiecewiseAffine::max_abs_slope() const {
    double m = 0.0;
    for (double s : slopes) m = std::max(m, std::abs(s));
    return m;
}

DislocationConfig validate_config(std::vector<double> centers, const ModelParams& params) {
    params.validate();
    std::sort(centers.begin(), centers.end());
    const double lo = -0.5 * params.delta;
    const double hi = params.l + 0.5 * params.delta;
    for (double x : centers) {
        if (!std::isfinite(x) || x < lo - kAdmissibilityTol || x > hi + kAdmissibilityTol)
            throw OutOfRange("center " + std::to_string(x) + " outside (-delta/2, l+delta/2)");
    }
    for (std::size_t i = 1; i < centers.size(); ++i) {
        double gap = centers[i] - centers[i - 1];
        if (gap < params.delta - kAdmissibilityTol)
            throw SeparationViolation("centers " + std::to_string(centers[i - 1]) + " and " +
                                      std::to_string(centers[i]) + " closer than delta");
    }
    return DislocationConfig{std::move(centers), params};
}

std::vector<std::pair<double, double>> truncated_cores(const DislocationConfig& config) {
    std::vector<std::pair<double, double>> cores;
    cores.reserve(config.centers.size());
    const double half = 0.5 * config.params.delta;
    const double width_floor = 1e-12 * std::max(1.0, config.params.l);
    for (double x : config.centers) {
        double a = std::max(x - half, 0.0);
        double b = std::min(x + half, config.params.l);
        if (b - a > width_floor) cores.emplace_back(a, b);
    }
    return cores;
}

PiecewiseAffine displacement_from_config(const DislocationConfig& config) {
    const double L = config.params.l;
    auto cores = truncated_cores(config);

    std::vector<double> bp;
    bp.push_back(0.0);
    for (const auto& [a, b] : cores) {
        if (a > bp.back()) bp.push_back(a);
        if (b > bp.back() && b < L) bp.push_back(b);
    }
    if (bp.back() < L) bp.push_back(L);

    std::vector<double> slopes(bp.size() - 1, config.params.lambda);
    std::size_t core_idx = 0;
    for (std::size_t seg = 0; seg < slopes.size(); ++seg) {
        double mid = 0.5 * (bp[seg] + bp[seg + 1]);
        while (core_idx < cores.size() && cores[core_idx].second <= mid) ++core_idx;
        if (core_idx < cores.size() && cores[core_idx].first < mid && mid < cores[core_idx].second)
            slopes[seg] = -config.params.Lambda;
    }
    return PiecewiseAffine(std::move(bp), std::move(slopes), 0.0);
}

double oscillation(const PiecewiseAffine& u) {
    const auto& vals = u.node_values();
    auto [mn, mx] = std::minmax_element(vals.begin(), vals.end());
    return *mx - *mn;
}

PiecewiseAffine restrict(const PiecewiseAffine& u, double x0, double x1) {
    if (!(x0 < x1)) throw Error("restrict: need x0 < x1");
    x0 = std::max(x0, u.breakpoints.front());
    x1 = std::min(x1, u.breakpoints.back());
    std::vector<double> bp{0.0};
    std::vector<double> slopes;
    for (std::size_t seg = 0; seg < u.slopes.size(); ++seg) {
        double a = std::max(u.breakpoints[seg], x0);
        double b = std::min(u.breakpoints[seg + 1], x1);
        if (b - a > 0.0) {
            bp.push_back(b - x0);
            slopes.push_back(u.slopes[seg]);
        }
    }
    return PiecewiseAffine(std::move(bp), std::move(slopes), u.value(x0));
}

RescaledDisplacement rescale_displacement(const PiecewiseAffine& u, double l) {
    if (!(l > 0.0)) throw InvalidParams("rescale: l must be positive");
    const double root = std::sqrt(l);
    std::vector<double> bp(u.breakpoints.size());
    std::vector<double> slopes(u.slopes.size());
    for (std::size_t i = 0; i < bp.size(); ++i) bp[i] = u.breakpoints[i] / l;
    bp.back() = u.breakpoints.back() / l; // exact tail
    for (std::size_t i = 0; i < slopes.size(); ++i) slopes[i] = u.slopes[i] * root;
    return RescaledDisplacement{
        PiecewiseAffine(std::move(bp), std::move(slopes), u.value_at_zero / root), l};
}

std::vector<double> centers_from_displacement(const PiecewiseAffine& u,
                                              const ModelParams& params) {
    std::vector<double> centers;
    for (std::size_t seg = 0; seg < u.slopes.size(); ++seg) {
        if (u.slopes[seg] < 0.0) {
            // merge adjacent negative-slope segments into one core interval
            double a = u.breakpoints[seg];
            double b = u.breakpoints[seg + 1];
            while (seg + 1 < u.slopes.size() && u.slopes[seg + 1] < 0.0) {
                ++seg;
                b = u.breakpoints[seg + 1];
            }
            centers.push_back(0.5 * (a + b));
        }
    }
    (void)params;
    return centers;
}

nlohmann::json to_json(const DislocationConfig& config) {
    return nlohmann::json{{"lambda", config.params.lambda},
                          {"Lambda", config.params.Lambda},
                          {"delta", config.params.delta},
                          {"l", config.params.l},
                          {"centers", config.centers}};
}

DislocationConfig config_from_json(const nlohmann::json& j) {
    ModelParams p;
    p.lambda = j.at("lambda").get<double>();
    p.Lambda = j.at("Lambda").get<double>();
    p.delta = j.at("delta").get<double>();
    p.l = j.at("l").get<double>();
    std::vector<double> centers = j.value("centers", std::vector<double>{});
    return validate_config(std::move(centers), p);
}

nlohmann::json to_json(const PiecewiseAffine& u) {
    return nlohmann::json{{"breakpoints", u.breakpoints},
                          {"slopes", u.slopes},
                          {"value_at_zero", u.value_at_zero}};
}

PiecewiseAffine piecewise_affine_from_json(const nlohmann::json& j) {
    return PiecewiseAffine(j.at("breakpoints").get<std::vector<double>>(),
                           j.at("slopes").get<std::vector<double>>(),
                           j.value("value_at_zero", 0.0));
}

} // namespace misfit
