#include "misfit/interval_opt.hpp"

#include <algorithm>
#include <cmath>

#include "misfit/numerics.hpp"

namespace misfit {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

DislocationConfig make_config_unchecked(std::vector<double> centers, const ModelParams& p) {
    return DislocationConfig{std::move(centers), p};
}

} // namespace

std::vector<double> project_ordered_separation(std::vector<double> x, double delta,
                                               double lo, double hi) {
    const std::size_t n = x.size();
    if (n == 0) return x;

    // shift: z_i = x_i - i*delta turns the separation cone into monotonicity
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = x[i] - static_cast<double>(i) * delta;

    // pool adjacent violators (nondecreasing isotonic regression)
    std::vector<double> block_value(n);
    std::vector<std::size_t> block_len(n);
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
        block_value[m] = z[i];
        block_len[m] = 1;
        ++m;
        while (m > 1 && block_value[m - 2] > block_value[m - 1]) {
            const double w1 = static_cast<double>(block_len[m - 2]);
            const double w2 = static_cast<double>(block_len[m - 1]);
            block_value[m - 2] = (w1 * block_value[m - 2] + w2 * block_value[m - 1]) / (w1 + w2);
            block_len[m - 2] += block_len[m - 1];
            --m;
        }
    }

    // bounds apply uniformly on the monotone cone; clipping preserves optimality
    const double a = lo;
    const double b = hi - static_cast<double>(n - 1) * delta;
    std::size_t idx = 0;
    for (std::size_t blk = 0; blk < m; ++blk) {
        const double v = std::clamp(block_value[blk], a, b);
        for (std::size_t k = 0; k < block_len[blk]; ++k, ++idx)
            x[idx] = v + static_cast<double>(idx) * delta;
    }
    return x;
}

std::vector<double> random_admissible_centers(const ModelParams& params, std::size_t n,
                                              std::mt19937_64& rng) {
    if (n == 0) return {};
    const double lo = -0.5 * params.delta;
    const double span = params.l + params.delta - static_cast<double>(n - 1) * params.delta;
    if (!(span > 0.0)) throw Infeasible("random_admissible_centers: N too large");
    std::uniform_real_distribution<double> unif(0.0, span * (1.0 - 1e-12));
    std::vector<double> y(n);
    for (auto& v : y) v = unif(rng);
    std::sort(y.begin(), y.end());
    for (std::size_t i = 0; i < n; ++i)
        y[i] += lo + static_cast<double>(i) * params.delta;
    return y;
}

SolveResult minimize_positions(long n, const ModelParams& params, const SolverOptions& opts,
                               const std::optional<std::vector<double>>& initial) {
    params.validate();
    if (n < 0) throw Infeasible("minimize_positions: N must be >= 0");
    if (static_cast<double>(n) * params.delta >= params.l + params.delta)
        throw Infeasible("minimize_positions: N*delta must be < l + delta");

    SolveResult res;
    if (n == 0) {
        res.config = make_config_unchecked({}, params);
        res.energy = config_energy(res.config);
        res.converged = true;
        return res;
    }

    const double lo = -0.5 * params.delta;
    const double hi = params.l + 0.5 * params.delta;
    const auto project = [&](std::vector<double> v) {
        return project_ordered_separation(std::move(v), params.delta, lo, hi);
    };

    std::vector<double> x;
    if (initial) {
        x = *initial;
        std::sort(x.begin(), x.end());
        if (static_cast<long>(x.size()) != n)
            throw Infeasible("minimize_positions: initial guess has wrong size");
    } else {
        x.resize(static_cast<std::size_t>(n));
        for (long i = 0; i < n; ++i)
            x[static_cast<std::size_t>(i)] =
                (static_cast<double>(i) + 0.5) * params.l / static_cast<double>(n);
    }
    x = project(std::move(x));

    std::vector<double> grad, grad_new, cand;
    double energy = config_energy_gradient(make_config_unchecked(x, params), grad);
    if (opts.record_trace) res.energy_trace.push_back(energy);

    double step = 1.0;
    const double c1 = 1e-4;
    int iter = 0;
    double pg_norm = 0.0;

    for (; iter < opts.max_iterations; ++iter) {
        // projected-gradient optimality measure (unit step)
        {
            std::vector<double> probe(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] - grad[i];
            probe = project(std::move(probe));
            for (std::size_t i = 0; i < x.size(); ++i) probe[i] -= x[i];
            pg_norm = norm2(probe);
        }
        if (pg_norm <= opts.grad_tol * std::max(1.0, std::abs(energy))) break;

        std::vector<double> dir(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dir[i] = x[i] - step * grad[i];
        dir = project(std::move(dir));
        for (std::size_t i = 0; i < x.size(); ++i) dir[i] -= x[i];
        double gd = dot(grad, dir);
        if (gd >= 0.0) { // stale BB step; fall back to a short one
            step = 1e-8;
            for (std::size_t i = 0; i < x.size(); ++i) dir[i] = x[i] - step * grad[i];
            dir = project(std::move(dir));
            for (std::size_t i = 0; i < x.size(); ++i) dir[i] -= x[i];
            gd = dot(grad, dir);
            if (gd >= 0.0) break; // x is stationary within rounding
        }

        double alpha = 1.0;
        double e_new = energy;
        cand = x;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + alpha * dir[i];
            e_new = config_energy(make_config_unchecked(cand, params));
            if (e_new <= energy + c1 * alpha * gd) break;
            alpha *= 0.5;
        }
        if (e_new > energy) break; // no descent within line-search budget
        if (e_new >= energy - 4e-15 * (1.0 + std::abs(energy)))
            break; // progress below the rounding floor of the objective

        const double e_prev = energy;
        double e_check = config_energy_gradient(make_config_unchecked(cand, params), grad_new);
        (void)e_check;

        // Barzilai-Borwein step for the next iteration
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double si = cand[i] - x[i];
            ss += si * si;
            sy += si * (grad_new[i] - grad[i]);
        }
        step = (sy > 1e-300) ? std::clamp(ss / sy, 1e-10, 1e10) : 1e4;

        x.swap(cand);
        grad.swap(grad_new);
        energy = e_new;
        if (opts.record_trace) res.energy_trace.push_back(energy);
        if (energy > e_prev + 1e-9 * (1.0 + std::abs(e_prev)))
            throw NoConvergence("minimize_positions: monotonicity violated");
    }

    res.converged = pg_norm <= opts.grad_tol * std::max(1.0, std::abs(energy));
    if (!res.converged && iter >= opts.max_iterations && opts.require_convergence)
        throw NoConvergence("minimize_positions: iteration cap reached (pg_norm = " +
                            std::to_string(pg_norm) + ")");
    if (!res.converged && iter < opts.max_iterations)
        res.converged = true; // stationary up to line-search resolution

    res.config = validate_config(x, params);
    res.energy = energy_exact(displacement_from_config(res.config), params.l).value;
    res.iterations = iter;
    res.pg_norm = pg_norm;
    return res;
}

namespace {

SolveResult multistart_at_n(long n, const ModelParams& params, const ClOptions& opts) {
    SolverOptions solver = opts.solver;
    solver.require_convergence = false;
    if (n == 0) return minimize_positions(0, params, solver);

    std::mt19937_64 rng(opts.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(n) + 1);

    SolveResult best;
    bool have_best = false;
    const int restarts = std::max(1, opts.restarts);
    for (int r = 0; r < restarts; ++r) {
        std::optional<std::vector<double>> start;
        if (r == 0) {
            start = std::nullopt; // evenly spaced default
        } else if (r <= restarts / 2 || !have_best) {
            start = random_admissible_centers(params, static_cast<std::size_t>(n), rng);
        } else {
            std::normal_distribution<double> jitter(0.0, 0.5 * params.delta);
            std::vector<double> p = best.config.centers;
            for (auto& v : p) v += jitter(rng);
            std::sort(p.begin(), p.end());
            start = std::move(p);
        }
        SolveResult r_res = minimize_positions(n, params, solver, start);
        if (!have_best || r_res.energy < best.energy) {
            best = std::move(r_res);
            have_best = true;
        }
    }
    return best;
}

} // namespace

ClEstimate estimate_cl(const ModelParams& params, const ClOptions& opts) {
    params.validate();
    const double n_star = predicted_density(params) * params.l;
    const long n0 = std::max<long>(0, std::lround(n_star));
    const long n_max = static_cast<long>(
        std::floor((params.l + params.delta) / params.delta * (1.0 - 1e-12)));

    auto feasible = [&](long n) { return n >= 0 && n <= n_max; };

    std::vector<long> scanned;
    long best_n = -1;
    double best_e = 0.0;
    SolveResult best;

    auto eval = [&](long n) {
        if (!feasible(n) ||
            std::find(scanned.begin(), scanned.end(), n) != scanned.end())
            return;
        scanned.push_back(n);
        SolveResult r = multistart_at_n(n, params, opts);
        if (best_n < 0 || r.energy < best_e || (r.energy == best_e && n < best_n)) {
            best_n = n;
            best_e = r.energy;
            best = std::move(r);
        }
    };

    const long w = std::max(0, opts.n_window);
    for (long n = std::max<long>(0, n0 - w); n <= n0 + w; ++n) eval(n);

    // hill-extend while the optimum sits on the scan boundary;
    // window 0 means the count is pinned to the prediction
    if (w > 0) {
        for (int dir : {-1, +1}) {
            long edge = (dir < 0) ? std::max<long>(0, n0 - w) : n0 + w;
            while (best_n == edge && feasible(edge + dir)) {
                edge += dir;
                eval(edge);
            }
        }
    }

    ClEstimate est;
    est.l = params.l;
    est.N_star = best_n;
    est.centers_star = best.config.centers;
    est.c_l = best.energy / params.l;
    est.restarts = opts.restarts;
    est.solver_tol = opts.solver.grad_tol * std::max(1.0, std::abs(best.energy)) / params.l;
    return est;
}

bool subadditivity_check(double h, double l, const ModelParams& params, const ClOptions& opts,
                         SubadditivityDetail* detail, const ClEstimate* pre_h,
                         const ClEstimate* pre_l) {
    if (!(0.0 < h && h < l)) throw InvalidParams("subadditivity_check: need 0 < h < l");
    ModelParams ph = params;
    ph.l = h;
    ModelParams pl = params;
    pl.l = l;

    ClEstimate eh = pre_h ? *pre_h : estimate_cl(ph, opts);
    ClEstimate el = pre_l ? *pre_l : estimate_cl(pl, opts);

    const double r = l - h * static_cast<double>(tolerant_floor(l / h));
    const double factor = l / (l - r);
    const double slack = 2.0 * (eh.solver_tol + el.solver_tol);
    const bool holds = eh.c_l <= factor * el.c_l + slack;
    if (detail)
        *detail = SubadditivityDetail{eh.c_l, el.c_l, factor, r, slack, holds};
    return holds;
}

DensityHistogram dislocation_density(const DislocationConfig& config, int bins) {
    if (bins < 1) throw InvalidParams("dislocation_density: bins must be >= 1");
    DensityHistogram h;
    h.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        h.bin_edges[static_cast<std::size_t>(i)] = static_cast<double>(i) / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    const double l = config.params.l;
    for (double x : config.centers) {
        int b = static_cast<int>(std::floor(x / l * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    const double width = 1.0 / bins;
    h.normalized_density.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        h.normalized_density[i] = static_cast<double>(h.counts[i]) / (l * width);
    return h;
}

double split_energy_diagnostic(const PiecewiseAffine& u, double l, double x_split) {
    if (x_split < 0.0 || x_split > l)
        throw InvalidParams("split_energy_diagnostic: x_split must lie in [0, l]");
    if (x_split <= 0.0 || x_split >= l) return 0.0;
    const double e_full = energy_exact(u, l).value;
    const double e_left = energy_exact(restrict(u, 0.0, x_split), x_split).value;
    const double e_right = energy_exact(restrict(u, x_split, l), l - x_split).value;
    return std::max(0.0, 0.5 * (e_full - e_left - e_right)) / l;
}

namespace {

// insertion points must avoid core interiors: distance >= delta/2 from every
// existing center, within (0, l). After stretching, a marker at the minimal
// distance still ends up exactly delta away from its shifted neighbors.
std::vector<std::pair<double, double>> marker_zones(const std::vector<double>& centers,
                                                    double delta, double l) {
    const double half = 0.5 * delta;
    std::vector<std::pair<double, double>> zones;
    if (centers.empty()) {
        zones.emplace_back(0.0, l);
        return zones;
    }
    if (centers.front() - half > 0.0) zones.emplace_back(0.0, centers.front() - half);
    for (std::size_t i = 0; i + 1 < centers.size(); ++i) {
        const double a = centers[i] + half;
        const double b = centers[i + 1] - half;
        if (b >= a) zones.emplace_back(a, b);
    }
    if (centers.back() + half < l) zones.emplace_back(centers.back() + half, l);
    return zones;
}

double snap_to_zones(double target, const std::vector<std::pair<double, double>>& zones) {
    double best = std::numeric_limits<double>::quiet_NaN();
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : zones) {
        const double p = std::clamp(target, a, b);
        const double d = std::abs(p - target);
        if (d < best_d) {
            best_d = d;
            best = p;
        }
        if (a > target && d > best_d) break;
    }
    return best;
}

} // namespace

RecoveryBuild build_recovery_sequence(const PiecewiseAffine& w, double l,
                                      const ModelParams& base_params,
                                      const DislocationConfig& minimizer,
                                      const RecoveryOptions& opts) {
    base_params.validate();
    if (std::abs(minimizer.params.l - l) > 1e-9 * std::max(1.0, l))
        throw InvalidParams("build_recovery_sequence: minimizer was computed at a different l");
    if (std::abs(w.length() - 1.0) > 1e-9)
        throw InvalidParams("build_recovery_sequence: w must live on [0,1]");
    for (double s : w.slopes)
        if (s == 0.0)
            throw InvalidParams("build_recovery_sequence: w must have nonzero slopes");

    const double delta = base_params.delta;
    const double root_l = std::sqrt(l);

    // prescribed insertion spacing per slope region, pre-stretch, physical
    std::vector<double> spacing(w.slopes.size());
    for (std::size_t j = 0; j < w.slopes.size(); ++j) {
        const double alpha = w.slopes[j];
        const double uplam = alpha > 0.0 ? base_params.lambda : base_params.Lambda;
        const double s = uplam * delta * root_l / std::abs(alpha) - delta;
        if (s < delta)
            throw SlopeTooSteep("build_recovery_sequence: slope " + std::to_string(alpha) +
                                " needs spacing below delta at l = " + std::to_string(l));
        spacing[j] = s;
    }

    const auto zones = marker_zones(minimizer.centers, delta, l);

    struct Marker {
        double pos;   // physical, pre-stretch
        bool core;    // true in negative-slope regions
    };
    std::vector<Marker> markers;
    double max_gap_ratio = 0.0;
    for (std::size_t j = 0; j < w.slopes.size(); ++j) {
        const double r0 = w.breakpoints[j] * l;
        const double r1 = w.breakpoints[j + 1] * l;
        const double s = spacing[j];
        const long count = static_cast<long>(std::floor((r1 - r0) / s));
        double prev_in_region = std::numeric_limits<double>::quiet_NaN();
        for (long k = 1; k <= count; ++k) {
            const double target = r0 + (static_cast<double>(k) - 0.5) * s;
            double m = snap_to_zones(target, zones);
            if (!std::isfinite(m)) continue; // no feasible spot anywhere
            if (!markers.empty()) m = std::max(m, markers.back().pos);
            if (m <= 0.0 || m >= l) continue;
            markers.push_back({m, w.slopes[j] < 0.0});
            if (std::isfinite(prev_in_region))
                max_gap_ratio = std::max(max_gap_ratio, (m - prev_in_region) / s);
            prev_in_region = m;
        }
    }
    if (max_gap_ratio > opts.max_gap_factor + 1.0)
        throw NoConvergence("build_recovery_sequence: insertion coverage has a hole " +
                            std::to_string(max_gap_ratio) + "x the prescribed spacing");

    // stretch: every insertion pushes all later material right by delta
    std::vector<double> combined;
    combined.reserve(minimizer.centers.size() + markers.size());
    for (double z : minimizer.centers) {
        const auto shift = static_cast<double>(
            std::upper_bound(markers.begin(), markers.end(), z,
                             [](double v, const Marker& mk) { return v < mk.pos; }) -
            markers.begin());
        combined.push_back(z + delta * shift);
    }
    for (std::size_t i = 0; i < markers.size(); ++i) {
        if (!markers[i].core) continue;
        combined.push_back(markers[i].pos + delta * static_cast<double>(i) + 0.5 * delta);
    }
    std::sort(combined.begin(), combined.end());
    const double hi = l + 0.5 * delta;
    while (!combined.empty() && combined.back() > hi) combined.pop_back();

    RecoveryBuild out;
    out.config = validate_config(std::move(combined), minimizer.params);
    out.markers.reserve(markers.size());
    for (const auto& mk : markers) out.markers.push_back(mk.pos / l);
    out.stretch = delta * static_cast<double>(markers.size());
    out.F_l = config_energy(out.config) / l;
    out.max_gap_ratio = max_gap_ratio;
    return out;
}

RecoveryBuild build_recovery_sequence(const PiecewiseAffine& w, double l,
                                      const ModelParams& base_params, const ClOptions& cl_opts,
                                      const RecoveryOptions& opts) {
    ModelParams p = base_params;
    p.l = l;
    ClEstimate est = estimate_cl(p, cl_opts);
    DislocationConfig minimizer = validate_config(est.centers_star, p);
    return build_recovery_sequence(w, l, p, minimizer, opts);
}

} // namespace misfit
