#include "misfit/circle_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "misfit/quadrature.hpp"

namespace misfit {
namespace {

double min_pairwise_circ_dist(const std::vector<double>& pts) {
    if (pts.size() < 2) return std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        mn = std::min(mn, pts[i + 1] - pts[i]);
    mn = std::min(mn, 1.0 - (pts.back() - pts.front()));
    return mn;
}

std::vector<double> circular_gaps(const std::vector<double>& sorted_pts) {
    const std::size_t n = sorted_pts.size();
    std::vector<double> g(n);
    for (std::size_t i = 0; i + 1 < n; ++i) g[i] = sorted_pts[i + 1] - sorted_pts[i];
    g[n - 1] = 1.0 - (sorted_pts.back() - sorted_pts.front());
    return g;
}

/// Euclidean projection onto {g_i >= rho, Σ g_i = 1}.
std::vector<double> project_gaps(std::vector<double> g, double rho) {
    const std::size_t n = g.size();
    const double mass = 1.0 - rho * static_cast<double>(n);
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = g[i] - rho;

    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cum += u[k];
        const double t = (cum - mass) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) tau = t;
    }
    for (std::size_t i = 0; i < n; ++i) g[i] = rho + std::max(0.0, v[i] - tau);
    return g;
}

double gradient_component(const std::vector<double>& pts, std::size_t i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j == i) continue;
        double t = fract(pts[j] - pts[i]); // offset of j's copy in [0,1)
        if (t == 0.0) throw CoincidentPoints("gradient: coincident points");
        if (t <= 0.5) {
            acc += (1.0 - 2.0 * t) / t; // copy in (x_i, x_i + 1/2]
        } else {
            const double u = t - 1.0;   // copy in (x_i − 1/2, x_i)
            acc += (-1.0 - 2.0 * u) / (-u);
        }
    }
    return 4.0 * acc;
}

std::vector<double> gradient_unchecked(const std::vector<double>& pts) {
    std::vector<double> g(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) g[i] = gradient_component(pts, i);
    return g;
}

double pair_energy_points(const std::vector<double>& pts) {
    KahanSum s;
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double d = circ_dist(pts[i], pts[j]);
            if (d == 0.0) throw CoincidentPoints("energy: coincident points");
            s.add(4.0 * pair_potential(d));
        }
    return s.value();
}

} // namespace

CircleConfig validate_circle_config(std::vector<double> points, double rho, double lambda) {
    if (points.empty()) throw InvalidParams("circle config: need at least one point");
    if (!(lambda > 0.0)) throw InvalidParams("circle config: lambda must be positive");
    const double n = static_cast<double>(points.size());
    if (!(rho > 0.0) || !(rho < 1.0 / n))
        throw CutoffTooLarge("circle config: need 0 < rho < 1/N");
    for (auto& p : points) p = fract(p);
    std::sort(points.begin(), points.end());
    if (min_pairwise_circ_dist(points) < rho - 1e-12)
        throw SeparationViolation("circle config: points closer than rho");
    return CircleConfig{std::move(points), rho, lambda};
}

double pair_potential(double y) {
    const double m = std::min(y, 1.0 - y);
    if (!(m > 0.0)) throw CoincidentPoints("pair potential: zero distance");
    return -std::log(m) + 2.0 * m;
}

double StepProfile::value(double t) const {
    const auto k = std::upper_bound(jumps.begin(), jumps.end(), t) - jumps.begin();
    return base - jump_size * static_cast<double>(k);
}

StepProfile step_profile(const CircleConfig& config) {
    StepProfile h;
    h.jump_size = config.lambda / static_cast<double>(config.n());
    for (int k = -1; k <= 2; ++k)
        for (double x : config.points) {
            const double y = x + k;
            if (y >= -1.0 && y <= 2.0) h.jumps.push_back(y);
        }
    std::sort(h.jumps.begin(), h.jumps.end());
    const auto below = std::upper_bound(h.jumps.begin(), h.jumps.end(), 0.0) - h.jumps.begin();
    h.base = h.jump_size * static_cast<double>(below); // h(0) = 0
    return h;
}

PeriodicDisplacement make_periodic_displacement(const std::vector<double>& points,
                                                double lambda, double Lambda) {
    if (points.empty()) throw InvalidParams("periodic displacement: need points");
    if (!(lambda > 0.0) || !(Lambda > 0.0))
        throw InvalidParams("periodic displacement: lambda, Lambda must be positive");
    std::vector<double> pts = points;
    for (auto& p : pts) p = fract(p);
    std::sort(pts.begin(), pts.end());
    const int n = static_cast<int>(pts.size());
    const double delta = lambda / (static_cast<double>(n) * (lambda + Lambda));
    if (min_pairwise_circ_dist(pts) < delta - 1e-12)
        throw SeparationViolation("periodic displacement: cores overlap (separation < delta)");

    // core intervals mod 1, split at the wrap point
    std::vector<std::pair<double, double>> cores;
    for (double x : pts) {
        double a = x - 0.5 * delta, b = x + 0.5 * delta;
        if (a < 0.0) {
            cores.emplace_back(a + 1.0, 1.0);
            cores.emplace_back(0.0, b);
        } else if (b > 1.0) {
            cores.emplace_back(a, 1.0);
            cores.emplace_back(0.0, b - 1.0);
        } else {
            cores.emplace_back(a, b);
        }
    }
    std::sort(cores.begin(), cores.end());

    std::vector<double> bp{0.0};
    std::vector<double> slopes;
    for (const auto& [a, b] : cores) {
        if (a > bp.back()) {
            bp.push_back(a);
            slopes.push_back(lambda);
        }
        if (b > bp.back()) {
            bp.push_back(b);
            slopes.push_back(-Lambda);
        }
    }
    if (bp.back() < 1.0) {
        bp.push_back(1.0);
        slopes.push_back(lambda);
    }

    PeriodicDisplacement v;
    v.v = PiecewiseAffine(std::move(bp), std::move(slopes), 0.0);
    v.lambda = lambda;
    v.Lambda = Lambda;
    v.delta = delta;
    v.n = n;
    return v;
}

double cutoff_energy(const CircleConfig& config) {
    const auto& pts = config.points;
    const int n = config.n();
    if (config.rho >= min_pairwise_circ_dist(pts))
        throw CutoffTooLarge("cutoff_energy: rho >= minimal pairwise distance");

    // jump count in the window (y, y+z], as a function of y for fixed z
    auto window_sq_measure = [&pts](double z) {
        struct Event {
            double pos;
            int delta;
        };
        std::vector<Event> ev;
        ev.reserve(2 * pts.size());
        long m0 = 0;
        for (double x : pts) {
            if (x > 0.0 && x <= z) ++m0;
            if (x > 0.0) ev.push_back({x, -1});
            const double enter = fract(x - z);
            if (enter > 0.0) ev.push_back({enter, +1});
        }
        std::sort(ev.begin(), ev.end(),
                  [](const Event& a, const Event& b) { return a.pos < b.pos; });
        double acc = 0.0, prev = 0.0;
        long m = m0;
        for (const auto& e : ev) {
            acc += static_cast<double>(m) * static_cast<double>(m) * (e.pos - prev);
            prev = e.pos;
            m += e.delta;
        }
        acc += static_cast<double>(m) * static_cast<double>(m) * (1.0 - prev);
        return acc;
    };

    // S(z) is piecewise linear between consecutive pairwise offsets
    std::vector<double> knots{config.rho, 0.5};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double off = fract(pts[j] - pts[i]);
            if (off > config.rho && off < 0.5) knots.push_back(off);
        }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    KahanSum integral;
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double z1 = knots[k], z2 = knots[k + 1];
        const double za = z1 + (z2 - z1) / 3.0;
        const double zb = z1 + 2.0 * (z2 - z1) / 3.0;
        const double sa = window_sq_measure(za);
        const double sb = window_sq_measure(zb);
        const double slope = (sb - sa) / (zb - za);
        const double icept = sa - slope * za;
        integral.add(icept * (1.0 / z1 - 1.0 / z2) + slope * std::log(z2 / z1));
    }

    const double unit = config.lambda / static_cast<double>(n);
    return 2.0 * unit * unit * integral.value();
}

double pair_energy(const CircleConfig& config) { return pair_energy_points(config.points); }

std::vector<double> pair_energy_gradient(const CircleConfig& config) {
    if (min_pairwise_circ_dist(config.points) <= config.rho)
        throw OnBoundary("pair_energy_gradient: some distance equals rho; variation is one-sided");
    return gradient_unchecked(config.points);
}

std::pair<double, std::vector<double>> offset_decomposition(const CircleConfig& config, int k) {
    const int n = config.n();
    if (k < 1 || k > n - 1) throw BadK("offset_decomposition: need 1 <= k <= N-1");
    const auto& x = config.points; // sorted by construction
    std::vector<double> d(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (i + k < n)
            d[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i + k)] -
                                             x[static_cast<std::size_t>(i)];
        else
            d[static_cast<std::size_t>(i)] =
                1.0 - (x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i + k - n)]);
    }
    KahanSum g;
    for (double di : d) g.add(pair_potential(di));
    return {g.value(), std::move(d)};
}

CircleConfig evenly_spaced_circle(int n, double rho, double lambda, double offset) {
    std::vector<double> pts(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        pts[static_cast<std::size_t>(i)] = fract(offset + static_cast<double>(i) / n);
    return validate_circle_config(std::move(pts), rho, lambda);
}

CircleConfig random_circle_config(int n, double rho, std::mt19937_64& rng, double lambda) {
    if (n < 1) throw InvalidParams("random_circle_config: need N >= 1");
    if (!(rho > 0.0) || !(rho < 1.0 / n)) throw CutoffTooLarge("random_circle_config: bad rho");
    // gaps = rho + (1 - N*rho) * Dirichlet(1,...,1)
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> e(static_cast<std::size_t>(n));
    double tot = 0.0;
    for (auto& v : e) {
        v = expo(rng);
        tot += v;
    }
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double slack = 1.0 - rho * n;
    std::vector<double> pts(static_cast<std::size_t>(n));
    double pos = unif(rng);
    for (int i = 0; i < n; ++i) {
        pts[static_cast<std::size_t>(i)] = fract(pos);
        pos += rho + slack * e[static_cast<std::size_t>(i)] / tot;
    }
    return validate_circle_config(std::move(pts), rho, lambda);
}

CircleMinimizeResult minimize_circle(int n, double rho, std::uint64_t seed,
                                     const CircleSolverOptions& opts) {
    if (n < 1) throw InvalidParams("minimize_circle: need N >= 1");
    if (!(rho > 0.0) || !(rho < 1.0 / n))
        throw CutoffTooLarge("minimize_circle: need 0 < rho < 1/N");

    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL);
    CircleConfig start = random_circle_config(n, rho, rng);

    CircleMinimizeResult res;
    if (n == 1) {
        res.config = start;
        res.energy = 0.0;
        res.max_gap_error = 0.0;
        res.converged = true;
        return res;
    }

    std::vector<double> x = start.points; // sorted, span < 1
    auto project_points = [&](std::vector<double> p) {
        std::sort(p.begin(), p.end());
        std::vector<double> g = circular_gaps(p);
        g = project_gaps(std::move(g), rho);
        std::vector<double> out(p.size());
        out[0] = p[0];
        for (std::size_t i = 1; i < p.size(); ++i) out[i] = out[i - 1] + g[i - 1];
        return out;
    };

    x = project_points(std::move(x));
    std::vector<double> grad = gradient_unchecked(x);
    double energy = pair_energy_points(x);
    res.start_energy = energy;

    double step = 1.0 / (16.0 * n * n); // ~1/Hessian-scale warm start
    const double c1 = 1e-4;
    int iter = 0;
    double pg_norm = 0.0;
    bool converged = false;

    for (; iter < opts.max_iterations; ++iter) {
        std::vector<double> probe(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) probe[i] = x[i] - grad[i];
        probe = project_points(std::move(probe));
        pg_norm = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            pg_norm += (probe[i] - x[i]) * (probe[i] - x[i]);
        pg_norm = std::sqrt(pg_norm);
        if (pg_norm <= opts.tol * std::max(1.0, std::abs(energy))) {
            converged = true;
            break;
        }

        std::vector<double> dir(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) dir[i] = x[i] - step * grad[i];
        dir = project_points(std::move(dir));
        double gd = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            dir[i] -= x[i];
            gd += grad[i] * dir[i];
        }
        if (gd >= 0.0) {
            converged = true; // stationary within rounding
            break;
        }

        double alpha = 1.0;
        std::vector<double> cand(x.size());
        double e_new = energy;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < x.size(); ++i) cand[i] = x[i] + alpha * dir[i];
            e_new = pair_energy_points(cand);
            if (e_new <= energy + c1 * alpha * gd) break;
            alpha *= 0.5;
        }
        if (e_new > energy || e_new >= energy - 4e-15 * (1.0 + std::abs(energy))) {
            converged = true; // at the rounding floor of the objective
            break;
        }

        std::vector<double> grad_new = gradient_unchecked(cand);
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double si = cand[i] - x[i];
            ss += si * si;
            sy += si * (grad_new[i] - grad[i]);
        }
        step = (sy > 1e-300) ? std::clamp(ss / sy, 1e-14, 1e6) : 1e2;

        x.swap(cand);
        grad.swap(grad_new);
        energy = e_new;
    }

    for (auto& p : x) p = fract(p);
    res.config = validate_circle_config(std::move(x), rho, start.lambda);
    res.energy = pair_energy(res.config);
    const auto gaps = circular_gaps(res.config.points);
    double err = 0.0;
    for (double g : gaps) err = std::max(err, std::abs(g - 1.0 / n));
    res.max_gap_error = err;
    res.iterations = iter;
    res.converged = converged;
    if (!res.converged)
        throw NoConvergence("minimize_circle: iteration cap reached (pg_norm = " +
                            std::to_string(pg_norm) + ")");
    return res;
}

double constancy_check(const CircleConfig& x1, const CircleConfig& x2) {
    if (x1.n() != x2.n() || x1.rho != x2.rho || x1.lambda != x2.lambda)
        throw InvalidParams("constancy_check: configs must share N, rho, lambda");
    const double unit = x1.lambda / static_cast<double>(x1.n());
    const double d1 = cutoff_energy(x1) / (unit * unit) - pair_energy(x1);
    const double d2 = cutoff_energy(x2) / (unit * unit) - pair_energy(x2);
    return d1 - d2;
}

PeriodicIdentity periodic_energy_identity(const PeriodicDisplacement& v, double quad_tol) {
    if (!(quad_tol > 0.0)) throw InvalidParams("periodic_energy_identity: tol must be positive");
    PeriodicIdentity out;

    const std::vector<double>& cuts = v.v.breakpoints;

    auto lhs_f = [&v](double x, double y) {
        double d = circ_dist(x, y);
        if (d < 1e-12) {
            const double eps = 1e-9;
            const double num = v.value(x + eps) - v.value(y - eps);
            d = circ_dist(x + eps, y - eps);
            return d > 0.0 ? (num * num) / (d * d) : 0.0;
        }
        const double num = v.value(x) - v.value(y);
        return (num * num) / (d * d);
    };
    QuadratureOptions qo;
    qo.abs_tol = quad_tol;
    out.lhs = integrate_2d(lhs_f, grid_cells(0.0, 1.0, 0.0, 1.0, cuts, cuts), qo).value;

    auto rhs_f = [&v](double y, double z) {
        const double zz = std::abs(z) < 1e-9 ? (z >= 0.0 ? 1e-9 : -1e-9) : z;
        const double num = v.h(y + zz) - v.h(y);
        return (num * num) / (zz * zz);
    };
    std::vector<double> z_cuts{-0.25, 0.0, 0.25};
    out.rhs = integrate_2d(rhs_f, grid_cells(0.0, 1.0, -0.5, 0.5, cuts, z_cuts), qo).value -
              v.lambda * v.lambda;
    return out;
}

double finite_core_cutoff_energy(const PeriodicDisplacement& v, double rho, double quad_tol) {
    if (!(rho > 0.0) || !(rho < 0.5))
        throw CutoffViolation("finite_core_cutoff_energy: need 0 < rho < 1/2");
    auto f = [&v](double y, double z) {
        const double num = v.h(y + z) - v.h(y);
        return (num * num) / (z * z);
    };
    QuadratureOptions qo;
    qo.abs_tol = 0.5 * quad_tol;
    const auto& cuts = v.v.breakpoints;
    const double neg = integrate_2d(f, grid_cells(0.0, 1.0, -0.5, -rho, cuts, {}), qo).value;
    const double pos = integrate_2d(f, grid_cells(0.0, 1.0, rho, 0.5, cuts, {}), qo).value;
    return neg + pos;
}

std::vector<double> lambda_limit_convergence(const CircleConfig& config,
                                             const std::vector<double>& Lambda_list,
                                             double quad_tol) {
    if (Lambda_list.empty()) throw InvalidParams("lambda_limit_convergence: empty Lambda list");
    const int n = config.n();
    for (double Lam : Lambda_list) {
        const double delta = config.lambda / (static_cast<double>(n) * (config.lambda + Lam));
        if (!(config.rho > 0.5 * delta))
            throw CutoffViolation("lambda_limit_convergence: need rho > delta/2 for Lambda = " +
                                  std::to_string(Lam));
    }
    const double limit = cutoff_energy(config);
    std::vector<double> gaps;
    gaps.reserve(Lambda_list.size());
    for (double Lam : Lambda_list) {
        PeriodicDisplacement v = make_periodic_displacement(config.points, config.lambda, Lam);
        const double e = finite_core_cutoff_energy(v, config.rho, quad_tol);
        gaps.push_back(std::abs(e - limit));
    }
    return gaps;
}

} // namespace misfit
