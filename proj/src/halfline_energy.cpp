#include "misfit/halfline_energy.hpp"

#include <algorithm>
#include <cmath>

#include "misfit/numerics.hpp"

namespace misfit {
namespace {

// ∬ over the rectangle (t1,t2)x(s1,s2), t2 <= s1, of
// k(t,s) = 2[log s + log(L-t) - log L - log(s-t)].
double pair_cell(double t1, double t2, double s1, double s2, double L, double logL) {
    const double wt = t2 - t1, ws = s2 - s1;
    const double d2 = p1(s2) - p1(s1);
    const double d1 = p1(L - t1) - p1(L - t2);
    const double r = hlog(s2 - t1) - hlog(s1 - t1) - hlog(s2 - t2) + hlog(s1 - t2);
    return 2.0 * (wt * d2 + ws * d1 - wt * ws * logL - r);
}

// ∬ over the square (p,q)² of k(t,s).
double self_cell(double p, double q, double L, double logL) {
    const double w = q - p;
    const double t_max = 2.0 * (p2(q) - p * p1(q) - p2(p) + p * p1(p)); // ∬ log(max)
    const double t_min = 2.0 * (p2(L - p) + (q - L) * p1(L - p) -
                                p2(L - q) + (L - q) * p1(L - q));       // ∬ log(L-min)
    return 2.0 * (t_max + t_min - w * w * logL - 2.0 * hlog(w));
}

// Q(t) = ∫_0^L k(t,s) ds and its antiderivative in t.
double q_kernel(double t, double L, double p1L) {
    return 2.0 * (p1L - p1(t) - p1(L - t));
}

double q_antiderivative(double a, double b, double L, double p1L) {
    auto ip1 = [](double z) { return p2(z) - 0.5 * z * z; }; // ∫ p1
    return 2.0 * ((b - a) * p1L - (ip1(b) - ip1(a)) - (ip1(L - a) - ip1(L - b)));
}

struct CoreSet {
    std::vector<double> a, b;   // truncated, width > 0
    std::vector<std::size_t> center; // original center index
    std::vector<double> da, db; // sensitivity of each edge to its center
};

CoreSet build_core_set(const DislocationConfig& config) {
    CoreSet cs;
    const double half = 0.5 * config.params.delta;
    const double L = config.params.l;
    // rounding-width slivers contribute O(w^2 log 1/w) and can overlap a
    // neighbor by one ulp after projection; drop them outright
    const double width_floor = 1e-12 * std::max(1.0, L);
    for (std::size_t i = 0; i < config.centers.size(); ++i) {
        const double x = config.centers[i];
        const double a = std::max(x - half, 0.0);
        const double b = std::min(x + half, L);
        if (b - a <= width_floor) continue;
        cs.a.push_back(a);
        cs.b.push_back(b);
        cs.center.push_back(i);
        cs.da.push_back(x - half > 0.0 ? 1.0 : 0.0);
        cs.db.push_back(x + half < L ? 1.0 : 0.0);
    }
    return cs;
}

double core_form_energy(const DislocationConfig& config, std::vector<double>* grad) {
    const ModelParams& p = config.params;
    const double L = p.l;
    const double logL = std::log(L);
    const double p1L = p1(L);
    const double mu = p.lambda + p.Lambda;

    if (grad) grad->assign(config.centers.size(), 0.0);

    const CoreSet cs = build_core_set(config);
    const std::size_t n = cs.a.size();

    KahanSum energy;
    energy.add(p.lambda * p.lambda * L * L);

    // cross terms with the full domain, and self squares
    for (std::size_t i = 0; i < n; ++i) {
        energy.add(-2.0 * p.lambda * mu * q_antiderivative(cs.a[i], cs.b[i], L, p1L));
        energy.add(mu * mu * self_cell(cs.a[i], cs.b[i], L, logL));
        if (grad) {
            double g = 0.0;
            g += -2.0 * p.lambda * mu *
                 (cs.db[i] * q_kernel(cs.b[i], L, p1L) - cs.da[i] * q_kernel(cs.a[i], L, p1L));
            const double a = cs.a[i], b = cs.b[i], w = b - a;
            const double dself_da =
                -4.0 * (p1(b) - p1(a) + w * (std::log(L - a) - logL) - p1(w));
            const double dself_db =
                4.0 * (w * (std::log(b) - logL) + p1(L - a) - p1(L - b) - p1(w));
            g += mu * mu * (cs.da[i] * dself_da + cs.db[i] * dself_db);
            (*grad)[cs.center[i]] += g;
        }
    }

    // core-core pairs (i left of j)
    for (std::size_t i = 0; i < n; ++i) {
        const double a1 = cs.a[i], b1 = cs.b[i], w1 = b1 - a1;
        const double d1 = p1(L - a1) - p1(L - b1);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double a2 = cs.a[j], b2 = cs.b[j], w2 = b2 - a2;
            const double d2 = p1(b2) - p1(a2);

            const double zb2a1 = b2 - a1, za2a1 = a2 - a1, zb2b1 = b2 - b1, za2b1 = a2 - b1;
            double h_b2a1 = 0, h_a2a1 = 0, h_b2b1 = 0, h_a2b1 = 0;
            double hd_b2a1 = 0, hd_a2a1 = 0, hd_b2b1 = 0, hd_a2b1 = 0;
            auto eval = [](double z, double& h, double& hd) {
                if (z > 0.0) {
                    const double lg = std::log(z);
                    h = 0.25 * z * z * (2.0 * lg - 3.0);
                    hd = z * (lg - 1.0);
                }
            };
            eval(zb2a1, h_b2a1, hd_b2a1);
            eval(za2a1, h_a2a1, hd_a2a1);
            eval(zb2b1, h_b2b1, hd_b2b1);
            eval(za2b1, h_a2b1, hd_a2b1);

            const double r = h_b2a1 - h_a2a1 - h_b2b1 + h_a2b1;
            energy.add(2.0 * mu * mu * 2.0 * (w1 * d2 + w2 * d1 - w1 * w2 * logL - r));

            if (grad) {
                const double dj_da1 =
                    2.0 * (-d2 - w2 * std::log(L - a1) + w2 * logL + hd_b2a1 - hd_a2a1);
                const double dj_db1 =
                    2.0 * (d2 + w2 * std::log(L - b1) - w2 * logL - hd_b2b1 + hd_a2b1);
                const double dj_da2 =
                    2.0 * (-w1 * std::log(a2) - d1 + w1 * logL + hd_a2a1 - hd_a2b1);
                const double dj_db2 =
                    2.0 * (w1 * std::log(b2) + d1 - w1 * logL - hd_b2a1 + hd_b2b1);
                const double scale = 2.0 * mu * mu;
                (*grad)[cs.center[i]] += scale * (cs.da[i] * dj_da1 + cs.db[i] * dj_db1);
                (*grad)[cs.center[j]] += scale * (cs.da[j] * dj_da2 + cs.db[j] * dj_db2);
            }
        }
    }
    return energy.value();
}

} // namespace

EnergyReport energy_exact(const PiecewiseAffine& u, double L) {
    const double x0 = u.breakpoints.front();
    if (std::abs((u.breakpoints.back() - x0) - L) > 1e-9 * std::max(1.0, L))
        throw Error("energy_exact: breakpoint span does not match L");
    const double logL = std::log(L);

    const std::size_t n = u.segment_count();
    std::vector<double> t0(n), t1(n);
    for (std::size_t i = 0; i < n; ++i) {
        t0[i] = u.breakpoints[i] - x0;
        t1[i] = u.breakpoints[i + 1] - x0;
        if (!(t1[i] > t0[i])) throw DegenerateSegment("energy_exact: zero-length segment");
    }

    KahanSum sum;
    for (std::size_t i = 0; i < n; ++i) {
        if (u.slopes[i] == 0.0) continue;
        sum.add(u.slopes[i] * u.slopes[i] * self_cell(t0[i], t1[i], L, logL));
        for (std::size_t j = i + 1; j < n; ++j) {
            if (u.slopes[j] == 0.0) continue;
            sum.add(2.0 * u.slopes[i] * u.slopes[j] *
                    pair_cell(t0[i], t1[i], t0[j], t1[j], L, logL));
        }
    }

    EnergyReport r;
    r.value = sum.value();
    if (r.value < 0.0 && r.value > -1e-12 * (1.0 + std::abs(r.value))) r.value = 0.0;
    r.method = EnergyMethod::ClosedForm;
    r.abs_error_estimate = 4e-15 * (1.0 + std::abs(r.value)) * static_cast<double>(n);
    return r;
}

EnergyReport energy_quadrature(const PiecewiseAffine& u, double L, double tol,
                               std::size_t max_cells) {
    if (!(tol > 0.0)) throw InvalidParams("energy_quadrature: tol must be positive");
    const double x0 = u.breakpoints.front();
    std::vector<double> cuts;
    for (double b : u.breakpoints) cuts.push_back(b - x0);

    const double diag_eps = 1e-9 * std::max(1.0, L);
    auto f = [&u, x0, diag_eps](double x, double y) {
        const double d = x - y;
        if (std::abs(d) < diag_eps) {
            // difference quotient across the diagonal; exact within a segment
            const double num = u.value(x + diag_eps + x0) - u.value(y - diag_eps + x0);
            const double den = d + 2.0 * diag_eps;
            return (num * num) / (den * den);
        }
        const double num = u.value(x + x0) - u.value(y + x0);
        return (num * num) / (d * d);
    };

    // same-segment squares have a constant integrand (u affine there), so the
    // diagonal needs no special treatment once cells align with segments
    QuadratureOptions opts;
    opts.abs_tol = tol;
    opts.max_cells = max_cells;
    QuadratureResult q = integrate_2d(f, grid_cells(0.0, L, 0.0, L, cuts, cuts), opts);

    EnergyReport r;
    r.value = std::max(q.value, 0.0);
    r.method = EnergyMethod::AdaptiveQuadrature;
    r.abs_error_estimate = std::min(tol, 8.0 * q.abs_error_estimate + 1e-15 * (1.0 + r.value));
    return r;
}

std::pair<RescaledDisplacement, double> rescaled_energy(const PiecewiseAffine& u, double l) {
    RescaledDisplacement w = rescale_displacement(u, l);
    const double F = energy_exact(w.w, 1.0).value;
    return {std::move(w), F};
}

LinearGrowthCertificate linear_growth_certificate(const PiecewiseAffine& u, double L) {
    if (!(L > 1.0)) throw InvalidParams("linear_growth_certificate: requires L > 1");
    LinearGrowthCertificate cert;
    cert.M = oscillation(u);
    const double lip = u.max_abs_slope();
    cert.C = 2.0 * cert.M * cert.M + 2.0 * lip * lip;
    cert.energy = energy_exact(u, L).value;
    cert.holds = cert.energy <= cert.C * L * (1.0 + 1e-12);
    return cert;
}

DislocationConfig evenly_spaced_config(const ModelParams& params) {
    params.validate();
    const double gamma = (params.lambda + params.Lambda) / params.lambda * params.delta;
    if (params.l <= gamma)
        throw TooShort("evenly_spaced_config: l must exceed gamma = (lambda+Lambda)*delta/lambda");
    const long n = tolerant_floor(params.l / gamma);
    std::vector<double> centers(static_cast<std::size_t>(n));
    for (long i = 1; i <= n; ++i)
        centers[static_cast<std::size_t>(i - 1)] =
            static_cast<double>(i) * gamma - 0.5 * params.delta;
    return validate_config(std::move(centers), params);
}

double config_energy(const DislocationConfig& config) {
    return core_form_energy(config, nullptr);
}

double config_energy_gradient(const DislocationConfig& config, std::vector<double>& grad) {
    return core_form_energy(config, &grad);
}

} // namespace misfit
