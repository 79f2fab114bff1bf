// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run all criteria by default, or a subset via --criterion N
// (repeatable). Heavy intermediate results (minimizers at fixed lengths)
// are cached and shared between criteria within one run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "misfit/circle_model.hpp"
#include "misfit/core.hpp"
#include "misfit/halfline_energy.hpp"
#include "misfit/interval_opt.hpp"

using namespace misfit;

namespace {

struct Context {
    std::map<double, ClEstimate> cl_cache; // keyed by l (lambda=Lambda=1, delta=0.1)

    const ClEstimate& cl_at(double l, const ClOptions& opts) {
        auto it = cl_cache.find(l);
        if (it != cl_cache.end()) return it->second;
        ModelParams p{1.0, 1.0, 0.1, l};
        return cl_cache.emplace(l, estimate_cl(p, opts)).first->second;
    }

    ClOptions default_opts(double l) const {
        ClOptions o; // stock multistart settings up to l = 40
        if (l > 100.0) {
            o.restarts = 1; // pinned count, single descent from the periodic start
            o.n_window = 0;
            o.solver.grad_tol = 1e-6;
            o.solver.max_iterations = 1500;
        } else if (l > 40.0) {
            o.restarts = 4;
            o.n_window = 1;
        }
        return o;
    }
};

bool criterion_1(Context&, std::string& detail) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> len(1.0, 10.0);
    std::uniform_int_distribution<int> count(0, 20);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        ModelParams p{1.0, 1.0, 0.05, len(rng)};
        auto cfg = validate_config(
            random_admissible_centers(p, static_cast<std::size_t>(count(rng)), rng), p);
        const auto u = displacement_from_config(cfg);
        const double exact = energy_exact(u, p.l).value;
        const double quad =
            energy_quadrature(u, p.l, 1e-9 * (1.0 + exact), 6'000'000).value;
        worst = std::max(worst, std::abs(exact - quad) / (1.0 + exact));
    }
    std::ostringstream os;
    os << "max |exact-quad|/(1+E) = " << worst;
    detail = os.str();
    return worst <= 1e-8;
}

bool criterion_2(Context&, std::string& detail) {
    double worst = 0.0;
    for (auto [lambda, l] : {std::pair{1.0, 1.0}, {0.3, 7.5}, {2.0, 3.0}}) {
        PiecewiseAffine ramp({0.0, l}, {lambda}, 0.0);
        const double e = energy_exact(ramp, l).value;
        worst = std::max(worst, std::abs(e - lambda * lambda * l * l) /
                                    (lambda * lambda * l * l));
    }
    PiecewiseAffine flat({0.0, 2.0}, {0.0}, 0.3);
    const bool const_zero = energy_exact(flat, 2.0).value == 0.0;
    std::ostringstream os;
    os << "ramp rel err = " << worst << ", const energy exact zero = " << const_zero;
    detail = os.str();
    return worst <= 1e-12 && const_zero;
}

bool criterion_3(Context&, std::string& detail) {
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> len(1.0 + 1e-9, 50.0);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
        ModelParams p{1.0, 1.0, 0.1, len(rng)};
        const long cap = static_cast<long>(p.l / (2.0 * p.delta));
        std::uniform_int_distribution<long> count(0, cap);
        auto cfg = validate_config(
            random_admissible_centers(p, static_cast<std::size_t>(count(rng)), rng), p);
        if (!linear_growth_certificate(displacement_from_config(cfg), p.l).holds) ++failures;
    }
    detail = std::to_string(failures) + " violations in 100 configs";
    return failures == 0;
}

bool criterion_4(Context&, std::string& detail) {
    double worst_osc = 0.0;
    double worst_ratio = 0.0;
    const double C = 2.0 * (0.2 * 0.2) + 2.0; // M = 2*Lambda*delta
    for (double l : {1.0, 2.0, 4.0, 8.0, 16.0}) {
        ModelParams p{1.0, 1.0, 0.1, l};
        const auto cfg = evenly_spaced_config(p);
        const auto u = displacement_from_config(cfg);
        const double gamma = 0.2;
        const double period_end =
            std::min(static_cast<double>(cfg.size()) * gamma, l);
        const double osc = oscillation(restrict(u, 0.0, period_end));
        worst_osc = std::max(worst_osc, std::abs(osc - 0.1));
        worst_ratio = std::max(worst_ratio, energy_exact(u, l).value / (C * l));
    }
    std::ostringstream os;
    os << "max |osc - 0.1| = " << worst_osc << ", max E/(C l) = " << worst_ratio;
    detail = os.str();
    return worst_osc <= 1e-12 && worst_ratio <= 1.0;
}

bool criterion_5(Context& ctx, std::string& detail) {
    std::vector<double> ls{5.0, 10.0, 20.0, 40.0};
    std::vector<double> cl;
    for (double l : ls) {
        const auto& est = ctx.cl_at(l, ctx.default_opts(l));
        if (!(est.c_l > 0.0)) {
            detail = "c_l not positive at l = " + std::to_string(l);
            return false;
        }
        cl.push_back(est.c_l);
    }
    std::vector<double> rel;
    for (std::size_t i = 0; i + 1 < cl.size(); ++i)
        rel.push_back(std::abs(cl[i + 1] - cl[i]) / cl[i]);
    const bool decreasing = rel[0] > rel[1] && rel[1] > rel[2];

    ModelParams p{1.0, 1.0, 0.1, 1.0};
    SubadditivityDetail d1, d2;
    const bool s1 = subadditivity_check(5.0, 20.0, p, ctx.default_opts(20.0), &d1,
                                        &ctx.cl_at(5.0, ctx.default_opts(5.0)),
                                        &ctx.cl_at(20.0, ctx.default_opts(20.0)));
    const bool s2 = subadditivity_check(10.0, 40.0, p, ctx.default_opts(40.0), &d2,
                                        &ctx.cl_at(10.0, ctx.default_opts(10.0)),
                                        &ctx.cl_at(40.0, ctx.default_opts(40.0)));
    std::ostringstream os;
    os << "c_l = {" << cl[0] << ", " << cl[1] << ", " << cl[2] << ", " << cl[3]
       << "}, rel diffs = {" << rel[0] << ", " << rel[1] << ", " << rel[2]
       << "}, subadditivity(5,20) = " << s1 << ", (10,40) = " << s2;
    detail = os.str();
    return decreasing && s1 && s2;
}

bool criterion_6(Context& ctx, std::string& detail) {
    const auto& est = ctx.cl_at(40.0, ctx.default_opts(40.0));
    ModelParams p{1.0, 1.0, 0.1, 40.0};
    const auto cfg = validate_config(est.centers_star, p);
    const auto h = dislocation_density(cfg, 10); // interior bins cover (0.1, 0.9)
    const double target = predicted_density(p);  // 5 per unit length
    double worst = 0.0;
    for (std::size_t b = 1; b <= 8; ++b)
        worst = std::max(worst, std::abs(h.normalized_density[b] - target) / target);
    std::ostringstream os;
    os << "max interior bin deviation = " << 100.0 * worst << "%";
    detail = os.str();
    return worst <= 0.10;
}

bool criterion_7(Context&, std::string& detail) {
    const auto hand = validate_circle_config({0.0, 0.4}, 0.05);
    const double comp = pair_energy_gradient(hand)[1];
    if (std::abs(comp - (-2.0)) > 1e-8) {
        detail = "hand case component = " + std::to_string(comp);
        return false;
    }

    std::mt19937_64 rng(707);
    const double h = 1e-6;
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + static_cast<int>(rng() % 7);
        auto cfg = random_circle_config(n, 0.02, rng);
        std::vector<double> g;
        try {
            g = pair_energy_gradient(cfg);
        } catch (const OnBoundary&) {
            --t;
            continue;
        }
        double err = 0.0, scale = 1.0;
        for (int i = 0; i < n; ++i) {
            auto plus = cfg.points, minus = cfg.points;
            plus[static_cast<std::size_t>(i)] += h;
            minus[static_cast<std::size_t>(i)] -= h;
            const double fd = (pair_energy(CircleConfig{plus, cfg.rho, 1.0}) -
                               pair_energy(CircleConfig{minus, cfg.rho, 1.0})) /
                              (2.0 * h);
            err = std::max(err, std::abs(fd - g[static_cast<std::size_t>(i)]));
            scale = std::max(scale, std::abs(g[static_cast<std::size_t>(i)]));
        }
        worst = std::max(worst, err / scale);
    }
    std::ostringstream os;
    os << "hand case ok, max rel FD error = " << worst;
    detail = os.str();
    return worst <= 1e-5;
}

bool criterion_8(Context&, std::string& detail) {
    double worst_gap = 0.0, worst_energy = 0.0;
    for (int n = 2; n <= 8; ++n) {
        double theory = 0.0;
        for (int k = 1; k < n; ++k)
            theory += 2.0 * n * pair_potential(static_cast<double>(k) / n);
        const double rho = 0.5 / n;
        for (std::uint64_t seed = 0; seed < 50; ++seed) {
            const auto r = minimize_circle(n, rho, seed);
            worst_gap = std::max(worst_gap, r.max_gap_error);
            worst_energy = std::max(worst_energy, std::abs(r.energy - theory) / theory);
        }
    }
    std::ostringstream os;
    os << "max gap deviation = " << worst_gap << ", max energy rel err = " << worst_energy;
    detail = os.str();
    return worst_gap <= 1e-6 && worst_energy <= 1e-8;
}

bool criterion_9(Context&, std::string& detail) {
    std::mt19937_64 rng(909);
    double worst_sum = 0.0;
    double min_gap_off_even = 1e300;
    bool jensen_ok = true;
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + static_cast<int>(rng() % 7);
        auto cfg = random_circle_config(n, 0.02, rng);
        double spread = 0.0;
        for (int k = 1; k < n; ++k) {
            auto [gk, d] = offset_decomposition(cfg, k);
            double s = 0.0;
            for (double di : d) {
                s += di;
                spread = std::max(spread, std::abs(di - static_cast<double>(k) / n));
            }
            worst_sum = std::max(worst_sum, std::abs(s - static_cast<double>(k)));
            const double bound = n * pair_potential(static_cast<double>(k) / n);
            if (gk < bound - 1e-12) jensen_ok = false;
            if (spread >= 1e-3) min_gap_off_even = std::min(min_gap_off_even, gk - bound);
        }
    }
    bool equality_even = true;
    for (int n = 2; n <= 8; ++n) {
        const auto even = evenly_spaced_circle(n, 0.25 / n, 1.0, 0.37);
        for (int k = 1; k < n; ++k) {
            auto [gk, d] = offset_decomposition(even, k);
            if (std::abs(gk - n * pair_potential(static_cast<double>(k) / n)) > 1e-10)
                equality_even = false;
        }
    }
    std::ostringstream os;
    os << "max |sum d - k| = " << worst_sum << ", Jensen ok = " << jensen_ok
       << ", even equality = " << equality_even
       << ", min excess off-even = " << min_gap_off_even;
    detail = os.str();
    return worst_sum <= 1e-12 && jensen_ok && equality_even && min_gap_off_even > 1e-10;
}

bool criterion_10(Context&, std::string& detail) {
    std::mt19937_64 rng(1010);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        auto x1 = random_circle_config(3, 0.05, rng);
        auto x2 = random_circle_config(3, 0.05, rng);
        const double rel =
            std::abs(constancy_check(x1, x2)) / (1.0 + std::abs(cutoff_energy(x1)));
        worst = std::max(worst, rel);
    }
    std::ostringstream os;
    os << "max relative constancy defect = " << worst;
    detail = os.str();
    return worst <= 1e-6;
}

bool criterion_11(Context&, std::string& detail) {
    double worst = 0.0;
    for (int n : {1, 2, 3}) {
        const auto cfg = evenly_spaced_circle(n, 0.3 / n, 1.0, 0.21);
        const auto v = make_periodic_displacement(cfg.points, 1.0, 1.0);
        const auto id = periodic_energy_identity(v, 1e-6);
        worst = std::max(worst, std::abs(id.lhs - id.rhs));
    }
    std::ostringstream os;
    os << "max |lhs - rhs| = " << worst;
    detail = os.str();
    return worst <= 2e-6;
}

bool criterion_12(Context&, std::string& detail) {
    const auto cfg = evenly_spaced_circle(2, 0.1);
    const auto gaps = lambda_limit_convergence(cfg, {10.0, 100.0, 1000.0}, 1e-7);
    std::ostringstream os;
    os << "gaps = {" << gaps[0] << ", " << gaps[1] << ", " << gaps[2] << "}";
    detail = os.str();
    return gaps[0] > gaps[1] && gaps[1] > gaps[2];
}

bool criterion_13(Context& ctx, std::string& detail) {
    PiecewiseAffine w({0.0, 1.0}, {0.5}, 0.0);
    const double w_energy = energy_exact(w, 1.0).value; // alpha^2
    std::vector<double> rel_gaps;
    std::ostringstream os;
    for (double l : {25.0, 100.0, 400.0}) {
        ModelParams p{1.0, 1.0, 0.1, l};
        const auto& est = ctx.cl_at(l, ctx.default_opts(l));
        const auto base = validate_config(est.centers_star, p);
        const auto rb = build_recovery_sequence(w, l, p, base);
        const double target = est.c_l + w_energy;
        const double gap = std::abs(rb.F_l - target) / target;
        rel_gaps.push_back(gap);
        os << "l=" << l << ": F=" << rb.F_l << " target=" << target << " gap=" << gap << "  ";
    }
    detail = os.str();
    return rel_gaps[0] > rel_gaps[1] && rel_gaps[1] > rel_gaps[2] && rel_gaps[2] <= 0.25;
}

struct Criterion {
    int id;
    const char* label;
    std::function<bool(Context&, std::string&)> run;
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
            selected.push_back(std::atoi(argv[++i]));
    }

    const std::vector<Criterion> criteria{
        {1, "closed form vs quadrature on random configurations", criterion_1},
        {2, "exact ramp and constant energies", criterion_2},
        {3, "linear growth certificate on random configurations", criterion_3},
        {4, "periodic competitor oscillation and energy rate", criterion_4},
        {5, "energy density stabilization and subadditivity", criterion_5},
        {6, "uniform density of the large-scale minimizer", criterion_6},
        {7, "circle gradient against finite differences", criterion_7},
        {8, "circle minimizers are evenly spaced", criterion_8},
        {9, "offset decomposition: constraint and lower bound", criterion_9},
        {10, "difference of circle functionals is constant", criterion_10},
        {11, "periodic change-of-variables identity", criterion_11},
        {12, "core regularization converges to the step profile", criterion_12},
        {13, "macroscopic strain recovery trend", criterion_13},
    };

    Context ctx;
    int failures = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() &&
            std::find(selected.begin(), selected.end(), c.id) == selected.end())
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(ctx, detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << c.id << ": " << c.label
                  << " (" << detail << ") [" << dt << " s]" << std::endl;
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
