#include <doctest.h>

#include <random>

#include "misfit/core.hpp"

using namespace misfit;

namespace {
ModelParams params(double lambda, double Lambda, double delta, double l) {
    return ModelParams{lambda, Lambda, delta, l};
}
} // namespace

TEST_CASE("model params invariants") {
    CHECK_NOTHROW(params(1, 1, 0.1, 1).validate());
    CHECK_THROWS_AS(params(-1, 1, 0.1, 1).validate(), InvalidParams);
    CHECK_THROWS_AS(params(2, 1, 0.1, 1).validate(), InvalidParams); // Lambda < lambda
    CHECK_THROWS_AS(params(1, 1, 0, 1).validate(), InvalidParams);
    CHECK_THROWS_AS(params(1, 1, 0.1, 0).validate(), InvalidParams);
}

TEST_CASE("validate_config basics") {
    const auto p = params(1, 1, 0.2, 1);

    CHECK(validate_config({}, p).empty());

    // a center may sit outside (0, l)
    CHECK(validate_config({-0.05}, p).size() == 1);

    // disjointness forces gaps >= delta
    CHECK_THROWS_AS(validate_config({0.3, 0.3 + 0.1}, p), SeparationViolation);
    CHECK_THROWS_AS(validate_config({0.3, 0.3}, p), SeparationViolation);
    CHECK_NOTHROW(validate_config({0.3, 0.5}, p)); // touching cores allowed

    CHECK_THROWS_AS(validate_config({1.2}, p), OutOfRange);
    CHECK_THROWS_AS(validate_config({-0.2}, p), OutOfRange);
}

TEST_CASE("validate_config sorts and is permutation invariant") {
    const auto p = params(1, 2, 0.1, 2);
    auto a = validate_config({1.5, 0.3, 0.9}, p);
    auto b = validate_config({0.3, 0.9, 1.5}, p);
    CHECK(a.centers == b.centers);
    CHECK(a.centers[0] == 0.3);
    CHECK(a.centers[2] == 1.5);
}

TEST_CASE("displacement: empty config is a pure ramp") {
    const auto cfg = validate_config({}, params(0.1, 0.1, 0.05, 1));
    const auto u = displacement_from_config(cfg);
    CHECK(u.segment_count() == 1);
    CHECK(u.slopes[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(u.value(1.0) == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("displacement: single centered core") {
    const auto cfg = validate_config({0.5}, params(1, 1, 0.2, 1));
    const auto u = displacement_from_config(cfg);
    REQUIRE(u.segment_count() == 3);
    CHECK(u.breakpoints[1] == doctest::Approx(0.4));
    CHECK(u.breakpoints[2] == doctest::Approx(0.6));
    CHECK(u.slopes[0] == 1.0);
    CHECK(u.slopes[1] == -1.0);
    CHECK(u.slopes[2] == 1.0);
    CHECK(u.value(0.4) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(u.value(0.6) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(u.value(1.0) == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("displacement: boundary core is truncated to (0, l)") {
    // center -delta/4 = -0.05, core (-0.15, 0.05) clipped to (0, 0.05)
    const auto cfg = validate_config({-0.05}, params(1, 1, 0.2, 1));
    const auto u = displacement_from_config(cfg);
    REQUIRE(u.segment_count() == 2);
    CHECK(u.breakpoints[1] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(u.slopes[0] == -1.0);
    CHECK(u.slopes[1] == 1.0);
    CHECK(u.value(0.05) == doctest::Approx(-0.05).epsilon(1e-13));
}

TEST_CASE("oscillation") {
    const auto ramp = displacement_from_config(validate_config({}, params(0.3, 0.3, 0.05, 2)));
    CHECK(oscillation(ramp) == doctest::Approx(0.6).epsilon(1e-14));

    PiecewiseAffine flat({0.0, 1.0}, {0.0}, 3.0);
    CHECK(oscillation(flat) == 0.0);
}

TEST_CASE("slope pattern round trip") {
    const auto p = params(1, 2, 0.1, 3);
    std::vector<double> centers{0.4, 0.9, 2.2};
    const auto cfg = validate_config(centers, p);
    const auto u = displacement_from_config(cfg);
    const auto back = centers_from_displacement(u, p);
    REQUIRE(back.size() == centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i)
        CHECK(back[i] == doctest::Approx(centers[i]).epsilon(1e-12));
}

TEST_CASE("config displacements are max(lambda, Lambda)-Lipschitz") {
    std::mt19937_64 rng(7);
    const auto p = params(0.5, 2, 0.1, 4);
    const auto cfg = validate_config({0.2, 1.0, 1.7, 3.3}, p);
    const auto u = displacement_from_config(cfg);
    std::uniform_real_distribution<double> unif(0.0, 4.0);
    for (int t = 0; t < 200; ++t) {
        const double x = unif(rng), y = unif(rng);
        CHECK(std::abs(u.value(x) - u.value(y)) <= 2.0 * std::abs(x - y) + 1e-14);
    }
}

TEST_CASE("restrict keeps values and shifts the domain") {
    const auto cfg = validate_config({0.5}, params(1, 1, 0.2, 1));
    const auto u = displacement_from_config(cfg);
    const auto mid = restrict(u, 0.3, 0.7);
    CHECK(mid.length() == doctest::Approx(0.4));
    CHECK(mid.value(0.0) == doctest::Approx(u.value(0.3)));
    CHECK(mid.value(0.25) == doctest::Approx(u.value(0.55)));
    CHECK(mid.value(0.4) == doctest::Approx(u.value(0.7)));
}

TEST_CASE("rescaling contract w(x) = u(lx)/sqrt(l)") {
    const auto cfg = validate_config({0.4, 1.1}, params(1, 1.5, 0.2, 2));
    const auto u = displacement_from_config(cfg);
    const auto w = rescale_displacement(u, 2.0);
    CHECK(w.scale == 2.0);
    CHECK(w.w.length() == doctest::Approx(1.0));
    for (double x : {0.1, 0.25, 0.5, 0.77, 1.0})
        CHECK(w.w.value(x) == doctest::Approx(u.value(2.0 * x) / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("config JSON round trip") {
    const auto cfg = validate_config({-0.03, 0.5, 0.81}, params(0.7, 1.3, 0.12, 1.5));
    const auto j = to_json(cfg);
    CHECK(j.at("Lambda") == 1.3);
    const auto back = config_from_json(j);
    CHECK(back.centers == cfg.centers);
    CHECK(back.params.delta == cfg.params.delta);
}
