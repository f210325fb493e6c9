#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "patree/kernel.hpp"
#include "patree/oracle.hpp"
#include "patree/rng.hpp"
#include "patree/sampler.hpp"

using namespace patree;

TEST_CASE("backward recurrence on a grid small enough to do by hand") {
    const HittingGrid grid = hitting_grid(2, 2, 5);
    CHECK(!grid.outside_probabilistic_regime);
    CHECK(grid.at(0, 4) == doctest::Approx(1.0));
    CHECK(grid.at(1, 4) == doctest::Approx(0.0));
    CHECK(grid.at(0, 3) == doctest::Approx(0.75));
    CHECK(grid.at(1, 3) == doctest::Approx(0.125));
    CHECK(grid.at(0, 2) == doctest::Approx(0.5));
    CHECK(grid.at(1, 2) == doctest::Approx(11.0 / 48.0));

    // Column j = 0 is the no-jump product, here and at scale.
    for (std::int64_t s = 2; s <= 4; ++s) {
        CHECK(hitting_no_jump(2, s, 5) == doctest::Approx(grid.at(0, s)));
    }
    const HittingGrid big = hitting_grid(12, 2, 400);
    for (std::int64_t s : {2, 57, 399}) {
        CHECK(std::fabs(hitting_no_jump(12, s, 400) - big.at(0, s)) < 1e-14);
    }
}

TEST_CASE("a wide grid at short horizon leaves the probabilistic regime") {
    const HittingGrid grid = hitting_grid(10, 2, 6);
    CHECK(grid.outside_probabilistic_regime);
}

TEST_CASE("alternating closed form equals the recurrence") {
    CHECK(hitting_alternating(2, 1, 2, 5) == doctest::Approx(11.0 / 48.0));
    CHECK(hitting_alternating(2, 1, 3, 5) == doctest::Approx(0.125));

    const HittingGrid grid = hitting_grid(10, 2, 201);
    for (std::int64_t s : {2, 20, 100, 200}) {
        for (std::int64_t j = 0; j < 10; ++j) {
            CHECK(std::fabs(hitting_alternating(10, j, s, 201) -
                            grid.at(j, s)) < 1e-8);
        }
    }

    CHECK_THROWS_AS(hitting_alternating(41, 1, 2, 100), ConfigError);
}

TEST_CASE("difference form matches adjacent grid columns") {
    const HittingGrid grid = hitting_grid(10, 2, 101);
    for (std::int64_t s : {2, 50, 100}) {
        for (std::int64_t k = 1; k <= 9; ++k) {
            const double want = grid.at(10 - k, s) - grid.at(10 - k - 1, s);
            CHECK(std::fabs(hitting_diff_alternating(10, k, s, 101) - want) <
                  1e-9);
        }
    }
    CHECK_THROWS_AS(hitting_diff_alternating(13, 1, 2, 100), ConfigError);
}

TEST_CASE("rational grid equals the exact chain under the shifted rule") {
    for (std::int64_t ell : {1, 2, 3, 5}) {
        for (std::int64_t tau : {4, 8}) {
            const auto grid = hitting_grid_t<Rational>(ell, 2, tau);
            for (std::int64_t s = 2; s <= tau - 1; ++s) {
                for (std::int64_t j = 0; j < ell; ++j) {
                    CHECK(grid.at(j, s) ==
                          hitting_exact(ell, s, tau, ell - j,
                                        DegreeStepConvention::shifted));
                }
            }
        }
    }
}

TEST_CASE("continuous surrogate values and boundary") {
    // v = sqrt(25/100) = 1/2, so both f_0 and f_1 collapse to 1/4 here.
    CHECK(continuous_kernel(2, 0, 25.0, 101) == doctest::Approx(0.25));
    CHECK(continuous_kernel(2, 1, 25.0, 101) == doctest::Approx(0.25));
    // At s = tau - 1 the surrogate hits the same delta as the recurrence.
    for (std::int64_t j = 0; j < 5; ++j) {
        CHECK(continuous_kernel(5, j, 100.0, 101) ==
              doctest::Approx(j == 0 ? 1.0 : 0.0));
    }

    // The stable difference form must match the naive subtraction away from
    // cancellation, and reduce to f_0 at j = 0.
    CHECK(continuous_kernel_diff(6, 0, 30.0, 301) ==
          doctest::Approx(continuous_kernel(6, 0, 30.0, 301)));
    for (std::int64_t j = 1; j < 6; ++j) {
        const double naive = continuous_kernel(6, j, 30.0, 301) -
                             continuous_kernel(6, j - 1, 30.0, 301);
        CHECK(continuous_kernel_diff(6, j, 30.0, 301) ==
              doctest::Approx(naive).epsilon(1e-10));
    }
}

TEST_CASE("surrogate time derivative satisfies its transport identity") {
    for (std::int64_t ell : {3, 8}) {
        for (std::int64_t j = 0; j < ell; ++j) {
            for (double s : {5.0, 40.0, 160.0}) {
                const double lhs = continuous_kernel_ds(ell, j, s, 201);
                const double fj = continuous_kernel(ell, j, s, 201);
                const double fjm =
                    j == 0 ? 0.0 : continuous_kernel(ell, j - 1, s, 201);
                const double rhs =
                    (static_cast<double>(ell - j) / (2.0 * s)) * (fj - fjm);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("weighted beta integrals: exact values and quadrature agreement") {
    CHECK(beta_integral_exact(2, 1, 1) == Rational(7, 60));
    CHECK(beta_integral_exact(2, 1, -1) == Rational(1, 6));
    CHECK(beta_integral_exact(3, 0, 1) == Rational(9, 8));

    for (std::int64_t ell : {2, 5, 12}) {
        for (std::int64_t j = 0; j <= ell; ++j) {
            for (std::int64_t alpha : {-1, 1}) {
                if (2 * (ell - j) + alpha < 0) continue;
                const double exact =
                    beta_integral_exact(ell, j, alpha).convert_to<double>();
                const double quad = beta_integral_quadrature(ell, j, alpha);
                CHECK(quad == doctest::Approx(exact).epsilon(1e-9));
            }
        }
    }

    CHECK_THROWS_AS(beta_integral_exact(2, 2, -1), ConfigError);
    CHECK_THROWS_AS(beta_integral_quadrature(2, 3, 1), ConfigError);
}

TEST_CASE("quadratic sums: a hand case and the bound checker") {
    // ell = 1 collapses to Q1 = sum_s s/6 and Q2 = sum_s 1/6 over s = 4..6.
    const QSums sums = q_sums(4, 7, 1);
    CHECK(sums.q1 == doctest::Approx(2.5));
    CHECK(sums.q2 == doctest::Approx(0.5));

    CHECK_THROWS_AS(q_sums_check(4, 7, 1, 2.0), ConfigError);

    const QSumsReport narrow = q_sums_check(4, 7, 1, 3.0);
    CHECK(!narrow.applicable);  // the bounds are only claimed for ell >= 8
    CHECK(narrow.ok);

    const QSumsReport wide = q_sums_check(4, 1001, 8, 3.0);
    CHECK(wide.applicable);
    CHECK(wide.ok);
    CHECK(wide.q1_bound == doctest::Approx(4.0 + 100.0 * 1000.0 / 512.0));
    CHECK(wide.q2_bound == doctest::Approx(81.0));
    CHECK(wide.sums.q1 <= wide.q1_bound);
    CHECK(wide.sums.q2 <= wide.q2_bound);
}

TEST_CASE("surrogate error stays inside the three-regime envelope") {
    const HittingGrid grid = hitting_grid(8, 4, 1001);
    const ErrorGridReport report = error_grid_check(grid);
    CHECK(report.violations() == 0);
    CHECK(report.main.cells + report.mid.cells + report.trivial.cells ==
          997 * 8);
    CHECK(report.main.cells > 0);

    const HittingGrid narrow = hitting_grid(4, 2, 101);
    CHECK_THROWS_AS(error_grid_check(narrow), ConfigError);
}

TEST_CASE("quadratic characteristic cap along a simulated trajectory") {
    PaConfig config;
    config.tau0 = 4;
    config.horizon = 60;
    TreeState state = init_state(config);

    constexpr std::int64_t ell = 8;
    std::vector<std::vector<std::int64_t>> counts;
    std::vector<std::int64_t> max_degree;
    LiveCensus live;
    live.reset(state_census(state));
    auto record = [&]() {
        std::vector<std::int64_t> row(ell);
        for (std::int64_t k = 1; k <= ell; ++k) {
            row[static_cast<std::size_t>(k - 1)] = live.count(k);
        }
        counts.push_back(std::move(row));
        max_degree.push_back(live.max_degree());
    };
    record();
    Rng rng(7);
    run_steps(state, config.horizon - 1, rng,
              [&](std::int64_t, std::uint32_t, std::uint32_t old_deg) {
                  live.record_attachment(old_deg);
                  record();
              });
    REQUIRE(static_cast<std::int64_t>(counts.size()) ==
            config.horizon - config.tau0);

    const PhiUpperReport report =
        phi_upper(counts, max_degree, ell, config.tau0, config.horizon, 3.0);
    CHECK(report.value >= report.no_jump_term);
    CHECK(report.no_jump_term > 0.0);
    CHECK(report.envelope > 0.0);
    CHECK(report.ratio == doctest::Approx(report.value / report.envelope));

    std::vector<std::vector<std::int64_t>> short_rows(3);
    CHECK_THROWS_AS(phi_upper(short_rows, {}, ell, config.tau0,
                              config.horizon, 3.0),
                    ConfigError);
}

TEST_CASE("sampled second differences respect the curvature cap") {
    const CurvatureReport report = second_derivative_check(8, 4, 10001, 20);
    CHECK(!report.samples.empty());
    CHECK(report.violations == 0);
    CHECK(report.max_ratio <= 1.0);
    for (const CurvatureSample& sample : report.samples) {
        CHECK(sample.bound > 0.0);
        CHECK(std::fabs(sample.estimate) <= sample.bound);
    }
}

TEST_CASE("kernel csv lists every grid cell under a fixed header") {
    const std::string csv = kernel_csv(hitting_grid(2, 2, 5));
    CHECK(csv.rfind("ell,tau,j,s,a,f,e,ejs_bound,regime\n", 0) == 0);
    std::size_t rows = 0;
    for (char c : csv) rows += c == '\n' ? 1 : 0;
    CHECK(rows == 1 + 3 * 2);
}
