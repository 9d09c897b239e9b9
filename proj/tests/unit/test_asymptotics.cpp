#include "doctest.h"
#include "oracles.hpp"

#include "pfm/asymptotics.hpp"
#include "pfm/errors.hpp"

#include <cmath>
#include <set>

using namespace pfm;

namespace {

double texp_cdf(double rate, double x) {
    return (1.0 - std::exp(-rate * x)) / (1.0 - std::exp(-rate));
}

// composite Simpson on [0, x]
double integrate_pdf(const AxisDensity& f, double x, int panels = 2000) {
    const double h = x / panels;
    double s = axis_pdf(f, 0.0) + axis_pdf(f, x);
    for (int i = 1; i < panels; ++i)
        s += (i % 2 ? 4.0 : 2.0) * axis_pdf(f, i * h);
    return s * h / 3.0;
}

std::vector<AxisDensity> families() {
    return {UniformAxis{}, TruncatedExponentialAxis{2.5}, TruncatedExponentialAxis{-1.5},
            TwoBumpAxis{}, TwoBumpAxis{0.3, 0.35, 0.2, 0.7, 0.05}};
}

} // namespace

TEST_CASE("axis densities integrate to one and match their CDFs") {
    for (const auto& f : families()) {
        CHECK(integrate_pdf(f, 1.0) == doctest::Approx(1.0).epsilon(1e-8));
        for (double x : {0.1, 0.33, 0.5, 0.8}) {
            CHECK(axis_cdf(f, x) == doctest::Approx(integrate_pdf(f, x)).epsilon(1e-8));
            CHECK(axis_quantile(f, axis_cdf(f, x)) == doctest::Approx(x).epsilon(1e-9));
        }
        CHECK(axis_cdf(f, 0.0) == 0.0);
        CHECK(axis_cdf(f, 1.0) == doctest::Approx(1.0));
    }
    const TruncatedExponentialAxis t{2.5};
    for (double x : {0.05, 0.5, 0.95})
        CHECK(axis_cdf(t, x) == doctest::Approx(texp_cdf(2.5, x)).epsilon(1e-12));
}

TEST_CASE("density specifications") {
    CHECK(std::holds_alternative<UniformAxis>(parse_axis_density("uniform")));
    const auto t = parse_axis_density("texp:3");
    REQUIRE(std::holds_alternative<TruncatedExponentialAxis>(t));
    CHECK(std::get<TruncatedExponentialAxis>(t).rate == 3.0);
    const auto b = parse_axis_density("twobump:0.4,0.2,0.05,0.7,0.1");
    REQUIRE(std::holds_alternative<TwoBumpAxis>(b));
    CHECK(std::get<TwoBumpAxis>(b).sd2 == 0.1);
    CHECK_THROWS_AS(parse_axis_density("gauss"), ValidationError);
    CHECK_THROWS_AS(parse_axis_density("texp:0"), ValidationError);
    CHECK_THROWS_AS(parse_axis_density("texp:x"), ValidationError);
    CHECK_THROWS_AS(parse_axis_density("twobump:0.4,0.2"), ValidationError);
    const auto f = SeparableDensity::same(TruncatedExponentialAxis{2.5}, 2);
    const std::vector<double> x{0.3, 0.6};
    CHECK(f.cdf(x) == doctest::Approx(texp_cdf(2.5, 0.3) * texp_cdf(2.5, 0.6)));
}

TEST_CASE("uniform samples: per-axis means near one half, seeded, distinct coordinates") {
    const std::size_t n = 20000;
    const auto pts = sample_density(SeparableDensity::uniform(3), n, 42);
    const auto again = sample_density(SeparableDensity::uniform(3), n, 42);
    CHECK(pts.coords() == again.coords());
    CHECK(pts.coords() != sample_density(SeparableDensity::uniform(3), n, 43).coords());
    for (std::size_t k = 0; k < 3; ++k) {
        double mean = 0.0;
        std::set<double> seen;
        for (std::size_t i = 0; i < n; ++i) {
            mean += pts[i][k];
            seen.insert(pts[i][k]);
            CHECK(pts[i][k] >= 0.0);
            CHECK(pts[i][k] <= 1.0);
        }
        CHECK(std::abs(mean / n - 0.5) <= 3.0 / std::sqrt(double(n)));
        CHECK(seen.size() == n);
    }
    CHECK_THROWS_AS(sample_density(SeparableDensity::uniform(2), 0, 1), ValidationError);
}

TEST_CASE("truncated exponential samples stay inside the KS band") {
    const std::size_t n = 20000;
    const double rate = 2.5;
    const auto pts = sample_density(SeparableDensity::same(TruncatedExponentialAxis{rate}, 1), n, 7);
    std::vector<double> xs;
    for (std::size_t i = 0; i < n; ++i)
        xs.push_back(pts[i][0]);
    std::sort(xs.begin(), xs.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = texp_cdf(rate, xs[i]);
        ks = std::max({ks, std::abs(double(i + 1) / n - f), std::abs(double(i) / n - f)});
    }
    CHECK(ks <= 1.358 / std::sqrt(double(n)));
}

TEST_CASE("depth field agrees with direct depth and is monotone on the grid") {
    const auto pts = sample_density(SeparableDensity::uniform(2), 3000, 5);
    const DepthField field(pts);
    CHECK(field.chain_depths() == longest_chain_depths(pts));
    const auto grid = evaluation_grid(2);
    REQUIRE(grid.size() == 82);
    CHECK(grid.back() == std::vector<double>{1.0, 1.0});
    CHECK(evaluation_grid(3).size() == 730);
    for (const auto& x : grid) {
        CHECK(field.depth_at(x) == depth_at(pts, x));
        for (const auto& z : grid)
            if (oracle::le_all(x, z))
                CHECK(field.depth_at(x) <= field.depth_at(z));
    }
    const std::vector<double> below{-0.1, 0.5};
    CHECK(field.depth_at(below) == 0);
    CHECK(scaled_depth_at(pts, grid.back()) ==
          doctest::Approx(field.depth_at(grid.back()) / std::sqrt(3000.0)));
}

TEST_CASE("one-dimensional depth is the empirical CDF") {
    const std::size_t n = 10000;
    for (const auto& axis : {AxisDensity{UniformAxis{}}, AxisDensity{TruncatedExponentialAxis{2.0}}}) {
        const auto f = SeparableDensity::same(axis, 1);
        const auto pts = sample_density(f, n, 19);
        const DepthField field(pts);
        for (int g = 1; g <= 9; ++g) {
            const std::vector<double> x{0.1 * g};
            std::size_t count = 0;
            for (std::size_t i = 0; i < n; ++i)
                count += pts[i][0] <= x[0];
            CHECK(field.depth_at(x) == count);
            CHECK(std::abs(field.scaled_depth_at(x) - f.cdf(x)) <= 3.0 / std::sqrt(double(n)));
        }
    }
}

TEST_CASE("planar scaled depth follows the square root of the CDF") {
    const std::size_t n = 20000;
    double one = 0.0, quarter = 0.0, half = 0.0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const DepthField field(sample_density(SeparableDensity::uniform(2), n, 100 + seed));
        one += field.scaled_depth_at(std::vector<double>{1.0, 1.0});
        quarter += field.scaled_depth_at(std::vector<double>{0.25, 1.0});
        half += field.scaled_depth_at(std::vector<double>{0.5, 0.5});
    }
    CHECK(one / 4 > 1.7);
    CHECK(one / 4 < 2.0);
    CHECK(std::abs(quarter / one - 0.5) <= 0.05);
    CHECK(std::abs(half / one - 0.5) <= 0.05);
}

TEST_CASE("continuum table") {
    const auto f = SeparableDensity::uniform(2);
    const auto table = continuum_comparison(f, {1000, 4000, 16000}, evaluation_grid(2), 4, 9);
    REQUIRE(table.rows.size() == 3);
    CHECK(table.c_hat == doctest::Approx(table.rows.back().scaled_depth_at_one));
    CHECK(table.c_hat > 1.6);
    CHECK(table.c_hat < 2.0);
    for (const auto& row : table.rows)
        CHECK(row.max_relative_error >= 0.0);
    CHECK(table.rows.front().max_relative_error > table.rows.back().max_relative_error);
    const auto again = continuum_comparison(f, {1000, 4000, 16000}, evaluation_grid(2), 4, 9);
    CHECK(again.rows.back().max_relative_error == table.rows.back().max_relative_error);
    CHECK_THROWS_AS(continuum_comparison(f, {}, evaluation_grid(2), 4, 9), ValidationError);
}

TEST_CASE("front index equals chain depth on random uniform instances") {
    const std::vector<std::size_t> dims{2, 3, 4};
    const auto agreement = front_chain_agreement(20, 50, 300, dims, 1);
    CHECK(agreement.instances == 20);
    CHECK(agreement.points >= 20 * 50);
    CHECK(agreement.mismatches == 0);
}

TEST_CASE("convexity probe: uniform mid levels versus two planted blobs") {
    const std::vector<double> levels{0.6, 0.8, 1.0};
    for (std::uint64_t seed : {1, 2, 3}) {
        for (const auto& lv : quasiconcavity_probe(SeparableDensity::uniform(2), 100000, levels, seed)) {
            CHECK_FALSE(lv.skipped);
            CHECK(lv.defect < 0.05);
        }
    }

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 0.4);
    PointSet blobs(2);
    for (int i = 0; i < 20000; ++i) {
        blobs.push_back(std::vector<double>{u(rng), 0.6 + u(rng)});
        blobs.push_back(std::vector<double>{0.6 + u(rng), u(rng)});
    }
    const std::vector<double> blob_levels{0.3, 0.5};
    for (const auto& lv : quasiconcavity_probe(blobs, blob_levels)) {
        CHECK_FALSE(lv.skipped);
        CHECK(lv.defect > 0.2);
    }

    const std::vector<double> too_high{50.0};
    const auto skipped = quasiconcavity_probe(SeparableDensity::uniform(2), 1000, too_high, 1);
    REQUIRE(skipped.size() == 1);
    CHECK(skipped[0].skipped);
    CHECK_FALSE(skipped[0].note.empty());
    CHECK_THROWS_AS(quasiconcavity_probe(sample_density(SeparableDensity::uniform(3), 10, 1), levels),
                    DimensionError);
}
