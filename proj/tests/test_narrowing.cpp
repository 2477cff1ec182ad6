#include "doctest.h"

#include <cmath>

#include "support/fixtures.hpp"
#include "tie/narrowing.hpp"
#include "tie/query.hpp"

using namespace tie;
using namespace tie::testing;

namespace {

// Independent discretization: evaluate the profile formula directly and sum.
struct Discrete {
    double mean = 0.0;
    double var = 0.0;
};

Discrete discretize(double c1, double cn, std::uint64_t N, bool quadratic) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::uint64_t j = 1; j <= N; ++j) {
        const double x = static_cast<double>(j);
        const double c = quadratic ? c1 - x * x * (c1 - cn) / (double(N) * double(N))
                                   : c1 * (double(N) - x) / (double(N) - 1) + cn * (x - 1) / (double(N) - 1);
        sum += c;
        sum_sq += c * c;
    }
    const double mean = sum / double(N);
    return {mean, sum_sq / double(N) - mean * mean};
}

}  // namespace

TEST_CASE("linear model") {
    const auto p = linear_model({10'000, 1'000, 10, 4, Profile::Linear});
    CHECK(p.mean_c == doctest::Approx(7.0).epsilon(1e-12));
    CHECK(p.sigma_c_sq == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p.mean_c_sq == doctest::Approx(52.0).epsilon(1e-12));
    CHECK(p.paper_mean_c_sq == doctest::Approx(76.0 / 3.0).epsilon(1e-12));
    const auto d = discretize(10, 4, 10'000, false);
    CHECK(std::abs(d.mean - p.mean_c) / p.mean_c < 0.01);
    CHECK(std::abs(d.var - p.sigma_c_sq) / p.sigma_c_sq < 0.01);
    // the printed sign would disagree with the discrete variance
    CHECK(std::abs((p.paper_mean_c_sq - p.mean_c * p.mean_c) - d.var) > 1.0);
}

TEST_CASE("quadratic model") {
    const auto p = quadratic_model({10'000, 1'000, 10, 4, Profile::Quadratic});
    CHECK(p.mean_c == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(p.sigma_c_sq == doctest::Approx(3.2).epsilon(1e-12));
    const auto d = discretize(10, 4, 10'000, true);
    CHECK(std::abs(d.mean - p.mean_c) / p.mean_c < 0.01);
    CHECK(std::abs(d.var - p.sigma_c_sq) / p.sigma_c_sq < 0.01);
}

TEST_CASE("constant profiles") {
    for (auto profile : {Profile::Linear, Profile::Quadratic}) {
        const ModelParams params{500, 50, 6, 6, profile};
        const auto p = predict(params);
        CHECK(p.mean_c == doctest::Approx(6.0));
        CHECK(p.sigma_c_sq == doctest::Approx(0.0));
        for (std::uint64_t j : {1u, 17u, 500u}) CHECK(profile_value(params, j) == doctest::Approx(6.0));
    }
}

TEST_CASE("profile endpoints") {
    const ModelParams lin{100, 50, 10, 4, Profile::Linear};
    CHECK(profile_value(lin, 1) == doctest::Approx(10.0));
    CHECK(profile_value(lin, 100) == doctest::Approx(4.0));
    const ModelParams quad{100, 50, 10, 4, Profile::Quadratic};
    CHECK(profile_value(quad, 100) == doctest::Approx(4.0));
}

TEST_CASE("model parameter validation") {
    CHECK_THROWS_AS(linear_model({100, 50, 4, 10, Profile::Linear}), ModelError);
    CHECK_THROWS_AS(linear_model({0, 50, 10, 4, Profile::Linear}), ModelError);
    CHECK_THROWS_AS(linear_model({100, 5, 10, 4, Profile::Linear}), ModelError);
    CHECK_THROWS_AS(narrowing_prediction(100, 10, 0.0, 1), ModelError);
}

TEST_CASE("narrowing prediction") {
    CHECK(narrowing_prediction(200'000, 1'000, 7, 1) == doctest::Approx(1400.0).epsilon(1e-12));
    CHECK(narrowing_prediction(200'000, 1'000, 7, 2) == doctest::Approx(9.8).epsilon(1e-12));
    CHECK(narrowing_prediction(200'000, 1'000, 7, 0) == doctest::Approx(200'000.0));
    const auto p = linear_model({200'000, 1'000, 10, 4, Profile::Linear});
    for (unsigned k = 0; k < 6; ++k) CHECK(p.expected_hits(k + 1) <= p.expected_hits(k));
    CHECK(p.narrowing_factor == doctest::Approx(0.007));
}

TEST_CASE("random overlap on fig1") {
    const auto index = fig1();
    const auto est = random_overlap(index);
    CHECK(est.pair(cat(index, "a"), cat(index, "c")) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(est.per_category[cat(index, "c")] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("per-category overlap is the pairwise sum and its mean has a closed form") {
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 20; ++trial) {
        const auto index = random_index(rng, 80, 15, 1, 6);
        const auto est = random_overlap(index);
        double mean = 0.0;
        for (CategoryId i = 0; i < index.category_count(); ++i) {
            double sum = 0.0;
            for (CategoryId k = 0; k < index.category_count(); ++k) {
                if (k != i) sum += est.pair(i, k);
            }
            REQUIRE(est.per_category[i] == doctest::Approx(sum).epsilon(1e-12));
            mean += sum;
        }
        mean /= static_cast<double>(index.category_count());
        CHECK(est.mean_exact == doctest::Approx(mean).epsilon(1e-12));
        CHECK(est.mean_closed_form == doctest::Approx(mean).epsilon(1e-9));
    }
}

TEST_CASE("monte carlo on a saturated matrix") {
    MonteCarloParams params;
    params.items = 100;
    params.categories = 10;
    params.c_min = params.c_max = 10;
    params.trials = 3;
    params.clicks_per_trial = 20;
    params.seed = 1;
    const auto r = monte_carlo(params);
    CHECK(r.empirical_one_click == 100.0);
    CHECK(r.empirical_two_click == 100.0);
    CHECK(r.predicted_one_click == doctest::Approx(100.0));
    CHECK(r.empirical_mean_c == 10.0);
}

TEST_CASE("monte carlo rejects infeasible parameters") {
    MonteCarloParams params;
    params.items = 100;
    params.categories = 5;
    params.c_min = 4;
    params.c_max = 10;
    CHECK_THROWS_AS(monte_carlo(params), ModelError);
}

TEST_CASE("monte carlo is deterministic and close to prediction") {
    MonteCarloParams params;
    params.items = 20'000;
    params.categories = 200;
    params.c_min = 4;
    params.c_max = 10;
    params.trials = 2;
    params.clicks_per_trial = 100;
    params.seed = 7;
    const auto a = monte_carlo(params);
    const auto b = monte_carlo(params);
    CHECK(a.empirical_one_click == b.empirical_one_click);
    CHECK(a.empirical_two_click == b.empirical_two_click);
    CHECK(a.samples == b.samples);
    CHECK(a.predicted_one_click == doctest::Approx(700.0));
    CHECK(a.one_click_relative_error() < 0.1);
    params.seed = 8;
    CHECK(monte_carlo(params).empirical_one_click != a.empirical_one_click);
}

TEST_CASE("profile count models realize the profile mean") {
    MonteCarloParams params;
    params.items = 2'000;
    params.categories = 100;
    params.c_min = 4;
    params.c_max = 10;
    params.count_model = CountModel::QuadraticProfile;
    const auto index = random_index(params, 3);
    CHECK(stats(index).mean_categories_per_item == doctest::Approx(8.0).epsilon(0.02));
    params.count_model = CountModel::LinearProfile;
    CHECK(stats(random_index(params, 3)).mean_categories_per_item == doctest::Approx(7.0).epsilon(0.02));
}

TEST_CASE("day-of-week categories narrow items but not topics") {
    static const char* days[] = {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"};
    std::vector<Assignment> rows;
    for (int j = 0; j < 70; ++j) {
        rows.push_back({"event" + std::to_string(j), {days[j % 7], "topic" + std::to_string((j / 7) % 10)}});
    }
    const auto index = AssociationIndex::build(rows);
    const auto r = evaluate(index, Selection{{cat(index, "Mon"), Polarity::Positive}});
    CHECK(r.item_count() == 10);
    for (int t = 0; t < 10; ++t) CHECK(r.is_available(cat(index, "topic" + std::to_string(t))));
    for (int d = 1; d < 7; ++d) CHECK(!r.is_available(cat(index, days[d])));
}
