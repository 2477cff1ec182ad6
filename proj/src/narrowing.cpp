#include "tie/narrowing.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <thread>

#include "tie/query.hpp"

namespace tie {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double predicted_mean_c(const MonteCarloParams& p) {
    switch (p.count_model) {
        case CountModel::LinearProfile:
            return linear_model({p.items, p.categories, double(p.c_max), double(p.c_min), Profile::Linear}).mean_c;
        case CountModel::QuadraticProfile:
            return quadratic_model({p.items, p.categories, double(p.c_max), double(p.c_min), Profile::Quadratic})
                .mean_c;
        case CountModel::UniformInteger:
            break;
    }
    return (double(p.c_min) + double(p.c_max)) / 2.0;
}

struct TrialResult {
    double sum_one = 0.0;
    double sum_two = 0.0;
    double sum_category_fraction = 0.0;
    double mean_c = 0.0;
    std::uint64_t samples = 0;
};

TrialResult run_trial(const MonteCarloParams& params, std::uint64_t seed) {
    const auto index = random_index(params, seed);
    std::mt19937_64 rng(splitmix64(seed ^ 0x5eedc11c5ULL));
    std::uniform_int_distribution<CategoryId> pick_first(0, static_cast<CategoryId>(index.category_count() - 1));
    TrialResult out;
    out.mean_c = stats(index).mean_categories_per_item;
    for (std::uint32_t k = 0; k < params.clicks_per_trial; ++k) {
        const Selection first{{pick_first(rng), Polarity::Positive}};
        const auto one = evaluate(index, first);
        out.sum_one += static_cast<double>(one.item_count());
        out.sum_category_fraction +=
            static_cast<double>(one.available.size() + 1) / static_cast<double>(index.category_count());
        if (!one.available.empty()) {
            std::uniform_int_distribution<std::size_t> pick_second(0, one.available.size() - 1);
            const SelectionEntry second{one.available[pick_second(rng)].category, Polarity::Positive};
            out.sum_two += static_cast<double>(refine(index, one, first, second).item_count());
        } else {
            out.sum_two += static_cast<double>(one.item_count());
        }
        ++out.samples;
    }
    return out;
}

}  // namespace

void validate(const ModelParams& p) {
    if (p.items < 2) throw ModelError("model needs N >= 2");
    if (!(p.c_min >= 1.0)) throw ModelError("model needs C_N >= 1");
    if (p.c_min > p.c_max) throw ModelError("model needs C_N <= C_1");
    if (p.c_max > static_cast<double>(p.categories)) throw ModelError("model needs C_1 <= n");
}

double profile_value(const ModelParams& p, std::uint64_t j) {
    const double N = static_cast<double>(p.items);
    const double x = static_cast<double>(j);
    if (p.profile == Profile::Linear) return p.c_max * (N - x) / (N - 1.0) + p.c_min * (x - 1.0) / (N - 1.0);
    return p.c_max - x * x * (p.c_max - p.c_min) / (N * N);
}

double ModelPrediction::expected_hits(unsigned clicks) const {
    return narrowing_prediction(static_cast<double>(items), static_cast<double>(categories), mean_c, clicks);
}

ModelPrediction linear_model(const ModelParams& params) {
    if (params.profile != Profile::Linear) throw ModelError("linear_model called with a non-linear profile");
    validate(params);
    const double a = params.c_max;
    const double b = params.c_min;
    ModelPrediction m;
    m.items = params.items;
    m.categories = params.categories;
    m.mean_c = (a + b) / 2.0;
    // integrating the linear profile gives +C_1 C_N; the printed form has a minus
    m.mean_c_sq = (a * a + b * b + a * b) / 3.0;
    m.paper_mean_c_sq = (a * a + b * b - a * b) / 3.0;
    m.sigma_c_sq = (a - b) * (a - b) / 12.0;
    m.narrowing_factor = m.mean_c / static_cast<double>(params.categories);
    return m;
}

ModelPrediction quadratic_model(const ModelParams& params) {
    if (params.profile != Profile::Quadratic) throw ModelError("quadratic_model called with a non-quadratic profile");
    validate(params);
    const double a = params.c_max;
    const double b = params.c_min;
    ModelPrediction m;
    m.items = params.items;
    m.categories = params.categories;
    m.mean_c = 2.0 * a / 3.0 + b / 3.0;
    m.sigma_c_sq = 4.0 * (a - b) * (a - b) / 45.0;
    m.mean_c_sq = m.sigma_c_sq + m.mean_c * m.mean_c;
    m.paper_mean_c_sq = m.mean_c_sq;
    m.narrowing_factor = m.mean_c / static_cast<double>(params.categories);
    return m;
}

ModelPrediction predict(const ModelParams& params) {
    return params.profile == Profile::Linear ? linear_model(params) : quadratic_model(params);
}

double narrowing_prediction(double items, double categories, double mean_c, unsigned clicks) {
    if (!(mean_c > 0.0) || mean_c > categories) throw ModelError("narrowing needs 0 < C_av <= n");
    return items * std::pow(mean_c / categories, static_cast<double>(clicks));
}

double OverlapEstimate::pair(CategoryId a, CategoryId b) const {
    const double N = static_cast<double>(items);
    return static_cast<double>(degrees.at(a)) * static_cast<double>(degrees.at(b)) / (N * N);
}

OverlapEstimate random_overlap(std::span<const std::uint32_t> category_degrees, std::uint64_t items) {
    if (items == 0) throw ModelError("overlap needs N >= 1");
    OverlapEstimate est;
    est.items = items;
    est.degrees.assign(category_degrees.begin(), category_degrees.end());
    const double N = static_cast<double>(items);
    const double n = static_cast<double>(category_degrees.size());
    if (category_degrees.empty()) return est;
    double S = 0.0;
    double sum_sq = 0.0;
    for (auto f : category_degrees) {
        S += f;
        sum_sq += static_cast<double>(f) * f;
    }
    double total = 0.0;
    est.per_category.reserve(category_degrees.size());
    for (auto f : category_degrees) {
        const double F = f;
        est.per_category.push_back((S * F - F * F) / (N * N));
        total += est.per_category.back();
    }
    est.mean_exact = total / n;
    const double c_av = S / N;
    const double f_av = S / n;
    const double var_f = std::max(0.0, sum_sq / n - f_av * f_av);
    est.mean_closed_form = (c_av * c_av / n) * (1.0 - 1.0 / n) - var_f / (N * N);
    est.paper_mean = (c_av * c_av / (n * n)) * (1.0 - 1.0 / n) - var_f / (N * N);
    est.paper_mean_leading = c_av * c_av / (n * n);
    return est;
}

OverlapEstimate random_overlap(const AssociationIndex& index) {
    return random_overlap(degrees(index).per_category, index.item_count());
}

double MonteCarloReport::one_click_relative_error() const {
    return std::abs(empirical_one_click - predicted_one_click) / predicted_one_click;
}

double MonteCarloReport::two_click_relative_error() const {
    return std::abs(empirical_two_click - predicted_two_click) / predicted_two_click;
}

void validate(const MonteCarloParams& p) {
    if (p.items < 1 || p.categories < 1) throw ModelError("simulation needs N >= 1 and n >= 1");
    if (p.c_min < 1 || p.c_min > p.c_max) throw ModelError("simulation needs 1 <= C_N <= C_1");
    if (p.c_max > p.categories) {
        throw ModelError("infeasible parameters: C_1 = " + std::to_string(p.c_max) + " exceeds n = " +
                         std::to_string(p.categories));
    }
    if (p.trials < 1 || p.clicks_per_trial < 1) throw ModelError("simulation needs trials >= 1 and clicks >= 1");
    if (p.count_model != CountModel::UniformInteger && p.items < 2) throw ModelError("profile models need N >= 2");
}

AssociationIndex random_index(const MonteCarloParams& params, std::uint64_t seed) {
    validate(params);
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_int_distribution<std::uint32_t> uniform_count(params.c_min, params.c_max);
    const ModelParams profile{params.items, params.categories, double(params.c_max), double(params.c_min),
                              params.count_model == CountModel::QuadraticProfile ? Profile::Quadratic
                                                                                 : Profile::Linear};
    std::vector<std::string> category_names(params.categories);
    for (std::uint64_t c = 0; c < params.categories; ++c) category_names[c] = "c" + std::to_string(c);

    // Partial Fisher-Yates over a persistent permutation: each prefix is a
    // uniform k-subset regardless of the array's previous state.
    std::vector<std::uint32_t> perm(params.categories);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<std::string> item_names(params.items);
    std::vector<Postings> vectors(params.items);
    for (std::uint64_t j = 0; j < params.items; ++j) {
        std::uint32_t k = 0;
        if (params.count_model == CountModel::UniformInteger) {
            k = uniform_count(rng);
        } else {
            k = static_cast<std::uint32_t>(std::lround(profile_value(profile, j + 1)));
        }
        item_names[j] = "i" + std::to_string(j);
        vectors[j].reserve(k);
        for (std::uint32_t t = 0; t < k; ++t) {
            std::uniform_int_distribution<std::size_t> pick(t, perm.size() - 1);
            std::swap(perm[t], perm[pick(rng)]);
            vectors[j].push_back(perm[t]);
        }
    }
    return AssociationIndex::from_item_vectors(std::move(category_names), std::move(item_names), std::move(vectors));
}

MonteCarloReport monte_carlo(const MonteCarloParams& params) {
    validate(params);
    std::vector<TrialResult> results(params.trials);
    const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), params.trials));
    std::atomic<std::uint32_t> next{0};
    auto worker = [&] {
        for (std::uint32_t t = next++; t < params.trials; t = next++) {
            results[t] = run_trial(params, splitmix64(params.seed + 0x1000193ULL * (t + 1)));
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    MonteCarloReport report;
    report.predicted_mean_c = predicted_mean_c(params);
    const double N = static_cast<double>(params.items);
    const double n = static_cast<double>(params.categories);
    report.predicted_narrowing_factor = report.predicted_mean_c / n;
    report.predicted_one_click = narrowing_prediction(N, n, report.predicted_mean_c, 1);
    report.predicted_two_click = narrowing_prediction(N, n, report.predicted_mean_c, 2);
    double one = 0.0;
    double two = 0.0;
    double frac = 0.0;
    double mean_c = 0.0;
    for (const auto& r : results) {
        one += r.sum_one;
        two += r.sum_two;
        frac += r.sum_category_fraction;
        mean_c += r.mean_c;
        report.samples += r.samples;
    }
    const double samples = static_cast<double>(report.samples);
    report.empirical_one_click = one / samples;
    report.empirical_two_click = two / samples;
    report.empirical_category_narrowing = frac / samples;
    report.empirical_mean_c = mean_c / static_cast<double>(results.size());
    return report;
}

}  // namespace tie
