#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

enum class Profile { Linear, Quadratic };

class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// N items, n categories, per-item category count running from c_max (item 1)
/// down to c_min (item N).
struct ModelParams {
    std::uint64_t items = 0;  // N
    std::uint64_t categories = 0;  // n
    double c_max = 0.0;  // C_1
    double c_min = 0.0;  // C_N
    Profile profile = Profile::Linear;
};

void validate(const ModelParams& params);

/// C_j for 1-based item position j under the chosen profile.
double profile_value(const ModelParams& params, std::uint64_t j);

struct ModelPrediction {
    double mean_c = 0.0;  // C_av, large-N closed form
    double mean_c_sq = 0.0;  // <C^2>
    double paper_mean_c_sq = 0.0;  // <C^2> with the printed minus sign (linear only)
    double sigma_c_sq = 0.0;
    double narrowing_factor = 0.0;  // C_av / n
    std::uint64_t items = 0;
    std::uint64_t categories = 0;

    /// N (C_av / n)^k
    double expected_hits(unsigned clicks) const;
};

ModelPrediction linear_model(const ModelParams& params);
ModelPrediction quadratic_model(const ModelParams& params);
ModelPrediction predict(const ModelParams& params);

/// N (C_av / n)^k
double narrowing_prediction(double items, double categories, double mean_c, unsigned clicks);

/// Random-assignment overlap estimates from a category degree profile.
struct OverlapEstimate {
    std::vector<double> per_category;  // f_i = (S F_i - F_i^2) / N^2
    double mean_exact = 0.0;  // mean of f_i
    double mean_closed_form = 0.0;  // (C_av^2/n)(1 - 1/n) - sigma_F^2/N^2
    double paper_mean = 0.0;  // (C_av^2/n^2)(1 - 1/n) - sigma_F^2/N^2, as printed
    double paper_mean_leading = 0.0;  // C_av^2 / n^2

    std::vector<std::uint32_t> degrees;
    std::uint64_t items = 0;

    /// f_{ii'} = F_i F_{i'} / N^2. An expected overlap, not a probability; may exceed 1.
    double pair(CategoryId a, CategoryId b) const;
};

OverlapEstimate random_overlap(std::span<const std::uint32_t> category_degrees, std::uint64_t items);
OverlapEstimate random_overlap(const AssociationIndex& index);

enum class CountModel { UniformInteger, LinearProfile, QuadraticProfile };

struct MonteCarloParams {
    std::uint64_t items = 0;
    std::uint64_t categories = 0;
    std::uint32_t c_min = 1;
    std::uint32_t c_max = 1;
    CountModel count_model = CountModel::UniformInteger;
    std::uint32_t trials = 1;
    std::uint32_t clicks_per_trial = 200;
    std::uint64_t seed = 0;
};

struct MonteCarloReport {
    double predicted_mean_c = 0.0;
    double predicted_one_click = 0.0;
    double predicted_two_click = 0.0;
    double predicted_narrowing_factor = 0.0;

    double empirical_mean_c = 0.0;
    double empirical_one_click = 0.0;
    double empirical_two_click = 0.0;
    /// Mean fraction of categories still available after the first click.
    double empirical_category_narrowing = 0.0;
    std::uint64_t samples = 0;

    double one_click_relative_error() const;
    double two_click_relative_error() const;
};

void validate(const MonteCarloParams& params);

/// Random uniform categorization with the requested per-item counts.
AssociationIndex random_index(const MonteCarloParams& params, std::uint64_t seed);

MonteCarloReport monte_carlo(const MonteCarloParams& params);

}  // namespace tie
