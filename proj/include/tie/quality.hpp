#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

/// Row/column orderings of the matrix: category rows by non-increasing item
/// count, item columns by non-increasing category count. Within an equal-sum
/// run, identical vectors sit together, followed by those at Hamming distance 2.
struct OrderedMatrix {
    std::vector<CategoryId> row_perm;
    std::vector<ItemId> col_perm;
};

OrderedMatrix order_matrix(const AssociationIndex& index);

/// Partition of IDs into classes of identical vectors.
struct EqualVectorClasses {
    std::vector<std::vector<std::uint32_t>> classes;  // each sorted, ordered by smallest member
    std::vector<std::uint32_t> class_of;
    std::vector<std::uint32_t> class_size;  // per ID: q_j for items, r_i for categories
    std::uint32_t max_size = 0;
    std::uint32_t witness_class = 0;  // first class reaching max_size
    double mean_size = 0.0;
    double sigma_size = 0.0;  // population, over IDs
};

/// Items grouped by identical category sets (Inference sets, q_j, Q).
EqualVectorClasses inference_sets(const AssociationIndex& index);
/// Categories grouped by identical postings (Synonym sets, r_i).
EqualVectorClasses synonym_sets(const AssociationIndex& index);

/// G_j: number of items whose category set contains item j's set, j included.
std::vector<std::uint32_t> granularity(const AssociationIndex& index);

inline constexpr std::string_view kNeedsBetterCategorization = "Needs Better Categorization";

struct BadlyCategorized {
    std::vector<ItemId> items;
    std::vector<std::uint32_t> q;
    std::vector<std::uint32_t> g;
};

BadlyCategorized flag_badly_categorized(const AssociationIndex& index, std::uint32_t q_threshold = 20,
                                        std::uint32_t g_threshold = 20);

/// Copy of `index` with the descriptor category attached to every flagged item.
AssociationIndex with_descriptor_category(const AssociationIndex& index, const BadlyCategorized& flagged,
                                          std::string_view descriptor = kNeedsBetterCategorization);

struct QualityReport {
    std::vector<std::uint32_t> q;
    std::uint32_t Q = 0;
    std::vector<ItemId> Q_witness;
    double q_mean = 0.0;
    double q_sigma = 0.0;
    std::vector<std::uint32_t> r;
    std::vector<std::uint32_t> G;
    std::vector<ItemId> badly_categorized;
};

QualityReport quality_report(const AssociationIndex& index, std::uint32_t q_threshold = 20,
                             std::uint32_t g_threshold = 20);

/// Mean off-diagonal entries of the squared matrices, from degree sums.
///
/// `*_num / *_den` are exact integer fractions. The "paper" fields keep the
/// published approximations that drop the n F_av (F_av - 1) term (and its
/// transpose); the "corrected" fields restore it.
struct CooccurrenceReport {
    std::uint64_t offdiag_C_num = 0;  // sum_{j != k} C_{j,k} = sum_i F_i^2 - S
    std::uint64_t offdiag_C_den = 0;  // N (N - 1)
    std::uint64_t offdiag_F_num = 0;  // sum_{i != i'} F_{i,i'} = sum_j C_j^2 - S
    std::uint64_t offdiag_F_den = 0;  // n (n - 1)
    double mean_offdiag_C = 0.0;
    double mean_offdiag_F = 0.0;
    double paper_mean_offdiag_C = 0.0;  // n sigma_F^2 / (N (N - 1))
    double paper_mean_offdiag_F = 0.0;  // N sigma_C^2 / (n (n - 1))
    double corrected_mean_offdiag_C = 0.0;  // (n sigma_F^2 + n F_av (F_av - 1)) / (N (N - 1))
    double corrected_mean_offdiag_F = 0.0;  // (N sigma_C^2 + N C_av (C_av - 1)) / (n (n - 1))
    double sigma_F = 0.0;
    double sigma_C = 0.0;
    std::optional<double> ratio_exact;  // mean_offdiag_C / mean_offdiag_F
    std::optional<double> ratio_paper;  // n^3 sigma_F^2 / (N^3 sigma_C^2)
};

CooccurrenceReport cooccurrence_stats(const AssociationIndex& index);

inline constexpr std::size_t kDirectCooccurrenceGuard = 4096;

/// Same means computed by materializing both squared matrices. Refuses when
/// N or n exceeds `guard`.
CooccurrenceReport cooccurrence_direct(const AssociationIndex& index, std::size_t guard = kDirectCooccurrenceGuard);

class SizeGuardError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tie
