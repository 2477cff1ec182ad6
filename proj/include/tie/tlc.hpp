#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

/// Co-occurrence relevance: each item adds (C_j - 1) to every one of its categories.
std::vector<std::uint64_t> relevance_scores(const AssociationIndex& index);

/// Category ids by descending score, ties by ascending id.
std::vector<CategoryId> rank_by_score(std::span<const std::uint64_t> scores);

struct TlcConfig {
    std::size_t seed_size = 100;
    std::size_t pool_multiplier = 5;  // candidate pool = pool_multiplier * seed_size
    std::size_t residual_threshold = 1000;
};

/// A TLC selection (one or two TLCs) that makes `category` available while
/// leaving at most residual_threshold DCs available.
struct CoverageWitness {
    CategoryId category = 0;
    std::vector<CategoryId> selection;
    std::size_t residual = 0;
};

struct TlcResult {
    std::vector<CategoryId> tlc;  // in selection order
    std::vector<CategoryId> dc;  // ascending
    std::vector<CoverageWitness> covered;  // ascending by category
    std::vector<CategoryId> uncovered;  // DCs with no witness at termination
    std::vector<CategoryId> added_by_greedy;
    bool objective_met = false;
};

TlcResult select_tlc(const AssociationIndex& index, std::span<const std::uint64_t> scores, const TlcConfig& config);

/// Replays every witness through the query engine; returns DCs whose witness fails.
std::vector<CategoryId> verify_witnesses(const AssociationIndex& index, const TlcResult& result,
                                         std::size_t residual_threshold);

/// The TLC rows of the matrix over all items.
struct DominantIndex {
    std::vector<CategoryId> categories;  // ascending
    std::vector<Postings> postings;  // aligned with categories
    std::vector<ItemId> items_without_tlc;
    std::size_t item_count = 0;

    std::uint64_t total_links() const;
    double memory_estimate_bytes() const;
};

DominantIndex dominant_submatrix(const AssociationIndex& index, std::span<const CategoryId> tlc);

}  // namespace tie
