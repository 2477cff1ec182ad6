#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

enum class Polarity { Positive, Negated };

struct SelectionEntry {
    CategoryId category = 0;
    Polarity polarity = Polarity::Positive;

    bool operator==(const SelectionEntry&) const = default;
};

using Selection = std::vector<SelectionEntry>;

class QueryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct CategoryCount {
    CategoryId category = 0;
    std::uint32_t count = 0;

    bool operator==(const CategoryCount&) const = default;
};

struct QueryResult {
    Postings matching_items;
    /// Not-yet-selected categories whose addition leaves >= 1 item, with that item count.
    std::vector<CategoryCount> available;
    /// Not-yet-selected categories whose addition would leave nothing.
    std::vector<CategoryId> unavailable;
    /// Selected categories with their current contribution (matching items carrying them).
    std::vector<CategoryCount> selected;

    std::size_t item_count() const { return matching_items.size(); }
    /// available and selected merged, zero counts dropped, sorted by id.
    std::vector<CategoryCount> counts() const;
    /// Count for `c` from counts(); 0 if absent.
    std::uint32_t count_of(CategoryId c) const;
    bool is_available(CategoryId c) const;

    bool operator==(const QueryResult&) const = default;
};

/// Items matching `selection`: positives combine inside a group by the
/// group's combinator, groups conjoin, negations subtract.
Postings match(const AssociationIndex& index, std::span<const SelectionEntry> selection);

QueryResult evaluate(const AssociationIndex& index, std::span<const SelectionEntry> selection);

/// Extends `selection` by `delta`; result equals evaluate() on the extended selection.
QueryResult refine(const AssociationIndex& index, const QueryResult& prior, std::span<const SelectionEntry> selection,
                   SelectionEntry delta);

/// Category x category co-item counts F_{i,i'} (diagonal F_i), stored sparsely per row.
class FirstClickCache {
public:
    static FirstClickCache build(const AssociationIndex& index);

    /// F_{i,i'}; 0 when the pair never co-occurs.
    std::uint32_t pair_count(CategoryId a, CategoryId b) const;
    std::span<const CategoryCount> row(CategoryId c) const { return rows_.at(c); }
    std::size_t category_count() const { return rows_.size(); }
    const std::string& fingerprint() const { return fingerprint_; }

private:
    std::vector<std::vector<CategoryCount>> rows_;
    std::string fingerprint_;
};

class StaleCacheError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Available categories (with counts, the clicked one included) after the single positive click `c`.
std::vector<CategoryCount> first_click(const FirstClickCache& cache, const AssociationIndex& index, CategoryId c);

}  // namespace tie
