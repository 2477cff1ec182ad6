#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tie {

using CategoryId = std::uint32_t;
using ItemId = std::uint32_t;
using GroupId = std::uint32_t;

/// Sorted, duplicate-free sequence of IDs. Category postings hold ItemIds,
/// item vectors hold CategoryIds.
using Postings = std::vector<std::uint32_t>;

enum class Combinator { Any, All };

std::string_view to_string(Combinator c);
Combinator parse_combinator(std::string_view text);

/// Raised for every precondition violation while building or loading an index.
class IndexError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Assignment {
    std::string item;
    std::vector<std::string> categories;

    bool operator==(const Assignment&) const = default;
};

struct GroupSpec {
    std::string group;
    Combinator combinator = Combinator::All;
};

/// Category name -> group. Categories not listed fall into the implicit group.
using Grouping = std::map<std::string, GroupSpec>;

inline constexpr std::string_view kDefaultGroup = "default";

struct GroupInfo {
    std::string name;
    Combinator combinator = Combinator::All;
    std::vector<CategoryId> members;

    bool operator==(const GroupInfo&) const = default;
};

struct Degrees {
    std::vector<std::uint32_t> per_category;  // F_i
    std::vector<std::uint32_t> per_item;      // C_j
};

struct IndexStats {
    std::uint64_t total_links = 0;  // S
    std::size_t category_count = 0;  // n
    std::size_t item_count = 0;  // N
    double mean_categories_per_item = 0.0;  // C_av
    double mean_items_per_category = 0.0;  // F_av
    double sigma_categories_per_item = 0.0;  // sigma_C
    double sigma_items_per_category = 0.0;  // sigma_F
    double density = 0.0;  // a = S/(nN)
    std::uint64_t sum_sq_categories_per_item = 0;  // sum_j C_j^2
    std::uint64_t sum_sq_items_per_category = 0;  // sum_i F_i^2
    double memory_estimate_bytes = 0.0;  // 4 * C_av * N
};

/// The association matrix held as posting vectors in both orientations.
///
/// Immutable once built. Item IDs are local (0..N-1); a shard additionally
/// carries `item_offset()` so that its global IDs are `offset + local`.
class AssociationIndex {
public:
    AssociationIndex() = default;

    static AssociationIndex build(std::span<const Assignment> assignments,
                                  const Grouping& grouping = {});
    /// Build from category-ID vectors per item (default group). Vectors are
    /// sorted and deduplicated; every ID must be < category_names.size().
    static AssociationIndex from_item_vectors(std::vector<std::string> category_names,
                                              std::vector<std::string> item_names,
                                              std::vector<Postings> item_vectors);

    std::size_t category_count() const { return category_postings_.size(); }
    std::size_t item_count() const { return item_vectors_.size(); }
    std::uint32_t item_offset() const { return item_offset_; }

    std::span<const ItemId> postings(CategoryId c) const { return category_postings_.at(c); }
    std::span<const CategoryId> categories_of(ItemId j) const { return item_vectors_.at(j); }

    const std::string& category_name(CategoryId c) const { return category_names_.at(c); }
    const std::string& item_name(ItemId j) const { return item_names_.at(j); }
    std::optional<CategoryId> find_category(std::string_view name) const;
    std::optional<ItemId> find_item(std::string_view name) const;

    GroupId group_of(CategoryId c) const { return group_of_.at(c); }
    const std::vector<GroupInfo>& groups() const { return groups_; }
    Combinator combinator_of(CategoryId c) const { return groups_[group_of_.at(c)].combinator; }

    /// Content hash of the canonical snapshot bytes (16 hex digits).
    const std::string& fingerprint() const { return fingerprint_; }
    /// For a shard: fingerprint of the index it was cut from. Otherwise equal to fingerprint().
    const std::string& parent_fingerprint() const { return parent_fingerprint_; }

    /// (item, categories) listing in ID order; feeding it back to build() with
    /// grouping() reproduces the index.
    std::vector<Assignment> dump() const;
    Grouping grouping() const;

    /// Canonical snapshot JSON ("tie-snapshot-1"), byte-stable.
    std::string snapshot_json() const;
    static AssociationIndex from_snapshot_json(std::string_view text);

    bool same_relation(const AssociationIndex& other) const;
    bool operator==(const AssociationIndex& other) const;

private:
    friend class IndexAssembler;

    void finalize(std::string parent_fingerprint = {});

    std::vector<Postings> category_postings_;
    std::vector<Postings> item_vectors_;
    std::vector<std::string> category_names_;
    std::vector<std::string> item_names_;
    std::unordered_map<std::string, CategoryId> category_lookup_;
    std::unordered_map<std::string, ItemId> item_lookup_;
    std::vector<GroupId> group_of_;
    std::vector<GroupInfo> groups_;
    std::uint32_t item_offset_ = 0;
    std::string fingerprint_;
    std::string parent_fingerprint_;
};

Degrees degrees(const AssociationIndex& index);
IndexStats stats(const AssociationIndex& index);

/// 4 bytes per stored link.
inline double memory_estimate_bytes(double mean_categories_per_item, double item_count) {
    return 4.0 * mean_categories_per_item * item_count;
}

/// Linear merge of two strictly increasing sequences.
Postings intersect(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);
Postings union_b(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);
/// a \ b
Postings difference(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);
std::size_t intersect_count(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// Partition items into `shard_count` contiguous ID ranges. Every shard keeps
/// the full category table with global CategoryIds.
std::vector<AssociationIndex> shard(const AssociationIndex& index, std::size_t shard_count);

/// Inverse of shard(): concatenates shards with contiguous item ranges and an
/// identical category table.
AssociationIndex merge_shards(std::span<const AssociationIndex> shards);

}  // namespace tie
