#include "tie/association_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <utility>

#include "json.hpp"

namespace tie {

namespace {

constexpr std::string_view kSnapshotFormat = "tie-snapshot-1";

class Fnv1a {
public:
    void update(std::string_view bytes) {
        for (unsigned char ch : bytes) {
            hash_ ^= ch;
            hash_ *= 0x100000001b3ULL;
        }
    }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash_));
        return buf;
    }

private:
    std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

template <typename Sink>
void write_snapshot(const AssociationIndex& index, Sink&& sink) {
    sink(R"({"format":")");
    sink(kSnapshotFormat);
    sink(R"(","categories":[)");
    for (CategoryId c = 0; c < index.category_count(); ++c) {
        if (c) sink(",");
        const auto& group = index.groups()[index.group_of(c)];
        sink(R"({"id":)");
        sink(std::to_string(c));
        sink(R"(,"name":)");
        sink(json_string(index.category_name(c)));
        sink(R"(,"group":)");
        sink(json_string(group.name));
        sink(R"(,"combinator":")");
        sink(to_string(group.combinator));
        sink(R"("})");
    }
    sink(R"(],"items":[)");
    std::string scratch;
    for (ItemId j = 0; j < index.item_count(); ++j) {
        scratch.clear();
        if (j) scratch += ',';
        scratch += R"({"id":)";
        scratch += std::to_string(index.item_offset() + j);
        scratch += R"(,"name":)";
        scratch += json_string(index.item_name(j));
        scratch += R"(,"cats":[)";
        bool first = true;
        for (CategoryId c : index.categories_of(j)) {
            if (!first) scratch += ',';
            first = false;
            scratch += std::to_string(c);
        }
        scratch += "]}";
        sink(scratch);
    }
    sink("]}");
}

}  // namespace

std::string_view to_string(Combinator c) { return c == Combinator::Any ? "ANY" : "ALL"; }

Combinator parse_combinator(std::string_view text) {
    if (text == "ANY" || text == "any") return Combinator::Any;
    if (text == "ALL" || text == "all") return Combinator::All;
    throw IndexError("unknown combinator '" + std::string(text) + "'");
}

// Collects raw relation data and turns it into a finished AssociationIndex.
class IndexAssembler {
public:
    static AssociationIndex assemble(std::vector<std::string> category_names,
                                     std::vector<std::string> item_names,
                                     std::vector<Postings> item_vectors,
                                     std::vector<std::pair<std::string, Combinator>> category_groups,
                                     std::uint32_t item_offset,
                                     std::string parent_fingerprint = {}) {
        AssociationIndex index;
        const std::size_t n = category_names.size();
        index.category_names_ = std::move(category_names);
        index.item_names_ = std::move(item_names);
        index.item_vectors_ = std::move(item_vectors);
        index.item_offset_ = item_offset;

        index.category_postings_.assign(n, {});
        for (ItemId j = 0; j < index.item_vectors_.size(); ++j) {
            for (CategoryId c : index.item_vectors_[j]) index.category_postings_[c].push_back(j);
        }

        index.group_of_.resize(n);
        std::unordered_map<std::string, GroupId> group_lookup;
        for (CategoryId c = 0; c < n; ++c) {
            auto& [group_name, combinator] = category_groups[c];
            auto [it, inserted] = group_lookup.try_emplace(group_name, static_cast<GroupId>(index.groups_.size()));
            if (inserted) {
                index.groups_.push_back(GroupInfo{group_name, combinator, {}});
            } else if (index.groups_[it->second].combinator != combinator) {
                throw IndexError("group '" + group_name + "' declared with conflicting combinators");
            }
            index.group_of_[c] = it->second;
            index.groups_[it->second].members.push_back(c);
        }
        index.finalize(std::move(parent_fingerprint));
        return index;
    }
};

AssociationIndex AssociationIndex::build(std::span<const Assignment> assignments, const Grouping& grouping) {
    std::vector<std::string> category_names;
    std::unordered_map<std::string, CategoryId> category_ids;
    std::vector<std::string> item_names;
    std::unordered_map<std::string, ItemId> item_ids;
    std::vector<Postings> item_vectors;
    item_names.reserve(assignments.size());
    item_vectors.reserve(assignments.size());

    for (const auto& a : assignments) {
        if (!item_ids.try_emplace(a.item, static_cast<ItemId>(item_names.size())).second) {
            throw IndexError("duplicate item name '" + a.item + "'");
        }
        if (a.categories.empty()) throw IndexError("item '" + a.item + "' has no categories");
        Postings cats;
        cats.reserve(a.categories.size());
        for (const auto& name : a.categories) {
            auto [it, inserted] = category_ids.try_emplace(name, static_cast<CategoryId>(category_names.size()));
            if (inserted) category_names.push_back(name);
            cats.push_back(it->second);
        }
        std::sort(cats.begin(), cats.end());
        cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
        item_names.push_back(a.item);
        item_vectors.push_back(std::move(cats));
    }

    for (const auto& [name, spec] : grouping) {
        if (!category_ids.contains(name)) {
            throw IndexError("grouping names category '" + name + "' which no item uses");
        }
    }
    std::vector<std::pair<std::string, Combinator>> category_groups;
    category_groups.reserve(category_names.size());
    for (const auto& name : category_names) {
        if (auto it = grouping.find(name); it != grouping.end()) {
            category_groups.emplace_back(it->second.group, it->second.combinator);
        } else {
            category_groups.emplace_back(std::string(kDefaultGroup), Combinator::All);
        }
    }
    return IndexAssembler::assemble(std::move(category_names), std::move(item_names), std::move(item_vectors),
                                    std::move(category_groups), 0);
}

AssociationIndex AssociationIndex::from_item_vectors(std::vector<std::string> category_names,
                                                     std::vector<std::string> item_names,
                                                     std::vector<Postings> item_vectors) {
    if (item_names.size() != item_vectors.size()) throw IndexError("item names and vectors differ in length");
    for (std::size_t j = 0; j < item_vectors.size(); ++j) {
        auto& v = item_vectors[j];
        if (v.empty()) throw IndexError("item '" + item_names[j] + "' has no categories");
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        if (v.back() >= category_names.size()) throw IndexError("item '" + item_names[j] + "' has an unknown category id");
    }
    std::vector<std::pair<std::string, Combinator>> groups(category_names.size(),
                                                            {std::string(kDefaultGroup), Combinator::All});
    return IndexAssembler::assemble(std::move(category_names), std::move(item_names), std::move(item_vectors),
                                    std::move(groups), 0);
}

void AssociationIndex::finalize(std::string parent_fingerprint) {
    category_lookup_.clear();
    item_lookup_.clear();
    for (CategoryId c = 0; c < category_names_.size(); ++c) {
        if (!category_lookup_.try_emplace(category_names_[c], c).second) {
            throw IndexError("duplicate category name '" + category_names_[c] + "'");
        }
    }
    for (ItemId j = 0; j < item_names_.size(); ++j) {
        if (!item_lookup_.try_emplace(item_names_[j], j).second) {
            throw IndexError("duplicate item name '" + item_names_[j] + "'");
        }
    }
    Fnv1a hasher;
    write_snapshot(*this, [&](std::string_view s) { hasher.update(s); });
    fingerprint_ = hasher.hex();
    parent_fingerprint_ = parent_fingerprint.empty() ? fingerprint_ : std::move(parent_fingerprint);
}

std::optional<CategoryId> AssociationIndex::find_category(std::string_view name) const {
    if (auto it = category_lookup_.find(std::string(name)); it != category_lookup_.end()) return it->second;
    return std::nullopt;
}

std::optional<ItemId> AssociationIndex::find_item(std::string_view name) const {
    if (auto it = item_lookup_.find(std::string(name)); it != item_lookup_.end()) return it->second;
    return std::nullopt;
}

std::vector<Assignment> AssociationIndex::dump() const {
    std::vector<Assignment> out;
    out.reserve(item_count());
    for (ItemId j = 0; j < item_count(); ++j) {
        Assignment a{item_names_[j], {}};
        for (CategoryId c : item_vectors_[j]) a.categories.push_back(category_names_[c]);
        out.push_back(std::move(a));
    }
    return out;
}

Grouping AssociationIndex::grouping() const {
    Grouping g;
    for (CategoryId c = 0; c < category_count(); ++c) {
        const auto& info = groups_[group_of_[c]];
        if (info.name == kDefaultGroup && info.combinator == Combinator::All) continue;
        g[category_names_[c]] = GroupSpec{info.name, info.combinator};
    }
    return g;
}

std::string AssociationIndex::snapshot_json() const {
    std::string out;
    write_snapshot(*this, [&](std::string_view s) { out.append(s); });
    return out;
}

AssociationIndex AssociationIndex::from_snapshot_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IndexError(std::string("snapshot parse error: ") + e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("format") || doc["format"] != kSnapshotFormat) {
            throw IndexError("snapshot format mismatch: expected " + std::string(kSnapshotFormat));
        }
        const auto& cats = doc.at("categories");
        const auto& items = doc.at("items");
        std::vector<std::string> category_names;
        std::vector<std::pair<std::string, Combinator>> category_groups;
        for (std::size_t c = 0; c < cats.size(); ++c) {
            const auto& entry = cats[c];
            if (entry.at("id").get<std::size_t>() != c) throw IndexError("snapshot category ids not contiguous");
            category_names.push_back(entry.at("name").get<std::string>());
            category_groups.emplace_back(entry.at("group").get<std::string>(),
                                         parse_combinator(entry.at("combinator").get<std::string>()));
        }
        std::vector<std::string> item_names;
        std::vector<Postings> item_vectors;
        std::uint32_t offset = 0;
        for (std::size_t j = 0; j < items.size(); ++j) {
            const auto& entry = items[j];
            const auto id = entry.at("id").get<std::uint64_t>();
            if (j == 0) offset = static_cast<std::uint32_t>(id);
            if (id != offset + j) throw IndexError("snapshot item ids not contiguous");
            Postings v = entry.at("cats").get<Postings>();
            if (v.empty()) throw IndexError("snapshot item " + std::to_string(id) + " has no categories");
            for (std::size_t k = 0; k < v.size(); ++k) {
                if (v[k] >= category_names.size() || (k && v[k] <= v[k - 1])) {
                    throw IndexError("snapshot item " + std::to_string(id) + " has invalid category list");
                }
            }
            item_names.push_back(entry.at("name").get<std::string>());
            item_vectors.push_back(std::move(v));
        }
        return IndexAssembler::assemble(std::move(category_names), std::move(item_names), std::move(item_vectors),
                                        std::move(category_groups), offset);
    } catch (const nlohmann::json::exception& e) {
        throw IndexError(std::string("malformed snapshot: ") + e.what());
    }
}

bool AssociationIndex::same_relation(const AssociationIndex& other) const {
    return item_offset_ == other.item_offset_ && item_vectors_ == other.item_vectors_ &&
           category_postings_ == other.category_postings_;
}

bool AssociationIndex::operator==(const AssociationIndex& other) const {
    return same_relation(other) && category_names_ == other.category_names_ && item_names_ == other.item_names_ &&
           group_of_ == other.group_of_ && groups_ == other.groups_;
}

Degrees degrees(const AssociationIndex& index) {
    Degrees d;
    d.per_category.reserve(index.category_count());
    d.per_item.reserve(index.item_count());
    for (CategoryId c = 0; c < index.category_count(); ++c) {
        d.per_category.push_back(static_cast<std::uint32_t>(index.postings(c).size()));
    }
    for (ItemId j = 0; j < index.item_count(); ++j) {
        d.per_item.push_back(static_cast<std::uint32_t>(index.categories_of(j).size()));
    }
    return d;
}

IndexStats stats(const AssociationIndex& index) {
    const auto d = degrees(index);
    IndexStats s;
    s.category_count = index.category_count();
    s.item_count = index.item_count();
    for (auto f : d.per_category) {
        s.total_links += f;
        s.sum_sq_items_per_category += std::uint64_t{f} * f;
    }
    for (auto c : d.per_item) s.sum_sq_categories_per_item += std::uint64_t{c} * c;
    if (s.item_count == 0 || s.category_count == 0) return s;

    const double n = static_cast<double>(s.category_count);
    const double N = static_cast<double>(s.item_count);
    const double S = static_cast<double>(s.total_links);
    s.mean_categories_per_item = S / N;
    s.mean_items_per_category = S / n;
    // population variances: <x^2> - <x>^2
    const double var_c = static_cast<double>(s.sum_sq_categories_per_item) / N -
                         s.mean_categories_per_item * s.mean_categories_per_item;
    const double var_f = static_cast<double>(s.sum_sq_items_per_category) / n -
                         s.mean_items_per_category * s.mean_items_per_category;
    s.sigma_categories_per_item = std::sqrt(std::max(0.0, var_c));
    s.sigma_items_per_category = std::sqrt(std::max(0.0, var_f));
    s.density = S / (n * N);
    s.memory_estimate_bytes = memory_estimate_bytes(s.mean_categories_per_item, N);
    return s;
}

Postings intersect(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    Postings out;
    out.reserve(std::min(a.size(), b.size()));
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

Postings union_b(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    Postings out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

Postings difference(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    Postings out;
    out.reserve(a.size());
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::size_t intersect_count(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    std::size_t count = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++count;
            ++ia;
            ++ib;
        }
    }
    return count;
}

namespace {

std::vector<std::pair<std::string, Combinator>> category_groups_of(const AssociationIndex& index) {
    std::vector<std::pair<std::string, Combinator>> out;
    out.reserve(index.category_count());
    for (CategoryId c = 0; c < index.category_count(); ++c) {
        const auto& g = index.groups()[index.group_of(c)];
        out.emplace_back(g.name, g.combinator);
    }
    return out;
}

std::vector<std::string> category_names_of(const AssociationIndex& index) {
    std::vector<std::string> out;
    out.reserve(index.category_count());
    for (CategoryId c = 0; c < index.category_count(); ++c) out.push_back(index.category_name(c));
    return out;
}

}  // namespace

std::vector<AssociationIndex> shard(const AssociationIndex& index, std::size_t shard_count) {
    const std::size_t N = index.item_count();
    if (shard_count == 0) throw IndexError("shard count must be at least 1");
    if (shard_count > N) {
        throw IndexError("shard count " + std::to_string(shard_count) + " exceeds item count " + std::to_string(N));
    }
    const auto names = category_names_of(index);
    const auto groups = category_groups_of(index);
    std::vector<AssociationIndex> shards;
    shards.reserve(shard_count);
    std::size_t begin = 0;
    for (std::size_t k = 0; k < shard_count; ++k) {
        const std::size_t size = N / shard_count + (k < N % shard_count ? 1 : 0);
        std::vector<std::string> item_names;
        std::vector<Postings> item_vectors;
        for (std::size_t j = begin; j < begin + size; ++j) {
            item_names.push_back(index.item_name(static_cast<ItemId>(j)));
            auto cats = index.categories_of(static_cast<ItemId>(j));
            item_vectors.emplace_back(cats.begin(), cats.end());
        }
        shards.push_back(IndexAssembler::assemble(names, std::move(item_names), std::move(item_vectors), groups,
                                                  index.item_offset() + static_cast<std::uint32_t>(begin),
                                                  index.fingerprint()));
        begin += size;
    }
    return shards;
}

AssociationIndex merge_shards(std::span<const AssociationIndex> shards) {
    if (shards.empty()) throw IndexError("no shards to merge");
    const auto names = category_names_of(shards.front());
    const auto groups = category_groups_of(shards.front());
    std::vector<std::string> item_names;
    std::vector<Postings> item_vectors;
    std::uint32_t next = 0;
    for (const auto& s : shards) {
        if (category_names_of(s) != names || category_groups_of(s) != groups) {
            throw IndexError("shards disagree on the category table");
        }
        if (s.item_offset() != next) throw IndexError("shard item ranges are not contiguous");
        for (ItemId j = 0; j < s.item_count(); ++j) {
            item_names.push_back(s.item_name(j));
            auto cats = s.categories_of(j);
            item_vectors.emplace_back(cats.begin(), cats.end());
        }
        next += static_cast<std::uint32_t>(s.item_count());
    }
    auto merged = IndexAssembler::assemble(names, std::move(item_names), std::move(item_vectors), groups, 0);
    for (CategoryId c = 0; c < merged.category_count(); ++c) {
        if (merged.postings(c).empty()) {
            throw IndexError("category '" + merged.category_name(c) + "' unused after merge");
        }
    }
    return merged;
}

}  // namespace tie
