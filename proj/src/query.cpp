#include "tie/query.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>

namespace tie {

namespace {

void validate(const AssociationIndex& index, std::span<const SelectionEntry> selection) {
    std::vector<CategoryId> seen;
    seen.reserve(selection.size());
    for (const auto& e : selection) {
        if (e.category >= index.category_count()) {
            throw QueryError("unknown category id " + std::to_string(e.category));
        }
        seen.push_back(e.category);
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        throw QueryError("category selected twice");
    }
}

Postings all_items(const AssociationIndex& index) {
    Postings all(index.item_count());
    std::iota(all.begin(), all.end(), ItemId{0});
    return all;
}

// Per-group positive entries, keyed by group id (ordered for determinism).
std::map<GroupId, std::vector<CategoryId>> positives_by_group(const AssociationIndex& index,
                                                              std::span<const SelectionEntry> selection) {
    std::map<GroupId, std::vector<CategoryId>> out;
    for (const auto& e : selection) {
        if (e.polarity == Polarity::Positive) out[index.group_of(e.category)].push_back(e.category);
    }
    for (auto& [g, cats] : out) std::sort(cats.begin(), cats.end());
    return out;
}

Postings group_set(const AssociationIndex& index, GroupId g, const std::vector<CategoryId>& cats) {
    Postings acc(index.postings(cats.front()).begin(), index.postings(cats.front()).end());
    const bool any = index.groups()[g].combinator == Combinator::Any;
    for (std::size_t k = 1; k < cats.size(); ++k) {
        acc = any ? union_b(acc, index.postings(cats[k])) : intersect(acc, index.postings(cats[k]));
    }
    return acc;
}

// Items satisfying every group except `skip` together with all negations.
Postings conjoin(const AssociationIndex& index, const std::map<GroupId, Postings>& sets,
                 std::span<const SelectionEntry> selection, std::optional<GroupId> skip) {
    std::vector<const Postings*> parts;
    for (const auto& [g, set] : sets) {
        if (!skip || *skip != g) parts.push_back(&set);
    }
    std::sort(parts.begin(), parts.end(), [](auto* a, auto* b) { return a->size() < b->size(); });
    Postings acc = parts.empty() ? all_items(index) : *parts.front();
    for (std::size_t k = 1; k < parts.size() && !acc.empty(); ++k) acc = intersect(acc, *parts[k]);
    for (const auto& e : selection) {
        if (e.polarity == Polarity::Negated && !acc.empty()) acc = difference(acc, index.postings(e.category));
    }
    return acc;
}

std::map<GroupId, Postings> group_sets(const AssociationIndex& index, std::span<const SelectionEntry> selection) {
    std::map<GroupId, Postings> sets;
    for (const auto& [g, cats] : positives_by_group(index, selection)) sets.emplace(g, group_set(index, g, cats));
    return sets;
}

QueryResult with_availability(const AssociationIndex& index, std::span<const SelectionEntry> selection,
                              Postings matching) {
    const std::size_t n = index.category_count();
    std::vector<std::uint32_t> counts(n, 0);
    for (ItemId j : matching) {
        for (CategoryId c : index.categories_of(j)) ++counts[c];
    }

    // A category in an ANY group that already has positives widens that group:
    // its hypothetical result is matching plus the items it adds from the rest.
    const auto positives = positives_by_group(index, selection);
    bool need_rest = false;
    for (const auto& [g, cats] : positives) {
        if (index.groups()[g].combinator == Combinator::Any) need_rest = true;
    }
    if (need_rest) {
        const auto sets = group_sets(index, selection);
        for (const auto& [g, cats] : positives) {
            if (index.groups()[g].combinator != Combinator::Any) continue;
            const Postings rest = difference(conjoin(index, sets, selection, g), matching);
            for (CategoryId c : index.groups()[g].members) {
                counts[c] = static_cast<std::uint32_t>(matching.size());
            }
            for (ItemId j : rest) {
                for (CategoryId c : index.categories_of(j)) {
                    if (index.group_of(c) == g) ++counts[c];
                }
            }
        }
    }

    std::vector<bool> is_selected(n, false);
    QueryResult result;
    for (const auto& e : selection) is_selected[e.category] = true;
    std::vector<SelectionEntry> sorted_sel(selection.begin(), selection.end());
    std::sort(sorted_sel.begin(), sorted_sel.end(),
              [](const auto& a, const auto& b) { return a.category < b.category; });
    for (const auto& e : sorted_sel) {
        const auto contribution =
            e.polarity == Polarity::Positive
                ? static_cast<std::uint32_t>(intersect_count(matching, index.postings(e.category)))
                : 0u;
        result.selected.push_back({e.category, contribution});
    }
    for (CategoryId c = 0; c < n; ++c) {
        if (is_selected[c]) continue;
        if (counts[c] > 0) {
            result.available.push_back({c, counts[c]});
        } else {
            result.unavailable.push_back(c);
        }
    }
    result.matching_items = std::move(matching);
    return result;
}

}  // namespace

std::vector<CategoryCount> QueryResult::counts() const {
    std::vector<CategoryCount> out;
    out.reserve(available.size() + selected.size());
    for (const auto& cc : available) out.push_back(cc);
    for (const auto& cc : selected) {
        if (cc.count > 0) out.push_back(cc);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.category < b.category; });
    return out;
}

std::uint32_t QueryResult::count_of(CategoryId c) const {
    for (const auto& cc : available) {
        if (cc.category == c) return cc.count;
    }
    for (const auto& cc : selected) {
        if (cc.category == c) return cc.count;
    }
    return 0;
}

bool QueryResult::is_available(CategoryId c) const {
    auto it = std::lower_bound(available.begin(), available.end(), c,
                               [](const CategoryCount& cc, CategoryId id) { return cc.category < id; });
    return it != available.end() && it->category == c;
}

Postings match(const AssociationIndex& index, std::span<const SelectionEntry> selection) {
    validate(index, selection);
    return conjoin(index, group_sets(index, selection), selection, std::nullopt);
}

QueryResult evaluate(const AssociationIndex& index, std::span<const SelectionEntry> selection) {
    return with_availability(index, selection, match(index, selection));
}

QueryResult refine(const AssociationIndex& index, const QueryResult& prior, std::span<const SelectionEntry> selection,
                   SelectionEntry delta) {
    for (const auto& e : selection) {
        if (e.category == delta.category) {
            throw QueryError("category " + std::to_string(delta.category) + " already selected");
        }
    }
    std::vector<SelectionEntry> extended(selection.begin(), selection.end());
    extended.push_back(delta);
    validate(index, extended);

    const GroupId g = index.group_of(delta.category);
    const bool group_has_positive = std::any_of(selection.begin(), selection.end(), [&](const auto& e) {
        return e.polarity == Polarity::Positive && index.group_of(e.category) == g;
    });
    Postings matching;
    if (delta.polarity == Polarity::Negated) {
        matching = difference(prior.matching_items, index.postings(delta.category));
    } else if (!group_has_positive || index.groups()[g].combinator == Combinator::All) {
        matching = intersect(prior.matching_items, index.postings(delta.category));
    } else {
        matching = match(index, extended);
    }
    return with_availability(index, extended, std::move(matching));
}

FirstClickCache FirstClickCache::build(const AssociationIndex& index) {
    FirstClickCache cache;
    const std::size_t n = index.category_count();
    cache.rows_.resize(n);
    cache.fingerprint_ = index.fingerprint();
    std::vector<std::uint32_t> counts(n, 0);
    std::vector<CategoryId> touched;
    for (CategoryId i = 0; i < n; ++i) {
        touched.clear();
        for (ItemId j : index.postings(i)) {
            for (CategoryId c : index.categories_of(j)) {
                if (counts[c]++ == 0) touched.push_back(c);
            }
        }
        std::sort(touched.begin(), touched.end());
        auto& row = cache.rows_[i];
        row.reserve(touched.size());
        for (CategoryId c : touched) {
            row.push_back({c, counts[c]});
            counts[c] = 0;
        }
    }
    return cache;
}

std::uint32_t FirstClickCache::pair_count(CategoryId a, CategoryId b) const {
    const auto& r = rows_.at(a);
    auto it = std::lower_bound(r.begin(), r.end(), b,
                               [](const CategoryCount& cc, CategoryId id) { return cc.category < id; });
    return it != r.end() && it->category == b ? it->count : 0;
}

std::vector<CategoryCount> first_click(const FirstClickCache& cache, const AssociationIndex& index, CategoryId c) {
    if (cache.fingerprint() != index.fingerprint()) {
        throw StaleCacheError("first-click cache built for index " + cache.fingerprint() + ", queried with " +
                              index.fingerprint());
    }
    if (c >= cache.category_count()) throw QueryError("unknown category id " + std::to_string(c));
    auto row = cache.row(c);
    const GroupId g = index.group_of(c);
    if (index.groups()[g].combinator == Combinator::All) return {row.begin(), row.end()};

    // Same-group members of an ANY group widen: |P_c u P_k| = F_c + F_k - F_ck.
    const auto fc = static_cast<std::uint32_t>(index.postings(c).size());
    std::vector<CategoryCount> out;
    out.reserve(row.size() + index.groups()[g].members.size());
    auto it = row.begin();
    auto emit_until = [&](CategoryId limit) {
        for (; it != row.end() && it->category < limit; ++it) out.push_back(*it);
    };
    for (CategoryId k : index.groups()[g].members) {
        emit_until(k);
        const bool in_row = it != row.end() && it->category == k;
        const std::uint32_t both = in_row ? it->count : 0;
        if (in_row) ++it;
        const auto fk = static_cast<std::uint32_t>(index.postings(k).size());
        const std::uint32_t count = k == c ? fc : fc + fk - both;
        if (count > 0) out.push_back({k, count});
    }
    emit_until(static_cast<CategoryId>(index.category_count()));
    return out;
}

}  // namespace tie
