#pragma once

// Test fixtures and brute-force oracles. The oracles work on a dense boolean
// matrix and never call into the index's posting-list algebra.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tie/association_index.hpp"
#include "tie/query.hpp"

namespace tie::testing {

inline std::vector<Assignment> fig1_rows() {
    return {{"A", {"a", "b", "c"}}, {"B", {"b", "c", "d"}}, {"C", {"a", "c", "e"}}};
}

inline AssociationIndex fig1() { return AssociationIndex::build(fig1_rows()); }

inline CategoryId cat(const AssociationIndex& index, const std::string& name) { return *index.find_category(name); }
inline ItemId item(const AssociationIndex& index, const std::string& name) { return *index.find_item(name); }

/// Items and categories named i<k>/c<k>; every category used, every item non-empty.
inline std::vector<Assignment> random_rows(std::mt19937_64& rng, std::size_t items, std::size_t categories,
                                           std::size_t min_per_item, std::size_t max_per_item) {
    std::vector<std::set<std::size_t>> sets(items);
    std::uniform_int_distribution<std::size_t> count(min_per_item, max_per_item);
    std::uniform_int_distribution<std::size_t> pick(0, categories - 1);
    for (auto& s : sets) {
        const auto k = std::min(count(rng), categories);
        while (s.size() < k) s.insert(pick(rng));
    }
    // make sure every category is used at least once
    std::uniform_int_distribution<std::size_t> which(0, items - 1);
    for (std::size_t c = 0; c < categories; ++c) {
        bool used = false;
        for (const auto& s : sets) used = used || s.contains(c);
        if (!used) sets[which(rng)].insert(c);
    }
    std::vector<Assignment> rows;
    for (std::size_t j = 0; j < items; ++j) {
        Assignment a{"i" + std::to_string(j), {}};
        for (auto c : sets[j]) a.categories.push_back("c" + std::to_string(c));
        rows.push_back(std::move(a));
    }
    return rows;
}

inline AssociationIndex random_index(std::mt19937_64& rng, std::size_t items, std::size_t categories,
                                     std::size_t min_per_item, std::size_t max_per_item,
                                     const Grouping& grouping = {}) {
    return AssociationIndex::build(random_rows(rng, items, categories, min_per_item, max_per_item), grouping);
}

/// 20 broad categories, each spanning its own block of 50 detail categories;
/// two items per (broad, detail) pair.
inline AssociationIndex broad_detail_fixture() {
    std::vector<Assignment> rows;
    for (int b = 0; b < 20; ++b) {
        for (int d = 0; d < 50; ++d) {
            for (int copy = 0; copy < 2; ++copy) {
                rows.push_back({"item" + std::to_string(b) + "_" + std::to_string(d) + "_" + std::to_string(copy),
                                {"broad" + std::to_string(b), "detail" + std::to_string(b) + "_" + std::to_string(d)}});
            }
        }
    }
    return AssociationIndex::build(rows);
}

/// Dense n x N boolean view rebuilt from the item -> category dump.
struct Dense {
    std::size_t n = 0;
    std::size_t N = 0;
    std::vector<std::vector<bool>> m;  // m[c][j]

    explicit Dense(const AssociationIndex& index) : n(index.category_count()), N(index.item_count()) {
        m.assign(n, std::vector<bool>(N, false));
        const auto rows = index.dump();
        for (std::size_t j = 0; j < N; ++j) {
            for (const auto& name : rows[j].categories) m[*index.find_category(name)][j] = true;
        }
    }
};

/// Naive per-item check of a selection under group semantics.
inline bool naive_matches(const AssociationIndex& index, const Dense& d, std::size_t j,
                          const std::vector<SelectionEntry>& sel) {
    for (GroupId g = 0; g < index.groups().size(); ++g) {
        bool any_pos = false;
        bool any_hit = false;
        bool all_hit = true;
        for (const auto& e : sel) {
            if (e.polarity != Polarity::Positive || index.group_of(e.category) != g) continue;
            any_pos = true;
            any_hit = any_hit || d.m[e.category][j];
            all_hit = all_hit && d.m[e.category][j];
        }
        if (!any_pos) continue;
        const bool ok = index.groups()[g].combinator == Combinator::Any ? any_hit : all_hit;
        if (!ok) return false;
    }
    for (const auto& e : sel) {
        if (e.polarity == Polarity::Negated && d.m[e.category][j]) return false;
    }
    return true;
}

inline std::vector<ItemId> naive_match(const AssociationIndex& index, const Dense& d,
                                       const std::vector<SelectionEntry>& sel) {
    std::vector<ItemId> out;
    for (std::size_t j = 0; j < d.N; ++j) {
        if (naive_matches(index, d, j, sel)) out.push_back(static_cast<ItemId>(j));
    }
    return out;
}

/// Naive availability: for every unselected category, count items matching sel + {c}.
inline std::vector<CategoryCount> naive_available(const AssociationIndex& index, const Dense& d,
                                                  const std::vector<SelectionEntry>& sel) {
    std::vector<CategoryCount> out;
    for (CategoryId c = 0; c < d.n; ++c) {
        bool chosen = false;
        for (const auto& e : sel) chosen = chosen || e.category == c;
        if (chosen) continue;
        auto ext = sel;
        ext.push_back({c, Polarity::Positive});
        const auto k = naive_match(index, d, ext).size();
        if (k > 0) out.push_back({c, static_cast<std::uint32_t>(k)});
    }
    return out;
}

inline std::vector<SelectionEntry> random_selection(std::mt19937_64& rng, std::size_t categories,
                                                    std::size_t max_entries, double negate_probability) {
    std::uniform_int_distribution<std::size_t> size(0, std::min(max_entries, categories));
    std::uniform_int_distribution<CategoryId> pick(0, static_cast<CategoryId>(categories - 1));
    std::bernoulli_distribution negate(negate_probability);
    std::vector<SelectionEntry> sel;
    const auto k = size(rng);
    while (sel.size() < k) {
        const auto c = pick(rng);
        if (std::any_of(sel.begin(), sel.end(), [&](const auto& e) { return e.category == c; })) continue;
        sel.push_back({c, negate(rng) ? Polarity::Negated : Polarity::Positive});
    }
    return sel;
}

/// Naive G_j and q_j straight from subset/equality tests over category sets.
inline std::vector<std::uint32_t> naive_granularity(const Dense& d) {
    std::vector<std::uint32_t> g(d.N, 0);
    for (std::size_t j = 0; j < d.N; ++j) {
        for (std::size_t k = 0; k < d.N; ++k) {
            bool superset = true;
            for (std::size_t c = 0; c < d.n && superset; ++c) superset = !d.m[c][j] || d.m[c][k];
            if (superset) ++g[j];
        }
    }
    return g;
}

inline std::vector<std::uint32_t> naive_q(const Dense& d) {
    std::vector<std::uint32_t> q(d.N, 0);
    for (std::size_t j = 0; j < d.N; ++j) {
        for (std::size_t k = 0; k < d.N; ++k) {
            bool equal = true;
            for (std::size_t c = 0; c < d.n && equal; ++c) equal = d.m[c][j] == d.m[c][k];
            if (equal) ++q[j];
        }
    }
    return q;
}

/// Sum over j != k of C_{j,k}, and over i != i' of F_{i,i'}, by triple loops.
inline std::pair<std::uint64_t, std::uint64_t> naive_offdiag_sums(const Dense& d) {
    std::uint64_t c_sum = 0;
    for (std::size_t j = 0; j < d.N; ++j) {
        for (std::size_t k = 0; k < d.N; ++k) {
            if (j == k) continue;
            for (std::size_t c = 0; c < d.n; ++c) c_sum += d.m[c][j] && d.m[c][k];
        }
    }
    std::uint64_t f_sum = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
        for (std::size_t i2 = 0; i2 < d.n; ++i2) {
            if (i == i2) continue;
            for (std::size_t j = 0; j < d.N; ++j) f_sum += d.m[i][j] && d.m[i2][j];
        }
    }
    return {c_sum, f_sum};
}

}  // namespace tie::testing
