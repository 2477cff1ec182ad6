#include "doctest.h"

#include <numeric>
#include <random>

#include "support/fixtures.hpp"
#include "tie/association_index.hpp"

using namespace tie;
using namespace tie::testing;

TEST_CASE("fig1 build assigns ids by first appearance") {
    const auto index = fig1();
    CHECK(index.category_count() == 5);
    CHECK(index.item_count() == 3);
    for (const auto& [name, id] : std::vector<std::pair<std::string, CategoryId>>{
             {"a", 0}, {"b", 1}, {"c", 2}, {"d", 3}, {"e", 4}}) {
        CHECK(cat(index, name) == id);
        CHECK(index.category_name(id) == name);
    }
    const auto c = index.postings(cat(index, "c"));
    CHECK(std::vector<ItemId>(c.begin(), c.end()) ==
          std::vector<ItemId>{item(index, "A"), item(index, "B"), item(index, "C")});
    CHECK(index.groups().size() == 1);
    CHECK(index.groups()[0].name == kDefaultGroup);
    CHECK(index.groups()[0].combinator == Combinator::All);
}

TEST_CASE("minimal index") {
    const std::vector<Assignment> rows{{"X", {"x"}}};
    const auto index = AssociationIndex::build(rows);
    CHECK(index.category_count() == 1);
    CHECK(index.item_count() == 1);
    CHECK(stats(index).total_links == 1);
    const auto d = degrees(index);
    CHECK(d.per_category == std::vector<std::uint32_t>{1});
    CHECK(d.per_item == std::vector<std::uint32_t>{1});
}

TEST_CASE("build rejects bad input") {
    SUBCASE("duplicate item") {
        const std::vector<Assignment> rows{{"A", {"a"}}, {"A", {"b"}}};
        CHECK_THROWS_AS(AssociationIndex::build(rows), IndexError);
    }
    SUBCASE("empty category set") {
        const std::vector<Assignment> rows{{"A", {"a"}}, {"B", {}}};
        CHECK_THROWS_AS(AssociationIndex::build(rows), IndexError);
    }
    SUBCASE("grouping names an unused category") {
        const Grouping g{{"zzz", {"Color", Combinator::Any}}};
        CHECK_THROWS_AS(AssociationIndex::build(fig1_rows(), g), IndexError);
    }
    SUBCASE("conflicting group combinators") {
        const Grouping g{{"a", {"G", Combinator::Any}}, {"b", {"G", Combinator::All}}};
        CHECK_THROWS_AS(AssociationIndex::build(fig1_rows(), g), IndexError);
    }
}

TEST_CASE("duplicate categories within one item collapse") {
    const std::vector<Assignment> rows{{"A", {"a", "a", "b"}}};
    const auto index = AssociationIndex::build(rows);
    CHECK(index.categories_of(0).size() == 2);
}

TEST_CASE("fig1 degrees") {
    const auto index = fig1();
    const auto d = degrees(index);
    CHECK(d.per_category == std::vector<std::uint32_t>{2, 2, 3, 1, 1});
    CHECK(d.per_item == std::vector<std::uint32_t>{3, 3, 3});
}

TEST_CASE("fig1 stats") {
    const auto s = stats(fig1());
    CHECK(s.total_links == 9);
    CHECK(s.mean_categories_per_item == 3.0);
    CHECK(s.mean_items_per_category == doctest::Approx(9.0 / 5.0).epsilon(1e-15));
    // C_av * N == F_av * n == S exactly in integers
    CHECK(s.total_links * 1 == 3 * s.item_count);
    CHECK(s.mean_categories_per_item / s.mean_items_per_category == doctest::Approx(5.0 / 3.0).epsilon(1e-15));
    CHECK(s.sigma_categories_per_item == 0.0);
    // F = {2,2,3,1,1}: <F^2> = 19/5, F_av = 9/5 -> var = 14/25
    CHECK(s.sigma_items_per_category == doctest::Approx(std::sqrt(14.0 / 25.0)));
    CHECK(s.density == doctest::Approx(9.0 / 15.0));
}

TEST_CASE("density of 700 categories at 7 per item is 0.01") {
    std::vector<Assignment> rows;
    for (int j = 0; j < 100; ++j) {
        Assignment a{"i" + std::to_string(j), {}};
        for (int k = 0; k < 7; ++k) a.categories.push_back("c" + std::to_string(7 * j + k));
        rows.push_back(a);
    }
    const auto s = stats(AssociationIndex::build(rows));
    CHECK(s.category_count == 700);
    CHECK(s.mean_categories_per_item == 7.0);
    CHECK(s.density == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("memory estimate is four bytes per link") {
    CHECK(memory_estimate_bytes(7.0, 200000.0) == 5'600'000.0);
    const auto s = stats(fig1());
    CHECK(s.memory_estimate_bytes == 36.0);
}

TEST_CASE("degree sums agree with a raw recount") {
    std::mt19937_64 rng(11);
    const auto rows = random_rows(rng, 200, 30, 1, 8);
    const auto index = AssociationIndex::build(rows);
    std::uint64_t raw = 0;
    for (const auto& r : rows) raw += r.categories.size();
    const auto d = degrees(index);
    CHECK(std::accumulate(d.per_category.begin(), d.per_category.end(), std::uint64_t{0}) == raw);
    CHECK(std::accumulate(d.per_item.begin(), d.per_item.end(), std::uint64_t{0}) == raw);
    const auto s = stats(index);
    // C_av / F_av == n / N: cross-multiplied in integers
    CHECK(s.total_links == raw);
    CHECK(s.mean_categories_per_item * s.item_count == doctest::Approx(s.mean_items_per_category * s.category_count));
}

TEST_CASE("intersect and union on fig1 postings") {
    const auto index = fig1();
    const auto A = item(index, "A"), B = item(index, "B"), C = item(index, "C");
    CHECK(intersect(index.postings(cat(index, "c")), index.postings(cat(index, "a"))) == Postings{A, C});
    CHECK(union_b(index.postings(cat(index, "d")), index.postings(cat(index, "e"))) == Postings{B, C});
    CHECK(union_b(index.postings(cat(index, "a")), index.postings(cat(index, "c"))) == Postings{A, B, C});
    const Postings v{1, 4, 9};
    CHECK(intersect(v, v) == v);
    CHECK(intersect(v, Postings{}).empty());
    CHECK(union_b(v, Postings{}) == v);
}

TEST_CASE("set algebra matches boolean arrays on random inputs") {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution bit(0.3);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t N = 1 + trial % 40;
        std::vector<bool> x(N), y(N);
        Postings a, b;
        for (std::size_t j = 0; j < N; ++j) {
            x[j] = bit(rng);
            y[j] = bit(rng);
            if (x[j]) a.push_back(static_cast<ItemId>(j));
            if (y[j]) b.push_back(static_cast<ItemId>(j));
        }
        Postings and_, or_, minus;
        for (std::size_t j = 0; j < N; ++j) {
            if (x[j] && y[j]) and_.push_back(static_cast<ItemId>(j));
            if (x[j] || y[j]) or_.push_back(static_cast<ItemId>(j));
            if (x[j] && !y[j]) minus.push_back(static_cast<ItemId>(j));
        }
        REQUIRE(intersect(a, b) == and_);
        REQUIRE(intersect_count(a, b) == and_.size());
        REQUIRE(union_b(a, b) == or_);
        REQUIRE(difference(a, b) == minus);
    }
}

TEST_CASE("duality and rebuild round trip") {
    std::mt19937_64 rng(1234);
    const auto index = random_index(rng, 1000, 30, 4, 10);
    for (CategoryId c = 0; c < index.category_count(); ++c) {
        for (ItemId j : index.postings(c)) {
            auto cats = index.categories_of(j);
            REQUIRE(std::binary_search(cats.begin(), cats.end(), c));
        }
    }
    for (ItemId j = 0; j < index.item_count(); ++j) {
        auto cats = index.categories_of(j);
        REQUIRE(std::is_sorted(cats.begin(), cats.end()));
        REQUIRE(std::adjacent_find(cats.begin(), cats.end()) == cats.end());
        for (CategoryId c : cats) {
            auto p = index.postings(c);
            REQUIRE(std::binary_search(p.begin(), p.end(), j));
        }
    }
    const auto rebuilt = AssociationIndex::build(index.dump(), index.grouping());
    CHECK(rebuilt == index);
    CHECK(rebuilt.fingerprint() == index.fingerprint());
    CHECK(rebuilt.snapshot_json() == index.snapshot_json());
}

TEST_CASE("snapshot bytes are canonical") {
    const auto index = fig1();
    CHECK(index.snapshot_json() ==
          R"({"format":"tie-snapshot-1","categories":[)"
          R"({"id":0,"name":"a","group":"default","combinator":"ALL"},)"
          R"({"id":1,"name":"b","group":"default","combinator":"ALL"},)"
          R"({"id":2,"name":"c","group":"default","combinator":"ALL"},)"
          R"({"id":3,"name":"d","group":"default","combinator":"ALL"},)"
          R"({"id":4,"name":"e","group":"default","combinator":"ALL"}],"items":[)"
          R"({"id":0,"name":"A","cats":[0,1,2]},{"id":1,"name":"B","cats":[1,2,3]},{"id":2,"name":"C","cats":[0,2,4]}]})");
    CHECK(AssociationIndex::from_snapshot_json(index.snapshot_json()) == index);
}

TEST_CASE("snapshot load rejects damaged input") {
    const auto text = fig1().snapshot_json();
    CHECK_THROWS_AS(AssociationIndex::from_snapshot_json(text.substr(0, text.size() / 2)), IndexError);
    std::string other = text;
    other.replace(other.find("tie-snapshot-1"), 14, "tie-snapshot-9");
    CHECK_THROWS_AS(AssociationIndex::from_snapshot_json(other), IndexError);
    std::string unsorted = text;
    unsorted.replace(unsorted.find("[0,1,2]"), 7, "[1,0,2]");
    CHECK_THROWS_AS(AssociationIndex::from_snapshot_json(unsorted), IndexError);
}

TEST_CASE("names survive json escaping") {
    const std::vector<Assignment> rows{{"Zo\xC3\xAB \"q\"", {"caf\xC3\xA9", "back\\slash"}}};
    const auto index = AssociationIndex::build(rows);
    const auto back = AssociationIndex::from_snapshot_json(index.snapshot_json());
    CHECK(back == index);
    CHECK(back.item_name(0) == rows[0].item);
}

TEST_CASE("shard fig1") {
    const auto index = fig1();
    SUBCASE("one shard is the original") {
        const auto shards = shard(index, 1);
        REQUIRE(shards.size() == 1);
        CHECK(shards[0] == index);
    }
    SUBCASE("three one-item shards") {
        const auto shards = shard(index, 3);
        REQUIRE(shards.size() == 3);
        const auto& b = shards[1];
        CHECK(b.item_count() == 1);
        CHECK(b.item_offset() == 1);
        CHECK(b.item_name(0) == "B");
        CHECK(b.category_count() == 5);
        for (auto name : {"b", "c", "d"}) CHECK(b.postings(cat(b, name)).size() == 1);
        for (auto name : {"a", "e"}) CHECK(b.postings(cat(b, name)).empty());
        for (const auto& s : shards) CHECK(s.parent_fingerprint() == index.fingerprint());
    }
    CHECK_THROWS_AS(shard(index, 4), IndexError);
    CHECK_THROWS_AS(shard(index, 0), IndexError);
}

TEST_CASE("shard then merge is the identity") {
    std::mt19937_64 rng(77);
    const auto index = random_index(rng, 1000, 40, 1, 6);
    for (std::size_t k : {1u, 2u, 5u, 7u, 1000u}) {
        const auto shards = shard(index, k);
        CHECK(merge_shards(shards) == index);
        std::vector<Assignment> concatenated;
        for (const auto& s : shards) {
            auto part = s.dump();
            concatenated.insert(concatenated.end(), part.begin(), part.end());
        }
        CHECK(concatenated == index.dump());
    }
}

TEST_CASE("merge rejects gaps") {
    const auto shards = shard(fig1(), 3);
    const std::vector<AssociationIndex> gap{shards[0], shards[2]};
    CHECK_THROWS_AS(merge_shards(gap), IndexError);
}

TEST_CASE("from_item_vectors matches the string build") {
    const auto index = fig1();
    std::vector<std::string> cats, items;
    std::vector<Postings> vectors;
    for (CategoryId c = 0; c < index.category_count(); ++c) cats.push_back(index.category_name(c));
    for (ItemId j = 0; j < index.item_count(); ++j) {
        items.push_back(index.item_name(j));
        const auto v = index.categories_of(j);
        vectors.emplace_back(v.rbegin(), v.rend());
    }
    vectors[0].push_back(vectors[0].front());  // duplicates collapse
    const auto rebuilt = AssociationIndex::from_item_vectors(cats, items, vectors);
    CHECK(rebuilt.fingerprint() == index.fingerprint());

    CHECK_THROWS_AS(AssociationIndex::from_item_vectors(cats, items, {{0}, {1}}), IndexError);
    CHECK_THROWS_AS(AssociationIndex::from_item_vectors(cats, items, {{0}, {}, {1}}), IndexError);
    CHECK_THROWS_AS(AssociationIndex::from_item_vectors(cats, items, {{0}, {9}, {1}}), IndexError);
}
