#include "tie/tlc.hpp"

#include <algorithm>
#include <numeric>

#include "tie/query.hpp"

namespace tie {

namespace {

struct Coverage {
    std::vector<CoverageWitness> covered;
    std::vector<CategoryId> uncovered;
};

class CoverageChecker {
public:
    CoverageChecker(const AssociationIndex& index, std::size_t residual_threshold)
        : index_(index), cache_(FirstClickCache::build(index)), threshold_(residual_threshold) {}

    Coverage run(std::span<const CategoryId> tlc) const {
        const std::size_t n = index_.category_count();
        std::vector<bool> is_tlc(n, false);
        for (auto t : tlc) is_tlc[t] = true;

        std::vector<std::optional<CoverageWitness>> witness(n);
        auto offer = [&](const std::vector<CategoryId>& dcs, std::vector<CategoryId> selection) {
            if (dcs.empty() || dcs.size() > threshold_) return;
            for (auto d : dcs) {
                if (!witness[d]) witness[d] = CoverageWitness{d, selection, dcs.size()};
            }
        };

        std::vector<CategoryId> broad;  // TLCs whose single click leaves too many DCs
        for (auto t : tlc) {
            std::vector<CategoryId> dcs;
            for (const auto& cc : cache_.row(t)) {
                if (!is_tlc[cc.category]) dcs.push_back(cc.category);
            }
            if (dcs.size() > threshold_) broad.push_back(t);
            offer(dcs, {t});
        }

        std::vector<std::uint32_t> seen(n, 0);
        std::uint32_t stamp = 0;
        for (std::size_t a = 0; a < broad.size(); ++a) {
            for (std::size_t b = a + 1; b < broad.size(); ++b) {
                if (cache_.pair_count(broad[a], broad[b]) == 0) continue;
                ++stamp;
                std::vector<CategoryId> dcs;
                for (ItemId j : intersect(index_.postings(broad[a]), index_.postings(broad[b]))) {
                    for (CategoryId c : index_.categories_of(j)) {
                        if (!is_tlc[c] && seen[c] != stamp) {
                            seen[c] = stamp;
                            dcs.push_back(c);
                        }
                    }
                }
                std::sort(dcs.begin(), dcs.end());
                std::vector<CategoryId> selection{broad[a], broad[b]};
                std::sort(selection.begin(), selection.end());
                offer(dcs, std::move(selection));
            }
        }

        Coverage out;
        for (CategoryId c = 0; c < n; ++c) {
            if (is_tlc[c]) continue;
            if (witness[c]) {
                out.covered.push_back(std::move(*witness[c]));
            } else {
                out.uncovered.push_back(c);
            }
        }
        return out;
    }

private:
    const AssociationIndex& index_;
    FirstClickCache cache_;
    std::size_t threshold_;
};

}  // namespace

std::vector<std::uint64_t> relevance_scores(const AssociationIndex& index) {
    std::vector<std::uint64_t> scores(index.category_count(), 0);
    for (ItemId j = 0; j < index.item_count(); ++j) {
        const auto cats = index.categories_of(j);
        for (CategoryId c : cats) scores[c] += cats.size() - 1;
    }
    return scores;
}

std::vector<CategoryId> rank_by_score(std::span<const std::uint64_t> scores) {
    std::vector<CategoryId> order(scores.size());
    std::iota(order.begin(), order.end(), CategoryId{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    return order;
}

TlcResult select_tlc(const AssociationIndex& index, std::span<const std::uint64_t> scores, const TlcConfig& config) {
    if (scores.size() != index.category_count()) throw std::invalid_argument("score table does not match index");
    if (config.residual_threshold < 1) throw std::invalid_argument("residual threshold must be >= 1");
    if (config.seed_size < 1) throw std::invalid_argument("seed size must be >= 1");

    const auto ranked = rank_by_score(scores);
    const std::size_t n = ranked.size();
    TlcResult result;
    if (n <= config.seed_size + 1) {
        result.tlc = ranked;
        result.objective_met = true;
        return result;
    }

    const CoverageChecker checker(index, config.residual_threshold);
    result.tlc.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(config.seed_size));
    Coverage coverage = checker.run(result.tlc);

    const std::size_t pool_end = std::min(n, std::max(config.seed_size, config.pool_multiplier * config.seed_size));
    for (std::size_t pos = config.seed_size; pos < pool_end && !coverage.uncovered.empty(); ++pos) {
        const CategoryId candidate = ranked[pos];
        std::vector<CategoryId> trial = result.tlc;
        trial.push_back(candidate);
        Coverage next = checker.run(trial);
        const std::size_t still_failing =
            coverage.uncovered.size() -
            (std::binary_search(coverage.uncovered.begin(), coverage.uncovered.end(), candidate) ? 1 : 0);
        if (next.uncovered.size() < still_failing) {
            result.tlc = std::move(trial);
            result.added_by_greedy.push_back(candidate);
            coverage = std::move(next);
        }
    }

    std::vector<bool> is_tlc(n, false);
    for (auto t : result.tlc) is_tlc[t] = true;
    for (CategoryId c = 0; c < n; ++c) {
        if (!is_tlc[c]) result.dc.push_back(c);
    }
    result.covered = std::move(coverage.covered);
    result.uncovered = std::move(coverage.uncovered);
    result.objective_met = result.uncovered.empty();
    return result;
}

std::vector<CategoryId> verify_witnesses(const AssociationIndex& index, const TlcResult& result,
                                         std::size_t residual_threshold) {
    std::vector<bool> is_dc(index.category_count(), false);
    for (auto d : result.dc) is_dc[d] = true;
    std::vector<CategoryId> failures;
    for (const auto& w : result.covered) {
        Selection sel;
        for (auto t : w.selection) sel.push_back({t, Polarity::Positive});
        const auto replay = evaluate(index, sel);
        std::size_t residual = 0;
        for (const auto& cc : replay.available) {
            if (is_dc[cc.category]) ++residual;
        }
        if (!is_dc[w.category] || !replay.is_available(w.category) || residual > residual_threshold ||
            residual != w.residual) {
            failures.push_back(w.category);
        }
    }
    return failures;
}

std::uint64_t DominantIndex::total_links() const {
    std::uint64_t s = 0;
    for (const auto& p : postings) s += p.size();
    return s;
}

double DominantIndex::memory_estimate_bytes() const { return 4.0 * static_cast<double>(total_links()); }

DominantIndex dominant_submatrix(const AssociationIndex& index, std::span<const CategoryId> tlc) {
    DominantIndex d;
    d.item_count = index.item_count();
    d.categories.assign(tlc.begin(), tlc.end());
    std::sort(d.categories.begin(), d.categories.end());
    d.categories.erase(std::unique(d.categories.begin(), d.categories.end()), d.categories.end());
    std::vector<bool> has_tlc(index.item_count(), false);
    for (auto c : d.categories) {
        if (c >= index.category_count()) throw std::invalid_argument("TLC id out of range");
        auto p = index.postings(c);
        d.postings.emplace_back(p.begin(), p.end());
        for (ItemId j : p) has_tlc[j] = true;
    }
    for (ItemId j = 0; j < index.item_count(); ++j) {
        if (!has_tlc[j]) d.items_without_tlc.push_back(j);
    }
    return d;
}

}  // namespace tie
