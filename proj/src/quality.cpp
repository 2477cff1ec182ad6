#include "tie/quality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <unordered_map>

namespace tie {

namespace {

// Runs longer than this skip the distance-2 pass (pairwise cost is quadratic).
constexpr std::size_t kHammingClusterLimit = 2048;

struct VectorHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (auto x : v) {
            h ^= x;
            h *= 0x100000001b3ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

using VectorOf = std::function<std::span<const std::uint32_t>(std::uint32_t)>;

std::size_t hamming(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    return a.size() + b.size() - 2 * intersect_count(a, b);
}

std::vector<std::uint32_t> ordered(std::size_t count, const VectorOf& vec) {
    std::vector<std::uint32_t> ids(count);
    for (std::uint32_t k = 0; k < count; ++k) ids[k] = k;
    std::stable_sort(ids.begin(), ids.end(), [&](auto a, auto b) { return vec(a).size() > vec(b).size(); });

    std::vector<std::uint32_t> out;
    out.reserve(count);
    std::vector<bool> placed(count, false);
    for (std::size_t begin = 0; begin < ids.size();) {
        std::size_t end = begin;
        while (end < ids.size() && vec(ids[end]).size() == vec(ids[begin]).size()) ++end;
        std::span<const std::uint32_t> run(ids.data() + begin, end - begin);

        std::unordered_map<std::vector<std::uint32_t>, std::vector<std::uint32_t>, VectorHash> same;
        for (auto id : run) {
            auto v = vec(id);
            same[std::vector<std::uint32_t>(v.begin(), v.end())].push_back(id);
        }
        auto emit_with_twins = [&](std::uint32_t id) {
            auto v = vec(id);
            for (auto twin : same[std::vector<std::uint32_t>(v.begin(), v.end())]) {
                if (!placed[twin]) {
                    placed[twin] = true;
                    out.push_back(twin);
                }
            }
        };
        const bool near_pass = run.size() <= kHammingClusterLimit;
        for (auto id : run) {
            if (placed[id]) continue;
            emit_with_twins(id);
            if (!near_pass) continue;
            for (auto other : run) {
                if (!placed[other] && hamming(vec(id), vec(other)) == 2) emit_with_twins(other);
            }
        }
        begin = end;
    }
    return out;
}

EqualVectorClasses classify(std::size_t count, const VectorOf& vec) {
    EqualVectorClasses out;
    out.class_of.resize(count);
    out.class_size.resize(count);
    std::unordered_map<std::vector<std::uint32_t>, std::uint32_t, VectorHash> lookup;
    for (std::uint32_t id = 0; id < count; ++id) {
        auto v = vec(id);
        auto [it, inserted] =
            lookup.try_emplace(std::vector<std::uint32_t>(v.begin(), v.end()), static_cast<std::uint32_t>(out.classes.size()));
        if (inserted) out.classes.emplace_back();
        out.classes[it->second].push_back(id);
        out.class_of[id] = it->second;
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::uint32_t id = 0; id < count; ++id) {
        const auto size = static_cast<std::uint32_t>(out.classes[out.class_of[id]].size());
        out.class_size[id] = size;
        sum += size;
        sum_sq += static_cast<double>(size) * size;
    }
    for (std::uint32_t k = 0; k < out.classes.size(); ++k) {
        if (out.classes[k].size() > out.max_size) {
            out.max_size = static_cast<std::uint32_t>(out.classes[k].size());
            out.witness_class = k;
        }
    }
    if (count > 0) {
        out.mean_size = sum / count;
        out.sigma_size = std::sqrt(std::max(0.0, sum_sq / count - out.mean_size * out.mean_size));
    }
    return out;
}

VectorOf item_vec(const AssociationIndex& index) {
    return [&index](std::uint32_t j) { return index.categories_of(j); };
}

VectorOf category_vec(const AssociationIndex& index) {
    return [&index](std::uint32_t c) { return index.postings(c); };
}

}  // namespace

OrderedMatrix order_matrix(const AssociationIndex& index) {
    return {ordered(index.category_count(), category_vec(index)), ordered(index.item_count(), item_vec(index))};
}

EqualVectorClasses inference_sets(const AssociationIndex& index) { return classify(index.item_count(), item_vec(index)); }

EqualVectorClasses synonym_sets(const AssociationIndex& index) {
    return classify(index.category_count(), category_vec(index));
}

std::vector<std::uint32_t> granularity(const AssociationIndex& index) {
    std::vector<std::uint32_t> g(index.item_count(), 0);
    std::vector<CategoryId> cats;
    for (ItemId j = 0; j < index.item_count(); ++j) {
        auto v = index.categories_of(j);
        cats.assign(v.begin(), v.end());
        std::sort(cats.begin(), cats.end(),
                  [&](auto a, auto b) { return index.postings(a).size() < index.postings(b).size(); });
        Postings acc(index.postings(cats.front()).begin(), index.postings(cats.front()).end());
        for (std::size_t k = 1; k < cats.size() && acc.size() > 1; ++k) acc = intersect(acc, index.postings(cats[k]));
        g[j] = static_cast<std::uint32_t>(acc.size());
    }
    return g;
}

BadlyCategorized flag_badly_categorized(const AssociationIndex& index, std::uint32_t q_threshold,
                                        std::uint32_t g_threshold) {
    if (q_threshold < 1 || g_threshold < 1) throw std::invalid_argument("thresholds must be >= 1");
    BadlyCategorized out;
    out.q = inference_sets(index).class_size;
    out.g = granularity(index);
    for (ItemId j = 0; j < index.item_count(); ++j) {
        if (out.q[j] > q_threshold || out.g[j] > g_threshold) out.items.push_back(j);
    }
    return out;
}

AssociationIndex with_descriptor_category(const AssociationIndex& index, const BadlyCategorized& flagged,
                                          std::string_view descriptor) {
    if (flagged.items.empty()) return index;
    auto rows = index.dump();
    for (ItemId j : flagged.items) rows.at(j).categories.emplace_back(descriptor);
    return AssociationIndex::build(rows, index.grouping());
}

QualityReport quality_report(const AssociationIndex& index, std::uint32_t q_threshold, std::uint32_t g_threshold) {
    QualityReport report;
    const auto inference = inference_sets(index);
    report.q = inference.class_size;
    report.Q = inference.max_size;
    if (!inference.classes.empty()) report.Q_witness = inference.classes[inference.witness_class];
    report.q_mean = inference.mean_size;
    report.q_sigma = inference.sigma_size;
    report.r = synonym_sets(index).class_size;
    report.G = granularity(index);
    for (ItemId j = 0; j < index.item_count(); ++j) {
        if (report.q[j] > q_threshold || report.G[j] > g_threshold) report.badly_categorized.push_back(j);
    }
    return report;
}

CooccurrenceReport cooccurrence_stats(const AssociationIndex& index) {
    const auto s = stats(index);
    CooccurrenceReport r;
    const double n = static_cast<double>(s.category_count);
    const double N = static_cast<double>(s.item_count);
    r.offdiag_C_num = s.sum_sq_items_per_category - s.total_links;
    r.offdiag_C_den = std::uint64_t{s.item_count} * (s.item_count ? s.item_count - 1 : 0);
    r.offdiag_F_num = s.sum_sq_categories_per_item - s.total_links;
    r.offdiag_F_den = std::uint64_t{s.category_count} * (s.category_count ? s.category_count - 1 : 0);
    r.sigma_F = s.sigma_items_per_category;
    r.sigma_C = s.sigma_categories_per_item;
    const double var_F = r.sigma_F * r.sigma_F;
    const double var_C = r.sigma_C * r.sigma_C;
    const double F_av = s.mean_items_per_category;
    const double C_av = s.mean_categories_per_item;
    if (r.offdiag_C_den > 0) {
        const double den = static_cast<double>(r.offdiag_C_den);
        r.mean_offdiag_C = static_cast<double>(r.offdiag_C_num) / den;
        r.paper_mean_offdiag_C = n * var_F / den;
        r.corrected_mean_offdiag_C = (n * var_F + n * F_av * (F_av - 1.0)) / den;
    }
    if (r.offdiag_F_den > 0) {
        const double den = static_cast<double>(r.offdiag_F_den);
        r.mean_offdiag_F = static_cast<double>(r.offdiag_F_num) / den;
        r.paper_mean_offdiag_F = N * var_C / den;
        r.corrected_mean_offdiag_F = (N * var_C + N * C_av * (C_av - 1.0)) / den;
    }
    if (r.mean_offdiag_F > 0.0) r.ratio_exact = r.mean_offdiag_C / r.mean_offdiag_F;
    if (var_C > 0.0 && N > 0.0) r.ratio_paper = (n * n * n * var_F) / (N * N * N * var_C);
    return r;
}

CooccurrenceReport cooccurrence_direct(const AssociationIndex& index, std::size_t guard) {
    if (index.item_count() > guard || index.category_count() > guard) {
        throw SizeGuardError("direct co-occurrence refused: matrix exceeds size guard of " + std::to_string(guard));
    }
    auto r = cooccurrence_stats(index);
    std::uint64_t c_sum = 0;
    for (ItemId j = 0; j < index.item_count(); ++j) {
        for (ItemId k = 0; k < index.item_count(); ++k) {
            if (j != k) c_sum += intersect_count(index.categories_of(j), index.categories_of(k));
        }
    }
    std::uint64_t f_sum = 0;
    for (CategoryId i = 0; i < index.category_count(); ++i) {
        for (CategoryId i2 = 0; i2 < index.category_count(); ++i2) {
            if (i != i2) f_sum += intersect_count(index.postings(i), index.postings(i2));
        }
    }
    r.offdiag_C_num = c_sum;
    r.offdiag_F_num = f_sum;
    r.mean_offdiag_C = r.offdiag_C_den ? static_cast<double>(c_sum) / static_cast<double>(r.offdiag_C_den) : 0.0;
    r.mean_offdiag_F = r.offdiag_F_den ? static_cast<double>(f_sum) / static_cast<double>(r.offdiag_F_den) : 0.0;
    r.ratio_exact.reset();
    if (r.mean_offdiag_F > 0.0) r.ratio_exact = r.mean_offdiag_C / r.mean_offdiag_F;
    return r;
}

}  // namespace tie
