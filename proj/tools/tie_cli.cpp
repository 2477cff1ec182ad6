#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tie/alpha.hpp"
#include "tie/association_index.hpp"
#include "tie/ingest.hpp"
#include "tie/narrowing.hpp"
#include "tie/quality.hpp"
#include "tie/service.hpp"
#include "tie/tlc.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

class Table {
public:
    void row(std::string key, const ojson& value) {
        rows_.emplace_back(std::move(key), value.is_string() ? value.get<std::string>() : value.dump());
    }
    void print() const {
        std::size_t width = 0;
        for (const auto& [k, v] : rows_) width = std::max(width, k.size());
        for (const auto& [k, v] : rows_) std::cout << k << std::string(width - k.size() + 2, ' ') << v << "\n";
    }

private:
    std::vector<std::pair<std::string, std::string>> rows_;
};

void emit(const ojson& doc, bool as_json) {
    if (as_json) {
        std::cout << doc.dump(2) << "\n";
        return;
    }
    Table t;
    for (const auto& [k, v] : doc.items()) t.row(k, v);
    t.print();
}

tie::AssociationIndex load_index(const std::vector<std::string>& paths) {
    if (paths.size() == 1) return tie::snapshot_load(paths.front());
    std::vector<fs::path> ps(paths.begin(), paths.end());
    return tie::snapshot_load_merged(ps);
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::vector<std::string> out;
    std::istringstream in(tie::read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

ojson stats_json(const tie::AssociationIndex& index) {
    const auto s = tie::stats(index);
    ojson out;
    out["fingerprint"] = index.fingerprint();
    out["items"] = s.item_count;
    out["categories"] = s.category_count;
    out["links"] = s.total_links;
    out["mean_categories_per_item"] = s.mean_categories_per_item;
    out["mean_items_per_category"] = s.mean_items_per_category;
    out["sigma_categories_per_item"] = s.sigma_categories_per_item;
    out["sigma_items_per_category"] = s.sigma_items_per_category;
    out["density"] = s.density;
    out["memory_estimate_bytes"] = s.memory_estimate_bytes;
    out["groups"] = index.groups().size();
    return out;
}

// --- build ------------------------------------------------------------------

struct BuildOpts {
    std::string input;
    std::string output;
    std::string format = "jsonl";
    std::size_t shards = 1;
    std::string stoplist;
    double broad = 10.0;
    double detail = 0.1;
    std::size_t max_per_doc = 50;
    bool json = false;
};

std::vector<tie::Document> load_documents(const fs::path& path) {
    std::vector<tie::Document> docs;
    std::size_t line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        try {
            const auto doc = nlohmann::json::parse(line);
            docs.push_back({doc.at("name").get<std::string>(), doc.at("text").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw tie::IngestError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return docs;
}

int run_build(const BuildOpts& o) {
    tie::BuildInput input;
    ojson report;
    if (o.format == "jsonl") {
        input = tie::load_jsonl(o.input);
    } else {
        tie::TextExtractionConfig config;
        if (!o.stoplist.empty()) config.stoplist = tie::load_stoplist(o.stoplist);
        config.broad_threshold = o.broad;
        config.detail_threshold = o.detail;
        config.max_categories_per_doc = o.max_per_doc;
        auto x = tie::extract_text_categories(load_documents(o.input), config);
        input = std::move(x.input);
        std::size_t broad = 0, detailed = 0;
        for (const auto& w : x.words) {
            broad += w.tier == tie::WordTier::Broad;
            detailed += w.tier == tie::WordTier::Detailed;
        }
        report["skipped_documents"] = x.skipped_documents.size();
        report["broad_words"] = broad;
        report["detailed_words"] = detailed;
    }
    const auto index = tie::AssociationIndex::build(input.assignments, input.grouping);
    std::vector<std::string> written;
    if (o.shards <= 1) {
        tie::snapshot_save(index, o.output);
        written.push_back(o.output);
    } else {
        const auto parts = tie::shard(index, o.shards);
        for (std::size_t k = 0; k < parts.size(); ++k) {
            written.push_back(o.output + "." + std::to_string(k));
            tie::snapshot_save(parts[k], written.back());
        }
    }
    ojson out = stats_json(index);
    out["written"] = written;
    for (const auto& [k, v] : report.items()) out[k] = v;
    emit(out, o.json);
    return 0;
}

// --- quality / cooccur --------------------------------------------------------

int run_quality(const tie::AssociationIndex& index, std::uint32_t q_thr, std::uint32_t g_thr, bool json) {
    const auto r = tie::quality_report(index, q_thr, g_thr);
    const auto syn = tie::synonym_sets(index);
    ojson out;
    out["items"] = index.item_count();
    out["Q"] = r.Q;
    std::vector<std::string> witness;
    for (auto j : r.Q_witness) witness.push_back(index.item_name(j));
    out["Q_witness"] = witness;
    out["q_mean"] = r.q_mean;
    out["q_sigma"] = r.q_sigma;
    out["inference_sets"] = tie::inference_sets(index).classes.size();
    out["synonym_sets"] = syn.classes.size();
    out["max_synonym_set"] = syn.max_size;
    out["G_max"] = r.G.empty() ? 0u : *std::max_element(r.G.begin(), r.G.end());
    std::vector<std::string> flagged;
    for (auto j : r.badly_categorized) flagged.push_back(index.item_name(j));
    out["badly_categorized_count"] = flagged.size();
    if (json) {
        out["badly_categorized"] = flagged;
        emit(out, true);
    } else {
        emit(out, false);
        for (const auto& name : flagged) std::cout << "  flagged  " << name << "\n";
    }
    return 0;
}

int run_cooccur(const tie::AssociationIndex& index, bool direct, bool json) {
    const auto r = direct ? tie::cooccurrence_direct(index) : tie::cooccurrence_stats(index);
    ojson out;
    out["method"] = direct ? "direct" : "closed-form";
    out["offdiag_C"] = std::to_string(r.offdiag_C_num) + "/" + std::to_string(r.offdiag_C_den);
    out["mean_offdiag_C"] = r.mean_offdiag_C;
    out["published_mean_offdiag_C"] = r.paper_mean_offdiag_C;
    out["corrected_mean_offdiag_C"] = r.corrected_mean_offdiag_C;
    out["offdiag_F"] = std::to_string(r.offdiag_F_num) + "/" + std::to_string(r.offdiag_F_den);
    out["mean_offdiag_F"] = r.mean_offdiag_F;
    out["published_mean_offdiag_F"] = r.paper_mean_offdiag_F;
    out["corrected_mean_offdiag_F"] = r.corrected_mean_offdiag_F;
    out["sigma_C"] = r.sigma_C;
    out["sigma_F"] = r.sigma_F;
    out["ratio_exact"] = r.ratio_exact ? ojson(*r.ratio_exact) : ojson(nullptr);
    out["ratio_published"] = r.ratio_paper ? ojson(*r.ratio_paper) : ojson(nullptr);
    const auto overlap = tie::random_overlap(index);
    out["overlap_mean_exact"] = overlap.mean_exact;
    out["overlap_mean_closed_form"] = overlap.mean_closed_form;
    out["overlap_mean_published"] = overlap.paper_mean;
    emit(out, json);
    return 0;
}

// --- simulate -----------------------------------------------------------------

struct SimOpts {
    std::uint64_t items = 0;
    std::uint64_t categories = 0;
    std::uint32_t cmin = 0;
    std::uint32_t cmax = 0;
    std::uint64_t seed = 0;
    std::uint32_t trials = 4;
    std::uint32_t clicks = 200;
    std::string model = "uniform";
    bool json = false;
};

int run_simulate(const SimOpts& o) {
    tie::MonteCarloParams p;
    p.items = o.items;
    p.categories = o.categories;
    p.c_min = o.cmin;
    p.c_max = o.cmax;
    p.trials = o.trials;
    p.clicks_per_trial = o.clicks;
    p.seed = o.seed;
    p.count_model = o.model == "uniform"  ? tie::CountModel::UniformInteger
                    : o.model == "linear" ? tie::CountModel::LinearProfile
                                          : tie::CountModel::QuadraticProfile;
    const auto r = tie::monte_carlo(p);
    ojson out;
    out["model"] = o.model;
    out["seed"] = o.seed;
    out["predicted_mean_c"] = r.predicted_mean_c;
    out["predicted_narrowing_factor"] = r.predicted_narrowing_factor;
    out["predicted_one_click"] = r.predicted_one_click;
    out["predicted_two_click"] = r.predicted_two_click;
    out["empirical_mean_c"] = r.empirical_mean_c;
    out["empirical_one_click"] = r.empirical_one_click;
    out["empirical_two_click"] = r.empirical_two_click;
    out["empirical_category_narrowing"] = r.empirical_category_narrowing;
    out["one_click_relative_error"] = r.one_click_relative_error();
    out["two_click_relative_error"] = r.two_click_relative_error();
    out["samples"] = r.samples;
    if (o.model != "uniform") {
        const auto m = tie::predict({o.items, o.categories, double(o.cmax), double(o.cmin),
                                     o.model == "linear" ? tie::Profile::Linear : tie::Profile::Quadratic});
        out["profile_sigma_c_sq"] = m.sigma_c_sq;
        out["profile_mean_c_sq"] = m.mean_c_sq;
    }
    emit(out, o.json);
    return 0;
}

// --- tlc ----------------------------------------------------------------------

int run_tlc(const tie::AssociationIndex& index, const tie::TlcConfig& config, const std::string& dominant_out,
            bool json) {
    const auto scores = tie::relevance_scores(index);
    const auto result = tie::select_tlc(index, scores, config);
    const auto failed = tie::verify_witnesses(index, result, config.residual_threshold);
    const auto dom = tie::dominant_submatrix(index, result.tlc);
    ojson out;
    out["categories"] = index.category_count();
    out["tlc_count"] = result.tlc.size();
    out["dc_count"] = result.dc.size();
    out["covered"] = result.covered.size();
    out["uncovered"] = result.uncovered.size();
    out["added_by_greedy"] = result.added_by_greedy.size();
    out["objective_met"] = result.objective_met;
    out["witness_failures"] = failed.size();
    out["dominant_links"] = dom.total_links();
    out["dominant_memory_estimate_bytes"] = dom.memory_estimate_bytes();
    out["items_without_tlc"] = dom.items_without_tlc.size();
    std::vector<std::string> names;
    for (auto c : result.tlc) names.push_back(index.category_name(c));
    if (!dominant_out.empty()) {
        std::vector<tie::Assignment> rows;
        std::vector<std::vector<std::string>> per_item(index.item_count());
        for (std::size_t k = 0; k < dom.categories.size(); ++k) {
            for (auto j : dom.postings[k]) per_item[j].push_back(index.category_name(dom.categories[k]));
        }
        for (tie::ItemId j = 0; j < index.item_count(); ++j) {
            if (!per_item[j].empty()) rows.push_back({index.item_name(j), per_item[j]});
        }
        if (rows.empty()) throw std::runtime_error("dominant matrix is empty");
        tie::snapshot_save(tie::AssociationIndex::build(rows), dominant_out);
        out["dominant_written"] = dominant_out;
    }
    if (json) {
        out["tlc"] = names;
        emit(out, true);
    } else {
        emit(out, false);
        for (const auto& n : names) std::cout << "  tlc  " << n << "\n";
    }
    return failed.empty() ? 0 : 1;
}

// --- typeahead-bench ----------------------------------------------------------

int run_typeahead_bench(const std::string& names_path, const std::string& mode_text, std::uint64_t seed,
                        std::size_t samples, std::size_t keystrokes, bool json) {
    const auto names = read_lines(names_path);
    const auto mode = tie::parse_alpha_mode(mode_text);
    const auto index = tie::AlphaIndex::build(names, mode);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, names.size() - 1);
    std::vector<std::vector<double>> counts(keystrokes);
    std::size_t self_lost = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const auto target = static_cast<tie::ItemId>(pick(rng));
        const auto& folded = index.folded(target);
        auto state = tie::initial_state(index);
        std::size_t typed = 0;
        for (std::size_t p = 0; p < folded.size() && typed < keystrokes; ++p) {
            // PI counts distinct characters; PD counts every position
            if (mode == tie::AlphaMode::PositionIndependent &&
                folded.find(folded[p]) != p) {
                continue;
            }
            auto out = tie::type_key(index, state, folded[p]);
            state = out.state;
            counts[typed++].push_back(static_cast<double>(state.candidates.size()));
        }
        if (!std::binary_search(state.candidates.begin(), state.candidates.end(), target)) ++self_lost;
    }
    ojson out;
    out["names"] = names.size();
    out["mode"] = std::string(tie::to_string(mode));
    out["samples"] = samples;
    out["self_survival_failures"] = self_lost;
    ojson medians = ojson::array();
    for (auto& c : counts) {
        if (c.empty()) break;
        std::sort(c.begin(), c.end());
        medians.push_back(c[c.size() / 2]);
    }
    out["median_candidates_by_keystroke"] = medians;
    emit(out, json);
    return self_lost == 0 ? 0 : 1;
}

// --- serve --------------------------------------------------------------------

int run_serve(const std::vector<std::string>& snapshots, std::size_t shards, const std::string& names_path,
              const std::string& host, int port) {
    tie::Service service;
    service.load(load_index(snapshots), shards);
    if (!names_path.empty()) service.load_names(read_lines(names_path));
    tie::HttpServer server(service);
    const int bound = server.bind(host, port);
    std::cerr << "listening on " << host << ":" << bound << std::endl;
    server.listen();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Guided faceted search over category/item matrices"};
    app.require_subcommand(1);
    bool json = false;

    BuildOpts build;
    auto* build_cmd = app.add_subcommand("build", "Build a snapshot from JSONL assignments or text documents");
    build_cmd->add_option("input", build.input, "Input file")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("-o,--output", build.output, "Snapshot path (shards get .0, .1, ...)")->required();
    build_cmd->add_option("--format", build.format, "jsonl or documents")
        ->check(CLI::IsMember({"jsonl", "documents"}));
    build_cmd->add_option("--shards", build.shards, "Write K shard snapshots")->check(CLI::PositiveNumber);
    build_cmd->add_option("--stoplist", build.stoplist, "Stoplist file (documents)")->check(CLI::ExistingFile);
    build_cmd->add_option("--broad", build.broad, "Broad-word threshold, percent of documents");
    build_cmd->add_option("--detail", build.detail, "Detail-word threshold, percent of documents");
    build_cmd->add_option("--max-per-doc", build.max_per_doc, "Categories kept per document (0 = all)");
    build_cmd->add_flag("--json", build.json, "JSON output");

    std::vector<std::string> snapshots;
    auto* stats_cmd = app.add_subcommand("stats", "Matrix statistics");
    stats_cmd->add_option("snapshot", snapshots, "Snapshot file(s); several are merged as shards")
        ->required()
        ->check(CLI::ExistingFile);
    stats_cmd->add_flag("--json", json, "JSON output");

    std::uint32_t q_thr = 20, g_thr = 20;
    auto* quality_cmd = app.add_subcommand("quality", "Inference, synonym and granularity metrics");
    quality_cmd->add_option("snapshot", snapshots, "Snapshot file(s)")->required()->check(CLI::ExistingFile);
    quality_cmd->add_option("--q-threshold", q_thr, "Inference-set size threshold")->check(CLI::PositiveNumber);
    quality_cmd->add_option("--g-threshold", g_thr, "Granularity threshold")->check(CLI::PositiveNumber);
    quality_cmd->add_flag("--json", json, "JSON output");

    bool direct = false;
    auto* cooccur_cmd = app.add_subcommand("cooccur", "Co-occurrence means and overlap estimates");
    cooccur_cmd->add_option("snapshot", snapshots, "Snapshot file(s)")->required()->check(CLI::ExistingFile);
    cooccur_cmd->add_flag("--direct", direct, "Materialize both squared matrices (small inputs only)");
    cooccur_cmd->add_flag("--json", json, "JSON output");

    SimOpts sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo check of the narrowing model");
    sim_cmd->add_option("--N", sim.items, "Items")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--n", sim.categories, "Categories")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--cmin", sim.cmin, "Smallest per-item category count")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--cmax", sim.cmax, "Largest per-item category count")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "RNG seed")->required();
    sim_cmd->add_option("--trials", sim.trials, "Independent random matrices")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--clicks", sim.clicks, "Click pairs per matrix")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--model", sim.model, "uniform, linear or quadratic")
        ->check(CLI::IsMember({"uniform", "linear", "quadratic"}));
    sim_cmd->add_flag("--json", sim.json, "JSON output");

    tie::TlcConfig tlc_config;
    std::string dominant_out;
    auto* tlc_cmd = app.add_subcommand("tlc", "Select top-level categories");
    tlc_cmd->add_option("snapshot", snapshots, "Snapshot file(s)")->required()->check(CLI::ExistingFile);
    tlc_cmd->add_option("--seed-size", tlc_config.seed_size, "Initial top-scored set size")
        ->check(CLI::PositiveNumber);
    tlc_cmd->add_option("--pool", tlc_config.pool_multiplier, "Candidate pool multiplier")->check(CLI::PositiveNumber);
    tlc_cmd->add_option("--residual", tlc_config.residual_threshold, "Maximum DCs left available")
        ->check(CLI::PositiveNumber);
    tlc_cmd->add_option("--dominant-out", dominant_out, "Write the TLC-only matrix as a snapshot");
    tlc_cmd->add_flag("--json", json, "JSON output");

    std::string names_path, mode = "pi";
    std::uint64_t bench_seed = 0;
    std::size_t samples = 1000, keystrokes = 5;
    auto* ta_cmd = app.add_subcommand("typeahead-bench", "Candidate-list sizes while typing real names");
    ta_cmd->add_option("names", names_path, "One name per line")->required()->check(CLI::ExistingFile);
    ta_cmd->add_option("--mode", mode, "pi or pd")->check(CLI::IsMember({"pi", "pd"}));
    ta_cmd->add_option("--seed", bench_seed, "RNG seed")->required();
    ta_cmd->add_option("--samples", samples, "Names sampled")->check(CLI::PositiveNumber);
    ta_cmd->add_option("--keystrokes", keystrokes, "Keystrokes per name")->check(CLI::PositiveNumber);
    ta_cmd->add_flag("--json", json, "JSON output");

    std::size_t serve_shards = 1;
    std::string host = "127.0.0.1", serve_names;
    int port = 8080;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    serve_cmd->add_option("snapshot", snapshots, "Snapshot file(s)")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--shards", serve_shards, "Answer queries by scatter-gather over K shards")
        ->check(CLI::PositiveNumber);
    serve_cmd->add_option("--names", serve_names, "Typeahead name list")->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--port", port, "Port (0 = ephemeral)")->check(CLI::Range(0, 65535));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (*build_cmd) return run_build(build);
        if (*sim_cmd) return run_simulate(sim);
        if (*ta_cmd) return run_typeahead_bench(names_path, mode, bench_seed, samples, keystrokes, json);
        if (*serve_cmd) return run_serve(snapshots, serve_shards, serve_names, host, port);
        const auto index = load_index(snapshots);
        if (*stats_cmd) {
            emit(stats_json(index), json);
            return 0;
        }
        if (*quality_cmd) return run_quality(index, q_thr, g_thr, json);
        if (*cooccur_cmd) return run_cooccur(index, direct, json);
        if (*tlc_cmd) return run_tlc(index, tlc_config, dominant_out, json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
