#include "tie/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "tie/alpha.hpp"
#include "tie/tlc.hpp"

namespace tie {

namespace {

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
}

bool is_word_byte(unsigned char ch) { return std::isalnum(ch) || ch >= 0x80; }

bool is_capitalized(std::string_view word) {
    const auto cps = decode_utf8(word);
    return !cps.empty() && fold_char(cps.front()) != cps.front();
}

}  // namespace

BuildInput parse_jsonl(std::string_view text) {
    BuildInput input;
    std::map<std::string, Combinator> declared;
    std::unordered_map<std::string, std::size_t> seen_items;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            if (end == text.size()) break;
            continue;
        }
        const std::string where = "line " + std::to_string(line_no) + ": ";
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw IngestError(where + "malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) throw IngestError(where + "expected a JSON object");
        if (obj.contains("groups") && !obj.contains("name")) {
            if (!obj["groups"].is_object()) throw IngestError(where + "\"groups\" must be an object");
            for (const auto& [group, comb] : obj["groups"].items()) {
                if (!comb.is_string()) throw IngestError(where + "combinator for '" + group + "' must be a string");
                try {
                    declared[group] = parse_combinator(comb.get<std::string>());
                } catch (const IndexError& e) {
                    throw IngestError(where + e.what());
                }
            }
            continue;
        }
        if (!obj.contains("name") || !obj["name"].is_string()) throw IngestError(where + "missing string \"name\"");
        if (!obj.contains("categories") || !obj["categories"].is_array()) {
            throw IngestError(where + "missing array \"categories\"");
        }
        Assignment a{obj["name"].get<std::string>(), {}};
        for (const auto& c : obj["categories"]) {
            if (!c.is_string() || c.get<std::string>().empty()) {
                throw IngestError(where + "categories must be non-empty strings");
            }
            a.categories.push_back(c.get<std::string>());
        }
        if (a.categories.empty()) throw IngestError(where + "item '" + a.item + "' has no categories");
        if (auto [it, inserted] = seen_items.emplace(a.item, line_no); !inserted) {
            throw IngestError(where + "duplicate item name '" + a.item + "' (first on line " +
                              std::to_string(it->second) + ")");
        }
        input.assignments.push_back(std::move(a));
    }
    for (const auto& a : input.assignments) {
        for (const auto& c : a.categories) {
            const auto slash = c.find('/');
            if (slash == std::string::npos || slash == 0) continue;
            const std::string group = c.substr(0, slash);
            const auto it = declared.find(group);
            input.grouping[c] = GroupSpec{group, it == declared.end() ? Combinator::All : it->second};
        }
    }
    return input;
}

BuildInput load_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

std::string to_jsonl(const AssociationIndex& index) {
    std::string out;
    nlohmann::ordered_json groups = nlohmann::ordered_json::object();
    for (const auto& g : index.groups()) {
        if (g.combinator == Combinator::Any) groups[g.name] = std::string(to_string(g.combinator));
    }
    if (!groups.empty()) {
        nlohmann::ordered_json line;
        line["groups"] = groups;
        out += line.dump() + "\n";
    }
    for (const auto& a : index.dump()) {
        nlohmann::ordered_json line;
        line["name"] = a.item;
        line["categories"] = a.categories;
        out += line.dump() + "\n";
    }
    return out;
}

BuildInput categorize_records(std::span<const Record> records, const RecordSchema& schema) {
    BuildInput input;
    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const std::string label = rec.name.empty() ? "record-" + std::to_string(r) : rec.name;
        if (rec.fields.empty()) throw IngestError("record '" + label + "' is empty");
        Assignment a{label, {}};
        if (auto it = schema.group_categories.find(rec.kind); it != schema.group_categories.end()) {
            a.categories.insert(a.categories.end(), it->second.begin(), it->second.end());
        }
        for (const auto& [field, value] : rec.fields) {
            const auto role = schema.fields.find(field);
            if (role == schema.fields.end()) {
                if (schema.strict) throw IngestError("record '" + label + "': field '" + field + "' has no role");
                continue;
            }
            if (value.empty()) continue;
            const auto& fdc = role->second.description_categories;
            a.categories.insert(a.categories.end(), fdc.begin(), fdc.end());
            if (role->second.value_is_category) a.categories.push_back(value);
        }
        if (a.categories.empty()) throw IngestError("record '" + label + "' yields no categories");
        input.assignments.push_back(std::move(a));
    }
    return input;
}

std::string_view to_string(WordTier tier) {
    switch (tier) {
        case WordTier::Broad:
            return "broad";
        case WordTier::Detailed:
            return "detailed";
        case WordTier::Ordinary:
            break;
    }
    return "ordinary";
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> tokens;
    bool sentence_start = true;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto ch = static_cast<unsigned char>(text[i]);
        if (is_word_byte(ch)) {
            std::size_t j = i;
            while (j < text.size()) {
                const auto c = static_cast<unsigned char>(text[j]);
                if (is_word_byte(c)) {
                    ++j;
                } else if ((c == '\'' || c == '-') && j + 1 < text.size() &&
                           is_word_byte(static_cast<unsigned char>(text[j + 1]))) {
                    ++j;
                } else {
                    break;
                }
            }
            tokens.push_back({std::string(text.substr(i, j - i)), sentence_start});
            sentence_start = false;
            i = j;
            continue;
        }
        if ((ch == '.' || ch == '!' || ch == '?') &&
            (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])))) {
            sentence_start = true;
        }
        ++i;
    }
    return tokens;
}

TextExtraction extract_text_categories(std::span<const Document> documents, const TextExtractionConfig& config) {
    if (documents.empty()) throw IngestError("no documents");
    if (!(config.detail_threshold >= 0.0 && config.detail_threshold <= config.broad_threshold &&
          config.broad_threshold <= 100.0)) {
        throw IngestError("thresholds must satisfy 0 <= detail <= broad <= 100");
    }
    std::set<std::string> stop;
    for (const auto& w : config.stoplist) stop.insert(ascii_lower(w));

    struct DocWords {
        std::string name;
        std::vector<std::pair<std::string, std::uint32_t>> words;  // ordered by first occurrence
    };
    std::vector<DocWords> docs;
    std::map<std::string, std::uint32_t> document_frequency;
    TextExtraction out;

    for (const auto& doc : documents) {
        DocWords dw{doc.name, {}};
        std::unordered_map<std::string, std::size_t> slot;
        auto count = [&](const std::string& w) {
            auto [it, inserted] = slot.try_emplace(w, dw.words.size());
            if (inserted) dw.words.emplace_back(w, 0);
            ++dw.words[it->second].second;
        };
        for (const auto& tok : tokenize(doc.text)) {
            if (config.capitalized_only && !is_capitalized(tok.text)) continue;
            if (config.skip_sentence_initial && tok.sentence_initial) continue;
            if (stop.contains(ascii_lower(tok.text))) continue;
            count(tok.text);
        }
        for (const auto& phrase : config.phrases) {
            for (auto at = doc.text.find(phrase); at != std::string::npos; at = doc.text.find(phrase, at + 1)) {
                count(phrase);
            }
        }
        if (dw.words.empty()) {
            out.skipped_documents.push_back(doc.name);
            continue;
        }
        for (const auto& [w, n] : dw.words) ++document_frequency[w];
        docs.push_back(std::move(dw));
    }

    const double total_docs = static_cast<double>(documents.size());
    for (const auto& [w, df] : document_frequency) {
        WordStat s{w, df, 100.0 * df / total_docs, WordTier::Ordinary, 0};
        if (s.document_percent >= config.broad_threshold) {
            s.tier = WordTier::Broad;
        } else if (s.document_percent <= config.detail_threshold) {
            s.tier = WordTier::Detailed;
        }
        out.words.push_back(std::move(s));
    }

    for (auto& dw : docs) {
        std::stable_sort(dw.words.begin(), dw.words.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        if (config.max_categories_per_doc && dw.words.size() > config.max_categories_per_doc) {
            dw.words.resize(config.max_categories_per_doc);
        }
        Assignment a{dw.name, {}};
        for (const auto& [w, n] : dw.words) a.categories.push_back(w);
        out.input.assignments.push_back(std::move(a));
    }

    if (!out.input.assignments.empty()) {
        const auto index = AssociationIndex::build(out.input.assignments);
        const auto scores = relevance_scores(index);
        for (auto& s : out.words) {
            if (auto c = index.find_category(s.word)) s.relevance = scores[*c];
        }
    }
    return out;
}

std::set<std::string> load_stoplist(const std::filesystem::path& path) {
    std::set<std::string> words;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
        if (!line.empty()) words.insert(line);
    }
    return words;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IngestError("cannot write '" + path.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IngestError("write failed for '" + path.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void snapshot_save(const AssociationIndex& index, const std::filesystem::path& path) {
    write_file(path, index.snapshot_json());
}

AssociationIndex snapshot_load(const std::filesystem::path& path) {
    return AssociationIndex::from_snapshot_json(read_file(path));
}

AssociationIndex snapshot_load_merged(std::span<const std::filesystem::path> paths) {
    std::vector<AssociationIndex> shards;
    shards.reserve(paths.size());
    for (const auto& p : paths) shards.push_back(snapshot_load(p));
    return merge_shards(shards);
}

}  // namespace tie
