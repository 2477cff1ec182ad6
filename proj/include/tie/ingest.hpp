#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BuildInput {
    std::vector<Assignment> assignments;
    Grouping grouping;
};

/// One JSON object per line: {"name": "...", "categories": ["Group/Cat" | "Cat", ...]}.
/// "Group/Cat" keeps the full string as the category name and places it in
/// group "Group". An optional line {"groups": {"Group": "ANY" | "ALL"}}
/// declares combinators (default ALL). Blank lines are ignored.
BuildInput parse_jsonl(std::string_view text);
BuildInput load_jsonl(const std::filesystem::path& path);
std::string to_jsonl(const AssociationIndex& index);

// --- structured records -----------------------------------------------------

struct Record {
    std::string name;
    std::string kind;  // selects the group-description categories
    std::vector<std::pair<std::string, std::string>> fields;
};

struct FieldRole {
    std::vector<std::string> description_categories;  // FDCs
    bool value_is_category = false;  // FVC: the field's value becomes a category
};

struct RecordSchema {
    std::map<std::string, std::vector<std::string>> group_categories;  // kind -> GDCs
    std::map<std::string, FieldRole> fields;
    bool strict = true;
};

BuildInput categorize_records(std::span<const Record> records, const RecordSchema& schema);

// --- text corpora -----------------------------------------------------------

struct Document {
    std::string name;
    std::string text;
};

struct TextExtractionConfig {
    std::set<std::string> stoplist;  // compared case-insensitively
    bool capitalized_only = true;
    bool skip_sentence_initial = true;
    double broad_threshold = 10.0;  // percent of documents
    double detail_threshold = 0.1;
    std::size_t max_categories_per_doc = 50;  // 0 = unlimited
    std::vector<std::string> phrases;  // explicit multi-word categories, matched case-sensitively
};

enum class WordTier { Broad, Ordinary, Detailed };
std::string_view to_string(WordTier tier);

struct WordStat {
    std::string word;
    std::uint32_t document_frequency = 0;
    double document_percent = 0.0;
    WordTier tier = WordTier::Ordinary;
    std::uint64_t relevance = 0;  // co-occurrence score over the built index
};

struct TextExtraction {
    BuildInput input;
    std::vector<WordStat> words;  // sorted by word
    std::vector<std::string> skipped_documents;
};

struct Token {
    std::string text;
    bool sentence_initial = false;
};

std::vector<Token> tokenize(std::string_view text);

TextExtraction extract_text_categories(std::span<const Document> documents, const TextExtractionConfig& config);

std::set<std::string> load_stoplist(const std::filesystem::path& path);

// --- snapshots --------------------------------------------------------------

void snapshot_save(const AssociationIndex& index, const std::filesystem::path& path);
AssociationIndex snapshot_load(const std::filesystem::path& path);

/// Loads shard snapshots and merges them back into one index.
AssociationIndex snapshot_load_merged(std::span<const std::filesystem::path> paths);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace tie
