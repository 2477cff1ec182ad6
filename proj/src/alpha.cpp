#include "tie/alpha.hpp"

#include <algorithm>
#include <numeric>

namespace tie {

char32_t fold_char(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 32;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 32;
    if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 32;
    if (c >= 0x410 && c <= 0x42F) return c + 32;
    if (c >= 0x400 && c <= 0x40F) return c + 80;
    return c;
}

namespace {

std::string category_key(char32_t ch, std::size_t position, AlphaMode mode) {
    std::string key = to_utf8(std::u32string_view(&ch, 1));
    if (mode == AlphaMode::PositionDependent) key += "@" + std::to_string(position);
    return key;
}

}  // namespace

std::string_view to_string(AlphaMode mode) { return mode == AlphaMode::PositionIndependent ? "pi" : "pd"; }

AlphaMode parse_alpha_mode(std::string_view text) {
    if (text == "pi" || text == "PI" || text == "position-independent") return AlphaMode::PositionIndependent;
    if (text == "pd" || text == "PD" || text == "position-dependent") return AlphaMode::PositionDependent;
    throw AlphaError("unknown typeahead mode '" + std::string(text) + "'");
}

std::u32string decode_utf8(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    for (std::size_t i = 0; i < utf8.size();) {
        const auto b = static_cast<unsigned char>(utf8[i]);
        std::size_t len = 1;
        char32_t cp = 0xFFFD;
        if (b < 0x80) {
            cp = b;
        } else if ((b >> 5) == 0x6) {
            len = 2;
            cp = b & 0x1F;
        } else if ((b >> 4) == 0xE) {
            len = 3;
            cp = b & 0x0F;
        } else if ((b >> 3) == 0x1E) {
            len = 4;
            cp = b & 0x07;
        } else {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        if (i + len > utf8.size()) {
            out.push_back(0xFFFD);
            break;
        }
        bool valid = true;
        for (std::size_t k = 1; k < len; ++k) {
            const auto cont = static_cast<unsigned char>(utf8[i + k]);
            if ((cont >> 6) != 0x2) valid = false;
            cp = (cp << 6) | (cont & 0x3F);
        }
        out.push_back(valid ? cp : 0xFFFD);
        i += valid ? len : 1;
    }
    return out;
}

std::u32string fold(std::string_view utf8) {
    auto out = decode_utf8(utf8);
    for (auto& cp : out) cp = fold_char(cp);
    return out;
}

std::string to_utf8(std::u32string_view text) {
    std::string out;
    for (char32_t cp : text) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

AlphaIndex AlphaIndex::build(std::span<const std::string> names, AlphaMode mode) {
    if (names.empty()) throw AlphaError("name list is empty");
    AlphaIndex alpha;
    alpha.mode_ = mode;
    alpha.names_.assign(names.begin(), names.end());
    std::vector<Assignment> rows;
    rows.reserve(names.size());
    for (std::size_t j = 0; j < names.size(); ++j) {
        auto folded = fold(names[j]);
        if (folded.empty()) throw AlphaError("name " + std::to_string(j) + " is empty");
        Assignment row{std::to_string(j), {}};
        for (std::size_t p = 0; p < folded.size(); ++p) row.categories.push_back(category_key(folded[p], p, mode));
        rows.push_back(std::move(row));
        alpha.folded_.push_back(std::move(folded));
    }
    alpha.index_ = AssociationIndex::build(rows);
    return alpha;
}

std::optional<CategoryId> AlphaIndex::category_for(char32_t ch, std::size_t position) const {
    return index_.find_category(category_key(fold_char(ch), position, mode_));
}

TypeState initial_state(const AlphaIndex& index) {
    TypeState state;
    state.candidates.resize(index.size());
    std::iota(state.candidates.begin(), state.candidates.end(), ItemId{0});
    return state;
}

KeyOutcome type_key(const AlphaIndex& index, const TypeState& state, char32_t ch) {
    if (state.completed) throw AlphaError("typing already completed");
    ch = fold_char(ch);
    const auto cat = index.category_for(ch, state.typed.size());
    if (!cat) return {state, false};

    const bool repeat = std::binary_search(state.selected.begin(), state.selected.end(), *cat);
    if (repeat) {
        KeyOutcome out{state, true};
        out.state.typed.push_back(ch);
        return out;
    }
    const auto postings = index.index().postings(*cat);
    // nothing selected yet: candidates are all items
    auto narrowed = state.selected.empty() ? Postings(postings.begin(), postings.end())
                                           : intersect(state.candidates, postings);
    if (narrowed.empty()) return {state, false};

    KeyOutcome out{{state.typed, state.selected, std::move(narrowed), false}, true};
    out.state.typed.push_back(ch);
    out.state.selected.insert(std::lower_bound(out.state.selected.begin(), out.state.selected.end(), *cat), *cat);
    return out;
}

TypedRun type_string(const AlphaIndex& index, std::string_view typed) {
    TypedRun run{initial_state(index), {}};
    const auto keys = fold(typed);
    for (std::size_t k = 0; k < keys.size(); ++k) {
        auto outcome = type_key(index, run.state, keys[k]);
        if (outcome.accepted) {
            run.state = std::move(outcome.state);
        } else {
            run.rejected_positions.push_back(k);
        }
    }
    return run;
}

Postings complete(const AlphaIndex& index, const TypeState& state) {
    if (state.typed.empty()) throw AlphaError("completion needs at least one keystroke");
    Postings out;
    for (ItemId j : state.candidates) {
        // candidates already carry every selected category, so equal counts mean no extras
        const bool exact = index.mode() == AlphaMode::PositionIndependent
                               ? index.index().categories_of(j).size() == state.selected.size()
                               : index.folded(j).size() == state.typed.size();
        if (exact) out.push_back(j);
    }
    return out;
}

std::optional<ItemId> exact_match(const AlphaIndex& index, const TypeState& state) {
    if (state.typed.empty() || state.candidates.size() > kExactMatchListLimit) return std::nullopt;
    for (ItemId j : state.candidates) {
        if (index.folded(j) == state.typed) return j;
    }
    return std::nullopt;
}

}  // namespace tie
