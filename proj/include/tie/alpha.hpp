#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tie/association_index.hpp"

namespace tie {

enum class AlphaMode { PositionIndependent, PositionDependent };

std::string_view to_string(AlphaMode mode);
AlphaMode parse_alpha_mode(std::string_view text);

/// Invalid sequences decode to U+FFFD.
std::u32string decode_utf8(std::string_view utf8);
/// Simple lowercase mapping for ASCII, Latin-1, Greek and Cyrillic capitals.
char32_t fold_char(char32_t c);
/// decode_utf8 followed by fold_char.
std::u32string fold(std::string_view utf8);
std::string to_utf8(std::u32string_view text);

class AlphaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Names indexed by character (PI) or by (character, position) (PD).
class AlphaIndex {
public:
    static AlphaIndex build(std::span<const std::string> names, AlphaMode mode);

    AlphaMode mode() const { return mode_; }
    std::size_t size() const { return names_.size(); }
    const std::string& name(ItemId j) const { return names_.at(j); }
    const std::u32string& folded(ItemId j) const { return folded_.at(j); }
    const AssociationIndex& index() const { return index_; }

    /// Category for `ch` typed at `position` (position ignored in PI mode), if indexed.
    std::optional<CategoryId> category_for(char32_t ch, std::size_t position) const;

private:
    AlphaMode mode_ = AlphaMode::PositionIndependent;
    std::vector<std::string> names_;
    std::vector<std::u32string> folded_;
    AssociationIndex index_;
};

struct TypeState {
    std::u32string typed;  // accepted keystrokes, folded
    std::vector<CategoryId> selected;  // ascending
    Postings candidates;
    bool completed = false;
};

TypeState initial_state(const AlphaIndex& index);

struct KeyOutcome {
    TypeState state;
    bool accepted = true;  // false: the keystroke would have emptied the list
};

KeyOutcome type_key(const AlphaIndex& index, const TypeState& state, char32_t ch);

/// Replays `typed` keystroke by keystroke; rejected keystrokes are skipped.
struct TypedRun {
    TypeState state;
    std::vector<std::size_t> rejected_positions;
};
TypedRun type_string(const AlphaIndex& index, std::string_view typed);

/// Negates every untyped character (PI) or every untyped position (PD).
Postings complete(const AlphaIndex& index, const TypeState& state);

inline constexpr std::size_t kExactMatchListLimit = 100;

/// Candidate whose folded name equals the typed text, looked for only when
/// the list holds at most kExactMatchListLimit names.
std::optional<ItemId> exact_match(const AlphaIndex& index, const TypeState& state);

}  // namespace tie
