#pragma once

// Parser for the grounded chain-of-thought response grammar: a
// <Think>...</Think> rationale followed by an <Answer>...</Answer> block
// carrying Label, Image Objects and Text Objects fields.
//
// Parsing never throws; malformed input comes back as format_ok=false with
// a machine-readable failure reason.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msti/core.hpp"

namespace msti {

enum class ParseFailure {
  none,
  missing_think,
  missing_answer,
  duplicate_answer,
  bad_field,
  bad_coordinate,
};

const char* to_string(ParseFailure f);

/// Structured interior of an Answer block. Boxes are normalized: the
/// (0,0,0,0) sentinel and empty brackets both become an empty list.
struct ParsedAnswer {
  Label label = Label::not_sarcastic;
  std::vector<BBox> boxes;
  std::string keywords;  // trimmed, wire quotes stripped

  friend bool operator==(const ParsedAnswer&, const ParsedAnswer&) = default;
};

struct ParsedResponse {
  std::string think;
  ParsedAnswer answer;
  bool format_ok = false;
  ParseFailure failure = ParseFailure::none;
  std::string failed_field;  // populated for bad_field
};

/// Character offsets (half-open) of one coordinate number; digits only.
struct CoordSpan {
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const CoordSpan&, const CoordSpan&) = default;
};

struct AnswerParseResult {
  std::optional<ParsedAnswer> answer;
  ParseFailure failure = ParseFailure::none;
  std::string failed_field;
};

/// Extracts the first Think/Answer pair (tags case-insensitive and
/// whitespace-tolerant) and parses the answer fields. Tolerates arbitrary
/// byte noise; trailing garbage after </Answer> is ignored but a second
/// Answer block flips format_ok off.
ParsedResponse parse_response(std::string_view text);

/// Parses the interior of an Answer block: the three fields by
/// case-insensitive key name, in any order, each on its own line.
/// Unknown or duplicated fields fail.
AnswerParseResult parse_answer_block(std::string_view body);

/// Canonical three-line Answer body; the inverse of parse_answer_block.
/// An empty box list always renders as [(0,0,0,0)]. Keywords must be a
/// single line without surrounding quotes for the round trip to hold.
std::string render_answer(const ParsedAnswer& a);

/// Spans of every integer inside a parenthesized 4-tuple within the
/// Image Objects field of the first Answer block (sentinel tuples
/// included). Empty when no structurally valid field exists.
std::vector<CoordSpan> extract_coordinate_spans(std::string_view text);

}  // namespace msti
