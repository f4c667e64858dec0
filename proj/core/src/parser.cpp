#include "msti/parser.hpp"

#include <array>
#include <cctype>

namespace msti {

namespace {

bool is_ws(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

char lower(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

// Lowercase with internal whitespace runs collapsed to one space.
std::string fold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_ws(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(lower(c));
  }
  return out;
}

std::string_view strip_quotes(std::string_view s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s.remove_prefix(1);
    s.remove_suffix(1);
  }
  return s;
}

struct TagMatch {
  std::size_t begin = 0;  // position of '<'
  std::size_t end = 0;    // one past '>'
};

// Scans for <name> or </name>, case-insensitive, whitespace tolerated
// around the name and the slash.
std::optional<TagMatch> find_tag(std::string_view text, std::string_view name,
                                 bool closing, std::size_t from) {
  for (std::size_t i = from; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    std::size_t p = i + 1;
    while (p < text.size() && is_ws(text[p])) ++p;
    if (closing) {
      if (p >= text.size() || text[p] != '/') continue;
      ++p;
      while (p < text.size() && is_ws(text[p])) ++p;
    }
    std::size_t k = 0;
    while (k < name.size() && p < text.size() && lower(text[p]) == name[k]) {
      ++p;
      ++k;
    }
    if (k != name.size()) continue;
    while (p < text.size() && is_ws(text[p])) ++p;
    if (p < text.size() && text[p] == '>') {
      return TagMatch{i, p + 1};
    }
  }
  return std::nullopt;
}

struct Tuple4 {
  std::array<long long, 4> values{};
  std::array<CoordSpan, 4> spans{};
};

struct BoxListScan {
  bool ok = false;
  std::vector<Tuple4> tuples;
};

// Grammar: '[' ( '(' int ',' int ',' int ',' int ')' ( ',' tuple )* )? ']'
// with whitespace allowed between elements and nothing after the ']'.
// Integers are bare digit runs; spans are absolute via base_offset.
BoxListScan scan_box_list(std::string_view value, std::size_t base_offset) {
  BoxListScan out;
  std::size_t i = 0;
  auto skip = [&] {
    while (i < value.size() && is_ws(value[i])) ++i;
  };
  skip();
  if (i >= value.size() || value[i] != '[') return out;
  ++i;
  skip();
  if (i < value.size() && value[i] == ']') {
    ++i;
    skip();
    out.ok = (i == value.size());
    return out;
  }
  while (true) {
    if (i >= value.size() || value[i] != '(') return out;
    ++i;
    Tuple4 t;
    for (int k = 0; k < 4; ++k) {
      skip();
      const std::size_t digits_begin = i;
      long long v = 0;
      while (i < value.size() && value[i] >= '0' && value[i] <= '9') {
        if (v <= kCoordMax) v = v * 10 + (value[i] - '0');
        ++i;
      }
      if (i == digits_begin) return out;  // not a digit run
      t.values[k] = v;
      t.spans[k] = {base_offset + digits_begin, base_offset + i};
      skip();
      if (k < 3) {
        if (i >= value.size() || value[i] != ',') return out;
        ++i;
      }
    }
    if (i >= value.size() || value[i] != ')') return out;
    ++i;
    out.tuples.push_back(t);
    skip();
    if (i < value.size() && value[i] == ',') {
      ++i;
      skip();
      continue;
    }
    break;
  }
  if (i >= value.size() || value[i] != ']') return out;
  ++i;
  skip();
  out.ok = (i == value.size());
  return out;
}

AnswerParseResult answer_failure(ParseFailure f, std::string field = {}) {
  AnswerParseResult r;
  r.failure = f;
  r.failed_field = std::move(field);
  return r;
}

// Locates the "image objects" field value inside an answer body and returns
// its scan; used by both the full parse and the span extractor.
std::optional<std::pair<BoxListScan, std::size_t>> scan_image_objects(
    std::string_view body, std::size_t body_offset) {
  std::size_t line_start = 0;
  while (line_start <= body.size()) {
    std::size_t line_end = body.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = body.size();
    std::string_view line = body.substr(line_start, line_end - line_start);
    const std::size_t colon = line.find(':');
    if (colon != std::string_view::npos &&
        fold(line.substr(0, colon)) == "image objects") {
      std::size_t value_begin = line_start + colon + 1;
      std::string_view value = body.substr(value_begin, line_end - value_begin);
      return std::make_pair(scan_box_list(value, body_offset + value_begin),
                            value_begin);
    }
    if (line_end == body.size()) break;
    line_start = line_end + 1;
  }
  return std::nullopt;
}

}  // namespace

const char* to_string(ParseFailure f) {
  switch (f) {
    case ParseFailure::none: return "None";
    case ParseFailure::missing_think: return "MissingThink";
    case ParseFailure::missing_answer: return "MissingAnswer";
    case ParseFailure::duplicate_answer: return "DuplicateAnswer";
    case ParseFailure::bad_field: return "BadField";
    case ParseFailure::bad_coordinate: return "BadCoordinate";
  }
  return "None";
}

AnswerParseResult parse_answer_block(std::string_view body) {
  ParsedAnswer answer;
  bool saw_label = false, saw_boxes = false, saw_keywords = false;

  std::size_t line_start = 0;
  while (line_start <= body.size()) {
    std::size_t line_end = body.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = body.size();
    std::string_view raw = body.substr(line_start, line_end - line_start);
    std::string_view line = trim(raw);
    const std::size_t advance = line_end == body.size() ? body.size() + 1 : line_end + 1;

    if (line.empty()) {
      line_start = advance;
      continue;
    }
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      return answer_failure(ParseFailure::bad_field,
                            std::string(line.substr(0, 40)));
    }
    const std::string key = fold(line.substr(0, colon));
    std::string_view value = trim(line.substr(colon + 1));

    if (key == "label") {
      if (saw_label) return answer_failure(ParseFailure::bad_field, "Label");
      saw_label = true;
      const std::string folded = fold(strip_quotes(value));
      auto label = label_from_string(folded);
      if (!label) return answer_failure(ParseFailure::bad_field, "Label");
      answer.label = *label;
    } else if (key == "image objects") {
      if (saw_boxes) {
        return answer_failure(ParseFailure::bad_field, "Image Objects");
      }
      saw_boxes = true;
      BoxListScan scan = scan_box_list(value, 0);
      if (!scan.ok) {
        return answer_failure(ParseFailure::bad_field, "Image Objects");
      }
      for (const Tuple4& t : scan.tuples) {
        BBox b{static_cast<int>(t.values[0]), static_cast<int>(t.values[1]),
               static_cast<int>(t.values[2]), static_cast<int>(t.values[3])};
        for (long long v : t.values) {
          if (v > kCoordMax) return answer_failure(ParseFailure::bad_coordinate);
        }
        if (bbox_check(b)) return answer_failure(ParseFailure::bad_coordinate);
        if (!b.is_null_sentinel()) answer.boxes.push_back(b);
      }
    } else if (key == "text objects") {
      if (saw_keywords) {
        return answer_failure(ParseFailure::bad_field, "Text Objects");
      }
      saw_keywords = true;
      answer.keywords = std::string(trim(strip_quotes(value)));
    } else {
      return answer_failure(ParseFailure::bad_field,
                            std::string(line.substr(0, colon)));
    }
    line_start = advance;
  }

  if (!saw_label) return answer_failure(ParseFailure::bad_field, "Label");
  if (!saw_boxes) {
    return answer_failure(ParseFailure::bad_field, "Image Objects");
  }
  if (!saw_keywords) {
    return answer_failure(ParseFailure::bad_field, "Text Objects");
  }

  AnswerParseResult r;
  r.answer = std::move(answer);
  return r;
}

ParsedResponse parse_response(std::string_view text) {
  ParsedResponse r;

  const auto think_open = find_tag(text, "think", false, 0);
  const auto think_close =
      think_open ? find_tag(text, "think", true, think_open->end) : std::nullopt;
  if (!think_open || !think_close) {
    r.failure = ParseFailure::missing_think;
    return r;
  }
  r.think = std::string(
      trim(text.substr(think_open->end, think_close->begin - think_open->end)));

  const auto answer_open = find_tag(text, "answer", false, think_close->end);
  const auto answer_close =
      answer_open ? find_tag(text, "answer", true, answer_open->end)
                  : std::nullopt;
  if (!answer_open || !answer_close) {
    r.failure = ParseFailure::missing_answer;
    return r;
  }
  // A second Answer block is a reward-hacking shape, not trailing garbage.
  if (find_tag(text, "answer", false, answer_close->end)) {
    r.failure = ParseFailure::duplicate_answer;
    return r;
  }

  AnswerParseResult parsed = parse_answer_block(
      text.substr(answer_open->end, answer_close->begin - answer_open->end));
  if (!parsed.answer) {
    r.failure = parsed.failure;
    r.failed_field = std::move(parsed.failed_field);
    return r;
  }
  r.answer = std::move(*parsed.answer);
  r.format_ok = true;
  return r;
}

std::string render_answer(const ParsedAnswer& a) {
  std::string out = "Label: \"";
  out += to_string(a.label);
  out += "\"\nImage Objects: [";
  if (a.boxes.empty()) {
    out += "(0,0,0,0)";
  } else {
    for (std::size_t i = 0; i < a.boxes.size(); ++i) {
      if (i > 0) out += ",";
      const BBox& b = a.boxes[i];
      out += "(" + std::to_string(b.xmin) + "," + std::to_string(b.ymin) + "," +
             std::to_string(b.xmax) + "," + std::to_string(b.ymax) + ")";
    }
  }
  out += "]\nText Objects: \"";
  out += a.keywords;
  out += "\"";
  return out;
}

std::vector<CoordSpan> extract_coordinate_spans(std::string_view text) {
  const auto open = find_tag(text, "answer", false, 0);
  const auto close = open ? find_tag(text, "answer", true, open->end) : std::nullopt;
  if (!open || !close) return {};

  std::string_view body = text.substr(open->end, close->begin - open->end);
  auto scanned = scan_image_objects(body, open->end);
  if (!scanned || !scanned->first.ok) return {};

  std::vector<CoordSpan> spans;
  for (const Tuple4& t : scanned->first.tuples) {
    for (long long v : t.values) {
      if (v > kCoordMax) return {};
    }
    for (const CoordSpan& s : t.spans) spans.push_back(s);
  }
  return spans;
}

}  // namespace msti
