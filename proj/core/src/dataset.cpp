#include "msti/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "msti/json_io.hpp"
#include "msti/random.hpp"

namespace msti {

std::string_view to_string(CoordinateSpace s) {
  return s == CoordinateSpace::pixel ? "pixel" : "relative";
}

namespace {

std::string at_line(std::size_t line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

void validate_record(const Sample& s, CoordinateSpace space,
                     std::size_t line) {
  if (s.id.empty()) {
    throw Error(errc::invariant_violation, at_line(line, "empty id"));
  }
  if (s.label == Label::not_sarcastic &&
      (!s.visual_targets.empty() || !s.text_target.empty())) {
    throw Error(errc::invariant_violation,
                at_line(line, "non-sarcastic record carries targets"));
  }
  for (const BBox& b : s.visual_targets) {
    if (b.xmax < b.xmin || b.ymax < b.ymin) {
      throw Error(errc::invariant_violation,
                  at_line(line, "inverted box in " + s.id));
    }
    if (space == CoordinateSpace::relative) {
      if (bbox_check(b)) {
        throw Error(errc::invariant_violation,
                    at_line(line, "box outside [0,1000] in " + s.id));
      }
    } else {
      if (!s.image_width || !s.image_height) {
        throw Error(
            errc::invariant_violation,
            at_line(line, "pixel-space record without image size: " + s.id));
      }
      if (b.xmin < 0 || b.ymin < 0 || b.xmax > *s.image_width ||
          b.ymax > *s.image_height) {
        throw Error(errc::pixel_out_of_image, at_line(line, s.id));
      }
    }
  }
}

}  // namespace

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::parse_error, "cannot open " + path);

  DatasetManifest m;
  std::set<std::string> seen;
  bool space_fixed = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::parse_error, at_line(lineno, e.what()));
    }

    CoordinateSpace space = CoordinateSpace::relative;
    if (j.contains("coordinate_space")) {
      const std::string tag = j.at("coordinate_space").get<std::string>();
      if (tag == "pixel") {
        space = CoordinateSpace::pixel;
      } else if (tag != "relative") {
        throw Error(errc::parse_error,
                    at_line(lineno, "unknown coordinate_space " + tag));
      }
    }
    if (!space_fixed) {
      m.coordinate_space = space;
      space_fixed = true;
    } else if (space != m.coordinate_space) {
      throw Error(errc::invariant_violation,
                  at_line(lineno, "mixed coordinate spaces"));
    }

    Sample s;
    try {
      s = j.get<Sample>();
    } catch (const Error&) {
      throw;
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::parse_error, at_line(lineno, e.what()));
    }
    validate_record(s, m.coordinate_space, lineno);
    if (!seen.insert(s.id).second) {
      throw Error(errc::duplicate_id, at_line(lineno, s.id));
    }
    if (s.label == Label::sarcastic && s.visual_targets.empty() &&
        s.text_target.empty()) {
      m.warnings.push_back(at_line(lineno, "sarcastic record " + s.id +
                                               " has no target in either "
                                               "modality"));
    }
    m.records.push_back(std::move(s));
  }
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(errc::parse_error, "cannot write " + path);
  for (const Sample& s : m.records) {
    nlohmann::json j = s;
    if (m.coordinate_space == CoordinateSpace::pixel) {
      j["coordinate_space"] = "pixel";
    }
    out << j.dump() << '\n';
  }
}

BBox normalize_box(const BBox& pixel_box, int width, int height) {
  if (width <= 0 || height <= 0) {
    throw Error(errc::bad_dimensions,
                std::to_string(width) + "x" + std::to_string(height));
  }
  if (pixel_box.xmax < pixel_box.xmin || pixel_box.ymax < pixel_box.ymin) {
    throw Error(errc::inverted, "pixel box is inverted");
  }
  if (pixel_box.xmin < 0 || pixel_box.ymin < 0 || pixel_box.xmax > width ||
      pixel_box.ymax > height) {
    throw Error(errc::pixel_out_of_image, "box exceeds image bounds");
  }
  auto scale = [](int v, int extent) {
    const long long r = std::llround(static_cast<double>(v) * 1000.0 /
                                     static_cast<double>(extent));
    return static_cast<int>(std::clamp<long long>(r, 0, kCoordMax));
  };
  BBox out{scale(pixel_box.xmin, width), scale(pixel_box.ymin, height),
           scale(pixel_box.xmax, width), scale(pixel_box.ymax, height)};
  bbox_validate(out);
  return out;
}

DatasetManifest normalize_manifest(const DatasetManifest& m) {
  if (m.coordinate_space == CoordinateSpace::relative) return m;
  DatasetManifest out = m;
  out.coordinate_space = CoordinateSpace::relative;
  for (Sample& s : out.records) {
    for (BBox& b : s.visual_targets) {
      b = normalize_box(b, *s.image_width, *s.image_height);
    }
  }
  return out;
}

DatasetManifest rebalance(const DatasetManifest& primary,
                          const DatasetManifest& donors,
                          double target_nonsarcasm_ratio, std::uint64_t seed) {
  if (target_nonsarcasm_ratio < 0.0 || target_nonsarcasm_ratio >= 1.0) {
    throw Error(errc::invalid_parameter,
                "target ratio must lie in [0,1)");
  }
  for (const Sample& d : donors.records) {
    if (d.label != Label::not_sarcastic) {
      throw Error(errc::donor_class_violation, d.id);
    }
  }
  if (!donors.records.empty() &&
      donors.coordinate_space != primary.coordinate_space) {
    throw Error(errc::wrong_coordinate_space,
                "donor coordinate space differs from primary");
  }

  std::set<std::string> ids;
  for (const Sample& s : primary.records) ids.insert(s.id);

  DatasetManifest out;
  out.coordinate_space = primary.coordinate_space;
  out.records = primary.records;

  std::mt19937_64 rng(seed);
  for (Split split : {Split::train, Split::val, Split::test}) {
    long long sarcastic = 0, non_sarcastic = 0;
    for (const Sample& s : primary.records) {
      if (s.split != split) continue;
      (s.label == Label::sarcastic ? sarcastic : non_sarcastic) += 1;
    }
    const long long want = std::llround(
        target_nonsarcasm_ratio * static_cast<double>(sarcastic) /
        (1.0 - target_nonsarcasm_ratio));
    const long long need = std::max<long long>(0, want - non_sarcastic);
    if (need == 0) continue;

    std::vector<const Sample*> pool;
    for (const Sample& d : donors.records) {
      if (d.split == split) pool.push_back(&d);
    }
    if (static_cast<long long>(pool.size()) < need) {
      throw Error(errc::insufficient_donors,
                  std::string(to_string(split)) + " needs " +
                      std::to_string(need) + ", pool has " +
                      std::to_string(pool.size()));
    }
    shuffle_portable(pool, rng);
    for (long long k = 0; k < need; ++k) {
      if (!ids.insert(pool[k]->id).second) {
        throw Error(errc::duplicate_id, pool[k]->id);
      }
      out.records.push_back(*pool[k]);
    }
  }
  return out;
}

DatasetStats dataset_stats(const DatasetManifest& m) {
  if (m.coordinate_space != CoordinateSpace::relative) {
    throw Error(errc::wrong_coordinate_space,
                "stats require the relative coordinate space");
  }
  DatasetStats stats;
  for (Split split : {Split::train, Split::val, Split::test}) {
    stats.per_split[split] = SplitCounts{};
  }
  for (const Sample& s : m.records) {
    SplitCounts& c = stats.per_split[s.split];
    ++c.total;
    ++stats.total.total;
    if (s.label == Label::sarcastic) {
      ++c.sarcastic;
      ++stats.total.sarcastic;
      const bool has_text = !s.text_target.empty();
      const bool has_visual = !s.visual_targets.empty();
      if (has_text && has_visual) ++stats.text_and_visual;
      else if (has_text) ++stats.text_only;
      else if (has_visual) ++stats.visual_only;
      else ++stats.neither;
    } else {
      ++c.non_sarcastic;
      ++stats.total.non_sarcastic;
    }
  }
  return stats;
}

std::string stats_to_json(const DatasetStats& s, int indent) {
  nlohmann::json j;
  for (const auto& [split, c] : s.per_split) {
    j["per_split"][std::string(to_string(split))] = {
        {"sarcastic", c.sarcastic},
        {"non_sarcastic", c.non_sarcastic},
        {"total", c.total}};
  }
  j["total"] = {{"sarcastic", s.total.sarcastic},
                {"non_sarcastic", s.total.non_sarcastic},
                {"total", s.total.total}};
  j["modality"] = {{"text_only", s.text_only},
                   {"visual_only", s.visual_only},
                   {"text_and_visual", s.text_and_visual},
                   {"neither", s.neither}};
  return j.dump(indent);
}

}  // namespace msti
