#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msti/core.hpp"

namespace msti {

enum class CoordinateSpace { pixel, relative };

std::string_view to_string(CoordinateSpace s);

struct DatasetManifest {
  std::vector<Sample> records;
  CoordinateSpace coordinate_space = CoordinateSpace::relative;
  std::vector<std::string> warnings;
};

struct SplitCounts {
  long long sarcastic = 0;
  long long non_sarcastic = 0;
  long long total = 0;
};

struct DatasetStats {
  std::map<Split, SplitCounts> per_split;
  SplitCounts total;
  long long text_only = 0;
  long long visual_only = 0;
  long long text_and_visual = 0;
  long long neither = 0;  // sarcastic records with no recorded target
};

// JSONL, one record per line. Records may carry a "coordinate_space"
// tag ("pixel" or "relative", default relative); it must be uniform.
// Pixel-space boxes are validated against the record's image size,
// relative ones against [0,1000].
DatasetManifest load_manifest(const std::string& path);

void save_manifest(const DatasetManifest& m, const std::string& path);

// round-half-away-from-zero(v*1000/extent), clamped to [0,1000].
BBox normalize_box(const BBox& pixel_box, int width, int height);

// Maps every record into the relative space; no-op when already there.
DatasetManifest normalize_manifest(const DatasetManifest& m);

// Seeded draw without replacement from same-split donors until each
// split's non-sarcastic fraction reaches the target within one record.
// Splits already at or above the target receive nothing.
DatasetManifest rebalance(const DatasetManifest& primary,
                          const DatasetManifest& donors,
                          double target_nonsarcasm_ratio, std::uint64_t seed);

DatasetStats dataset_stats(const DatasetManifest& m);

std::string stats_to_json(const DatasetStats& s, int indent = 2);

}  // namespace msti
