#include "msti/core.hpp"

#include <algorithm>
#include <cmath>

namespace msti {

const char* errc_name(errc code) {
  switch (code) {
    case errc::out_of_range: return "OutOfRange";
    case errc::inverted: return "Inverted";
    case errc::component_out_of_range: return "ComponentOutOfRange";
    case errc::invalid_parameter: return "InvalidParameter";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::empty_input: return "Empty";
    case errc::id_mismatch: return "IdMismatch";
    case errc::unknown_image: return "UnknownImage";
    case errc::empty_thresholds: return "EmptyThresholds";
    case errc::bad_spans: return "BadSpans";
    case errc::positive_logprob: return "PositiveLogProb";
    case errc::group_too_small: return "GroupTooSmall";
    case errc::group_size_mismatch: return "GroupSizeMismatch";
    case errc::mismatched_shapes: return "MismatchedShapes";
    case errc::parse_error: return "ParseError";
    case errc::duplicate_id: return "DuplicateId";
    case errc::invariant_violation: return "InvariantViolation";
    case errc::bad_dimensions: return "BadDimensions";
    case errc::pixel_out_of_image: return "PixelOutOfImage";
    case errc::insufficient_donors: return "InsufficientDonors";
    case errc::donor_class_violation: return "DonorClassViolation";
    case errc::wrong_coordinate_space: return "WrongCoordinateSpace";
    case errc::endpoint_unreachable: return "EndpointUnreachable";
    case errc::all_retries_failed: return "AllRetriesFailed";
    case errc::bind_failure: return "BindFailure";
    case errc::bad_request: return "BadRequest";
  }
  return "Unknown";
}

std::optional<errc> bbox_check(const BBox& b) {
  if (b.xmin < 0 || b.ymin < 0 || b.xmax > kCoordMax || b.ymax > kCoordMax) {
    return errc::out_of_range;
  }
  if (b.xmin > b.xmax || b.ymin > b.ymax) {
    return errc::inverted;
  }
  return std::nullopt;
}

void bbox_validate(const BBox& b) {
  if (auto bad = bbox_check(b)) {
    throw Error(*bad, "invalid box (" + std::to_string(b.xmin) + "," +
                          std::to_string(b.ymin) + "," + std::to_string(b.xmax) +
                          "," + std::to_string(b.ymax) + ")");
  }
}

double bbox_iou(const BBox& a, const BBox& b) {
  bbox_validate(a);
  bbox_validate(b);
  const long long ix = std::max(
      0LL, static_cast<long long>(std::min(a.xmax, b.xmax)) - std::max(a.xmin, b.xmin));
  const long long iy = std::max(
      0LL, static_cast<long long>(std::min(a.ymax, b.ymax)) - std::max(a.ymin, b.ymin));
  const long long inter = ix * iy;
  const long long uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;  // two zero-area boxes
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::string_view to_string(Label l) {
  return l == Label::sarcastic ? "sarcastic" : "not sarcastic";
}

std::optional<Label> label_from_string(std::string_view s) {
  if (s == "sarcastic") return Label::sarcastic;
  if (s == "not sarcastic") return Label::not_sarcastic;
  return std::nullopt;
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> split_from_string(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  return std::nullopt;
}

std::optional<std::string> sample_check(const Sample& s) {
  if (s.id.empty()) return "id is empty";
  for (const BBox& b : s.visual_targets) {
    if (auto bad = bbox_check(b)) {
      return std::string("visual_targets: ") + errc_name(*bad);
    }
  }
  if (s.label == Label::not_sarcastic) {
    if (!s.visual_targets.empty()) {
      return "non-sarcastic sample has visual_targets";
    }
    if (!s.text_target.empty()) {
      return "non-sarcastic sample has text_target";
    }
  }
  return std::nullopt;
}

void validate(const RewardConfig& cfg) {
  if (cfg.beta1 < 0 || cfg.beta2 < 0 || cfg.beta3 < 0 || cfg.beta4 < 0 ||
      cfg.beta5 < 0) {
    throw Error(errc::invalid_parameter, "reward weights must be nonnegative");
  }
  if (cfg.n_box_max < 1) {
    throw Error(errc::invalid_parameter, "n_box_max must be >= 1");
  }
  if (cfg.think_word_cap < 0) {
    throw Error(errc::invalid_parameter, "think_word_cap must be >= 0");
  }
  if (!(cfg.copy_ratio_cap > 0.0 && cfg.copy_ratio_cap <= 1.0)) {
    throw Error(errc::invalid_parameter, "copy_ratio_cap must be in (0,1]");
  }
  if (cfg.epsilon_std < 0) {
    throw Error(errc::invalid_parameter, "epsilon_std must be >= 0");
  }
}

double reward_total(RewardVector& v, const RewardConfig& cfg) {
  validate(cfg);
  const double* comps[] = {&v.fmt, &v.acc, &v.box, &v.txt, &v.over};
  const char* names[] = {"fmt", "acc", "box", "txt", "over"};
  for (int i = 0; i < 5; ++i) {
    const double c = *comps[i];
    if (!(c >= 0.0 && c <= 1.0)) {
      throw Error(errc::component_out_of_range,
                  std::string("reward component ") + names[i] + " outside [0,1]");
    }
  }
  v.total = cfg.beta1 * v.fmt + cfg.beta2 * v.acc + cfg.beta3 * v.box +
            cfg.beta4 * v.txt - cfg.beta5 * v.over;
  return v.total;
}

}  // namespace msti
