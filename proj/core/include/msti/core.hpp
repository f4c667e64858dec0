#pragma once

// Core domain types for multimodal sarcasm target identification:
// bounding boxes in the relative [0,1000] coordinate space, binary
// sarcasm labels, dataset samples, and the reward weighting config.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace msti {

// ---------------------------------------------------------------------------
// Errors

enum class errc {
  out_of_range,
  inverted,
  component_out_of_range,
  invalid_parameter,
  length_mismatch,
  empty_input,
  id_mismatch,
  unknown_image,
  empty_thresholds,
  bad_spans,
  positive_logprob,
  group_too_small,
  group_size_mismatch,
  mismatched_shapes,
  parse_error,
  duplicate_id,
  invariant_violation,
  bad_dimensions,
  pixel_out_of_image,
  insufficient_donors,
  donor_class_violation,
  wrong_coordinate_space,
  endpoint_unreachable,
  all_retries_failed,
  bind_failure,
  bad_request,
};

// Stable wire name ("OutOfRange", "GroupTooSmall", ...).
const char* errc_name(errc code);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

// ---------------------------------------------------------------------------
// Geometry

inline constexpr int kCoordMax = 1000;

/// Axis-aligned box in relative coordinates, 0..1000 inclusive.
/// (0,0,0,0) is the "no visual target" sentinel, (0,0,1000,1000) whole image.
struct BBox {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;

  friend bool operator==(const BBox&, const BBox&) = default;

  long long width() const { return static_cast<long long>(xmax) - xmin; }
  long long height() const { return static_cast<long long>(ymax) - ymin; }
  long long area() const { return width() * height(); }

  bool is_null_sentinel() const {
    return xmin == 0 && ymin == 0 && xmax == 0 && ymax == 0;
  }

  static BBox whole_image() { return {0, 0, kCoordMax, kCoordMax}; }
};

/// nullopt when valid, otherwise errc::out_of_range or errc::inverted.
std::optional<errc> bbox_check(const BBox& b);

/// Throws Error when the box violates an invariant.
void bbox_validate(const BBox& b);

/// Intersection over union with areas (xmax-xmin)*(ymax-ymin).
/// Both boxes must be valid. Empty intersection gives 0; two zero-area
/// boxes give 0 by convention.
double bbox_iou(const BBox& a, const BBox& b);

// ---------------------------------------------------------------------------
// Labels and samples

enum class Label : int { not_sarcastic = 0, sarcastic = 1 };

/// Canonical serialized forms: "sarcastic" / "not sarcastic".
std::string_view to_string(Label l);
std::optional<Label> label_from_string(std::string_view s);

enum class Split : int { train = 0, val = 1, test = 2 };

std::string_view to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);

/// One dataset record. Boxes are relative unless the owning manifest says
/// otherwise; width/height are only needed while boxes are still in pixels.
struct Sample {
  std::string id;
  std::string image_path;
  std::optional<int> image_width;
  std::optional<int> image_height;
  std::string text;
  Label label = Label::not_sarcastic;
  std::vector<BBox> visual_targets;
  std::string text_target;
  std::optional<std::string> rationale;
  Split split = Split::train;
  std::string origin;  // provenance tag, may be empty
};

/// Relative-space invariant check; returns a diagnostic or nullopt when ok.
/// Non-sarcastic samples must carry no visual or textual targets.
std::optional<std::string> sample_check(const Sample& s);

// ---------------------------------------------------------------------------
// Reward configuration

struct RewardConfig {
  double beta1 = 0.05;  // format compliance
  double beta2 = 0.15;  // label accuracy
  double beta3 = 0.4;   // visual grounding IoU
  double beta4 = 0.4;   // textual target match
  double beta5 = 0.3;   // over-generation penalty
  int n_box_max = 3;
  int think_word_cap = 400;
  double copy_ratio_cap = 0.8;
  double epsilon_std = 1e-6;
  bool graded_text_reward = false;  // token-F1 instead of exact set match
};

void validate(const RewardConfig& cfg);

struct RewardVector {
  double fmt = 0;
  double acc = 0;
  double box = 0;
  double txt = 0;
  double over = 0;
  double total = 0;

  friend bool operator==(const RewardVector&, const RewardVector&) = default;
};

/// Weighted sum b1*fmt + b2*acc + b3*box + b4*txt - b5*over. Components must
/// already lie in [0,1]; out-of-range raises rather than clamping so upstream
/// bugs surface. Stores and returns the total.
double reward_total(RewardVector& v, const RewardConfig& cfg);

}  // namespace msti
