#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "msti/core.hpp"
#include "msti/parser.hpp"

namespace msti {

struct ClassificationReport {
  long long tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // sarcastic class
  double recall = 0.0;     // sarcastic class
  double f1_sarcastic = 0.0;
  double macro_f1 = 0.0;
};

// preds/refs must be nonempty and the same length.
ClassificationReport classification_report(const std::vector<Label>& preds,
                                           const std::vector<Label>& refs);

// Case-fold, strip leading/trailing punctuation per whitespace token,
// collapse whitespace. Shared by EM, token F1, and the reward module.
std::string normalize_text(std::string_view s);
std::vector<std::string> normalize_tokens(std::string_view s);

// strict=true compares raw strings; otherwise both sides are normalized.
int text_em(std::string_view pred, std::string_view ref, bool strict = false);
double corpus_em(const std::vector<std::string>& preds,
                 const std::vector<std::string>& refs, bool strict = false);

// F1 over normalized token sets. Both empty -> 1, exactly one empty -> 0.
double text_token_f1(std::string_view pred, std::string_view ref);

struct Detection {
  std::string image_id;
  BBox box;
  double confidence = 1.0;
};

struct APReport {
  double ap = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::map<double, double> per_threshold;
};

// Integer-ratio construction so an IoU that is exactly a threshold's
// rational value compares equal to it.
inline std::vector<double> coco_thresholds() {
  std::vector<double> t;
  for (int i = 50; i <= 95; i += 5) t.push_back(i / 100.0);
  return t;
}

// Greedy highest-IoU matching per threshold, 101-point interpolation.
// Detections are ranked by descending confidence, ties in input order.
// Every detection image_id must be a key of gts. With zero ground-truth
// boxes overall, AP is 1 when there are no detections and 0 otherwise.
APReport visual_ap(const std::vector<Detection>& dets,
                   const std::map<std::string, std::vector<BBox>>& gts,
                   const std::vector<double>& thresholds = coco_thresholds());

struct EvalReport {
  ClassificationReport classification;
  double em = 0.0;
  double token_f1 = 0.0;
  APReport ap;
  long long n_samples = 0;
  long long n_malformed = 0;
};

// Predictions align positionally with references. Malformed predictions
// (format_ok=false) contribute not-sarcastic, no boxes, empty keywords.
EvalReport msti_evaluate(const std::vector<ParsedResponse>& preds,
                         const std::vector<Sample>& refs);

std::string eval_report_to_json(const EvalReport& report, int indent = 2);

}  // namespace msti
