#include "msti/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace msti {

namespace {

double safe_div(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double f1_from(double p, double r) {
  return (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

ClassificationReport classification_report(const std::vector<Label>& preds,
                                           const std::vector<Label>& refs) {
  if (preds.empty()) throw Error(errc::empty_input, "no predictions");
  if (preds.size() != refs.size()) {
    throw Error(errc::length_mismatch,
                std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(refs.size()) + " references");
  }
  ClassificationReport r;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Label::sarcastic;
    const bool g = refs[i] == Label::sarcastic;
    if (p && g) ++r.tp;
    else if (p && !g) ++r.fp;
    else if (!p && g) ++r.fn;
    else ++r.tn;
  }
  const double total = static_cast<double>(r.tp + r.fp + r.tn + r.fn);
  r.accuracy = static_cast<double>(r.tp + r.tn) / total;
  r.precision = safe_div(static_cast<double>(r.tp),
                         static_cast<double>(r.tp + r.fp));
  r.recall = safe_div(static_cast<double>(r.tp),
                      static_cast<double>(r.tp + r.fn));
  r.f1_sarcastic = f1_from(r.precision, r.recall);
  const double p_neg = safe_div(static_cast<double>(r.tn),
                                static_cast<double>(r.tn + r.fn));
  const double r_neg = safe_div(static_cast<double>(r.tn),
                                static_cast<double>(r.tn + r.fp));
  r.macro_f1 = 0.5 * (r.f1_sarcastic + f1_from(p_neg, r_neg));
  return r;
}

std::vector<std::string> normalize_tokens(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) {
      std::string_view tok = s.substr(i, j - i);
      while (!tok.empty() && is_punct(tok.front())) tok.remove_prefix(1);
      while (!tok.empty() && is_punct(tok.back())) tok.remove_suffix(1);
      if (!tok.empty()) {
        std::string lowered;
        lowered.reserve(tok.size());
        for (char c : tok) {
          lowered.push_back(
              static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        tokens.push_back(std::move(lowered));
      }
    }
    i = j;
  }
  return tokens;
}

std::string normalize_text(std::string_view s) {
  std::string out;
  for (const std::string& tok : normalize_tokens(s)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

int text_em(std::string_view pred, std::string_view ref, bool strict) {
  if (strict) return pred == ref ? 1 : 0;
  return normalize_text(pred) == normalize_text(ref) ? 1 : 0;
}

double corpus_em(const std::vector<std::string>& preds,
                 const std::vector<std::string>& refs, bool strict) {
  if (preds.empty()) throw Error(errc::empty_input, "no predictions");
  if (preds.size() != refs.size()) {
    throw Error(errc::length_mismatch, "EM corpus lengths differ");
  }
  long long hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += text_em(preds[i], refs[i], strict);
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double text_token_f1(std::string_view pred, std::string_view ref) {
  std::vector<std::string> pv = normalize_tokens(pred);
  std::vector<std::string> rv = normalize_tokens(ref);
  std::set<std::string> ps(pv.begin(), pv.end());
  std::set<std::string> rs(rv.begin(), rv.end());
  if (ps.empty() && rs.empty()) return 1.0;
  if (ps.empty() || rs.empty()) return 0.0;
  std::size_t inter = 0;
  for (const std::string& t : ps) inter += rs.count(t);
  const double p = static_cast<double>(inter) / static_cast<double>(ps.size());
  const double r = static_cast<double>(inter) / static_cast<double>(rs.size());
  return f1_from(p, r);
}

namespace {

double ap_at_threshold(const std::vector<const Detection*>& ranked,
                       const std::map<std::string, std::vector<BBox>>& gts,
                       std::size_t total_gt, double threshold) {
  if (total_gt == 0) return ranked.empty() ? 1.0 : 0.0;

  std::map<std::string, std::vector<bool>> used;
  for (const auto& [id, boxes] : gts) {
    used[id].assign(boxes.size(), false);
  }

  std::vector<bool> is_tp(ranked.size(), false);
  for (std::size_t d = 0; d < ranked.size(); ++d) {
    const Detection& det = *ranked[d];
    const std::vector<BBox>& boxes = gts.at(det.image_id);
    std::vector<bool>& taken = used[det.image_id];
    double best = -1.0;
    std::size_t best_j = boxes.size();
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (taken[j]) continue;
      const double iou = bbox_iou(det.box, boxes[j]);
      if (iou > best) {
        best = iou;
        best_j = j;
      }
    }
    if (best_j < boxes.size() && best >= threshold) {
      taken[best_j] = true;
      is_tp[d] = true;
    }
  }

  std::vector<double> precision(ranked.size());
  std::vector<double> recall(ranked.size());
  long long tp = 0;
  for (std::size_t d = 0; d < ranked.size(); ++d) {
    if (is_tp[d]) ++tp;
    precision[d] = static_cast<double>(tp) / static_cast<double>(d + 1);
    recall[d] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }

  // Precision envelope: max precision at any recall >= the sample point.
  for (std::size_t d = ranked.size(); d-- > 1;) {
    precision[d - 1] = std::max(precision[d - 1], precision[d]);
  }

  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double p = 0.0;
    for (std::size_t d = 0; d < ranked.size(); ++d) {
      if (recall[d] >= r - 1e-12) {
        p = precision[d];
        break;
      }
    }
    sum += p;
  }
  return sum / 101.0;
}

}  // namespace

APReport visual_ap(const std::vector<Detection>& dets,
                   const std::map<std::string, std::vector<BBox>>& gts,
                   const std::vector<double>& thresholds) {
  if (thresholds.empty()) {
    throw Error(errc::empty_thresholds, "need at least one IoU threshold");
  }
  std::size_t total_gt = 0;
  for (const auto& [id, boxes] : gts) total_gt += boxes.size();
  for (const Detection& d : dets) {
    if (!gts.count(d.image_id)) {
      throw Error(errc::unknown_image, d.image_id);
    }
    bbox_validate(d.box);
  }

  std::vector<const Detection*> ranked;
  ranked.reserve(dets.size());
  for (const Detection& d : dets) ranked.push_back(&d);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Detection* a, const Detection* b) {
                     return a->confidence > b->confidence;
                   });

  APReport report;
  for (double t : thresholds) {
    report.per_threshold[t] = ap_at_threshold(ranked, gts, total_gt, t);
  }
  double sum = 0.0;
  for (const auto& [t, v] : report.per_threshold) sum += v;
  report.ap = sum / static_cast<double>(report.per_threshold.size());
  auto near = [&](double want) -> double {
    for (const auto& [t, v] : report.per_threshold) {
      if (std::abs(t - want) < 1e-9) return v;
    }
    return 0.0;
  };
  report.ap50 = near(0.50);
  report.ap75 = near(0.75);
  return report;
}

EvalReport msti_evaluate(const std::vector<ParsedResponse>& preds,
                         const std::vector<Sample>& refs) {
  if (refs.empty()) throw Error(errc::empty_input, "empty test set");
  if (preds.size() != refs.size()) {
    throw Error(errc::id_mismatch,
                std::to_string(preds.size()) + " predictions vs " +
                    std::to_string(refs.size()) + " references");
  }

  EvalReport report;
  report.n_samples = static_cast<long long>(refs.size());

  std::vector<Label> pred_labels, ref_labels;
  std::vector<std::string> pred_texts, ref_texts;
  std::vector<Detection> dets;
  std::map<std::string, std::vector<BBox>> gts;
  double f1_sum = 0.0;

  for (std::size_t i = 0; i < refs.size(); ++i) {
    const Sample& s = refs[i];
    const ParsedResponse& p = preds[i];
    gts[s.id] = s.visual_targets;
    ref_labels.push_back(s.label);
    ref_texts.push_back(s.text_target);
    if (p.format_ok) {
      pred_labels.push_back(p.answer.label);
      pred_texts.push_back(p.answer.keywords);
      for (const BBox& b : p.answer.boxes) {
        dets.push_back({s.id, b, 1.0});
      }
    } else {
      ++report.n_malformed;
      pred_labels.push_back(Label::not_sarcastic);
      pred_texts.push_back("");
    }
    f1_sum += text_token_f1(pred_texts.back(), ref_texts.back());
  }

  report.classification = classification_report(pred_labels, ref_labels);
  report.em = corpus_em(pred_texts, ref_texts);
  report.token_f1 = f1_sum / static_cast<double>(refs.size());
  report.ap = visual_ap(dets, gts);
  return report;
}

std::string eval_report_to_json(const EvalReport& report, int indent) {
  nlohmann::json j;
  j["accuracy"] = report.classification.accuracy;
  j["precision"] = report.classification.precision;
  j["recall"] = report.classification.recall;
  j["macro_f1"] = report.classification.macro_f1;
  j["f1_sarcastic"] = report.classification.f1_sarcastic;
  j["em"] = report.em;
  j["token_f1"] = report.token_f1;
  j["ap"] = report.ap.ap;
  j["ap50"] = report.ap.ap50;
  j["ap75"] = report.ap.ap75;
  j["counts"] = {{"tp", report.classification.tp},
                 {"fp", report.classification.fp},
                 {"tn", report.classification.tn},
                 {"fn", report.classification.fn},
                 {"n_samples", report.n_samples},
                 {"n_malformed", report.n_malformed}};
  nlohmann::json per;
  char buf[16];
  for (const auto& [t, v] : report.ap.per_threshold) {
    std::snprintf(buf, sizeof(buf), "%.2f", t);
    per[buf] = v;
  }
  j["ap_per_threshold"] = per;
  return j.dump(indent);
}

}  // namespace msti
