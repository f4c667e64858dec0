#include "msti/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "msti/metrics.hpp"

namespace msti {

double reward_format(const ParsedResponse& r) { return r.format_ok ? 1.0 : 0.0; }

double reward_accuracy(Label pred, Label gt) { return pred == gt ? 1.0 : 0.0; }

double reward_box(const std::vector<BBox>& pred, const std::vector<BBox>& gt) {
  if (gt.empty()) return pred.empty() ? 1.0 : 0.0;
  if (pred.empty()) return 0.0;

  struct Pair {
    double iou;
    std::size_t i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(pred.size() * gt.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gt.size(); ++j) {
      pairs.push_back({bbox_iou(pred[i], gt[j]), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  double sum = 0.0;
  for (const Pair& p : pairs) {
    if (pred_used[p.i] || gt_used[p.j]) continue;
    pred_used[p.i] = true;
    gt_used[p.j] = true;
    sum += p.iou;
  }
  return sum / static_cast<double>(std::max(pred.size(), gt.size()));
}

namespace {

// Comma-split into phrases, normalize each, drop empties.
std::set<std::string> keyword_set(std::string_view s) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string_view::npos) comma = s.size();
    std::string phrase = normalize_text(s.substr(start, comma - start));
    if (!phrase.empty()) out.insert(std::move(phrase));
    if (comma == s.size()) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

double reward_text(std::string_view pred, std::string_view gt, bool graded) {
  if (graded) return text_token_f1(pred, gt);
  return keyword_set(pred) == keyword_set(gt) ? 1.0 : 0.0;
}

double penalty_over(const ParsedResponse& r, std::string_view input_text,
                    const RewardConfig& cfg) {
  int fired = 0;

  if (static_cast<int>(r.answer.boxes.size()) > cfg.n_box_max) ++fired;

  long long words = 0;
  bool in_word = false;
  for (char c : r.think) {
    const bool space = c == ' ' || c == '\t' || c == '\r' || c == '\n';
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  if (words > cfg.think_word_cap) ++fired;

  std::vector<std::string> input_tokens = normalize_tokens(input_text);
  std::set<std::string> input_set(input_tokens.begin(), input_tokens.end());
  if (input_set.size() >= 5) {
    std::vector<std::string> kw = normalize_tokens(r.answer.keywords);
    std::set<std::string> kw_set(kw.begin(), kw.end());
    std::size_t covered = 0;
    for (const std::string& t : input_set) covered += kw_set.count(t);
    const double ratio =
        static_cast<double>(covered) / static_cast<double>(input_set.size());
    if (ratio >= cfg.copy_ratio_cap) ++fired;
  }

  return fired / 3.0;
}

RewardVector score_completion(std::string_view completion, const Sample& gt,
                              const RewardConfig& cfg) {
  const ParsedResponse parsed = parse_response(completion);
  RewardVector v;
  v.fmt = reward_format(parsed);
  const Label pred_label =
      parsed.format_ok ? parsed.answer.label : Label::not_sarcastic;
  v.acc = reward_accuracy(pred_label, gt.label);
  v.box = reward_box(parsed.format_ok ? parsed.answer.boxes
                                      : std::vector<BBox>{},
                     gt.visual_targets);
  v.txt = reward_text(parsed.format_ok ? parsed.answer.keywords : "",
                      gt.text_target, cfg.graded_text_reward);
  v.over = penalty_over(parsed, gt.text, cfg);
  reward_total(v, cfg);
  return v;
}

std::vector<double> standardize(const std::vector<double>& totals,
                                double epsilon_std) {
  const std::size_t n = totals.size();
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double t : totals) var += (t - mean) * (t - mean);
  var /= static_cast<double>(n);
  const double sd = std::sqrt(var);

  std::vector<double> adv(n, 0.0);
  if (sd < epsilon_std) return adv;
  for (std::size_t i = 0; i < n; ++i) adv[i] = (totals[i] - mean) / sd;
  return adv;
}

GroupScores score_group(const std::vector<std::string>& completions,
                        const Sample& gt, const RewardConfig& cfg,
                        std::vector<RewardVector>* vectors) {
  if (completions.size() < 2) {
    throw Error(errc::group_too_small,
                "group size " + std::to_string(completions.size()));
  }
  validate(cfg);

  GroupScores scores;
  scores.totals.reserve(completions.size());
  for (const std::string& c : completions) {
    RewardVector v = score_completion(c, gt, cfg);
    scores.totals.push_back(v.total);
    if (vectors) vectors->push_back(v);
  }
  scores.advantages = standardize(scores.totals, cfg.epsilon_std);
  return scores;
}

}  // namespace msti
