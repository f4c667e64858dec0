#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "msti/core.hpp"
#include "msti/parser.hpp"

namespace msti {

struct GroupScores {
  std::vector<double> totals;
  std::vector<double> advantages;
};

double reward_format(const ParsedResponse& r);
double reward_accuracy(Label pred, Label gt);

// Greedy descending-IoU pairing, each box used once, normalized by
// max(|pred|, |gt|). Empty gt: 1 if pred is also empty, else 0.
double reward_box(const std::vector<BBox>& pred, const std::vector<BBox>& gt);

// Comma-split both strings into normalized keyword sets; 1 iff equal.
// graded=true scores token F1 instead of set equality.
double reward_text(std::string_view pred, std::string_view gt,
                   bool graded = false);

// Mean of three binary sub-penalties: box count over cfg.n_box_max,
// think length over cfg.think_word_cap, and keyword coverage of the
// input text at or above cfg.copy_ratio_cap (inputs under 5 unique
// tokens never trigger the copying gate).
double penalty_over(const ParsedResponse& r, std::string_view input_text,
                    const RewardConfig& cfg);

RewardVector score_completion(std::string_view completion, const Sample& gt,
                              const RewardConfig& cfg);

// Population-std standardization; all-zero when std < epsilon_std.
std::vector<double> standardize(const std::vector<double>& totals,
                                double epsilon_std);

GroupScores score_group(const std::vector<std::string>& completions,
                        const Sample& gt, const RewardConfig& cfg,
                        std::vector<RewardVector>* vectors = nullptr);

}  // namespace msti
