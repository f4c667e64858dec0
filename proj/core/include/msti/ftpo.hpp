#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msti/core.hpp"
#include "msti/rewards.hpp"

namespace msti {

// Candidate tables shared by the three slots: slot 0 picks a label,
// slot 1 a box set from the palette, slot 2 a keyword string.
struct AnswerSpace {
  std::vector<Label> labels{Label::sarcastic, Label::not_sarcastic};
  std::vector<std::vector<BBox>> box_palette;
  std::vector<std::string> keyword_palette;

  std::size_t slot_count() const { return 3; }
  std::size_t candidates(std::size_t slot) const;
  // Builds a toy space around a ground truth: the exact answer is always
  // reachable, padded with distractors.
  static AnswerSpace around(const Sample& gt);
};

struct SlotPolicy {
  std::vector<std::vector<double>> slot_logits;

  static SlotPolicy uniform(const AnswerSpace& space);
  std::vector<double> probs(std::size_t slot) const;
  double prob(std::size_t slot, std::size_t candidate) const;
};

struct TrajectoryGroup {
  // choices[j][t] = candidate index of completion j at slot t.
  std::vector<std::vector<std::size_t>> choices;
  std::vector<std::vector<double>> old_logprobs;
  std::vector<std::string> completions;
  Sample gt;
  GroupScores scores;
  std::vector<RewardVector> vectors;
};

std::string render_completion(const AnswerSpace& space,
                              const std::vector<std::size_t>& choice);

TrajectoryGroup sample_group(const SlotPolicy& policy, const AnswerSpace& space,
                             const Sample& gt, const RewardConfig& cfg, int G,
                             std::uint64_t seed);

struct Objective {
  double value = 0.0;
  std::vector<std::vector<double>> gradient;  // d value / d theta logits
};

// Clipped-ratio surrogate with a k3 KL penalty toward ref; old and ref
// are treated as constants. Advantages broadcast per completion.
Objective ftpo_objective(const SlotPolicy& theta, const SlotPolicy& old,
                         const SlotPolicy& ref, const TrajectoryGroup& group,
                         double eps_clip, double beta_kl);

struct SimConfig {
  int G = 4;
  int steps = 500;
  double lr = 0.5;
  double eps_clip = 0.2;
  double beta_kl = 0.04;
  std::uint64_t seed = 7;
  RewardConfig reward;
};

struct StepRecord {
  int step = 0;
  double mean_total = 0.0;
  double mean_fmt = 0.0;
  double mean_acc = 0.0;
  double mean_box = 0.0;
  double mean_txt = 0.0;
  double mean_over = 0.0;
};

struct TrainResult {
  std::vector<StepRecord> curve;
  SlotPolicy final_policy;
  SlotPolicy reference;
  double best_possible = 0.0;  // max total over the slot product space
};

TrainResult train(const Sample& gt, const AnswerSpace& space,
                  const SimConfig& cfg);

// Highest total reward over every (label, box set, keywords) choice.
double enumerate_max_total(const AnswerSpace& space, const Sample& gt,
                           const RewardConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  int instances = 0;
};

// Central finite differences (h=1e-5) against the analytic gradient on
// random generic instances; points near clip boundaries are re-drawn.
GradCheckResult grad_check(int instances, std::uint64_t seed);

}  // namespace msti
