#include "msti/ftpo.hpp"

#include <algorithm>
#include <cmath>

#include "msti/parser.hpp"
#include "msti/random.hpp"

namespace msti {

namespace {

constexpr const char* kThinkPlaceholder =
    "The caption and the image disagree, so the sarcasm points at the "
    "highlighted region.";

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = logits[0];
  for (double z : logits) m = std::max(m, z);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

void check_shapes(const SlotPolicy& a, const SlotPolicy& b) {
  if (a.slot_logits.size() != b.slot_logits.size()) {
    throw Error(errc::mismatched_shapes, "slot count differs");
  }
  for (std::size_t t = 0; t < a.slot_logits.size(); ++t) {
    if (a.slot_logits[t].size() != b.slot_logits[t].size()) {
      throw Error(errc::mismatched_shapes,
                  "slot " + std::to_string(t) + " candidate count differs");
    }
  }
}

}  // namespace

std::size_t AnswerSpace::candidates(std::size_t slot) const {
  switch (slot) {
    case 0: return labels.size();
    case 1: return box_palette.size();
    case 2: return keyword_palette.size();
    default: return 0;
  }
}

AnswerSpace AnswerSpace::around(const Sample& gt) {
  AnswerSpace space;

  space.box_palette.push_back(gt.visual_targets);
  const std::vector<std::vector<BBox>> box_fillers = {
      {},
      {{100, 100, 300, 300}},
      {{600, 50, 950, 400}, {50, 600, 400, 950}},
  };
  for (const auto& f : box_fillers) {
    if (std::find(space.box_palette.begin(), space.box_palette.end(), f) ==
        space.box_palette.end()) {
      space.box_palette.push_back(f);
    }
  }

  space.keyword_palette.push_back(gt.text_target);
  for (const char* f : {"", "weather", "weather, forecast"}) {
    if (std::find(space.keyword_palette.begin(), space.keyword_palette.end(),
                  f) == space.keyword_palette.end()) {
      space.keyword_palette.push_back(f);
    }
  }
  return space;
}

SlotPolicy SlotPolicy::uniform(const AnswerSpace& space) {
  SlotPolicy p;
  for (std::size_t t = 0; t < space.slot_count(); ++t) {
    p.slot_logits.emplace_back(space.candidates(t), 0.0);
  }
  return p;
}

std::vector<double> SlotPolicy::probs(std::size_t slot) const {
  return softmax(slot_logits[slot]);
}

double SlotPolicy::prob(std::size_t slot, std::size_t candidate) const {
  return softmax(slot_logits[slot])[candidate];
}

std::string render_completion(const AnswerSpace& space,
                              const std::vector<std::size_t>& choice) {
  ParsedAnswer a;
  a.label = space.labels[choice[0]];
  a.boxes = space.box_palette[choice[1]];
  a.keywords = space.keyword_palette[choice[2]];
  std::string out = "<Think>";
  out += kThinkPlaceholder;
  out += "</Think>\n<Answer>\n";
  out += render_answer(a);
  out += "\n</Answer>";
  return out;
}

TrajectoryGroup sample_group(const SlotPolicy& policy, const AnswerSpace& space,
                             const Sample& gt, const RewardConfig& cfg, int G,
                             std::uint64_t seed) {
  if (G < 2) {
    throw Error(errc::group_too_small, "G=" + std::to_string(G));
  }
  std::mt19937_64 rng(seed);

  std::vector<std::vector<double>> probs;
  for (std::size_t t = 0; t < space.slot_count(); ++t) {
    probs.push_back(policy.probs(t));
  }

  TrajectoryGroup group;
  group.gt = gt;
  for (int j = 0; j < G; ++j) {
    std::vector<std::size_t> choice;
    std::vector<double> lps;
    for (std::size_t t = 0; t < space.slot_count(); ++t) {
      const std::size_t idx = sample_index(rng, probs[t]);
      choice.push_back(idx);
      lps.push_back(std::log(probs[t][idx]));
    }
    group.completions.push_back(render_completion(space, choice));
    group.choices.push_back(std::move(choice));
    group.old_logprobs.push_back(std::move(lps));
  }
  group.scores =
      score_group(group.completions, gt, cfg, &group.vectors);
  return group;
}

Objective ftpo_objective(const SlotPolicy& theta, const SlotPolicy& old,
                         const SlotPolicy& ref, const TrajectoryGroup& group,
                         double eps_clip, double beta_kl) {
  check_shapes(theta, old);
  check_shapes(theta, ref);
  const std::size_t S = theta.slot_logits.size();
  const std::size_t G = group.choices.size();
  for (const auto& c : group.choices) {
    if (c.size() != S) {
      throw Error(errc::mismatched_shapes, "trajectory slot count differs");
    }
  }

  std::vector<std::vector<double>> p_theta(S), p_old(S), p_ref(S);
  for (std::size_t t = 0; t < S; ++t) {
    p_theta[t] = theta.probs(t);
    p_old[t] = old.probs(t);
    p_ref[t] = ref.probs(t);
  }

  Objective out;
  out.gradient.resize(S);
  for (std::size_t t = 0; t < S; ++t) {
    out.gradient[t].assign(theta.slot_logits[t].size(), 0.0);
  }

  const double scale = 1.0 / (static_cast<double>(G) * static_cast<double>(S));
  for (std::size_t j = 0; j < G; ++j) {
    const double adv = group.scores.advantages[j];
    for (std::size_t t = 0; t < S; ++t) {
      const std::size_t a = group.choices[j][t];
      const double pa = p_theta[t][a];
      const double r = pa / p_old[t][a];
      const double clipped = std::clamp(r, 1.0 - eps_clip, 1.0 + eps_clip);
      const double surrogate = std::min(r * adv, clipped * adv);
      const double u = p_ref[t][a] / pa;
      const double k3 = u - std::log(u) - 1.0;
      out.value += scale * (surrogate - beta_kl * k3);

      const bool active =
          adv >= 0.0 ? (r <= 1.0 + eps_clip) : (r >= 1.0 - eps_clip);
      const double slope = active ? adv : 0.0;
      for (std::size_t i = 0; i < p_theta[t].size(); ++i) {
        const double dsoft = (i == a ? 1.0 : 0.0) - p_theta[t][i];
        out.gradient[t][i] +=
            scale * (slope * r - beta_kl * (1.0 - u)) * dsoft;
      }
    }
  }
  return out;
}

double enumerate_max_total(const AnswerSpace& space, const Sample& gt,
                           const RewardConfig& cfg) {
  double best = -1e30;
  std::vector<std::size_t> choice(3);
  for (choice[0] = 0; choice[0] < space.labels.size(); ++choice[0]) {
    for (choice[1] = 0; choice[1] < space.box_palette.size(); ++choice[1]) {
      for (choice[2] = 0; choice[2] < space.keyword_palette.size();
           ++choice[2]) {
        const RewardVector v =
            score_completion(render_completion(space, choice), gt, cfg);
        best = std::max(best, v.total);
      }
    }
  }
  return best;
}

TrainResult train(const Sample& gt, const AnswerSpace& space,
                  const SimConfig& cfg) {
  if (cfg.steps < 1) {
    throw Error(errc::invalid_parameter, "steps must be >= 1");
  }
  TrainResult result;
  SlotPolicy theta = SlotPolicy::uniform(space);
  result.reference = theta;
  result.best_possible = enumerate_max_total(space, gt, cfg.reward);

  std::mt19937_64 seeder(cfg.seed);
  for (int step = 0; step < cfg.steps; ++step) {
    const SlotPolicy old = theta;
    const TrajectoryGroup group =
        sample_group(old, space, gt, cfg.reward, cfg.G, seeder());

    StepRecord rec;
    rec.step = step;
    for (const RewardVector& v : group.vectors) {
      rec.mean_total += v.total;
      rec.mean_fmt += v.fmt;
      rec.mean_acc += v.acc;
      rec.mean_box += v.box;
      rec.mean_txt += v.txt;
      rec.mean_over += v.over;
    }
    const double g = static_cast<double>(group.vectors.size());
    rec.mean_total /= g;
    rec.mean_fmt /= g;
    rec.mean_acc /= g;
    rec.mean_box /= g;
    rec.mean_txt /= g;
    rec.mean_over /= g;
    result.curve.push_back(rec);

    const Objective obj = ftpo_objective(theta, old, result.reference, group,
                                         cfg.eps_clip, cfg.beta_kl);
    for (std::size_t t = 0; t < theta.slot_logits.size(); ++t) {
      for (std::size_t i = 0; i < theta.slot_logits[t].size(); ++i) {
        theta.slot_logits[t][i] += cfg.lr * obj.gradient[t][i];
      }
    }
  }
  result.final_policy = std::move(theta);
  return result;
}

GradCheckResult grad_check(int instances, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  constexpr double kH = 1e-5;
  constexpr double kEps = 0.2;
  constexpr double kBetaKl = 0.04;

  GradCheckResult result;
  while (result.instances < instances) {
    const std::size_t S = 2;
    std::vector<std::size_t> sizes;
    for (std::size_t t = 0; t < S; ++t) {
      sizes.push_back(2 + uniform_below(rng, 3));  // 2..4 candidates
    }
    auto random_policy = [&] {
      SlotPolicy p;
      for (std::size_t t = 0; t < S; ++t) {
        std::vector<double> z(sizes[t]);
        for (double& v : z) v = 2.0 * uniform01(rng) - 1.0;
        p.slot_logits.push_back(std::move(z));
      }
      return p;
    };
    SlotPolicy theta = random_policy();
    SlotPolicy old = random_policy();
    SlotPolicy ref = random_policy();

    TrajectoryGroup group;
    const int G = 4;
    std::vector<double> totals;
    for (int j = 0; j < G; ++j) {
      std::vector<std::size_t> choice;
      for (std::size_t t = 0; t < S; ++t) {
        choice.push_back(uniform_below(rng, sizes[t]));
      }
      group.choices.push_back(std::move(choice));
      totals.push_back(uniform01(rng));
    }
    group.scores.totals = totals;
    group.scores.advantages = standardize(totals, 1e-6);
    bool degenerate =
        std::all_of(group.scores.advantages.begin(),
                    group.scores.advantages.end(),
                    [](double a) { return a == 0.0; });

    // Clip kinks make finite differences meaningless; stay generic.
    for (std::size_t j = 0; !degenerate && j < group.choices.size(); ++j) {
      for (std::size_t t = 0; t < S; ++t) {
        const std::size_t a = group.choices[j][t];
        const double r = theta.probs(t)[a] / old.probs(t)[a];
        if (std::abs(r - (1.0 - kEps)) < 1e-3 ||
            std::abs(r - (1.0 + kEps)) < 1e-3) {
          degenerate = true;
          break;
        }
      }
    }
    if (degenerate) continue;

    const Objective obj = ftpo_objective(theta, old, ref, group, kEps, kBetaKl);

    double max_analytic = 0.0, max_fd = 0.0, max_diff = 0.0;
    for (std::size_t t = 0; t < S; ++t) {
      for (std::size_t i = 0; i < sizes[t]; ++i) {
        SlotPolicy plus = theta, minus = theta;
        plus.slot_logits[t][i] += kH;
        minus.slot_logits[t][i] -= kH;
        const double fd = (ftpo_objective(plus, old, ref, group, kEps, kBetaKl)
                               .value -
                           ftpo_objective(minus, old, ref, group, kEps, kBetaKl)
                               .value) /
                          (2.0 * kH);
        max_analytic = std::max(max_analytic, std::abs(obj.gradient[t][i]));
        max_fd = std::max(max_fd, std::abs(fd));
        max_diff = std::max(max_diff, std::abs(obj.gradient[t][i] - fd));
      }
    }
    const double rel =
        max_diff / std::max({max_analytic, max_fd, 1e-12});
    result.max_rel_error = std::max(result.max_rel_error, rel);
    ++result.instances;
  }
  return result;
}

}  // namespace msti
