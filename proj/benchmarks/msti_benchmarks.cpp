#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "msti/core.hpp"
#include "msti/metrics.hpp"
#include "msti/parser.hpp"
#include "msti/random.hpp"
#include "msti/rewards.hpp"

namespace {

msti::BBox random_box(std::mt19937_64& rng) {
  const int x1 = static_cast<int>(msti::uniform_below(rng, 1001));
  const int y1 = static_cast<int>(msti::uniform_below(rng, 1001));
  const int x2 = x1 + static_cast<int>(msti::uniform_below(rng, 1001 - x1));
  const int y2 = y1 + static_cast<int>(msti::uniform_below(rng, 1001 - y1));
  return {x1, y1, x2, y2};
}

void BM_iou(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<std::pair<msti::BBox, msti::BBox>> pairs(1024);
  for (auto& p : pairs) p = {random_box(rng), random_box(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 1023];
    benchmark::DoNotOptimize(msti::bbox_iou(a, b));
  }
}
BENCHMARK(BM_iou);

void BM_parse_response(benchmark::State& state) {
  const std::string completion =
      "<Think>the snow-covered car contradicts the caption about great "
      "weather</Think>\n"
      "<Answer>\n"
      "Label: \"sarcastic\"\n"
      "Image Objects: [(120,40,560,800),(10,10,200,200)]\n"
      "Text Objects: \"great weather\"\n"
      "</Answer>";
  for (auto _ : state) {
    benchmark::DoNotOptimize(msti::parse_response(completion));
  }
}
BENCHMARK(BM_parse_response);

void BM_visual_ap(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::map<std::string, std::vector<msti::BBox>> gts;
  std::vector<msti::Detection> dets;
  for (int img = 0; img < 100; ++img) {
    const std::string id = "img" + std::to_string(img);
    auto& boxes = gts[id];
    for (int g = 0; g < 3; ++g) boxes.push_back(random_box(rng));
    for (int d = 0; d < 3; ++d) {
      dets.push_back({id, random_box(rng), msti::uniform01(rng)});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(msti::visual_ap(dets, gts));
  }
}
BENCHMARK(BM_visual_ap);

void BM_score_group(benchmark::State& state) {
  msti::Sample gt;
  gt.id = "bench-1";
  gt.image_path = "images/bench-1.jpg";
  gt.text = "lovely weather for a picnic today absolutely perfect";
  gt.label = msti::Label::sarcastic;
  gt.visual_targets = {{120, 40, 560, 800}};
  gt.text_target = "lovely weather";

  const std::vector<std::string> completions = {
      "<Think>the scene contradicts the caption</Think>\n<Answer>\n"
      "Label: \"sarcastic\"\nImage Objects: [(120,40,560,800)]\n"
      "Text Objects: \"lovely weather\"\n</Answer>",
      "<Think>looks fine to me</Think>\n<Answer>\n"
      "Label: \"not sarcastic\"\nImage Objects: [(0,0,0,0)]\n"
      "Text Objects: \"\"\n</Answer>",
      "<Think>half right</Think>\n<Answer>\n"
      "Label: \"sarcastic\"\nImage Objects: [(100,40,500,700)]\n"
      "Text Objects: \"weather\"\n</Answer>",
      "no tags at all",
  };
  const msti::RewardConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(msti::score_group(completions, gt, cfg));
  }
}
BENCHMARK(BM_score_group);

}  // namespace

BENCHMARK_MAIN();
