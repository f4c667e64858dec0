// Acceptance gate: one line per criterion, nonzero exit on any failure.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "msti/core.hpp"
#include "msti/dataset.hpp"
#include "msti/ftpo.hpp"
#include "msti/judge.hpp"
#include "msti/loss_weights.hpp"
#include "msti/metrics.hpp"
#include "msti/parser.hpp"
#include "msti/random.hpp"
#include "msti/rewards.hpp"
#include "msti/service.hpp"
#include "oracles.hpp"

using namespace msti;

namespace {

constexpr double kApOracleTol = 1e-9;
constexpr double kIouOracleTol = 1e-12;
constexpr double kAdvTol = 1e-9;
constexpr double kLossTol = 1e-12;
constexpr double kGradTol = 1e-4;
constexpr double kConvergenceFraction = 0.9;
constexpr double kTvTol = 0.05;
constexpr double kApBudgetSeconds = 10.0;
constexpr double kIouBudgetSeconds = 5.0;
constexpr double kGradBudgetSeconds = 30.0;
constexpr double kSimBudgetSeconds = 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// ---- shared toy ground truth ----

Sample toy_gt() {
  Sample s;
  s.id = "toy-1";
  s.image_path = "images/toy-1.jpg";
  s.text = "lovely weather for a picnic today absolutely perfect";
  s.label = Label::sarcastic;
  s.visual_targets = {{120, 40, 560, 800}};
  s.text_target = "lovely weather";
  s.split = Split::train;
  return s;
}

const char* kPerfect =
    "<Think>the scene contradicts the caption</Think>\n"
    "<Answer>\n"
    "Label: \"sarcastic\"\n"
    "Image Objects: [(120,40,560,800)]\n"
    "Text Objects: \"lovely weather\"\n"
    "</Answer>";

// ---- criteria ----

bool check_constants(std::string& detail) {
  const RewardConfig cfg;
  const SimConfig sim;
  bool ok = cfg.beta1 == 0.05 && cfg.beta2 == 0.15 && cfg.beta3 == 0.4 &&
            cfg.beta4 == 0.4 && cfg.beta5 == 0.3;
  ok = ok && kLambdaCoordDefault == 10.0;
  ok = ok && sim.G == 4;
  ok = ok && kCoordMax == 1000;
  ok = ok && BBox{0, 0, 0, 0}.is_null_sentinel() &&
       BBox{0, 0, 1000, 1000} == BBox::whole_image();
  if (!ok) detail = "a default drifted from the pinned values";
  return ok;
}

BBox random_lattice_box(std::mt19937_64& rng) {
  const int x1 = 50 * static_cast<int>(uniform_below(rng, 20));
  const int y1 = 50 * static_cast<int>(uniform_below(rng, 20));
  const int x2 = x1 + 50 * (1 + static_cast<int>(
                                    uniform_below(rng, (1000 - x1) / 50)));
  const int y2 = y1 + 50 * (1 + static_cast<int>(
                                    uniform_below(rng, (1000 - y1) / 50)));
  return {x1, y1, x2, y2};
}

bool check_ap_oracle(std::string& detail) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  const double confs[] = {1.0, 0.9, 0.8, 0.8, 0.5, 0.5, 0.3};
  const auto thresholds = coco_thresholds();

  double worst = 0.0;
  for (int instance = 0; instance < 200; ++instance) {
    const int n_images = 1 + static_cast<int>(uniform_below(rng, 5));
    std::map<std::string, std::vector<BBox>> gts;
    std::vector<Detection> dets;
    for (int i = 0; i < n_images; ++i) {
      const std::string id = "img" + std::to_string(i);
      auto& boxes = gts[id];
      const int n_gt = static_cast<int>(uniform_below(rng, 5));
      for (int g = 0; g < n_gt; ++g) boxes.push_back(random_lattice_box(rng));
      const int n_det = static_cast<int>(uniform_below(rng, 5));
      for (int d = 0; d < n_det; ++d) {
        dets.push_back({id, random_lattice_box(rng),
                        confs[uniform_below(rng, 7)]});
      }
    }
    const APReport report = visual_ap(dets, gts, thresholds);
    double mean = 0.0;
    for (double thr : thresholds) {
      const double want = oracle::exhaustive_ap(dets, gts, thr);
      worst = std::max(worst, std::fabs(report.per_threshold.at(thr) - want));
      mean += want;
    }
    mean /= static_cast<double>(thresholds.size());
    worst = std::max(worst, std::fabs(report.ap - mean));
  }
  const double elapsed = seconds_since(t0);
  detail = "max deviation " + fmt(worst) + ", " + fmt(elapsed) + "s";
  return worst <= kApOracleTol && elapsed < kApBudgetSeconds;
}

bool check_worked_ap(std::string& detail) {
  std::map<std::string, std::vector<BBox>> gts{
      {"img", {BBox{0, 0, 1000, 1000}}}};
  std::vector<Detection> dets{{"img", {0, 0, 600, 1000}, 1.0}};
  const APReport report = visual_ap(dets, gts);
  const bool ok = report.ap == 0.30 && report.ap50 == 1.0 && report.ap75 == 0.0;
  if (!ok) {
    detail = "ap " + fmt(report.ap) + " ap50 " + fmt(report.ap50) + " ap75 " +
             fmt(report.ap75);
  }
  return ok;
}

BBox random_box(std::mt19937_64& rng) {
  const int x1 = static_cast<int>(uniform_below(rng, 1001));
  const int y1 = static_cast<int>(uniform_below(rng, 1001));
  const int x2 = x1 + static_cast<int>(uniform_below(rng, 1001 - x1));
  const int y2 = y1 + static_cast<int>(uniform_below(rng, 1001 - y1));
  return {x1, y1, x2, y2};
}

bool check_iou_suite(std::string& detail) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240602);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double ab = bbox_iou(a, b);
    const double ba = bbox_iou(b, a);
    if (ab != ba) {
      detail = "asymmetry";
      return false;
    }
    if (!(ab >= 0.0 && ab <= 1.0)) {
      detail = "out of [0,1]";
      return false;
    }
    if (a.area() > 0 && bbox_iou(a, a) != 1.0) {
      detail = "identity broke";
      return false;
    }
    worst = std::max(worst, std::fabs(ab - oracle::lattice_iou(a, b)));
  }
  const double elapsed = seconds_since(t0);
  detail = "max lattice deviation " + fmt(worst) + ", " + fmt(elapsed) + "s";
  return worst <= kIouOracleTol && elapsed < kIouBudgetSeconds;
}

std::string random_fuzz_input(std::mt19937_64& rng) {
  static const std::vector<std::string> soup = {
      "<Think>",  "</Think>", "<Answer>", "</Answer>", "Label:",
      "\"sarcastic\"", "\"not sarcastic\"", "Image Objects:", "Text Objects:",
      "[",        "]",        "(",         ")",          ",",
      "0",        "12",       "999",       "1001",       "99999",
      "\n",       " ",        "<",         ">",          "/",
      "think",    "answer",   "label",     "\"",         "-5"};
  std::string out;
  const std::size_t len = uniform_below(rng, 4096);
  if (uniform_below(rng, 2) == 0) {
    while (out.size() < len) out += soup[uniform_below(rng, soup.size())];
    if (out.size() > 4096) out.resize(4096);
  } else {
    out.resize(len);
    for (auto& c : out) c = static_cast<char>(uniform_below(rng, 256));
  }
  return out;
}

bool check_parser_fuzz(std::string& detail) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240603);
  for (int i = 0; i < 100000; ++i) {
    const std::string input = random_fuzz_input(rng);
    try {
      const ParsedResponse r = parse_response(input);
      (void)r;
      const auto spans = extract_coordinate_spans(input);
      (void)spans;
    } catch (const std::exception& e) {
      detail = std::string("threw on fuzz input: ") + e.what();
      return false;
    }
  }

  static const char* kKeywordAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789 ,";
  for (int i = 0; i < 1000; ++i) {
    ParsedAnswer answer;
    answer.label =
        uniform_below(rng, 2) == 0 ? Label::sarcastic : Label::not_sarcastic;
    const std::size_t n_boxes = uniform_below(rng, 4);
    for (std::size_t b = 0; b < n_boxes; ++b) {
      BBox box = random_box(rng);
      while (box.is_null_sentinel() || box == BBox::whole_image()) {
        box = random_box(rng);
      }
      answer.boxes.push_back(box);
    }
    std::string kw;
    const std::size_t kw_len = uniform_below(rng, 30);
    for (std::size_t k = 0; k < kw_len; ++k) {
      kw += kKeywordAlphabet[uniform_below(rng, 38)];
    }
    while (!kw.empty() && (kw.front() == ' ')) kw.erase(kw.begin());
    while (!kw.empty() && (kw.back() == ' ')) kw.pop_back();
    answer.keywords = kw;

    const auto parsed = parse_answer_block(render_answer(answer));
    if (!parsed.answer || parsed.answer->label != answer.label ||
        parsed.answer->boxes != answer.boxes ||
        parsed.answer->keywords != answer.keywords) {
      detail = "round trip diverged on instance " + std::to_string(i);
      return false;
    }
  }
  detail = fmt(seconds_since(t0)) + "s";
  return true;
}

bool check_advantages(std::string& detail) {
  std::mt19937_64 rng(20240604);
  double worst_mean = 0.0, worst_sd = 0.0;
  for (int g = 0; g < 1000; ++g) {
    std::vector<double> totals;
    double sd = 0.0;
    do {
      totals.assign(2 + uniform_below(rng, 7), 0.0);
      for (auto& t : totals) t = uniform01(rng);
      double mean = 0.0;
      for (double t : totals) mean += t;
      mean /= static_cast<double>(totals.size());
      double var = 0.0;
      for (double t : totals) var += (t - mean) * (t - mean);
      sd = std::sqrt(var / static_cast<double>(totals.size()));
    } while (sd < 1e-6);

    const std::vector<double> adv = standardize(totals, 1e-6);
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double adv_sd = std::sqrt(var / static_cast<double>(adv.size()));
    worst_mean = std::max(worst_mean, std::fabs(mean));
    worst_sd = std::max(worst_sd, std::fabs(adv_sd - 1.0));
  }

  for (std::size_t n : {2ULL, 3ULL, 5ULL, 8ULL}) {
    const std::vector<double> flat(n, 0.375);
    for (double a : standardize(flat, 1e-6)) {
      if (a != 0.0) {
        detail = "constant group produced a nonzero advantage";
        return false;
      }
    }
  }
  detail = "max |mean| " + fmt(worst_mean) + ", max |sd-1| " + fmt(worst_sd);
  return worst_mean < kAdvTol && worst_sd < kAdvTol;
}

bool check_loss_identities(std::string& detail) {
  std::mt19937_64 rng(20240605);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ParsedAnswer answer;
    answer.label = Label::sarcastic;
    answer.boxes = {random_box(rng)};
    answer.keywords = "weather";
    const std::string target = "<Think>a short rationale</Think>\n<Answer>\n" +
                               render_answer(answer) + "\n</Answer>";

    std::vector<TokenSpan> tokens;
    std::size_t pos = 0, index = 0;
    while (pos < target.size()) {
      const std::size_t len =
          std::min<std::size_t>(1 + uniform_below(rng, 5), target.size() - pos);
      tokens.push_back({index++, pos, pos + len});
      pos += len;
    }
    std::vector<double> logprobs(tokens.size());
    for (auto& lp : logprobs) lp = -3.0 * uniform01(rng);

    const WeightMask flat = weight_mask(target, tokens, 1.0);
    double plain = 0.0;
    for (double lp : logprobs) plain -= lp;
    worst = std::max(worst, std::fabs(weighted_nll(logprobs, flat) - plain));

    const double lambda = 1.0 + 19.0 * uniform01(rng);
    const WeightMask mask = weight_mask(target, tokens, lambda);
    double coord_excess = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (mask.weights[i] != 1.0) coord_excess -= logprobs[i];
    }
    const double expect = plain + (lambda - 1.0) * coord_excess;
    worst = std::max(worst, std::fabs(weighted_nll(logprobs, mask) - expect));
  }
  detail = "max deviation " + fmt(worst);
  return worst <= kLossTol;
}

bool check_gradients(std::string& detail) {
  const auto t0 = Clock::now();
  const GradCheckResult result = grad_check(20, 20240501);
  const double elapsed = seconds_since(t0);
  detail = "max rel error " + fmt(result.max_rel_error) + " over " +
           std::to_string(result.instances) + " instances, " + fmt(elapsed) +
           "s";
  return result.instances == 20 && result.max_rel_error < kGradTol &&
         elapsed < kGradBudgetSeconds;
}

bool check_convergence(std::string& detail) {
  const auto t0 = Clock::now();
  const Sample gt = toy_gt();
  const AnswerSpace space = AnswerSpace::around(gt);

  SimConfig cfg;  // 500 steps, lr 0.5, seed 7
  const TrainResult result = train(gt, space, cfg);
  double tail = 0.0;
  for (std::size_t i = result.curve.size() - 50; i < result.curve.size(); ++i) {
    tail += result.curve[i].mean_total;
  }
  tail /= 50.0;
  const bool converged =
      tail >= kConvergenceFraction * result.best_possible;

  SimConfig pinned = cfg;
  pinned.beta_kl = 1000.0;
  pinned.lr = 0.001;  // explicit ascent needs lr*beta_kl in the stable regime
  const TrainResult kl = train(gt, space, pinned);
  double worst_tv = 0.0;
  for (std::size_t t = 0; t < space.slot_count(); ++t) {
    const auto p = kl.final_policy.probs(t);
    const auto q = kl.reference.probs(t);
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::fabs(p[i] - q[i]);
    worst_tv = std::max(worst_tv, 0.5 * tv);
  }

  const double elapsed = seconds_since(t0);
  detail = "tail mean " + fmt(tail) + " of best " + fmt(result.best_possible) +
           ", pinned-run TV " + fmt(worst_tv) + ", " + fmt(elapsed) + "s";
  return converged && worst_tv <= kTvTol && elapsed < kSimBudgetSeconds;
}

Sample dataset_record(std::string id, Split split, Label label) {
  Sample s;
  s.id = std::move(id);
  s.image_path = "images/" + s.id + ".jpg";
  s.text = "text for " + s.id;
  s.label = label;
  if (label == Label::sarcastic) s.text_target = "target";
  s.split = split;
  return s;
}

bool check_dataset(std::string& detail) {
  struct Row {
    Split split;
    int sarcastic;
    int non_sarcastic;
  };
  const Row rows[] = {{Split::train, 3500, 3046},
                      {Split::val, 711, 516},
                      {Split::test, 729, 513}};
  DatasetManifest fixture;
  for (const Row& row : rows) {
    const std::string tag(to_string(row.split));
    for (int i = 0; i < row.sarcastic; ++i) {
      fixture.records.push_back(dataset_record(tag + "-s-" + std::to_string(i),
                                               row.split, Label::sarcastic));
    }
    for (int i = 0; i < row.non_sarcastic; ++i) {
      fixture.records.push_back(dataset_record(
          tag + "-n-" + std::to_string(i), row.split, Label::not_sarcastic));
    }
  }

  DatasetStats stats = dataset_stats(fixture);
  for (const Row& row : rows) {
    const SplitCounts& c = stats.per_split[row.split];
    if (c.sarcastic != row.sarcastic || c.non_sarcastic != row.non_sarcastic ||
        c.total != row.sarcastic + row.non_sarcastic) {
      detail = std::string("split ") + std::string(to_string(row.split)) +
               " counted " + std::to_string(c.sarcastic) + "/" +
               std::to_string(c.non_sarcastic);
      return false;
    }
  }
  if (stats.total.sarcastic != 4940 || stats.total.non_sarcastic != 4075 ||
      stats.total.total != 9015) {
    detail = "totals " + std::to_string(stats.total.sarcastic) + "/" +
             std::to_string(stats.total.non_sarcastic) + "/" +
             std::to_string(stats.total.total);
    return false;
  }

  DatasetManifest primary;
  for (int i = 0; i < 3500; ++i) {
    primary.records.push_back(
        dataset_record("s-" + std::to_string(i), Split::train, Label::sarcastic));
  }
  DatasetManifest donors;
  for (int i = 0; i < 3200; ++i) {
    donors.records.push_back(dataset_record("d-" + std::to_string(i),
                                            Split::train, Label::not_sarcastic));
  }
  const double target = 3046.0 / 6546.0;
  const DatasetManifest balanced = rebalance(primary, donors, target, 7);
  DatasetStats after = dataset_stats(balanced);
  const long long injected = after.per_split[Split::train].non_sarcastic;
  const double achieved =
      static_cast<double>(injected) /
      static_cast<double>(after.per_split[Split::train].total);
  if (std::llabs(injected - 3046) > 1 ||
      std::fabs(achieved - target) > 1.0 / 6546.0) {
    detail = "injected " + std::to_string(injected);
    return false;
  }

  const DatasetManifest again = rebalance(primary, donors, target, 7);
  if (again.records.size() != balanced.records.size()) {
    detail = "rerun size changed";
    return false;
  }
  for (std::size_t i = 0; i < balanced.records.size(); ++i) {
    if (again.records[i].id != balanced.records[i].id) {
      detail = "rerun order changed at " + std::to_string(i);
      return false;
    }
  }
  detail = "train row " + std::to_string(injected) + " injected";
  return true;
}

// scripted chat-completions endpoint for the judge criterion
struct MockJudge {
  httplib::Server server;
  std::thread listener;
  int port = 0;
  std::atomic<int> hits{0};
  std::function<std::string(int, const httplib::Request&)> script;

  explicit MockJudge(std::function<std::string(int, const httplib::Request&)> fn)
      : script(std::move(fn)) {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const int n = hits.fetch_add(1);
                  nlohmann::json reply{
                      {"choices",
                       {{{"message", {{"content", script(n, req)}}}}}}};
                  res.set_content(reply.dump(), "application/json");
                });
    port = server.bind_to_any_port("127.0.0.1");
    listener = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }

  ~MockJudge() {
    server.stop();
    if (listener.joinable()) listener.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  }
};

bool check_judge(std::string& detail) {
  {
    MockJudge mock([](int, const httplib::Request&) {
      return R"({"V":4,"R":3,"C":5})";
    });
    JudgeClientConfig cfg;
    cfg.endpoint = mock.endpoint();
    cfg.model = "judge-mock";
    std::vector<std::pair<Sample, std::string>> pairs;
    for (int i = 0; i < 3; ++i) {
      Sample s = toy_gt();
      s.id = "a-" + std::to_string(i);
      pairs.emplace_back(s, "resp");
    }
    const CorpusResult r = evaluate_corpus(cfg, pairs);
    if (r.succeeded != 3 || r.mean_v != 4.0 || r.mean_r != 3.0 ||
        r.mean_c != 5.0) {
      detail = "constant-score aggregation broke";
      return false;
    }
  }
  {
    MockJudge mock([](int hit, const httplib::Request&) {
      return hit < 2 ? std::string("not json")
                     : std::string(R"({"V":2,"R":2,"C":3})");
    });
    JudgeClientConfig cfg;
    cfg.endpoint = mock.endpoint();
    cfg.model = "judge-mock";
    cfg.max_retries = 2;
    const CorpusResult r = evaluate_corpus(cfg, {{toy_gt(), "resp"}});
    if (r.succeeded != 1 || r.per_sample[0].attempts != 3 ||
        mock.hits.load() != 3) {
      detail = "retry path broke";
      return false;
    }
  }
  {
    MockJudge mock([](int, const httplib::Request& req) {
      return req.body.find("always bad") != std::string::npos
                 ? std::string("??")
                 : std::string(R"({"V":2,"R":4,"C":2})");
    });
    JudgeClientConfig cfg;
    cfg.endpoint = mock.endpoint();
    cfg.model = "judge-mock";
    cfg.max_retries = 2;
    Sample bad = toy_gt();
    bad.id = "bad";
    bad.text = "always bad";
    Sample good = toy_gt();
    good.id = "good";
    const CorpusResult r = evaluate_corpus(cfg, {{good, "resp"}, {bad, "resp"}});
    if (r.succeeded != 1 || r.failed != 1 || r.mean_v != 2.0 ||
        r.mean_r != 4.0 || r.mean_c != 2.0) {
      detail = "exclusion from means broke";
      return false;
    }
  }
  {
    MockJudge mock([](int, const httplib::Request&) {
      return R"({"V":4,"R":3,"C":5})";
    });
    JudgeClientConfig cfg;
    cfg.endpoint = mock.endpoint();
    cfg.model = "judge-mock";
    auto dir = std::filesystem::temp_directory_path() / "msti_acceptance_cache";
    std::filesystem::remove_all(dir);
    cfg.cache_dir = dir.string();
    std::vector<std::pair<Sample, std::string>> pairs;
    for (int i = 0; i < 3; ++i) {
      Sample s = toy_gt();
      s.id = "c-" + std::to_string(i);
      pairs.emplace_back(s, "resp");
    }
    const CorpusResult first = evaluate_corpus(cfg, pairs);
    const int hits_after_first = mock.hits.load();
    const CorpusResult second = evaluate_corpus(cfg, pairs);
    if (first.network_calls != 3 || second.network_calls != 0 ||
        mock.hits.load() != hits_after_first || second.succeeded != 3) {
      detail = "cache rerun made network calls";
      return false;
    }
  }
  return true;
}

bool check_service(std::string& detail) {
  ServiceConfig cfg;
  cfg.port = 0;
  RewardService service(cfg);
  const int port = service.start();

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);

  auto health = client.Get("/healthz");
  if (!health || health->status != 200 ||
      nlohmann::json::parse(health->body).at("version") != version_string()) {
    detail = "healthz broke";
    return false;
  }

  const nlohmann::json gt{
      {"id", "svc-1"},
      {"image_path", "images/svc-1.jpg"},
      {"text", "lovely weather for a picnic today absolutely perfect"},
      {"label", 1},
      {"visual_targets", {{120, 40, 560, 800}}},
      {"text_target", "lovely weather"}};
  const nlohmann::json request{
      {"items",
       {{{"ground_truth", gt}, {"completions", {kPerfect, "no tags at all"}}}}}};
  const std::string payload = request.dump();

  auto res = client.Post("/v1/reward", payload, "application/json");
  if (!res || res->status != 200) {
    detail = "reward endpoint failed";
    return false;
  }
  const nlohmann::json body = nlohmann::json::parse(res->body);
  const auto& item = body.at("items").at(0);
  if (item.at("totals").at(0).get<double>() != 1.0 ||
      item.at("totals").at(1).get<double>() != 0.0 ||
      item.at("advantages").at(0).get<double>() != 1.0 ||
      item.at("advantages").at(1).get<double>() != -1.0) {
    detail = "golden reward values drifted";
    return false;
  }
  for (int i = 0; i < 3; ++i) {
    auto again = client.Post("/v1/reward", payload, "application/json");
    if (!again || again->body != res->body) {
      detail = "sequential responses not byte-stable";
      return false;
    }
  }

  auto parse_res = client.Post(
      "/v1/parse", nlohmann::json{{"completion", kPerfect}}.dump(),
      "application/json");
  if (!parse_res || parse_res->status != 200 ||
      nlohmann::json::parse(parse_res->body).at("format_ok") != true) {
    detail = "parse endpoint broke";
    return false;
  }

  const nlohmann::json metrics_req{
      {"references", {gt}},
      {"predictions", {{{"id", "svc-1"}, {"completion", kPerfect}}}}};
  auto metrics_res =
      client.Post("/v1/metrics", metrics_req.dump(), "application/json");
  if (!metrics_res || metrics_res->status != 200 ||
      nlohmann::json::parse(metrics_res->body).at("accuracy") != 1.0) {
    detail = "metrics endpoint broke";
    return false;
  }

  auto small = client.Post(
      "/v1/reward",
      nlohmann::json{
          {"items", {{{"ground_truth", gt}, {"completions", {kPerfect}}}}}}
          .dump(),
      "application/json");
  if (!small || small->status != 400 ||
      nlohmann::json::parse(small->body).at("error_code") != "GroupTooSmall") {
    detail = "single-completion item not rejected";
    return false;
  }

  const int kThreads = 10, kPerThread = 10;
  std::vector<std::vector<std::string>> bodies(kThreads);
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      httplib::Client c("127.0.0.1", port);
      c.set_read_timeout(30, 0);
      for (int i = 0; i < kPerThread; ++i) {
        auto r = c.Post("/v1/reward", payload, "application/json");
        bodies[t].push_back(r && r->status == 200 ? r->body : "FAILED");
      }
    });
  }
  for (auto& t : pool) t.join();
  std::set<std::string> distinct;
  for (const auto& per : bodies) {
    for (const auto& b : per) distinct.insert(b);
  }
  if (distinct.size() != 1 || *distinct.begin() != res->body) {
    detail = std::to_string(distinct.size()) + " distinct concurrent bodies";
    return false;
  }
  detail = "100 concurrent bodies identical";
  return true;
}

int g_failures = 0;

void criterion(const char* name, bool (*fn)(std::string&)) {
  std::string detail;
  bool ok = false;
  try {
    ok = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("threw: ") + e.what();
  }
  std::printf("%s  %-58s%s%s\n", ok ? "PASS" : "FAIL", name,
              detail.empty() ? "" : "  ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

}  // namespace

int main() {
  criterion("default constants are exactly the pinned values", check_constants);
  criterion("visual AP matches the exhaustive oracle (200 instances)",
            check_ap_oracle);
  criterion("worked AP case: 0.6-IoU detection scores 0.30/1.0/0.0",
            check_worked_ap);
  criterion("IoU properties and lattice oracle (10k pairs)", check_iou_suite);
  criterion("parser survives 100k fuzz inputs, 1k round trips",
            check_parser_fuzz);
  criterion("advantages standardize to mean 0, std 1 (1k groups)",
            check_advantages);
  criterion("weighted-loss identities hold to 1e-12", check_loss_identities);
  criterion("policy gradient matches finite differences (20 instances)",
            check_gradients);
  criterion("toy task converges; huge KL weight pins the policy",
            check_convergence);
  criterion("dataset stats and rebalance match the corpus split counts",
            check_dataset);
  criterion("judge client: retries, exclusion, caching idempotence",
            check_judge);
  criterion("service endpoints return byte-stable golden responses",
            check_service);

  std::printf("%d/12 criteria passed\n", 12 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
