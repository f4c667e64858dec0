#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "msti/dataset.hpp"
#include "msti/ftpo.hpp"
#include "msti/json_io.hpp"
#include "msti/judge.hpp"
#include "msti/loss_weights.hpp"
#include "msti/metrics.hpp"
#include "msti/parser.hpp"
#include "msti/rewards.hpp"
#include "msti/service.hpp"

namespace {

std::string read_input(const std::string& path) {
  if (path.empty() || path == "-") {
    std::ostringstream buf;
    buf << std::cin.rdbuf();
    return buf.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw msti::Error(msti::errc::parse_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json_file(const std::string& path) {
  return nlohmann::json::parse(read_input(path));
}

struct ConfigDoc {
  msti::RewardConfig reward;
  msti::SimConfig sim;
};

ConfigDoc load_config(const std::string& path) {
  ConfigDoc doc;
  doc.sim.reward = doc.reward;
  if (path.empty()) return doc;
  const nlohmann::json j = read_json_file(path);
  j.get_to(doc.reward);
  doc.sim.reward = doc.reward;
  doc.sim.G = j.value("g", doc.sim.G);
  doc.sim.steps = j.value("steps", doc.sim.steps);
  doc.sim.lr = j.value("lr", doc.sim.lr);
  doc.sim.eps_clip = j.value("eps_clip", doc.sim.eps_clip);
  doc.sim.beta_kl = j.value("beta_kl", doc.sim.beta_kl);
  doc.sim.seed = j.value("seed", doc.sim.seed);
  return doc;
}

msti::Sample toy_sample() {
  msti::Sample s;
  s.id = "toy-1";
  s.image_path = "toy.jpg";
  s.text = "lovely weather for a picnic today absolutely perfect";
  s.label = msti::Label::sarcastic;
  s.visual_targets = {{120, 40, 560, 800}};
  s.text_target = "lovely weather";
  s.split = msti::Split::train;
  s.origin = "toy";
  return s;
}

int run_parse(const std::string& input, bool json) {
  const msti::ParsedResponse r = msti::parse_response(read_input(input));
  if (json) {
    std::cout << nlohmann::json(r).dump(2) << '\n';
    return 0;
  }
  std::cout << "format_ok: " << (r.format_ok ? "true" : "false") << '\n'
            << "failure: " << msti::to_string(r.failure) << '\n';
  if (!r.failed_field.empty()) {
    std::cout << "failed_field: " << r.failed_field << '\n';
  }
  if (r.format_ok) {
    std::cout << "label: " << msti::to_string(r.answer.label) << '\n'
              << "boxes: " << nlohmann::json(r.answer.boxes).dump() << '\n'
              << "keywords: " << r.answer.keywords << '\n';
  }
  return 0;
}

int run_score(const std::string& request_path, const msti::RewardConfig& base) {
  const nlohmann::json request = read_json_file(request_path);
  msti::RewardConfig cfg = base;
  if (request.contains("config")) request.at("config").get_to(cfg);

  nlohmann::json out_items = nlohmann::json::array();
  for (const nlohmann::json& item : request.at("items")) {
    const msti::Sample gt = item.at("ground_truth").get<msti::Sample>();
    const auto completions =
        item.at("completions").get<std::vector<std::string>>();
    std::vector<msti::RewardVector> vectors;
    const msti::GroupScores scores =
        msti::score_group(completions, gt, cfg, &vectors);
    out_items.push_back({{"rewards", vectors},
                         {"totals", scores.totals},
                         {"advantages", scores.advantages}});
  }
  const nlohmann::json reply{{"version", msti::version_string()},
                             {"items", out_items}};
  std::cout << reply.dump(2) << '\n';
  return 0;
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw msti::Error(msti::errc::parse_error, "cannot open " + path);
  std::vector<nlohmann::json> lines;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lines.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw msti::Error(msti::errc::parse_error,
                        path + " line " + std::to_string(lineno) + ": " +
                            e.what());
    }
  }
  return lines;
}

int run_metrics(const std::string& preds_path, const std::string& refs_path,
                bool json) {
  const msti::DatasetManifest refs = msti::load_manifest(refs_path);
  if (refs.coordinate_space != msti::CoordinateSpace::relative) {
    throw msti::Error(msti::errc::wrong_coordinate_space,
                      "references must use the relative coordinate space");
  }
  std::map<std::string, std::string> by_id;
  for (const nlohmann::json& p : read_jsonl(preds_path)) {
    const std::string id = p.at("id").get<std::string>();
    if (!by_id.emplace(id, p.at("completion").get<std::string>()).second) {
      throw msti::Error(msti::errc::duplicate_id, id);
    }
  }
  if (by_id.size() != refs.records.size()) {
    throw msti::Error(msti::errc::id_mismatch,
                      std::to_string(by_id.size()) + " predictions vs " +
                          std::to_string(refs.records.size()) + " references");
  }
  std::vector<msti::ParsedResponse> preds;
  for (const msti::Sample& s : refs.records) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      throw msti::Error(msti::errc::id_mismatch, "no prediction for " + s.id);
    }
    preds.push_back(msti::parse_response(it->second));
  }
  const msti::EvalReport report = msti::msti_evaluate(preds, refs.records);
  if (json) {
    std::cout << msti::eval_report_to_json(report) << '\n';
    return 0;
  }
  std::printf("accuracy    %.4f\n", report.classification.accuracy);
  std::printf("precision   %.4f\n", report.classification.precision);
  std::printf("recall      %.4f\n", report.classification.recall);
  std::printf("macro_f1    %.4f\n", report.classification.macro_f1);
  std::printf("f1_sarc     %.4f\n", report.classification.f1_sarcastic);
  std::printf("em          %.4f\n", report.em);
  std::printf("token_f1    %.4f\n", report.token_f1);
  std::printf("ap          %.4f\n", report.ap.ap);
  std::printf("ap50        %.4f\n", report.ap.ap50);
  std::printf("ap75        %.4f\n", report.ap.ap75);
  return 0;
}

int run_weights(const std::string& input) {
  const nlohmann::json doc = read_json_file(input);
  const std::string target = doc.at("target").get<std::string>();
  std::vector<msti::TokenSpan> tokens;
  std::size_t index = 0;
  for (const nlohmann::json& span : doc.at("token_spans")) {
    tokens.push_back({index++, span.at(0).get<std::size_t>(),
                      span.at(1).get<std::size_t>()});
  }
  const double lambda = doc.value("lambda", msti::kLambdaCoordDefault);
  const msti::WeightMask mask = msti::weight_mask(target, tokens, lambda);
  std::cout << nlohmann::json(mask.weights).dump() << '\n';
  return 0;
}

int run_dataset_validate(const std::string& path) {
  const msti::DatasetManifest m = msti::load_manifest(path);
  for (const std::string& w : m.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  std::cout << m.records.size() << " records valid ("
            << msti::to_string(m.coordinate_space) << " coordinates)\n";
  return 0;
}

int run_dataset_normalize(const std::string& in, const std::string& out) {
  msti::save_manifest(msti::normalize_manifest(msti::load_manifest(in)), out);
  return 0;
}

int run_dataset_rebalance(const std::string& primary, const std::string& donors,
                          double ratio, std::uint64_t seed,
                          const std::string& out) {
  msti::save_manifest(msti::rebalance(msti::load_manifest(primary),
                                      msti::load_manifest(donors), ratio,
                                      seed),
                      out);
  return 0;
}

int run_dataset_stats(const std::string& path, bool json) {
  const msti::DatasetStats stats =
      msti::dataset_stats(msti::load_manifest(path));
  if (json) {
    std::cout << msti::stats_to_json(stats) << '\n';
    return 0;
  }
  for (const auto& [split, c] : stats.per_split) {
    std::printf("%-6s sarcastic %-6lld non-sarcastic %-6lld total %lld\n",
                std::string(msti::to_string(split)).c_str(), c.sarcastic,
                c.non_sarcastic, c.total);
  }
  std::printf("%-6s sarcastic %-6lld non-sarcastic %-6lld total %lld\n",
              "total", stats.total.sarcastic, stats.total.non_sarcastic,
              stats.total.total);
  std::printf(
      "modality: text_only %lld visual_only %lld text_and_visual %lld "
      "neither %lld\n",
      stats.text_only, stats.visual_only, stats.text_and_visual,
      stats.neither);
  return 0;
}

int run_judge(const std::string& config_path, const std::string& pairs_path,
              const std::string& out_path) {
  const nlohmann::json cj = read_json_file(config_path);
  msti::JudgeClientConfig cfg;
  cfg.endpoint = cj.at("endpoint").get<std::string>();
  cfg.model = cj.value("model", std::string{"judge"});
  cfg.auth_env = cj.value("auth_env", std::string{});
  cfg.max_retries = cj.value("max_retries", cfg.max_retries);
  cfg.timeout_seconds = cj.value("timeout_seconds", cfg.timeout_seconds);
  cfg.image_mode = cj.value("image_mode", cfg.image_mode);
  cfg.cache_dir = cj.value("cache_dir", cfg.cache_dir);
  cfg.max_in_flight = cj.value("max_in_flight", cfg.max_in_flight);
  cfg.strict_json = cj.value("strict_json", cfg.strict_json);

  std::vector<std::pair<msti::Sample, std::string>> pairs;
  for (const nlohmann::json& line : read_jsonl(pairs_path)) {
    pairs.emplace_back(line.at("sample").get<msti::Sample>(),
                       line.at("response").get<std::string>());
  }

  const msti::CorpusResult result = msti::evaluate_corpus(cfg, pairs);
  nlohmann::json per = nlohmann::json::array();
  for (const msti::SampleJudgeResult& r : result.per_sample) {
    nlohmann::json item{{"id", r.id},
                        {"attempts", r.attempts},
                        {"from_cache", r.from_cache}};
    if (r.scores) {
      item["scores"] = {{"V", r.scores->v}, {"R", r.scores->r},
                        {"C", r.scores->c}};
    } else {
      item["error"] = r.error;
    }
    per.push_back(item);
  }
  const nlohmann::json out{{"mean_v", result.mean_v},
                           {"mean_r", result.mean_r},
                           {"mean_c", result.mean_c},
                           {"succeeded", result.succeeded},
                           {"failed", result.failed},
                           {"network_calls", result.network_calls},
                           {"per_sample", per}};
  if (out_path.empty() || out_path == "-") {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream f(out_path);
    f << out.dump(2) << '\n';
  }
  return 0;
}

int run_sim(const msti::SimConfig& cfg, const std::string& out_path) {
  const msti::Sample gt = toy_sample();
  const msti::AnswerSpace space = msti::AnswerSpace::around(gt);
  const msti::TrainResult result = msti::train(gt, space, cfg);

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty() && out_path != "-") {
    file.open(out_path);
    out = &file;
  }
  *out << "step,mean_total,mean_fmt,mean_acc,mean_box,mean_txt,mean_over\n";
  char row[160];
  for (const msti::StepRecord& r : result.curve) {
    std::snprintf(row, sizeof(row), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                  r.step, r.mean_total, r.mean_fmt, r.mean_acc, r.mean_box,
                  r.mean_txt, r.mean_over);
    *out << row;
  }
  std::cerr << "best possible total: " << result.best_possible << '\n';
  return 0;
}

int run_gradcheck(int instances, std::uint64_t seed) {
  const msti::GradCheckResult result = msti::grad_check(instances, seed);
  std::printf("max relative error over %d instances: %.3e\n",
              result.instances, result.max_rel_error);
  return result.max_rel_error < 1e-4 ? 0 : 3;
}

int run_serve(const std::string& bind, int port,
              const msti::RewardConfig& reward) {
  msti::ServiceConfig cfg;
  cfg.bind_address = bind;
  cfg.port = port;
  cfg.reward = reward;
  msti::RewardService service(cfg);
  std::cerr << "listening on " << bind << ":" << port << '\n';
  service.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grounded sarcasm-target reward and evaluation toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON file overriding reward and simulator defaults");

  std::string input = "-";
  bool as_json = false;
  auto* parse_cmd = app.add_subcommand("parse", "parse a model completion");
  parse_cmd->add_option("input", input, "completion file, or - for stdin");
  parse_cmd->add_flag("--json", as_json, "machine-readable output");

  std::string request_path;
  auto* score_cmd =
      app.add_subcommand("score", "score completion groups against truths");
  score_cmd->add_option("--request", request_path, "reward request JSON")
      ->required();
  score_cmd->add_flag("--json", as_json, "machine-readable output (default)");

  std::string preds_path, refs_path;
  auto* metrics_cmd =
      app.add_subcommand("metrics", "evaluate predictions against references");
  metrics_cmd->add_option("--preds", preds_path, "predictions JSONL")
      ->required();
  metrics_cmd->add_option("--refs", refs_path, "references JSONL")->required();
  metrics_cmd->add_flag("--json", as_json, "machine-readable output");

  std::string weights_input;
  auto* weights_cmd =
      app.add_subcommand("weights", "emit per-token loss weights");
  weights_cmd
      ->add_option("--input", weights_input,
                   "JSON document {target, token_spans, lambda}")
      ->required();
  weights_cmd->add_flag("--json", as_json, "machine-readable output (default)");

  auto* dataset_cmd = app.add_subcommand("dataset", "dataset tooling");
  dataset_cmd->require_subcommand(1);
  std::string ds_in, ds_out, ds_donors;
  double ds_ratio = 0.5;
  std::uint64_t ds_seed = 0;
  auto* ds_validate = dataset_cmd->add_subcommand("validate", "check a manifest");
  ds_validate->add_option("path", ds_in)->required();
  auto* ds_normalize =
      dataset_cmd->add_subcommand("normalize", "map pixel boxes to [0,1000]");
  ds_normalize->add_option("input", ds_in)->required();
  ds_normalize->add_option("output", ds_out)->required();
  auto* ds_rebalance = dataset_cmd->add_subcommand(
      "rebalance", "inject non-sarcastic donors up to a target ratio");
  ds_rebalance->add_option("primary", ds_in)->required();
  ds_rebalance->add_option("donors", ds_donors)->required();
  ds_rebalance->add_option("output", ds_out)->required();
  ds_rebalance->add_option("--ratio", ds_ratio, "target non-sarcastic fraction")
      ->required();
  ds_rebalance->add_option("--seed", ds_seed, "draw seed");
  auto* ds_stats = dataset_cmd->add_subcommand("stats", "summarize a manifest");
  ds_stats->add_option("path", ds_in)->required();
  ds_stats->add_flag("--json", as_json, "machine-readable output");

  auto* judge_cmd = app.add_subcommand("judge", "LLM-as-a-judge client");
  judge_cmd->require_subcommand(1);
  std::string judge_config, judge_pairs, judge_out;
  auto* judge_run = judge_cmd->add_subcommand("run", "judge a response corpus");
  judge_run->add_option("--config", judge_config, "client config JSON")
      ->required();
  judge_run->add_option("--pairs", judge_pairs, "JSONL of {sample, response}")
      ->required();
  judge_run->add_option("--out", judge_out, "output JSON path (- for stdout)");

  auto* sim_cmd = app.add_subcommand("ftpo-sim", "policy-optimization sandbox");
  sim_cmd->require_subcommand(1);
  int sim_steps = -1, sim_g = -1, gc_instances = 20;
  double sim_lr = -1.0, sim_beta_kl = -1.0, sim_eps = -1.0;
  std::uint64_t sim_seed = 0, gc_seed = 20240501;
  bool sim_seed_set = false;
  std::string sim_out;
  auto* sim_run = sim_cmd->add_subcommand("run", "train on the toy task");
  sim_run->add_option("--steps", sim_steps);
  sim_run->add_option("--lr", sim_lr);
  sim_run->add_option("--g", sim_g, "group size");
  sim_run->add_option("--beta-kl", sim_beta_kl);
  sim_run->add_option("--eps-clip", sim_eps);
  sim_run->add_option("--seed", sim_seed)->trigger_on_parse()
      ->each([&](const std::string&) { sim_seed_set = true; });
  sim_run->add_option("--out", sim_out, "CSV path (- for stdout)");
  auto* sim_gradcheck = sim_cmd->add_subcommand(
      "gradcheck", "compare analytic and finite-difference gradients");
  sim_gradcheck->add_option("--instances", gc_instances);
  sim_gradcheck->add_option("--seed", gc_seed);

  std::string bind_address = "127.0.0.1";
  int port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "run the reward service");
  serve_cmd->add_option("--bind", bind_address);
  serve_cmd->add_option("--port", port);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const ConfigDoc config = load_config(config_path);
    if (parse_cmd->parsed()) return run_parse(input, as_json);
    if (score_cmd->parsed()) return run_score(request_path, config.reward);
    if (metrics_cmd->parsed()) {
      return run_metrics(preds_path, refs_path, as_json);
    }
    if (weights_cmd->parsed()) return run_weights(weights_input);
    if (dataset_cmd->parsed()) {
      if (ds_validate->parsed()) return run_dataset_validate(ds_in);
      if (ds_normalize->parsed()) return run_dataset_normalize(ds_in, ds_out);
      if (ds_rebalance->parsed()) {
        return run_dataset_rebalance(ds_in, ds_donors, ds_ratio, ds_seed,
                                     ds_out);
      }
      if (ds_stats->parsed()) return run_dataset_stats(ds_in, as_json);
    }
    if (judge_cmd->parsed()) {
      return run_judge(judge_config, judge_pairs, judge_out);
    }
    if (sim_cmd->parsed()) {
      if (sim_run->parsed()) {
        msti::SimConfig cfg = config.sim;
        if (sim_steps > 0) cfg.steps = sim_steps;
        if (sim_lr >= 0.0) cfg.lr = sim_lr;
        if (sim_g > 0) cfg.G = sim_g;
        if (sim_beta_kl >= 0.0) cfg.beta_kl = sim_beta_kl;
        if (sim_eps > 0.0) cfg.eps_clip = sim_eps;
        if (sim_seed_set) cfg.seed = sim_seed;
        return run_sim(cfg, sim_out);
      }
      if (sim_gradcheck->parsed()) return run_gradcheck(gc_instances, gc_seed);
    }
    if (serve_cmd->parsed()) {
      return run_serve(bind_address, port, config.reward);
    }
  } catch (const msti::Error& e) {
    std::cerr << "error [" << msti::errc_name(e.code()) << "]: " << e.what()
              << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error [ParseError]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
