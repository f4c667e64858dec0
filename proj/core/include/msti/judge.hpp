#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msti/core.hpp"

namespace msti {

struct JudgeScores {
  int v = 0;
  int r = 0;
  int c = 0;
};

struct JudgeClientConfig {
  std::string endpoint;  // e.g. http://host:1234/v1/chat/completions
  std::string model;
  std::string auth_env;  // name of the env var holding the token
  int max_retries = 2;
  double timeout_seconds = 30.0;
  std::string image_mode = "url";  // or "inline-base64"
  std::string cache_dir;           // empty disables caching
  int max_in_flight = 4;
  bool strict_json = false;        // refuse fenced replies
};

enum class JudgeFailure { none, malformed_json, missing_key, out_of_range };

const char* to_string(JudgeFailure f);

struct JudgeParseResult {
  std::optional<JudgeScores> scores;
  JudgeFailure failure = JudgeFailure::none;
  std::string detail;
};

// Fills the scoring template; bytes are a pure function of the inputs.
std::string build_judge_prompt(const Sample& sample,
                               std::string_view model_response);

// Strips one surrounding code fence (unless strict), then requires one
// JSON object with exactly the integer keys V, R, C in 1..5.
JudgeParseResult parse_judge_scores(std::string_view reply,
                                    bool strict = false);

struct SampleJudgeResult {
  std::string id;
  std::optional<JudgeScores> scores;
  int attempts = 0;
  bool from_cache = false;
  std::string error;
};

struct CorpusResult {
  std::vector<SampleJudgeResult> per_sample;
  double mean_v = 0.0;
  double mean_r = 0.0;
  double mean_c = 0.0;
  long long succeeded = 0;
  long long failed = 0;
  long long network_calls = 0;
};

// One judged sample per (Sample, response) pair; per-sample failures
// are recorded, never thrown. Successful scores are cached on disk
// keyed by (model, sample id, response digest), so a rerun over the
// same inputs performs zero network calls.
CorpusResult evaluate_corpus(
    const JudgeClientConfig& cfg,
    const std::vector<std::pair<Sample, std::string>>& pairs);

}  // namespace msti
