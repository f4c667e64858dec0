#include "msti/judge.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace msti {

namespace {

constexpr const char* kTemplate = R"(Task: Evaluate a model's reasoning for Multimodal Sarcasm Detection. Be a STRICT judge. 5 is extremely rare.
[Inputs]
  1. Image
  2. Text: {text_input}
  3. Ground Truth: Label=[{gt_label}], Box(0-1000)=[{gt_boxes}], Words=[{gt_words}]
  4. Model Output: {model_response}
[Scoring 1-5]
  - V_Score (Visual): 1=hallucinated/missed GT box, 3=superficial, 5=perfectly identified GT objects.
  - R_Score (Reasoning): 1=wrong logic, 3=shallow textual analysis, 5=deep text-image contradiction analysis matching GT.
  - C_Score (Consistency): 1=conclusion contradicts reasoning, 5=perfectly aligned.
Output pure JSON only, no markdown, no explanations:
  {
    "V": <int>, "R": <int>, "C": <int>
  }
)";

void replace_all(std::string& text, std::string_view key,
                 std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string sanitize_id(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

std::string_view trim_view(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string_view strip_fence(std::string_view s) {
  s = trim_view(s);
  if (s.size() < 6 || s.substr(0, 3) != "```") return s;
  const std::size_t tail = s.rfind("```");
  if (tail == 0) return s;
  std::string_view inner = s.substr(3, tail - 3);
  // Drop an info string like "json" on the opening fence line.
  const std::size_t nl = inner.find('\n');
  if (nl != std::string_view::npos) {
    bool word_only = true;
    for (char c : inner.substr(0, nl)) {
      if (c == ' ' || c == '\t' || c == '\r') continue;
      if (!std::isalnum(static_cast<unsigned char>(c))) word_only = false;
    }
    if (word_only) inner.remove_prefix(nl + 1);
  }
  return trim_view(inner);
}

constexpr const char* kBase64Chars =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64(std::string_view data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 3 <= data.size()) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8) |
                       static_cast<unsigned char>(data[i + 2]);
    out += kBase64Chars[(v >> 18) & 63];
    out += kBase64Chars[(v >> 12) & 63];
    out += kBase64Chars[(v >> 6) & 63];
    out += kBase64Chars[v & 63];
    i += 3;
  }
  const std::size_t rest = data.size() - i;
  if (rest == 1) {
    const unsigned v = static_cast<unsigned char>(data[i]) << 16;
    out += kBase64Chars[(v >> 18) & 63];
    out += kBase64Chars[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const unsigned v = (static_cast<unsigned char>(data[i]) << 16) |
                       (static_cast<unsigned char>(data[i + 1]) << 8);
    out += kBase64Chars[(v >> 18) & 63];
    out += kBase64Chars[(v >> 12) & 63];
    out += kBase64Chars[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(errc::endpoint_unreachable, "bad endpoint URL: " + url);
  }
  const std::size_t slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) {
    return {url, "/v1/chat/completions"};
  }
  return {url.substr(0, slash), url.substr(slash)};
}

std::string image_part_url(const JudgeClientConfig& cfg, const Sample& s) {
  if (cfg.image_mode == "inline-base64") {
    std::ifstream in(s.image_path, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      return "data:image/jpeg;base64," + base64(buf.str());
    }
  }
  return s.image_path;
}

std::string cache_file(const JudgeClientConfig& cfg, const Sample& s,
                       const std::string& response) {
  const std::uint64_t digest = fnv1a64(cfg.model + "\n" + response);
  return cfg.cache_dir + "/" + sanitize_id(s.id) + "-" + hex64(digest) +
         ".json";
}

std::optional<JudgeScores> read_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    return JudgeScores{j.at("V").get<int>(), j.at("R").get<int>(),
                       j.at("C").get<int>()};
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

void write_cache(const std::string& path, const JudgeScores& s) {
  const std::string tmp = path + ".tmp" + hex64(fnv1a64(path));
  {
    std::ofstream out(tmp);
    out << nlohmann::json{{"V", s.v}, {"R", s.r}, {"C", s.c}}.dump() << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) std::filesystem::remove(tmp, ec);
}

}  // namespace

const char* to_string(JudgeFailure f) {
  switch (f) {
    case JudgeFailure::none: return "None";
    case JudgeFailure::malformed_json: return "MalformedJson";
    case JudgeFailure::missing_key: return "MissingKey";
    case JudgeFailure::out_of_range: return "OutOfRangeScore";
  }
  return "None";
}

std::string build_judge_prompt(const Sample& sample,
                               std::string_view model_response) {
  std::string boxes;
  for (std::size_t i = 0; i < sample.visual_targets.size(); ++i) {
    if (i > 0) boxes += ",";
    const BBox& b = sample.visual_targets[i];
    boxes += "(" + std::to_string(b.xmin) + "," + std::to_string(b.ymin) +
             "," + std::to_string(b.xmax) + "," + std::to_string(b.ymax) + ")";
  }
  std::string prompt = kTemplate;
  replace_all(prompt, "{text_input}", sample.text);
  replace_all(prompt, "{gt_label}", to_string(sample.label));
  replace_all(prompt, "{gt_boxes}", boxes);
  replace_all(prompt, "{gt_words}", sample.text_target);
  replace_all(prompt, "{model_response}", model_response);
  return prompt;
}

JudgeParseResult parse_judge_scores(std::string_view reply, bool strict) {
  JudgeParseResult result;
  const std::string_view body = strict ? trim_view(reply) : strip_fence(reply);

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    result.failure = JudgeFailure::malformed_json;
    result.detail = e.what();
    return result;
  }
  if (!j.is_object() || j.size() != 3) {
    result.failure = JudgeFailure::malformed_json;
    result.detail = "expected exactly the keys V, R, C";
    return result;
  }
  JudgeScores scores;
  for (const auto& [key, field] :
       {std::pair<const char*, int*>{"V", &scores.v},
        {"R", &scores.r},
        {"C", &scores.c}}) {
    if (!j.contains(key)) {
      result.failure = JudgeFailure::missing_key;
      result.detail = key;
      return result;
    }
    if (!j[key].is_number_integer()) {
      result.failure = JudgeFailure::malformed_json;
      result.detail = std::string(key) + " is not an integer";
      return result;
    }
    *field = j[key].get<int>();
    if (*field < 1 || *field > 5) {
      result.failure = JudgeFailure::out_of_range;
      result.detail = std::string(key) + "=" + std::to_string(*field);
      return result;
    }
  }
  result.scores = scores;
  return result;
}

CorpusResult evaluate_corpus(
    const JudgeClientConfig& cfg,
    const std::vector<std::pair<Sample, std::string>>& pairs) {
  if (cfg.max_retries < 0) {
    throw Error(errc::invalid_parameter, "max_retries must be >= 0");
  }
  const Endpoint endpoint = split_endpoint(cfg.endpoint);

  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
  }

  const char* token =
      cfg.auth_env.empty() ? nullptr : std::getenv(cfg.auth_env.c_str());

  CorpusResult corpus;
  corpus.per_sample.resize(pairs.size());
  std::atomic<std::size_t> next{0};
  std::atomic<long long> calls{0};
  std::mutex io_mutex;

  auto worker = [&] {
    httplib::Client client(endpoint.base);
    client.set_connection_timeout(static_cast<int>(cfg.timeout_seconds), 0);
    client.set_read_timeout(static_cast<int>(cfg.timeout_seconds), 0);

    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= pairs.size()) break;
      const Sample& sample = pairs[idx].first;
      const std::string& response = pairs[idx].second;
      SampleJudgeResult& out = corpus.per_sample[idx];
      out.id = sample.id;

      std::string cache_path;
      if (!cfg.cache_dir.empty()) {
        cache_path = cache_file(cfg, sample, response);
        if (auto cached = read_cache(cache_path)) {
          out.scores = *cached;
          out.from_cache = true;
          continue;
        }
      }

      nlohmann::json request{
          {"model", cfg.model},
          {"temperature", 0},
          {"messages",
           {{{"role", "user"},
             {"content",
              {{{"type", "text"},
                {"text", build_judge_prompt(sample, response)}},
               {{"type", "image_url"},
                {"image_url", {{"url", image_part_url(cfg, sample)}}}}}}}}}};

      httplib::Headers headers;
      if (token) headers.emplace("Authorization", std::string("Bearer ") + token);

      const int attempts_allowed = 1 + cfg.max_retries;
      for (int attempt = 0; attempt < attempts_allowed; ++attempt) {
        out.attempts = attempt + 1;
        calls.fetch_add(1);
        auto res = client.Post(endpoint.path, headers, request.dump(),
                               "application/json");
        if (!res || res->status != 200) {
          out.error = "EndpointUnreachable";
          continue;
        }
        std::string content;
        try {
          nlohmann::json reply = nlohmann::json::parse(res->body);
          content = reply.at("choices").at(0).at("message").at("content")
                        .get<std::string>();
        } catch (const nlohmann::json::exception&) {
          out.error = "MalformedJson";
          continue;
        }
        const JudgeParseResult parsed =
            parse_judge_scores(content, cfg.strict_json);
        if (!parsed.scores) {
          out.error = to_string(parsed.failure);
          continue;
        }
        out.scores = *parsed.scores;
        out.error.clear();
        if (!cache_path.empty()) {
          std::lock_guard<std::mutex> lock(io_mutex);
          write_cache(cache_path, *parsed.scores);
        }
        break;
      }
      if (!out.scores && out.error.empty()) out.error = "AllRetriesFailed";
    }
  };

  const int threads = std::max(
      1, std::min<int>(cfg.max_in_flight, static_cast<int>(pairs.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  corpus.network_calls = calls.load();
  for (const SampleJudgeResult& r : corpus.per_sample) {
    if (r.scores) {
      ++corpus.succeeded;
      corpus.mean_v += r.scores->v;
      corpus.mean_r += r.scores->r;
      corpus.mean_c += r.scores->c;
    } else {
      ++corpus.failed;
    }
  }
  if (corpus.succeeded > 0) {
    corpus.mean_v /= static_cast<double>(corpus.succeeded);
    corpus.mean_r /= static_cast<double>(corpus.succeeded);
    corpus.mean_c /= static_cast<double>(corpus.succeeded);
  }
  return corpus;
}

}  // namespace msti
