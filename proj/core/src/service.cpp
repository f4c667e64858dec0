#include "msti/service.hpp"

#include <iostream>
#include <map>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "msti/json_io.hpp"
#include "msti/metrics.hpp"
#include "msti/parser.hpp"
#include "msti/rewards.hpp"

namespace msti {

const char* version_string() {
#ifdef MSTI_VERSION
  return MSTI_VERSION;
#else
  return "0.0.0";
#endif
}

namespace {

nlohmann::json error_body(const char* code, const std::string& message,
                          const std::string& detail) {
  return {{"error_code", code}, {"message", message}, {"detail", detail}};
}

void fail(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

nlohmann::json handle_reward(const nlohmann::json& request,
                             const RewardConfig& base_cfg) {
  RewardConfig cfg = base_cfg;
  if (request.contains("config")) {
    request.at("config").get_to(cfg);
    std::cerr << "reward config overridden for one request: "
              << request.at("config").dump() << '\n';
  }
  const nlohmann::json& items = request.at("items");
  if (!items.is_array() || items.empty()) {
    throw Error(errc::empty_input, "items must be a nonempty array");
  }

  std::size_t group_size = 0;
  nlohmann::json out_items = nlohmann::json::array();
  for (const nlohmann::json& item : items) {
    const Sample gt = item.at("ground_truth").get<Sample>();
    const std::vector<std::string> completions =
        item.at("completions").get<std::vector<std::string>>();
    if (completions.size() < 2) {
      throw Error(errc::group_too_small,
                  "item for " + gt.id + " has " +
                      std::to_string(completions.size()) + " completions");
    }
    if (group_size == 0) {
      group_size = completions.size();
    } else if (completions.size() != group_size) {
      throw Error(errc::group_size_mismatch,
                  "all items in a request must share G");
    }
    std::vector<RewardVector> vectors;
    const GroupScores scores = score_group(completions, gt, cfg, &vectors);
    out_items.push_back({{"rewards", vectors},
                         {"totals", scores.totals},
                         {"advantages", scores.advantages}});
  }
  return {{"version", version_string()}, {"items", out_items}};
}

nlohmann::json handle_parse(const nlohmann::json& request) {
  const std::string completion = request.at("completion").get<std::string>();
  return parse_response(completion);
}

nlohmann::json handle_metrics(const nlohmann::json& request) {
  const std::vector<Sample> refs =
      request.at("references").get<std::vector<Sample>>();
  if (refs.empty()) throw Error(errc::empty_input, "references are empty");

  std::map<std::string, std::string> by_id;
  for (const nlohmann::json& p : request.at("predictions")) {
    const std::string id = p.at("id").get<std::string>();
    if (!by_id.emplace(id, p.at("completion").get<std::string>()).second) {
      throw Error(errc::duplicate_id, id);
    }
  }
  if (by_id.size() != refs.size()) {
    throw Error(errc::id_mismatch,
                std::to_string(by_id.size()) + " predictions vs " +
                    std::to_string(refs.size()) + " references");
  }
  std::vector<ParsedResponse> preds;
  preds.reserve(refs.size());
  for (const Sample& s : refs) {
    auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      throw Error(errc::id_mismatch, "no prediction for " + s.id);
    }
    preds.push_back(parse_response(it->second));
  }
  return nlohmann::json::parse(eval_report_to_json(msti_evaluate(preds, refs)));
}

}  // namespace

struct RewardService::Impl {
  ServiceConfig cfg;
  httplib::Server server;
  std::thread listener;
  int bound_port = 0;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(
          nlohmann::json{{"status", "ok"}, {"version", version_string()}}
              .dump(),
          "application/json");
    });

    auto json_post = [this](const char* route,
                            nlohmann::json (*handler)(const nlohmann::json&,
                                                      const RewardConfig&)) {
      server.Post(route, [this, handler, route](const httplib::Request& req,
                                                httplib::Response& res) {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception& e) {
          fail(res, 400, error_body("BadRequest", "request body is not JSON",
                                    e.what()));
          return;
        }
        try {
          res.set_content(handler(body, cfg.reward).dump(),
                          "application/json");
        } catch (const Error& e) {
          fail(res, 400, error_body(errc_name(e.code()), e.what(), route));
        } catch (const nlohmann::json::exception& e) {
          fail(res, 400, error_body("BadRequest", e.what(), route));
        } catch (const std::exception&) {
          fail(res, 500,
               error_body("Internal", "internal error", route));
        }
      });
    };

    json_post("/v1/reward", [](const nlohmann::json& j,
                               const RewardConfig& cfg) {
      return handle_reward(j, cfg);
    });
    json_post("/v1/parse", [](const nlohmann::json& j, const RewardConfig&) {
      return handle_parse(j);
    });
    json_post("/v1/metrics", [](const nlohmann::json& j, const RewardConfig&) {
      return handle_metrics(j);
    });
  }
};

RewardService::RewardService(ServiceConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}

RewardService::~RewardService() { stop(); }

int RewardService::start() {
  if (impl_->cfg.port == 0) {
    impl_->bound_port =
        impl_->server.bind_to_any_port(impl_->cfg.bind_address);
    if (impl_->bound_port <= 0) {
      throw Error(errc::bind_failure, impl_->cfg.bind_address);
    }
  } else {
    if (!impl_->server.bind_to_port(impl_->cfg.bind_address,
                                    impl_->cfg.port)) {
      throw Error(errc::bind_failure,
                  impl_->cfg.bind_address + ":" +
                      std::to_string(impl_->cfg.port));
    }
    impl_->bound_port = impl_->cfg.port;
  }
  impl_->listener = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->bound_port;
}

void RewardService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void RewardService::run() {
  if (!impl_->server.listen(impl_->cfg.bind_address, impl_->cfg.port)) {
    throw Error(errc::bind_failure,
                impl_->cfg.bind_address + ":" +
                    std::to_string(impl_->cfg.port));
  }
}

}  // namespace msti
