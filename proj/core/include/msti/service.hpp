#pragma once

#include <memory>
#include <string>

#include "msti/core.hpp"

namespace msti {

const char* version_string();

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;  // 0 picks an ephemeral port
  RewardConfig reward;
};

// JSON-over-HTTP front end: POST /v1/reward, /v1/parse, /v1/metrics,
// GET /healthz. Handlers are pure; requests may run concurrently.
class RewardService {
 public:
  explicit RewardService(ServiceConfig cfg);
  ~RewardService();
  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  // Background listener for tests; returns the bound port.
  int start();
  void stop();

  // Blocking listener for the CLI; returns on stop() or bind failure.
  void run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace msti
