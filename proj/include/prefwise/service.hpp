// Copyright 2026 The Prefwise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFWISE_SERVICE_HPP_
#define PREFWISE_SERVICE_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prefwise/belief.hpp"
#include "prefwise/environment.hpp"
#include "prefwise/query.hpp"
#include "prefwise/serialization.hpp"

namespace httplib {
class Server;
}

namespace prefwise {

struct ApiResponse {
  int status = 200;
  Json body;
};

enum class SessionStatus { kCollectingDemos, kQuerying, kStopped };

std::string to_string(SessionStatus status);
SessionStatus session_status_from_string(const std::string& name);

/// Validated session settings, persisted under "config".
struct SessionSettings {
  EnvKind env = EnvKind::kDriver;
  std::string pool;
  Strategy strategy = Strategy::kInfoGain;
  ChoiceModelConfig choice;
  CostSpec cost;
  int num_samples = 100;
  double demo_beta = 0.02;
  /// Hard cap on answered queries; 0 means no cap.
  int max_queries = 0;
  MhConfig mh;
  std::size_t sampled_pairs = 50000;

  Json to_json() const;
};

struct DemoInput {
  Eigen::VectorXd initial_state;
  std::vector<Eigen::VectorXd> actions;
};

struct HistoryItem {
  IdPair query{0, 0};
  Outcome answer = Outcome::choice(0);
  double info_bits = 0.0;
  double cost = 0.0;
};

struct PendingQuery {
  std::string query_id;
  QueryDecision decision;
};

/// Live state of one session. Guarded by `mutex`.
struct Session {
  std::mutex mutex;
  std::string id;
  std::string created_at;
  std::uint64_t seed = 0;
  SessionSettings settings;
  const QueryPool* pool = nullptr;
  std::vector<DemoInput> demos;
  std::vector<HistoryItem> history;
  std::optional<PendingQuery> pending;
  SessionStatus status = SessionStatus::kCollectingDemos;
  std::string stop_reason;
  std::optional<BeliefDefinition> belief;
  SampleSet samples;

  Json to_json() const;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
};

/// Session-oriented elicitation API. Handlers are plain functions of JSON so
/// they can be exercised without a socket; `bind_routes` maps them onto HTTP.
class ElicitationService {
 public:
  explicit ElicitationService(ServiceOptions options);

  /// Registers a pool under `name`; requests reference it by that name.
  void add_pool(const std::string& name, QueryPool pool);

  ApiResponse create_session(const Json& body);
  ApiResponse add_demonstration(const std::string& id, const Json& body);
  ApiResponse next_query(const std::string& id);
  ApiResponse submit_answer(const std::string& id, const Json& body);
  ApiResponse get_belief(const std::string& id);

  /// Routes a raw request; used by the HTTP binding and by tests.
  ApiResponse handle(const std::string& method, const std::string& path,
                     const std::string& body);

  std::filesystem::path session_path(const std::string& id) const;

 private:
  std::shared_ptr<Session> find(const std::string& id);
  std::shared_ptr<Session> load(const std::string& id);
  void persist(const Session& s) const;

  ServiceOptions options_;
  std::map<std::string, std::unique_ptr<QueryPool>> pools_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Rebuilds a session from its persisted demos and history, re-running every
/// posterior update from scratch.
struct ReplayResult {
  BeliefDefinition belief;
  SampleSet samples;
};
ReplayResult replay_session(const Json& record, const QueryPool& pool);

void bind_routes(httplib::Server& server, ElicitationService& service);

}  // namespace prefwise

#endif  // PREFWISE_SERVICE_HPP_
