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

#include "prefwise/service.hpp"

#include <algorithm>
#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_generators.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <chrono>
#include <ctime>
#include <random>
#include <regex>
#include <set>
#include <stdexcept>

#include "httplib.h"
#include "prefwise/seeding.hpp"

namespace prefwise {

std::string to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::kCollectingDemos: return "collecting_demos";
    case SessionStatus::kQuerying: return "querying";
    case SessionStatus::kStopped: return "stopped";
  }
  return "unknown";
}

SessionStatus session_status_from_string(const std::string& name) {
  if (name == "collecting_demos") return SessionStatus::kCollectingDemos;
  if (name == "querying") return SessionStatus::kQuerying;
  if (name == "stopped") return SessionStatus::kStopped;
  throw std::invalid_argument("unknown session status '" + name + "'");
}

Json SessionSettings::to_json() const {
  return {{"env", prefwise::to_string(env)},
          {"pool", pool},
          {"strategy", prefwise::to_string(strategy)},
          {"choice", choice_to_json(choice)},
          {"cost", cost_to_json(cost)},
          {"num_samples", num_samples},
          {"demo_beta", demo_beta},
          {"max_queries", max_queries},
          {"mh", mh_to_json(mh)},
          {"sampled_pairs", sampled_pairs}};
}

namespace {

constexpr const char* kStopReasonGain = "net information gain negative";
constexpr const char* kStopReasonBudget = "query budget exhausted";

ApiResponse error(int status, const std::string& message, Json extra = Json::object()) {
  extra["error"] = message;
  return {status, std::move(extra)};
}

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t demo_seed(std::uint64_t seed, std::size_t demo_index) {
  return derive_seed(seed, {1, demo_index});
}
std::uint64_t answer_seed(std::uint64_t seed, std::size_t answer_index) {
  return derive_seed(seed, {2, answer_index});
}
std::uint64_t selection_seed(std::uint64_t seed, std::size_t answer_index) {
  return derive_seed(seed, {3, answer_index});
}

/// Warm-started resample; the first chain of a session starts at the origin.
SampleSet resample(const BeliefDefinition& def, const SessionSettings& s,
                   std::uint64_t seed, const SampleSet& previous) {
  if (previous.samples.empty()) {
    return sample_posterior(def, s.num_samples, seed, s.mh);
  }
  ChainStart start{previous.samples.back(), 0.0};
  return sample_posterior(def, s.num_samples, seed, s.mh, start);
}

/// Validates a create request; field-level problems go into `fields`.
SessionSettings parse_settings(const Json& body, Json& fields) {
  SessionSettings s;
  auto check = [&](const char* field, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      fields[field] = e.what();
    }
  };
  if (!body.is_object()) {
    fields["body"] = "expected a JSON object";
    return s;
  }
  check("env", [&] {
    if (!body.contains("env")) throw std::invalid_argument("required");
    s.env = env_kind_from_string(body.at("env").get<std::string>());
  });
  check("pool", [&] {
    if (!body.contains("pool")) throw std::invalid_argument("required");
    s.pool = body.at("pool").get<std::string>();
  });
  check("strategy", [&] {
    s.strategy = strategy_from_string(body.value("strategy", std::string("info_gain")));
  });
  check("choice", [&] {
    if (body.contains("choice")) s.choice = choice_from_json(body.at("choice"));
  });
  check("cost", [&] {
    if (body.contains("cost")) s.cost = cost_from_json(body.at("cost"));
  });
  check("num_samples", [&] {
    s.num_samples = body.value("num_samples", s.num_samples);
    if (s.num_samples < 2) throw std::invalid_argument("must be >= 2");
  });
  check("demo_beta", [&] {
    s.demo_beta = body.value("demo_beta", s.demo_beta);
    if (!(s.demo_beta >= 0.0)) throw std::invalid_argument("must be >= 0");
  });
  check("max_queries", [&] {
    s.max_queries = body.value("max_queries", s.max_queries);
    if (s.max_queries < 0) throw std::invalid_argument("must be >= 0");
  });
  check("mh", [&] {
    if (body.contains("mh")) s.mh = mh_from_json(body.at("mh"));
    if (!(s.mh.proposal_scale > 0.0) || s.mh.burn_in < 0 || s.mh.thin < 1) {
      throw std::invalid_argument("needs proposal_scale > 0, burn_in >= 0, thin >= 1");
    }
  });
  check("sampled_pairs", [&] {
    s.sampled_pairs = body.value("sampled_pairs", s.sampled_pairs);
    if (s.sampled_pairs < 1) throw std::invalid_argument("must be >= 1");
  });
  return s;
}

Json belief_mean_json(const SampleSet& samples) {
  return vector_to_json(samples.mean());
}

Json states_json(const Trajectory& t) { return vectors_to_json(t.states); }

IdPair canonical(IdPair p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

Json history_item_json(const HistoryItem& h) {
  return {{"query", {h.query.first, h.query.second}},
          {"answer", h.answer.label()},
          {"info_bits", h.info_bits},
          {"cost", h.cost}};
}

PreferenceTerm term_for(const QueryPool& pool, const HistoryItem& h,
                        const ChoiceModelConfig& model) {
  return {pool.features(h.query.first), pool.features(h.query.second), h.answer,
          model};
}

const std::regex& id_pattern() {
  static const std::regex re("^[0-9a-f-]{1,64}$");
  return re;
}

}  // namespace

Json Session::to_json() const {
  Json j;
  j["id"] = id;
  j["created_at"] = created_at;
  j["seed"] = seed;
  j["config"] = settings.to_json();
  j["demos"] = Json::array();
  for (const DemoInput& d : demos) {
    j["demos"].push_back({{"initial_state", vector_to_json(d.initial_state)},
                          {"actions", vectors_to_json(d.actions)}});
  }
  j["history"] = Json::array();
  for (const HistoryItem& h : history) j["history"].push_back(history_item_json(h));
  j["samples"] = vectors_to_json(samples.samples);
  j["status"] = to_string(status);
  if (!stop_reason.empty()) j["stop_reason"] = stop_reason;
  if (pending) {
    j["pending"] = {{"query_id", pending->query_id},
                    {"query", {pending->decision.query.ids.first,
                               pending->decision.query.ids.second}},
                    {"info_bits", pending->decision.info_bits},
                    {"cost", pending->decision.cost},
                    {"objective", pending->decision.objective_value}};
  }
  return j;
}

ReplayResult replay_session(const Json& record, const QueryPool& pool) {
  Json fields;
  const SessionSettings s = parse_settings(record.at("config"), fields);
  if (!fields.empty()) throw std::invalid_argument("bad config: " + fields.dump());
  const std::uint64_t seed = record.at("seed").get<std::uint64_t>();
  BeliefDefinition def(pool.env.feature_dim, s.demo_beta);
  SampleSet samples = sample_posterior(def, s.num_samples, derive_seed(seed, {0}), s.mh);
  std::size_t k = 0;
  for (const Json& d : record.at("demos")) {
    const Trajectory t = rollout(pool.env, vector_from_json(d.at("initial_state")),
                                 vectors_from_json(d.at("actions")));
    def.add_demo(t.features);
    samples = resample(def, s, demo_seed(seed, k++), samples);
  }
  k = 0;
  for (const Json& h : record.at("history")) {
    HistoryItem item;
    item.query = {h.at("query").at(0).get<int>(), h.at("query").at(1).get<int>()};
    item.answer = Outcome::from_label(h.at("answer").get<std::string>());
    def.add_preference(term_for(pool, item, s.choice));
    samples = resample(def, s, answer_seed(seed, k++), samples);
  }
  return {std::move(def), std::move(samples)};
}

ElicitationService::ElicitationService(ServiceOptions options)
    : options_(std::move(options)) {
  if (options_.data_dir.empty()) throw std::invalid_argument("data_dir is required");
  std::filesystem::create_directories(options_.data_dir);
}

void ElicitationService::add_pool(const std::string& name, QueryPool pool) {
  pools_[name] = std::make_unique<QueryPool>(std::move(pool));
}

std::filesystem::path ElicitationService::session_path(const std::string& id) const {
  return options_.data_dir / (id + ".json");
}

void ElicitationService::persist(const Session& s) const {
  write_file_atomic(session_path(s.id), s.to_json().dump());
}

std::shared_ptr<Session> ElicitationService::load(const std::string& id) {
  const std::filesystem::path path = session_path(id);
  if (!std::filesystem::exists(path)) return nullptr;
  const Json j = Json::parse(read_file(path));
  auto s = std::make_shared<Session>();
  Json fields;
  s->settings = parse_settings(j.at("config"), fields);
  if (!fields.empty()) throw std::runtime_error("corrupt session config " + id);
  const auto pool = pools_.find(s->settings.pool);
  if (pool == pools_.end()) {
    throw std::runtime_error("session " + id + " references unloaded pool " +
                             s->settings.pool);
  }
  s->pool = pool->second.get();
  s->id = j.at("id").get<std::string>();
  s->created_at = j.at("created_at").get<std::string>();
  s->seed = j.at("seed").get<std::uint64_t>();
  s->status = session_status_from_string(j.at("status").get<std::string>());
  s->stop_reason = j.value("stop_reason", std::string());

  BeliefDefinition def(s->pool->env.feature_dim, s->settings.demo_beta);
  for (const Json& d : j.at("demos")) {
    DemoInput demo{vector_from_json(d.at("initial_state")),
                   vectors_from_json(d.at("actions"))};
    def.add_demo(rollout(s->pool->env, demo.initial_state, demo.actions).features);
    s->demos.push_back(std::move(demo));
  }
  for (const Json& h : j.at("history")) {
    HistoryItem item;
    item.query = {h.at("query").at(0).get<int>(), h.at("query").at(1).get<int>()};
    item.answer = Outcome::from_label(h.at("answer").get<std::string>());
    item.info_bits = h.at("info_bits").get<double>();
    item.cost = h.at("cost").get<double>();
    def.add_preference(term_for(*s->pool, item, s->settings.choice));
    s->history.push_back(item);
  }
  s->belief = std::move(def);

  // Samples are derived data: trust the persisted set when it is complete,
  // otherwise replay every update.
  std::vector<Eigen::VectorXd> stored = vectors_from_json(j.at("samples"));
  if (static_cast<int>(stored.size()) == s->settings.num_samples) {
    s->samples.samples = std::move(stored);
    s->samples.mh = s->settings.mh;
  } else {
    s->samples = replay_session(j, *s->pool).samples;
  }

  if (j.contains("pending")) {
    const Json& p = j.at("pending");
    PendingQuery pending;
    pending.query_id = p.at("query_id").get<std::string>();
    pending.decision.query.ids = {p.at("query").at(0).get<int>(),
                                  p.at("query").at(1).get<int>()};
    pending.decision.query.allow_about_equal =
        s->settings.choice.kind == ChoiceKind::kWeak;
    pending.decision.info_bits = p.at("info_bits").get<double>();
    pending.decision.cost = p.at("cost").get<double>();
    pending.decision.objective_value = p.value("objective", pending.decision.info_bits);
    pending.decision.net_value = pending.decision.info_bits - pending.decision.cost;
    s->pending = pending;
  }
  return s;
}

std::shared_ptr<Session> ElicitationService::find(const std::string& id) {
  if (!std::regex_match(id, id_pattern())) return nullptr;
  std::lock_guard<std::mutex> lock(registry_mutex_);
  const auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;
  std::shared_ptr<Session> s = load(id);
  if (s) sessions_[id] = s;
  return s;
}

ApiResponse ElicitationService::create_session(const Json& body) {
  Json fields = Json::object();
  SessionSettings settings = parse_settings(body, fields);
  if (!fields.empty()) return error(400, "invalid session request", {{"fields", fields}});

  const auto pool = pools_.find(settings.pool);
  if (pool == pools_.end()) {
    return error(404, "pool '" + settings.pool + "' is not loaded");
  }
  if (pool->second->env.kind != settings.env) {
    return error(400, "invalid session request",
                 {{"fields", {{"env", "pool '" + settings.pool + "' is a " +
                                          to_string(pool->second->env.kind) +
                                          " pool"}}}});
  }

  auto s = std::make_shared<Session>();
  s->id = boost::uuids::to_string(boost::uuids::random_generator()());
  s->created_at = utc_now();
  if (body.contains("seed")) {
    s->seed = body.at("seed").get<std::uint64_t>();
  } else {
    std::random_device rd;
    s->seed = (std::uint64_t(rd()) << 32) ^ rd();
  }
  s->settings = settings;
  s->pool = pool->second.get();
  s->belief.emplace(s->pool->env.feature_dim, settings.demo_beta);
  s->samples = sample_posterior(*s->belief, settings.num_samples,
                                derive_seed(s->seed, {0}), settings.mh);
  persist(*s);
  {
    std::lock_guard<std::mutex> lock(registry_mutex_);
    sessions_[s->id] = s;
  }

  Json out{{"session_id", s->id}};
  const bool has_cost = settings.cost.kind != CostKind::kConstant ||
                        settings.cost.epsilon != 0.0;
  if (settings.strategy != Strategy::kInfoGain && has_cost) {
    out["warning"] = to_string(settings.strategy) +
                     " ignores the stopping rule; the cost is reported but never "
                     "ends the session";
  }
  return {201, out};
}

ApiResponse ElicitationService::add_demonstration(const std::string& id,
                                                  const Json& body) {
  const auto s = find(id);
  if (!s) return error(404, "unknown session " + id);
  std::lock_guard<std::mutex> lock(s->mutex);
  if (s->status != SessionStatus::kCollectingDemos) {
    return error(409, "demonstrations must come before the first query");
  }
  const EnvironmentSpec& env = s->pool->env;
  DemoInput demo;
  Trajectory t;
  try {
    if (!body.is_object() || !body.contains("actions")) {
      return error(400, "invalid demonstration", {{"fields", {{"actions", "required"}}}});
    }
    demo.actions = vectors_from_json(body.at("actions"));
    if (static_cast<int>(demo.actions.size()) == env.num_segments() &&
        env.num_segments() != env.horizon) {
      demo.actions = expand_controls(env, demo.actions);
    }
    demo.initial_state = body.contains("initial_state")
                             ? vector_from_json(body.at("initial_state"))
                             : env.initial_state;
    t = rollout(env, demo.initial_state, demo.actions);
  } catch (const std::exception& e) {
    return error(400, "invalid demonstration", {{"fields", {{"actions", e.what()}}}});
  }
  s->belief->add_demo(t.features);
  s->demos.push_back(demo);
  s->samples = resample(*s->belief, s->settings, demo_seed(s->seed, s->demos.size() - 1),
                        s->samples);
  persist(*s);
  return {200,
          {{"demo_count", s->demos.size()},
           {"belief_mean", belief_mean_json(s->samples)},
           {"feature_labels", env.feature_labels()},
           {"features", vector_to_json(t.features.values())},
           {"states", states_json(t)}}};
}

ApiResponse ElicitationService::next_query(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown session " + id);
  std::lock_guard<std::mutex> lock(s->mutex);
  if (s->status == SessionStatus::kStopped) {
    return error(410, "session stopped", {{"reason", s->stop_reason}});
  }
  s->status = SessionStatus::kQuerying;

  if (!s->pending) {
    const SessionSettings& cfg = s->settings;
    if (cfg.max_queries > 0 && static_cast<int>(s->history.size()) >= cfg.max_queries) {
      s->status = SessionStatus::kStopped;
      s->stop_reason = kStopReasonBudget;
      persist(*s);
      return {200, {{"stopped", true}, {"reason", s->stop_reason}}};
    }
    SelectionOptions options;
    options.strategy = cfg.strategy;
    options.choice = cfg.choice;
    options.cost = cfg.cost;
    options.sampled_pairs = cfg.sampled_pairs;
    options.seed = selection_seed(s->seed, s->history.size());
    options.candidate_seed = derive_seed(s->seed, {3});
    for (const HistoryItem& h : s->history) options.excluded.insert(canonical(h.query));
    QueryDecision decision;
    try {
      decision = select_query(*s->pool, s->samples, options);
    } catch (const std::invalid_argument& e) {
      s->status = SessionStatus::kStopped;
      s->stop_reason = e.what();
      persist(*s);
      return {200, {{"stopped", true}, {"reason", s->stop_reason}}};
    }
    if (decision.stop) {
      s->status = SessionStatus::kStopped;
      s->stop_reason = kStopReasonGain;
      persist(*s);
      return {200, {{"stopped", true}, {"reason", s->stop_reason}}};
    }
    s->pending = PendingQuery{
        std::to_string(s->history.size() + 1) + "-" +
            std::to_string(decision.query.ids.first) + "-" +
            std::to_string(decision.query.ids.second),
        decision};
  }
  persist(*s);

  const QueryDecision& d = s->pending->decision;
  Json options = Json::array();
  for (int entry_id : {d.query.ids.first, d.query.ids.second}) {
    const PoolEntry& e = s->pool->entry(entry_id);
    const Trajectory t = rollout(s->pool->env, e.initial_state, e.actions);
    options.push_back({{"entry_id", entry_id},
                       {"states", states_json(t)},
                       {"actions", vectors_to_json(e.actions)},
                       {"features", vector_to_json(e.features.values())}});
  }
  return {200,
          {{"query_id", s->pending->query_id},
           {"allow_about_equal", d.query.allow_about_equal},
           {"options", options},
           {"info_bits", d.info_bits},
           {"cost", d.cost},
           {"feature_labels", s->pool->env.feature_labels()}}};
}

ApiResponse ElicitationService::submit_answer(const std::string& id, const Json& body) {
  const auto s = find(id);
  if (!s) return error(404, "unknown session " + id);
  std::lock_guard<std::mutex> lock(s->mutex);
  if (s->status == SessionStatus::kStopped) {
    return error(410, "session stopped", {{"reason", s->stop_reason}});
  }
  if (!body.is_object() || !body.contains("query_id") || !body.contains("choice") ||
      !body.at("query_id").is_string() || !body.at("choice").is_string()) {
    return error(400, "invalid answer",
                 {{"fields", {{"query_id", "string required"}, {"choice", "string required"}}}});
  }
  const std::string query_id = body.at("query_id").get<std::string>();
  if (!s->pending || s->pending->query_id != query_id) {
    return error(409, "query " + query_id + " is not the outstanding query");
  }
  Outcome outcome = Outcome::choice(0);
  try {
    outcome = Outcome::from_label(body.at("choice").get<std::string>());
  } catch (const std::exception& e) {
    return error(400, "invalid answer", {{"fields", {{"choice", e.what()}}}});
  }
  if (outcome.is_about_equal() && !s->pending->decision.query.allow_about_equal) {
    return error(400, "invalid answer",
                 {{"fields", {{"choice", "ABOUT_EQUAL needs a weak choice model"}}}});
  }

  HistoryItem item{s->pending->decision.query.ids, outcome,
                   s->pending->decision.info_bits, s->pending->decision.cost};
  s->belief->add_preference(term_for(*s->pool, item, s->settings.choice));
  s->history.push_back(item);
  s->pending.reset();
  s->samples = resample(*s->belief, s->settings,
                        answer_seed(s->seed, s->history.size() - 1), s->samples);
  persist(*s);
  return {200,
          {{"answered", s->history.size()},
           {"belief_mean", belief_mean_json(s->samples)},
           {"last_info_bits", item.info_bits}}};
}

ApiResponse ElicitationService::get_belief(const std::string& id) {
  const auto s = find(id);
  if (!s) return error(404, "unknown session " + id);
  std::lock_guard<std::mutex> lock(s->mutex);
  double lo = INFINITY, hi = 0.0, total = 0.0;
  for (const auto& w : s->samples.samples) {
    const double n = w.norm();
    lo = std::min(lo, n);
    hi = std::max(hi, n);
    total += n;
  }
  const double count = static_cast<double>(s->samples.size());
  Json out{{"belief_mean", belief_mean_json(s->samples)},
           {"sample_norm_stats", {{"mean", total / count}, {"min", lo}, {"max", hi}}},
           {"history_length", s->history.size()},
           {"demo_count", s->demos.size()},
           {"status", to_string(s->status)},
           {"feature_labels", s->pool->env.feature_labels()},
           {"info_bits", Json::array()}};
  for (const HistoryItem& h : s->history) out["info_bits"].push_back(h.info_bits);
  if (!s->stop_reason.empty()) out["reason"] = s->stop_reason;
  return {200, out};
}

ApiResponse ElicitationService::handle(const std::string& method,
                                       const std::string& path,
                                       const std::string& body) {
  static const std::regex sessions("^/sessions/?$");
  static const std::regex action("^/sessions/([^/]+)/(demonstrations|query|answers|belief)/?$");
  Json parsed;
  if (method == "POST") {
    try {
      parsed = body.empty() ? Json::object() : Json::parse(body);
    } catch (const std::exception& e) {
      return error(400, std::string("malformed JSON: ") + e.what());
    }
  }
  try {
    std::smatch m;
    if (std::regex_match(path, sessions)) {
      if (method != "POST") return error(405, "use POST");
      return create_session(parsed);
    }
    if (std::regex_match(path, m, action)) {
      const std::string id = m[1];
      const std::string what = m[2];
      const bool post = what == "demonstrations" || what == "answers";
      if ((method == "POST") != post) {
        return error(405, std::string("use ") + (post ? "POST" : "GET"));
      }
      if (what == "demonstrations") return add_demonstration(id, parsed);
      if (what == "answers") return submit_answer(id, parsed);
      if (what == "query") return next_query(id);
      return get_belief(id);
    }
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
  return error(404, "no route for " + method + " " + path);
}

void bind_routes(httplib::Server& server, ElicitationService& service) {
  auto dispatch = [&service](const httplib::Request& req, httplib::Response& res) {
    const ApiResponse r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Get(R"(/sessions/.*)", dispatch);
  server.Post(R"(/sessions.*)", dispatch);
}

}  // namespace prefwise
