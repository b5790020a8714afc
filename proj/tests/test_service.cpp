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

#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <thread>

// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"

namespace prefwise {
namespace {

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("prefwise_svc_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

const QueryPool& driver_pool() {
  static const QueryPool pool = generate_pool(EnvironmentSpec::driver_default(), 60, 21);
  return pool;
}

const QueryPool& lds_pool() {
  static const QueryPool pool = generate_pool(EnvironmentSpec::lds(), 60, 22);
  return pool;
}

std::unique_ptr<ElicitationService> make_service(const std::filesystem::path& dir) {
  auto svc = std::make_unique<ElicitationService>(ServiceOptions{dir});
  svc->add_pool("driver.json", driver_pool());
  svc->add_pool("lds.json", lds_pool());
  return svc;
}

Json small_mh() { return {{"burn_in", 300}, {"thin", 5}}; }

std::string create(ElicitationService& svc, Json body) {
  const ApiResponse r = svc.handle("POST", "/sessions", body.dump());
  EXPECT_EQ(r.status, 201) << r.body.dump();
  return r.body.value("session_id", std::string());
}

Json driver_request() {
  return {{"env", "driver"}, {"pool", "driver.json"}, {"num_samples", 40},
          {"mh", small_mh()}, {"seed", 5}};
}

Json segment_demo(double steer, double accel) {
  Json actions = Json::array();
  for (int k = 0; k < 5; ++k) actions.push_back({steer, accel});
  return {{"actions", actions}};
}

TEST(CreateSession, ValidAndInvalid) {
  auto svc = make_service(fresh_dir("create"));
  const std::string id = create(*svc, driver_request());
  EXPECT_FALSE(id.empty());
  EXPECT_TRUE(std::filesystem::exists(svc->session_path(id)));

  Json vr = driver_request();
  vr["strategy"] = "volume_removal";
  vr["cost"] = {{"kind", "constant"}, {"epsilon", 0.2}};
  const ApiResponse w = svc->handle("POST", "/sessions", vr.dump());
  EXPECT_EQ(w.status, 201);
  EXPECT_TRUE(w.body.contains("warning"));

  Json bad = driver_request();
  bad["env"] = "mujoco";
  const ApiResponse b = svc->handle("POST", "/sessions", bad.dump());
  EXPECT_EQ(b.status, 400);
  EXPECT_TRUE(b.body["fields"].contains("env"));

  Json mismatch = driver_request();
  mismatch["env"] = "lds";
  EXPECT_EQ(svc->handle("POST", "/sessions", mismatch.dump()).status, 400);

  Json missing = driver_request();
  missing["pool"] = "nope.json";
  EXPECT_EQ(svc->handle("POST", "/sessions", missing.dump()).status, 404);

  EXPECT_EQ(svc->handle("POST", "/sessions", "{not json").status, 400);
  EXPECT_EQ(svc->handle("GET", "/sessions", "").status, 405);
  EXPECT_EQ(svc->handle("GET", "/elsewhere", "").status, 404);
  EXPECT_EQ(svc->handle("GET", "/sessions/../../etc/belief", "").status, 404);
  EXPECT_EQ(svc->handle("GET", "/sessions/abc123/belief", "").status, 404);
}

TEST(Demonstrations, CountAndOrdering) {
  auto svc = make_service(fresh_dir("demo"));
  const std::string id = create(*svc, driver_request());
  const std::string base = "/sessions/" + id;
  ApiResponse r = svc->handle("POST", base + "/demonstrations", segment_demo(0, 0).dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["demo_count"], 1);
  EXPECT_EQ(r.body["feature_labels"].size(), 4u);
  EXPECT_EQ(r.body["states"].size(), 51u);
  EXPECT_EQ(svc->handle("POST", base + "/demonstrations", "{}").status, 400);

  ASSERT_EQ(svc->handle("GET", base + "/query", "").status, 200);
  r = svc->handle("POST", base + "/demonstrations", segment_demo(0, 0).dump());
  EXPECT_EQ(r.status, 409);
}

TEST(Demonstrations, RepeatedDemoShiftsBeliefFurther) {
  auto svc = make_service(fresh_dir("shift"));
  const std::string id = create(*svc, {{"env", "lds"}, {"pool", "lds.json"}, {"num_samples", 2000},
                                       {"seed", 9}});
  Json actions = Json::array();
  for (int t = 0; t < 20; ++t) actions.push_back({1.0, -0.5, 0.2});
  const Json demo{{"actions", actions}};
  const ApiResponse one = svc->handle("POST", "/sessions/" + id + "/demonstrations", demo.dump());
  const ApiResponse two = svc->handle("POST", "/sessions/" + id + "/demonstrations", demo.dump());
  ASSERT_EQ(two.status, 200);
  const Eigen::VectorXd phi = vector_from_json(one.body["features"]);
  const double d1 = vector_from_json(one.body["belief_mean"]).dot(phi);
  const double d2 = vector_from_json(two.body["belief_mean"]).dot(phi);
  EXPECT_GT(d1, 0.0);
  EXPECT_GT(d2, d1);
}

TEST(Queries, StableUntilAnswered) {
  auto svc = make_service(fresh_dir("stable"));
  const std::string id = create(*svc, driver_request());
  const std::string base = "/sessions/" + id;
  const ApiResponse a = svc->handle("GET", base + "/query", "");
  const ApiResponse b = svc->handle("GET", base + "/query", "");
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body["query_id"], b.body["query_id"]);
  EXPECT_EQ(a.body["options"][0]["entry_id"], b.body["options"][0]["entry_id"]);
  EXPECT_GE(a.body["info_bits"].get<double>(), 0.0);
  EXPECT_FALSE(a.body["allow_about_equal"].get<bool>());
  EXPECT_EQ(a.body["options"].size(), 2u);
  EXPECT_EQ(a.body["options"][0]["states"].size(), 51u);
  EXPECT_EQ(a.body["options"][0]["actions"].size(), 50u);

  const std::string qid = a.body["query_id"];
  Json ae{{"query_id", qid}, {"choice", "ABOUT_EQUAL"}};
  EXPECT_EQ(svc->handle("POST", base + "/answers", ae.dump()).status, 400);
  Json bad{{"query_id", qid}, {"choice", "C"}};
  EXPECT_EQ(svc->handle("POST", base + "/answers", bad.dump()).status, 400);
  Json stale{{"query_id", "0-1-2"}, {"choice", "A"}};
  EXPECT_EQ(svc->handle("POST", base + "/answers", stale.dump()).status, 409);

  Json ok{{"query_id", qid}, {"choice", "A"}};
  const ApiResponse r = svc->handle("POST", base + "/answers", ok.dump());
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["answered"], 1);
  const ApiResponse again = svc->handle("POST", base + "/answers", ok.dump());
  EXPECT_EQ(again.status, 409);
  EXPECT_EQ(svc->handle("GET", base + "/belief", "").body["belief_mean"], r.body["belief_mean"]);
  EXPECT_NE(svc->handle("GET", base + "/query", "").body["query_id"], qid);
}

TEST(Queries, ExpensiveSessionStops) {
  auto svc = make_service(fresh_dir("stop"));
  Json req = driver_request();
  req["choice"] = {{"kind", "weak"}, {"delta", 1.0}};
  req["cost"] = {{"kind", "constant"}, {"epsilon", 1.6}};
  const std::string id = create(*svc, req);
  const ApiResponse r = svc->handle("GET", "/sessions/" + id + "/query", "");
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["stopped"].get<bool>());
  EXPECT_EQ(r.body["reason"], "net information gain negative");
  EXPECT_EQ(svc->handle("GET", "/sessions/" + id + "/query", "").status, 410);
  const ApiResponse b = svc->handle("GET", "/sessions/" + id + "/belief", "");
  EXPECT_EQ(b.body["status"], "stopped");
  EXPECT_EQ(b.body["history_length"], 0);
}

TEST(Queries, BudgetCapsSession) {
  auto svc = make_service(fresh_dir("budget"));
  Json req = driver_request();
  req["max_queries"] = 2;
  const std::string id = create(*svc, req);
  const std::string base = "/sessions/" + id;
  for (int i = 0; i < 2; ++i) {
    const ApiResponse q = svc->handle("GET", base + "/query", "");
    ASSERT_TRUE(q.body.contains("query_id"));
    svc->handle("POST", base + "/answers", Json{{"query_id", q.body["query_id"]}, {"choice", "B"}}.dump());
  }
  const ApiResponse q = svc->handle("GET", base + "/query", "");
  EXPECT_TRUE(q.body["stopped"].get<bool>());
  EXPECT_EQ(svc->handle("GET", base + "/belief", "").body["history_length"], 2);
}

TEST(Belief, FreshSessionNearOrigin) {
  auto svc = make_service(fresh_dir("fresh"));
  Json req = driver_request();
  req["num_samples"] = 2000;
  const std::string id = create(*svc, req);
  const ApiResponse b = svc->handle("GET", "/sessions/" + id + "/belief", "");
  ASSERT_EQ(b.status, 200);
  EXPECT_LT(vector_from_json(b.body["belief_mean"]).norm(), 0.1);
  EXPECT_EQ(b.body["status"], "collecting_demos");
  EXPECT_EQ(b.body["history_length"], 0);
  EXPECT_LE(b.body["sample_norm_stats"]["max"].get<double>(), 1.0);
}

// Five answers including About Equal, then a new service instance on the
// same directory.
TEST(Persistence, RestartReproducesBelief) {
  const auto dir = fresh_dir("restart");
  std::string id;
  Json before;
  {
    auto svc = make_service(dir);
    Json req = driver_request();
    req["choice"] = {{"kind", "weak"}, {"delta", 1.0}};
    id = create(*svc, req);
    svc->handle("POST", "/sessions/" + id + "/demonstrations", segment_demo(0.1, 0.3).dump());
    const char* answers[] = {"A", "ABOUT_EQUAL", "B", "A", "B"};
    for (const char* a : answers) {
      const ApiResponse q = svc->handle("GET", "/sessions/" + id + "/query", "");
      ASSERT_TRUE(q.body.contains("query_id")) << q.body.dump();
      const ApiResponse r = svc->handle(
          "POST", "/sessions/" + id + "/answers",
          Json{{"query_id", q.body["query_id"]}, {"choice", a}}.dump());
      ASSERT_EQ(r.status, 200) << r.body.dump();
    }
    before = svc->handle("GET", "/sessions/" + id + "/belief", "").body;
  }
  auto svc = make_service(dir);
  const Json after = svc->handle("GET", "/sessions/" + id + "/belief", "").body;
  EXPECT_EQ(after["history_length"], 5);
  const Eigen::VectorXd m0 = vector_from_json(before["belief_mean"]);
  const Eigen::VectorXd m1 = vector_from_json(after["belief_mean"]);
  EXPECT_LE((m0 - m1).cwiseAbs().maxCoeff(), 1e-12);

  // Recomputing every update from the record alone.
  const Json record = Json::parse(read_file(svc->session_path(id)));
  const ReplayResult replay = replay_session(record, driver_pool());
  EXPECT_LE((replay.samples.mean() - m0).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(replay.belief.demos().size(), 1u);
  EXPECT_EQ(replay.belief.history().size(), 5u);

  // Dropping the cached samples forces the replay path on load.
  Json stripped = record;
  stripped["samples"] = Json::array();
  write_file_atomic(svc->session_path(id), stripped.dump());
  auto cold = make_service(dir);
  const Json replayed = cold->handle("GET", "/sessions/" + id + "/belief", "").body;
  EXPECT_LE((vector_from_json(replayed["belief_mean"]) - m0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Concurrency, ParallelSessionsStayConsistent) {
  auto svc = make_service(fresh_dir("parallel"));
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) {
    Json req = driver_request();
    req["seed"] = 100 + i;
    ids.push_back(create(*svc, req));
  }
  std::vector<std::thread> workers;
  for (int w = 0; w < 6; ++w) {
    workers.emplace_back([&, w] {
      const std::string base = "/sessions/" + ids[w % 3];
      for (int k = 0; k < 3; ++k) {
        const ApiResponse q = svc->handle("GET", base + "/query", "");
        if (!q.body.contains("query_id")) continue;
        svc->handle("POST", base + "/answers",
                    Json{{"query_id", q.body["query_id"]}, {"choice", "A"}}.dump());
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const std::string& id : ids) {
    const Json b = svc->handle("GET", "/sessions/" + id + "/belief", "").body;
    const Json record = Json::parse(read_file(svc->session_path(id)));
    EXPECT_EQ(record["history"].size(), b["history_length"].get<std::size_t>());
    EXPECT_LE(b["history_length"].get<int>(), 6);
    EXPECT_GE(b["history_length"].get<int>(), 3);
  }
}

TEST(Http, RoundTripThroughServer) {
  auto svc = make_service(fresh_dir("http"));
  httplib::Server server;
  bind_routes(server, *svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", driver_request().dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  EXPECT_EQ(created->get_header_value("Access-Control-Allow-Origin"), "*");
  const std::string id = Json::parse(created->body)["session_id"];
  auto query = client.Get("/sessions/" + id + "/query");
  ASSERT_TRUE(query);
  EXPECT_EQ(query->status, 200);
  const Json q = Json::parse(query->body);
  auto answer = client.Post("/sessions/" + id + "/answers",
                            Json{{"query_id", q["query_id"]}, {"choice", "B"}}.dump(),
                            "application/json");
  ASSERT_TRUE(answer);
  EXPECT_EQ(answer->status, 200);
  auto belief = client.Get("/sessions/" + id + "/belief");
  EXPECT_EQ(Json::parse(belief->body)["history_length"], 1);
  auto preflight = client.Options("/sessions");
  ASSERT_TRUE(preflight);
  EXPECT_EQ(preflight->status, 204);
  server.stop();
  thread.join();
}

}  // namespace
}  // namespace prefwise
