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

// Command-line entry point: pool generation, simulated experiments and the
// elicitation server.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prefwise/environment.hpp"
#include "prefwise/experiment.hpp"
#include "prefwise/serialization.hpp"
#include "prefwise/service.hpp"
// After Eigen: <resolv.h> defines a _res macro.
#include "httplib.h"

namespace {

using namespace prefwise;

int run_pool(const std::string& env, int size, std::uint64_t seed,
             const std::string& out) {
  const QueryPool pool =
      generate_pool(EnvironmentSpec::from_kind(env_kind_from_string(env)), size, seed);
  save_pool(pool, out);
  std::fprintf(stderr, "wrote %zu %s trajectories to %s\n", pool.size(), env.c_str(),
               out.c_str());
  return 0;
}

struct SimulateArgs {
  std::string experiment;
  std::string env = "lds";
  int users = 30;
  int queries = 15;
  std::string pool;
  int pool_size = 10000;
  std::uint64_t seed = 0;
  std::string out;
  std::string summary;
  bool paper_scale = false;
  int threads = 1;
};

int run_simulate(const SimulateArgs& a) {
  ExperimentSpec spec;
  spec.id = a.experiment;
  spec.env = env_kind_from_string(a.env);
  spec.n_users = a.users;
  spec.n_queries = a.queries;
  spec.pool_size = a.pool_size;
  spec.seed = a.seed;
  spec.threads = a.threads;
  if (a.paper_scale) {
    spec.n_users = 100;
    spec.pool_size = 25000;
    spec.calibration_users = 100;
  }
  if (!a.pool.empty()) spec.pool = load_pool(a.pool);
  const ExperimentResult result = run_experiment(spec);
  write_file_atomic(a.out, result.to_csv());
  if (!a.summary.empty()) write_file_atomic(a.summary, result.summary_csv());
  std::cout << result.report();
  return 0;
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(int port, const std::string& host, const std::string& data_dir,
              const std::vector<std::string>& pools) {
  ElicitationService service({data_dir});
  for (const std::string& file : pools) {
    QueryPool pool = load_pool(file);
    // Reachable by the path as given and by its file name.
    service.add_pool(file, pool);
    service.add_pool(std::filesystem::path(file).filename().string(), std::move(pool));
  }
  httplib::Server server;
  bind_routes(server, service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::fprintf(stderr, "listening on %s:%d, sessions in %s\n", host.c_str(), port,
               data_dir.c_str());
  if (!server.listen(host, port)) {
    std::fprintf(stderr, "cannot listen on %s:%d\n", host.c_str(), port);
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference-based reward learning from demonstrations and queries"};
  app.require_subcommand(1);

  std::string pool_env, pool_out;
  int pool_size = 25000;
  std::uint64_t pool_seed = 0;
  auto* pool = app.add_subcommand("pool", "generate a query pool");
  pool->add_option("--env", pool_env, "lds or driver")->required();
  pool->add_option("--size", pool_size, "number of trajectories");
  pool->add_option("--seed", pool_seed, "random seed");
  pool->add_option("--out", pool_out, "output JSON file")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a simulated-user experiment");
  simulate->add_option("--experiment", sim.experiment)
      ->required()
      ->check(CLI::IsMember(experiment_ids()));
  simulate->add_option("--env", sim.env, "lds or driver");
  simulate->add_option("--users", sim.users);
  simulate->add_option("--queries", sim.queries);
  simulate->add_option("--pool", sim.pool, "pool JSON file; generated when absent");
  simulate->add_option("--pool-size", sim.pool_size, "size of a generated pool");
  simulate->add_option("--seed", sim.seed, "master seed");
  simulate->add_option("--out", sim.out, "per-query CSV")->required();
  simulate->add_option("--summary", sim.summary, "per-query summary CSV");
  simulate->add_option("--threads", sim.threads, "users run concurrently");
  simulate->add_flag("--paper-scale", sim.paper_scale, "100 users, pool 25,000");

  int port = 8080;
  std::string host = "0.0.0.0", data_dir = "sessions";
  std::vector<std::string> serve_pools;
  auto* serve = app.add_subcommand("serve", "run the elicitation HTTP service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--pool", serve_pools, "pool JSON file (repeatable)")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pool) return run_pool(pool_env, pool_size, pool_seed, pool_out);
    if (*simulate) return run_simulate(sim);
    if (*serve) return run_serve(port, host, data_dir, serve_pools);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
