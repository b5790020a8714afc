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

#include "prefwise/serialization.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace prefwise {

Json vector_to_json(const Eigen::VectorXd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a numeric array");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("expected a number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Json vectors_to_json(const std::vector<Eigen::VectorXd>& vs) {
  Json j = Json::array();
  for (const auto& v : vs) j.push_back(vector_to_json(v));
  return j;
}

std::vector<Eigen::VectorXd> vectors_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of arrays");
  std::vector<Eigen::VectorXd> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(vector_from_json(item));
  return out;
}

namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    j.push_back(vector_to_json(m.row(r).transpose()));
  }
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Eigen::VectorXd row = vector_from_json(j[r]);
    if (row.size() != cols) throw std::invalid_argument("ragged matrix");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

Json env_to_json(const EnvironmentSpec& env) {
  Json j;
  j["kind"] = to_string(env.kind);
  j["horizon"] = env.horizon;
  j["state_dim"] = env.state_dim;
  j["action_dim"] = env.action_dim;
  j["feature_dim"] = env.feature_dim;
  j["action_bounds"] = Json::array();
  for (const auto& b : env.action_bounds) {
    j["action_bounds"].push_back({b.lower, b.upper});
  }
  j["initial_state"] = vector_to_json(env.initial_state);
  j["feature_labels"] = env.feature_labels();
  if (env.kind == EnvKind::kLds) {
    j["state_matrix"] = matrix_to_json(env.state_matrix);
    j["input_matrix"] = matrix_to_json(env.input_matrix);
  } else {
    const DriverParams& p = env.driver;
    j["driver"] = {{"dt", p.dt},
                   {"friction", p.friction},
                   {"lane_centers", p.lane_centers},
                   {"segments", p.segments},
                   {"steps_per_segment", p.steps_per_segment},
                   {"lane_c", p.lane_c},
                   {"gap_x_c", p.gap_x_c},
                   {"gap_y_c", p.gap_y_c},
                   {"merge_start", p.merge_start},
                   {"merge_end", p.merge_end},
                   {"merge_target_x", p.merge_target_x}};
  }
  return j;
}

EnvironmentSpec env_from_json(const Json& j) {
  EnvironmentSpec env = EnvironmentSpec::from_kind(
      env_kind_from_string(j.at("kind").get<std::string>()));
  env.horizon = j.at("horizon").get<int>();
  env.state_dim = j.at("state_dim").get<int>();
  env.action_dim = j.at("action_dim").get<int>();
  env.feature_dim = j.at("feature_dim").get<int>();
  env.action_bounds.clear();
  for (const auto& b : j.at("action_bounds")) {
    env.action_bounds.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
  }
  env.initial_state = vector_from_json(j.at("initial_state"));
  if (env.kind == EnvKind::kLds) {
    env.state_matrix = matrix_from_json(j.at("state_matrix"), env.state_dim);
    env.input_matrix = matrix_from_json(j.at("input_matrix"), env.action_dim);
  } else {
    const Json& d = j.at("driver");
    DriverParams& p = env.driver;
    p.dt = d.at("dt").get<double>();
    p.friction = d.at("friction").get<double>();
    p.lane_centers = d.at("lane_centers").get<std::vector<double>>();
    p.segments = d.at("segments").get<int>();
    p.steps_per_segment = d.at("steps_per_segment").get<int>();
    p.lane_c = d.at("lane_c").get<double>();
    p.gap_x_c = d.at("gap_x_c").get<double>();
    p.gap_y_c = d.at("gap_y_c").get<double>();
    p.merge_start = d.at("merge_start").get<double>();
    p.merge_end = d.at("merge_end").get<double>();
    p.merge_target_x = d.at("merge_target_x").get<double>();
  }
  env.validate();
  return env;
}

Json pool_to_json(const QueryPool& pool) {
  Json j;
  j["env"] = env_to_json(pool.env);
  j["seed"] = pool.seed;
  Json entries = Json::array();
  for (const PoolEntry& e : pool.entries) {
    entries.push_back({{"id", e.id},
                       {"initial_state", vector_to_json(e.initial_state)},
                       {"actions", vectors_to_json(e.actions)},
                       {"features", vector_to_json(e.features.values())}});
  }
  j["entries"] = std::move(entries);
  return j;
}

QueryPool pool_from_json(const Json& j, bool verify) {
  QueryPool pool;
  pool.env = env_from_json(j.at("env"));
  pool.seed = j.at("seed").get<std::uint64_t>();
  const Json& entries = j.at("entries");
  pool.entries.reserve(entries.size());
  for (const Json& item : entries) {
    PoolEntry e;
    e.id = item.at("id").get<int>();
    if (e.id != static_cast<int>(pool.entries.size())) {
      throw std::invalid_argument("pool ids must be 0..N-1 in order");
    }
    e.initial_state = vector_from_json(item.at("initial_state"));
    e.actions = vectors_from_json(item.at("actions"));
    e.features = FeatureVector(vector_from_json(item.at("features")),
                               pool.env.feature_dim);
    if (verify) {
      const Trajectory t = rollout(pool.env, e.initial_state, e.actions);
      if (!(t.features == e.features)) {
        throw std::invalid_argument("pool entry " + std::to_string(e.id) +
                                    " features do not match its rollout");
      }
    }
    pool.entries.push_back(std::move(e));
  }
  if (pool.entries.size() < 2) throw std::invalid_argument("pool has < 2 entries");
  return pool;
}

void save_pool(const QueryPool& pool, const std::filesystem::path& path) {
  write_file_atomic(path, pool_to_json(pool).dump());
}

QueryPool load_pool(const std::filesystem::path& path, bool verify) {
  return pool_from_json(Json::parse(read_file(path)), verify);
}

Json choice_to_json(const ChoiceModelConfig& c) {
  return {{"kind", to_string(c.kind)}, {"delta", c.delta}, {"beta", c.beta}};
}

ChoiceModelConfig choice_from_json(const Json& j) {
  ChoiceModelConfig c;
  c.kind = choice_kind_from_string(j.value("kind", std::string("strict")));
  c.delta = j.value("delta", c.kind == ChoiceKind::kWeak ? 1.0 : 0.0);
  c.beta = j.value("beta", 1.0);
  c.validate();
  return c;
}

Json cost_to_json(const CostSpec& c) {
  return {{"kind", to_string(c.kind)}, {"epsilon", c.epsilon}};
}

CostSpec cost_from_json(const Json& j) {
  CostSpec c;
  c.kind = cost_kind_from_string(j.value("kind", std::string("constant")));
  c.epsilon = j.value("epsilon", 0.0);
  return c;
}

Json mh_to_json(const MhConfig& c) {
  return {{"proposal_scale", c.proposal_scale},
          {"burn_in", c.burn_in},
          {"thin", c.thin}};
}

MhConfig mh_from_json(const Json& j) {
  MhConfig c;
  c.proposal_scale = j.value("proposal_scale", c.proposal_scale);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.thin = j.value("thin", c.thin);
  return c;
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace prefwise
