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

#ifndef PREFWISE_SERIALIZATION_HPP_
#define PREFWISE_SERIALIZATION_HPP_

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefwise/belief.hpp"
#include "prefwise/choice_model.hpp"
#include "prefwise/environment.hpp"
#include "prefwise/query.hpp"

namespace prefwise {

using Json = nlohmann::json;

Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json vectors_to_json(const std::vector<Eigen::VectorXd>& vs);
std::vector<Eigen::VectorXd> vectors_from_json(const Json& j);

Json env_to_json(const EnvironmentSpec& env);
EnvironmentSpec env_from_json(const Json& j);

/// {"env": {...}, "seed": u64, "entries": [{"id", "initial_state",
/// "actions", "features"}, ...]}
Json pool_to_json(const QueryPool& pool);
/// With `verify`, every entry is re-rolled out and its features must match
/// bit-exactly.
QueryPool pool_from_json(const Json& j, bool verify = true);

void save_pool(const QueryPool& pool, const std::filesystem::path& path);
QueryPool load_pool(const std::filesystem::path& path, bool verify = true);

Json choice_to_json(const ChoiceModelConfig& c);
ChoiceModelConfig choice_from_json(const Json& j);
Json cost_to_json(const CostSpec& c);
CostSpec cost_from_json(const Json& j);
Json mh_to_json(const MhConfig& c);
MhConfig mh_from_json(const Json& j);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace prefwise

#endif  // PREFWISE_SERIALIZATION_HPP_
