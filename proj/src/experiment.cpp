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

#include "prefwise/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "prefwise/seeding.hpp"

namespace prefwise {

std::string to_string(DemoPlacement placement) {
  switch (placement) {
    case DemoPlacement::kBeforeQueries: return "before_queries";
    case DemoPlacement::kAfterEachQuery: return "after_each_query";
    case DemoPlacement::kNone: return "none";
  }
  return "unknown";
}

DemoPlacement demo_placement_from_string(const std::string& name) {
  if (name == "before_queries") return DemoPlacement::kBeforeQueries;
  if (name == "after_each_query") return DemoPlacement::kAfterEachQuery;
  if (name == "none") return DemoPlacement::kNone;
  throw std::invalid_argument("unknown demo placement '" + name + "'");
}

std::string to_string(AboutEqualHandling handling) {
  return handling == AboutEqualHandling::kUse ? "use" : "ignore_and_discard";
}

AboutEqualHandling about_equal_handling_from_string(const std::string& name) {
  if (name == "use") return AboutEqualHandling::kUse;
  if (name == "ignore_and_discard") return AboutEqualHandling::kIgnoreAndDiscard;
  throw std::invalid_argument("unknown about-equal handling '" + name + "'");
}

void SessionConfig::validate() const {
  choice.validate();
  user_model().validate();
  if (user_model().kind != choice.kind) {
    throw std::invalid_argument("user and learner choice models differ in kind");
  }
  if (n_demos < 0) throw std::invalid_argument("n_demos must be >= 0");
  if (placement == DemoPlacement::kAfterEachQuery && n_demos < 1) {
    throw std::invalid_argument("after_each_query placement needs n_demos >= 1");
  }
  if (placement == DemoPlacement::kNone && n_demos != 0) {
    throw std::invalid_argument("placement none with n_demos > 0");
  }
  if (n_queries < 0) throw std::invalid_argument("n_queries must be >= 0");
  if (num_samples < 2) throw std::invalid_argument("num_samples must be >= 2");
  if (!(demo_beta >= 0.0)) throw std::invalid_argument("demo_beta must be >= 0");
  if (joint_delta && choice.kind != ChoiceKind::kWeak) {
    throw std::invalid_argument("joint delta inference needs a weak model");
  }
}

SimulatedAnswer simulated_user_answer(const RewardParams& true_params,
                                      const Query& query, const QueryPool& pool,
                                      const ChoiceModelConfig& config,
                                      std::mt19937_64& rng) {
  config.validate();
  const double r0 = trajectory_reward(true_params, pool.features(query.ids.first));
  const double r1 = trajectory_reward(true_params, pool.features(query.ids.second));
  Outcome outcome = Outcome::choice(0);
  if (config.kind == ChoiceKind::kWeak) {
    if (!query.allow_about_equal) {
      throw std::invalid_argument("weak user model on a strict query");
    }
    const auto probs = weak_choice_probs(r0, r1, config.delta, config.beta);
    outcome = sample_outcome(probs, rng, true);
  } else {
    const std::array<double, 2> rewards{r0, r1};
    const std::vector<double> probs = strict_choice_probs(rewards, config.beta);
    outcome = sample_outcome(probs, rng, false);
  }
  SimulatedAnswer out;
  out.outcome = outcome;
  if (!outcome.is_about_equal()) {
    out.wrong_answer = outcome.index() == 0 ? r0 < r1 : r1 < r0;
  }
  return out;
}

int SessionTrace::wrong_answers() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const QueryRecord& r) { return r.wrong_answer; }));
}

int SessionTrace::about_equal_answers() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const QueryRecord& r) { return r.about_equal; }));
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

SampleSet resample(const BeliefDefinition& def, const SessionConfig& config,
                   std::uint64_t seed, const SampleSet& previous) {
  ChainStart start;
  start.weights = previous.samples.back();
  start.delta = previous.is_joint() ? previous.deltas.back() : 0.0;
  try {
    return sample_posterior(def, config.num_samples, seed, config.mh, start);
  } catch (const std::invalid_argument&) {
    // The new term can exclude the old state (About Equal at delta = 0).
    return sample_posterior(def, config.num_samples, seed, config.mh);
  }
}

IdPair canonical(IdPair p) {
  if (p.first > p.second) std::swap(p.first, p.second);
  return p;
}

}  // namespace

SessionTrace run_session(const QueryPool& pool, const SessionConfig& config,
                         const RewardParams& true_params) {
  config.validate();
  const int dim = pool.env.feature_dim;
  if (true_params.dim() != dim) {
    throw std::invalid_argument("true weights have dimension " +
                                std::to_string(true_params.dim()) +
                                ", pool features have " + std::to_string(dim));
  }

  SessionTrace trace;
  try {
    BeliefDefinition learn(dim, config.demo_beta, config.joint_delta);
    std::vector<FeatureVector> demos;
    for (int k = 0; k < config.n_demos; ++k) {
      ShootingOptions shooting;
      shooting.seed = derive_seed(config.user_seed, {0xde70ULL, std::uint64_t(k)});
      demos.push_back(
          synthesize_demo(pool, true_params, config.demo_method, shooting).features);
    }
    if (config.placement == DemoPlacement::kBeforeQueries) {
      for (const auto& f : demos) learn.add_demo(f);
    }
    // With demos after the queries, selection never sees the demos but the
    // reported belief always includes them.
    const bool separate = config.placement == DemoPlacement::kAfterEachQuery;
    BeliefDefinition report = learn;
    if (separate) {
      for (const auto& f : demos) report.add_demo(f);
    }

    SampleSet learn_samples =
        sample_posterior(learn, config.num_samples,
                         derive_seed(config.chain_seed, {0}), config.mh);
    SampleSet report_samples =
        separate ? sample_posterior(report, config.num_samples,
                                    derive_seed(config.chain_seed, {0, 1}), config.mh)
                 : learn_samples;
    trace.initial_alignment =
        config.record_alignment ? alignment(report_samples, true_params) : kNaN;
    trace.belief = report;
    trace.final_samples = report_samples;

    std::set<IdPair> asked;
    for (int i = 0; i < config.n_queries; ++i) {
      SelectionOptions options;
      options.strategy = config.strategy;
      options.choice = config.choice;
      options.cost = config.cost;
      options.excluded = asked;
      options.exhaustive_limit = config.exhaustive_limit;
      options.sampled_pairs = config.sampled_pairs;
      options.seed = derive_seed(config.selection_seed, {std::uint64_t(i)});
      options.candidate_seed = config.selection_seed;
      const QueryDecision decision = select_query(pool, learn_samples, options);
      if (decision.stop && config.enforce_stop) {
        trace.stopped = true;
        break;
      }

      std::mt19937_64 rng(derive_seed(config.user_seed, {std::uint64_t(i)}));
      const SimulatedAnswer answer = simulated_user_answer(
          true_params, decision.query, pool, config.user_model(), rng);
      asked.insert(canonical(decision.query.ids));

      const bool discard = answer.outcome.is_about_equal() &&
                           config.about_equal == AboutEqualHandling::kIgnoreAndDiscard;
      if (!discard) {
        PreferenceTerm term{pool.features(decision.query.ids.first),
                            pool.features(decision.query.ids.second),
                            answer.outcome, config.choice};
        learn.add_preference(term);
        const std::uint64_t step = std::uint64_t(i) + 1;
        learn_samples = resample(learn, config, derive_seed(config.chain_seed, {step}),
                                 learn_samples);
        if (separate) {
          report.add_preference(term);
          report_samples = resample(
              report, config, derive_seed(config.chain_seed, {step, 1}), report_samples);
        } else {
          report = learn;
          report_samples = learn_samples;
        }
      }

      QueryRecord rec;
      rec.query_index = i + 1;
      rec.ids = decision.query.ids;
      rec.objective_value = decision.objective_value;
      rec.info_bits = decision.info_bits;
      rec.cost = decision.cost;
      rec.net_value = decision.net_value;
      rec.outcome = answer.outcome;
      rec.wrong_answer = answer.wrong_answer;
      rec.about_equal = answer.outcome.is_about_equal();
      rec.stop = decision.stop;
      rec.alignment =
          config.record_alignment ? alignment(report_samples, true_params) : kNaN;
      trace.records.push_back(rec);
      trace.belief = report;
      trace.final_samples = report_samples;
    }
  } catch (const std::exception& e) {
    trace.error = e.what();
  }
  return trace;
}

EpsilonCalibration calibrate_epsilon(const QueryPool& pool,
                                     const SessionConfig& config,
                                     const std::vector<RewardParams>& users,
                                     std::uint64_t seed, double window) {
  if (users.empty()) throw std::invalid_argument("calibration needs users");
  EpsilonCalibration out;
  out.users = static_cast<int>(users.size());
  double total = 0.0;
  for (std::size_t u = 0; u < users.size(); ++u) {
    SessionConfig c = config;
    c.strategy = Strategy::kInfoGain;
    c.cost.epsilon = 0.0;
    c.enforce_stop = false;
    c.record_alignment = true;
    c.chain_seed = derive_seed(seed, {u, 1});
    c.user_seed = derive_seed(seed, {u, 2});
    c.selection_seed = derive_seed(seed, {u, 3});
    const SessionTrace trace = run_session(pool, c, users[u]);
    if (!trace.error.empty()) throw std::runtime_error(trace.error);
    std::vector<double> alignments{trace.initial_alignment};
    std::vector<double> nets;
    for (const auto& r : trace.records) {
      alignments.push_back(r.alignment);
      nets.push_back(r.net_value);
    }
    if (const auto eps = epsilon_from_trace(alignments, nets, window)) {
      total += *eps;
      ++out.converged;
    }
  }
  if (out.converged == 0) {
    throw std::runtime_error("epsilon calibration: 0/" + std::to_string(out.users) +
                             " sessions reached an alignment plateau");
  }
  out.epsilon = total / out.converged;
  return out;
}

RewardParams random_true_params(int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("dimension must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd w(dim);
  do {
    for (int i = 0; i < dim; ++i) w[i] = normal(rng);
  } while (!(w.norm() > 1e-12));
  return RewardParams(w / w.norm());
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"H1", "H5", "H8", "H9",
                                            "ablation_about_equal",
                                            "unknown_delta"};
  return ids;
}

namespace {

constexpr int kStoppingHorizon = 25;

void check_id(const std::string& id) {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) != ids.end()) return;
  std::string list;
  for (const auto& s : ids) list += (list.empty() ? "" : ", ") + s;
  throw std::invalid_argument("unknown experiment '" + id + "' (valid: " + list + ")");
}

}  // namespace

std::vector<ArmSpec> experiment_arms(const ExperimentSpec& spec) {
  check_id(spec.id);
  SessionConfig base;
  base.n_queries = spec.n_queries;
  base.num_samples = spec.num_samples;
  base.mh = spec.mh;
  base.sampled_pairs = spec.sampled_pairs;
  const ChoiceModelConfig strict = ChoiceModelConfig::strict();
  const ChoiceModelConfig weak = ChoiceModelConfig::weak(1.0);

  auto arm = [&](std::string name, Strategy strategy, ChoiceModelConfig choice) {
    ArmSpec a{std::move(name), base};
    a.config.strategy = strategy;
    a.config.choice = choice;
    return a;
  };
  auto with_demo = [](ArmSpec a, DemoPlacement placement) {
    a.config.n_demos = 1;
    a.config.placement = placement;
    return a;
  };

  std::vector<ArmSpec> arms;
  if (spec.id == "H5") {
    arms.push_back(arm("info_gain_strict", Strategy::kInfoGain, strict));
    arms.push_back(arm("volume_removal_strict", Strategy::kVolumeRemoval, strict));
    arms.push_back(arm("info_gain_weak", Strategy::kInfoGain, weak));
    arms.push_back(arm("volume_removal_weak", Strategy::kVolumeRemoval, weak));
  } else if (spec.id == "H1") {
    arms.push_back(arm("no_demo", Strategy::kVolumeRemoval, strict));
    arms.push_back(with_demo(arm("one_demo", Strategy::kVolumeRemoval, strict),
                             DemoPlacement::kBeforeQueries));
  } else if (spec.id == "H8") {
    arms.push_back(with_demo(arm("demos_first", Strategy::kInfoGain, weak),
                             DemoPlacement::kBeforeQueries));
    arms.push_back(with_demo(arm("demos_after", Strategy::kInfoGain, weak),
                             DemoPlacement::kAfterEachQuery));
    arms.push_back(arm("no_demos", Strategy::kInfoGain, weak));
  } else if (spec.id == "H9") {
    for (CostKind kind : {CostKind::kConstant, CostKind::kFeatureDominance}) {
      ArmSpec a = arm(to_string(kind), Strategy::kInfoGain, strict);
      a.config.cost.kind = kind;
      a.config.enforce_stop = false;
      a.config.n_queries = std::max(spec.n_queries, kStoppingHorizon);
      arms.push_back(a);
    }
  } else if (spec.id == "ablation_about_equal") {
    for (Strategy s : {Strategy::kInfoGain, Strategy::kVolumeRemoval}) {
      for (AboutEqualHandling h :
           {AboutEqualHandling::kUse, AboutEqualHandling::kIgnoreAndDiscard}) {
        ArmSpec a = arm(to_string(s) + "_" + (h == AboutEqualHandling::kUse ? "use" : "ignore"),
                        s, weak);
        a.config.about_equal = h;
        arms.push_back(a);
      }
    }
  } else if (spec.id == "unknown_delta") {
    // Per-user true delta is filled in by run_experiment.
    arms.push_back(arm("strict", Strategy::kInfoGain, strict));
    arms.push_back(arm("weak_known", Strategy::kInfoGain, weak));
    ArmSpec joint = arm("weak_joint", Strategy::kInfoGain, weak);
    joint.config.joint_delta = DeltaPrior{};
    arms.push_back(joint);
  }
  for (ArmSpec& a : arms) {
    a.config.demo_beta = 0.2;  // pool-argmax demos
  }
  return arms;
}

namespace {

struct PairSpec {
  std::string a;
  std::string b;
  int query_index;
};

std::vector<PairSpec> designated_pairs(const ExperimentSpec& spec, int final_index) {
  const int idx = spec.test_query_index.value_or(final_index);
  const int early = std::min(5, final_index);
  if (spec.id == "H5") {
    return {{"info_gain_strict", "volume_removal_strict", idx},
            {"info_gain_weak", "volume_removal_weak", idx}};
  }
  if (spec.id == "H1") {
    if (early == idx) return {{"one_demo", "no_demo", idx}};
    return {{"one_demo", "no_demo", idx}, {"one_demo", "no_demo", early}};
  }
  if (spec.id == "H8") {
    return {{"demos_first", "no_demos", early},
            {"demos_after", "no_demos", early},
            {"demos_first", "demos_after", idx}};
  }
  if (spec.id == "ablation_about_equal") {
    return {{"info_gain_use", "info_gain_ignore", idx},
            {"volume_removal_use", "volume_removal_ignore", idx}};
  }
  if (spec.id == "unknown_delta") {
    return {{"weak_known", "weak_joint", idx}, {"weak_joint", "strict", idx}};
  }
  return {};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

StoppingStats stopping_stats(const std::string& arm,
                             const std::vector<SessionTrace>& traces) {
  StoppingStats s;
  s.arm = arm;
  for (const SessionTrace& t : traces) {
    double cumulative = 0.0;
    double best = 0.0;
    std::optional<double> at_stop;
    int stop_index = static_cast<int>(t.records.size());
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      if (!at_stop && t.records[k].stop) {
        at_stop = cumulative;
        stop_index = static_cast<int>(k);
      }
      cumulative += t.records[k].net_value;
      best = std::max(best, cumulative);
    }
    s.mean_at_stop += at_stop.value_or(cumulative);
    s.mean_hindsight_max += best;
    s.mean_stop_index += stop_index;
  }
  const double n = static_cast<double>(traces.size());
  s.mean_at_stop /= n;
  s.mean_hindsight_max /= n;
  s.mean_stop_index /= n;
  return s;
}

}  // namespace

std::vector<CsvRow> ExperimentResult::rows() const {
  std::vector<CsvRow> out;
  const std::size_t users = traces.empty() ? 0 : traces.front().size();
  for (std::size_t u = 0; u < users; ++u) {
    for (std::size_t a = 0; a < arms.size(); ++a) {
      for (const QueryRecord& r : traces[a][u].records) {
        out.push_back({static_cast<int>(u), arms[a], strategies[a], n_demos[a], r});
      }
    }
  }
  return out;
}

std::vector<double> ExperimentResult::alignments_at(std::size_t arm,
                                                    int query_index) const {
  std::vector<double> out;
  for (const SessionTrace& t : traces.at(arm)) {
    if (query_index == 0) {
      out.push_back(t.initial_alignment);
    } else if (static_cast<int>(t.records.size()) >= query_index) {
      out.push_back(t.records[query_index - 1].alignment);
    }
  }
  return out;
}

std::vector<double> ExperimentResult::wrong_answer_counts(std::size_t arm) const {
  std::vector<double> out;
  for (const SessionTrace& t : traces.at(arm)) out.push_back(t.wrong_answers());
  return out;
}

std::size_t ExperimentResult::arm_index(const std::string& name) const {
  const auto it = std::find(arms.begin(), arms.end(), name);
  if (it == arms.end()) throw std::out_of_range("no arm named " + name);
  return static_cast<std::size_t>(it - arms.begin());
}

std::string ExperimentResult::to_csv() const {
  std::string out =
      "run_id,experiment,env,arm,strategy,n_demos,query_index,alignment,"
      "objective_bits,cost,outcome,wrong_answer,stopped\n";
  const std::string prefix = spec.id + "," + to_string(spec.env) + ",";
  for (const CsvRow& row : rows()) {
    const QueryRecord& r = row.record;
    out += std::to_string(row.run_id) + "," + prefix + row.arm + "," + row.strategy +
           "," + std::to_string(row.n_demos) + "," + std::to_string(r.query_index) +
           "," + format_double(r.alignment) + "," + format_double(r.info_bits) + "," +
           format_double(r.cost) + "," + r.outcome.label() + "," +
           (r.wrong_answer ? "1" : "0") + "," + (r.stop ? "1" : "0") + "\n";
  }
  return out;
}

std::string ExperimentResult::summary_csv() const {
  std::string out = "arm,query_index,n,mean_alignment,se_alignment\n";
  int max_index = 0;
  for (const auto& arm_traces : traces) {
    for (const auto& t : arm_traces) {
      max_index = std::max(max_index, static_cast<int>(t.records.size()));
    }
  }
  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (int q = 0; q <= max_index; ++q) {
      const std::vector<double> values = alignments_at(a, q);
      if (values.empty()) continue;
      const Summary s = summarize(values);
      out += arms[a] + "," + std::to_string(q) + "," + std::to_string(s.n) + "," +
             format_double(s.mean) + "," + format_double(s.std_error) + "\n";
    }
  }
  return out;
}

std::string ExperimentResult::report() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "experiment %s on %s, %d users\n", spec.id.c_str(),
                to_string(spec.env).c_str(), spec.n_users);
  out += buf;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const Summary w = summarize(wrong_answer_counts(a));
    std::snprintf(buf, sizeof buf, "  %-24s wrong answers/session %.3f (se %.3f)\n",
                  arms[a].c_str(), w.mean, w.std_error);
    out += buf;
  }
  for (const Comparison& c : comparisons) {
    std::snprintf(buf, sizeof buf,
                  "  %s vs %s @ query %d: %.4f vs %.4f (n=%zu) t=%.3f "
                  "p_greater=%.3g p_two_sided=%.3g\n",
                  c.arm_a.c_str(), c.arm_b.c_str(), c.query_index, c.a.mean, c.b.mean,
                  c.test.n, c.test.t, c.test.p_greater, c.test.p_two_sided);
    out += buf;
  }
  for (const StoppingStats& s : stopping) {
    std::snprintf(buf, sizeof buf,
                  "  stopping %s: epsilon %.4f (%d calibration users converged), "
                  "cumulative at stop %.4f, hindsight max %.4f, ratio %.4f, "
                  "mean stop index %.2f\n",
                  s.arm.c_str(), s.epsilon, s.calibration_converged, s.mean_at_stop,
                  s.mean_hindsight_max, s.ratio(), s.mean_stop_index);
    out += buf;
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  check_id(spec.id);
  if (spec.n_users < 2) throw std::invalid_argument("need at least 2 users");
  if (spec.n_queries < 1) throw std::invalid_argument("need at least 1 query");

  ExperimentResult result;
  result.spec = spec;
  result.spec.pool.reset();
  const QueryPool pool =
      spec.pool ? *spec.pool
                : generate_pool(EnvironmentSpec::from_kind(spec.env), spec.pool_size,
                                derive_seed(spec.seed, {0x9001ULL}));
  if (pool.env.kind != spec.env) {
    throw std::invalid_argument("pool environment does not match the experiment");
  }
  const int dim = pool.env.feature_dim;

  std::vector<ArmSpec> arms = experiment_arms(spec);
  for (const ArmSpec& a : arms) {
    result.arms.push_back(a.name);
    result.strategies.push_back(to_string(a.config.strategy));
    result.n_demos.push_back(a.config.n_demos);
  }

  if (spec.id == "H9") {
    std::vector<RewardParams> calib;
    for (int u = 0; u < spec.calibration_users; ++u) {
      calib.push_back(random_true_params(
          dim, derive_seed(spec.seed, {0xca11ULL, std::uint64_t(u)})));
    }
    for (ArmSpec& a : arms) {
      const EpsilonCalibration cal = calibrate_epsilon(
          pool, a.config, calib, derive_seed(spec.seed, {0xca12ULL}));
      a.config.cost.epsilon = cal.epsilon;
      StoppingStats s;
      s.arm = a.name;
      s.epsilon = cal.epsilon;
      s.calibration_converged = cal.converged;
      result.stopping.push_back(s);
    }
  }

  result.traces.assign(arms.size(), std::vector<SessionTrace>(spec.n_users));
  auto run_user = [&](int u) {
    const std::uint64_t us = std::uint64_t(u);
    const RewardParams truth =
        random_true_params(dim, derive_seed(spec.seed, {us, 0x7e57ULL}));
    std::uniform_real_distribution<double> delta_draw(0.0, 2.0);
    std::mt19937_64 delta_rng(derive_seed(spec.seed, {us, 0xd17aULL}));
    double true_delta = 0.0;
    while (!(true_delta > 0.0)) true_delta = delta_draw(delta_rng);
    for (std::size_t a = 0; a < arms.size(); ++a) {
      SessionConfig c = arms[a].config;
      c.chain_seed = derive_seed(spec.seed, {us, 1});
      c.user_seed = derive_seed(spec.seed, {us, 2});
      c.selection_seed = derive_seed(spec.seed, {us, 3});
      if (spec.id == "unknown_delta" && c.choice.kind == ChoiceKind::kWeak) {
        c.user_choice = ChoiceModelConfig::weak(true_delta);
        if (!c.joint_delta) c.choice.delta = true_delta;
      }
      result.traces[a][u] = run_session(pool, c, truth);
    }
  };

  const int threads = std::max(1, std::min(spec.threads, spec.n_users));
  if (threads == 1) {
    for (int u = 0; u < spec.n_users; ++u) run_user(u);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    for (int t = 0; t < threads; ++t) {
      workers.emplace_back([&] {
        for (int u = next++; u < spec.n_users; u = next++) run_user(u);
      });
    }
    for (auto& w : workers) w.join();
  }

  for (std::size_t a = 0; a < arms.size(); ++a) {
    for (int u = 0; u < spec.n_users; ++u) {
      const std::string& err = result.traces[a][u].error;
      if (!err.empty()) {
        throw std::runtime_error("arm " + arms[a].name + ", user " +
                                 std::to_string(u) + ": " + err);
      }
    }
  }

  int final_index = 0;
  for (const ArmSpec& a : arms) final_index = std::max(final_index, a.config.n_queries);
  for (const PairSpec& p : designated_pairs(spec, final_index)) {
    const std::size_t ia = result.arm_index(p.a);
    const std::size_t ib = result.arm_index(p.b);
    std::vector<double> va, vb;
    for (int u = 0; u < spec.n_users; ++u) {
      const auto& ta = result.traces[ia][u].records;
      const auto& tb = result.traces[ib][u].records;
      if (static_cast<int>(ta.size()) >= p.query_index &&
          static_cast<int>(tb.size()) >= p.query_index) {
        va.push_back(ta[p.query_index - 1].alignment);
        vb.push_back(tb[p.query_index - 1].alignment);
      }
    }
    if (va.size() < 2) continue;
    result.comparisons.push_back(
        {p.a, p.b, p.query_index, summarize(va), summarize(vb), paired_t_test(va, vb)});
  }

  for (StoppingStats& s : result.stopping) {
    StoppingStats filled = stopping_stats(s.arm, result.traces[result.arm_index(s.arm)]);
    filled.epsilon = s.epsilon;
    filled.calibration_converged = s.calibration_converged;
    s = filled;
  }
  return result;
}

}  // namespace prefwise
