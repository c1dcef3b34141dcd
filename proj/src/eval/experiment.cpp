// SPDX-License-Identifier: Apache-2.0
#include "tabgen/eval/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "tabgen/common/error.hpp"
#include "tabgen/common/rng.hpp"

namespace tabgen {

void ExperimentConfig::validate() const {
  if (seeds == 0) throw ConfigError("seeds must be >= 1");
  if (classifiers.empty()) throw ConfigError("no classifiers requested");
  for (int f : factors)
    if (f < 2) throw ConfigError("augmentation factors must be >= 2");
  if (k == 0) throw ConfigError("k must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  std::vector<std::string> kinds;
  for (auto c : classifiers) kinds.push_back(to_string(c));
  return {{"factors", factors}, {"classifiers", kinds}, {"seeds", seeds},
          {"seed", seed},       {"k", k},               {"mode", to_string(mode)}};
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j = test.to_json();
  j["generator"] = generator;
  j["factor"] = factor;
  j["classifier"] = to_string(classifier);
  j["seed_index"] = seed_index;
  j["seed"] = seed;
  j["train_counts"] = {{"non-risk", train_counts[0]}, {"risk", train_counts[1]}};
  j["grid_index"] = grid_index;
  j["hyperparameters"] = point.to_json(classifier);
  j["validation_f1_weighted"] = validation_f1;
  return j;
}

double median(std::vector<double> v) {
  if (v.empty()) throw ContractError("median of nothing");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const EvalReport* ExperimentReport::find(int factor, ClassifierKind kind, std::size_t seed_index) const {
  for (const auto& r : reports)
    if (r.factor == factor && r.classifier == kind && r.seed_index == seed_index) return &r;
  return nullptr;
}

double ExperimentReport::median_gain(int factor, ClassifierKind kind) const {
  std::vector<double> gains;
  for (std::size_t s = 0; s < config.seeds; ++s) {
    const auto* a = find(factor, kind, s);
    const auto* b = find(1, kind, s);
    if (!a || !b) throw ContractError("no report for factor " + std::to_string(factor));
    gains.push_back(a->test.weighted - b->test.weighted);
  }
  return median(gains);
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json j;
  j["config"] = config.to_json();
  j["generator"] = generator;
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(r.to_json());
  j["consistency"] = nlohmann::json::array();
  for (const auto& c : consistency)
    j["consistency"].push_back({{"factor", c.factor}, {"seed_index", c.seed_index}, {"classes", c.result.to_json()}});
  j["summary"] = nlohmann::json::array();
  for (int f : config.factors)
    for (auto kind : config.classifiers)
      j["summary"].push_back({{"factor", f}, {"classifier", to_string(kind)},
                              {"median_gain_f1_weighted", median_gain(f, kind)}});
  j["access_log"] = nlohmann::json::array();
  for (const auto& a : access_log) j["access_log"].push_back({{"split", a.split}, {"stage", a.stage}, {"task", a.task}});
  return j;
}

std::string ExperimentReport::table() const {
  std::vector<std::pair<std::string, int>> rows{{"Original", 1}};
  for (int f : config.factors) rows.emplace_back(generator + " x" + std::to_string(f), f);
  std::size_t w0 = 8;
  for (const auto& r : rows) w0 = std::max(w0, r.first.size());
  std::ostringstream out;
  char buf[64];
  out << std::string(w0, ' ');
  for (auto kind : config.classifiers) {
    std::snprintf(buf, sizeof buf, " | %-17s", to_string(kind).c_str());
    out << buf;
  }
  out << "\n" << std::string(w0, ' ');
  for (std::size_t i = 0; i < config.classifiers.size(); ++i) out << " | F1 risk  F1 wtd ";
  out << "\n";
  for (const auto& [name, f] : rows) {
    out << name << std::string(w0 - name.size(), ' ');
    for (auto kind : config.classifiers) {
      std::vector<double> risk, wtd;
      for (std::size_t s = 0; s < config.seeds; ++s)
        if (const auto* r = find(f, kind, s)) {
          risk.push_back(r->test.risk());
          wtd.push_back(r->test.weighted);
        }
      std::snprintf(buf, sizeof buf, " | %7.4f  %7.4f ", median(risk), median(wtd));
      out << buf;
    }
    out << "\n";
  }
  out << "(test split, median over " << config.seeds << " seeds)\n";
  return out.str();
}

std::size_t evaluation_threads() {
  if (const char* env = std::getenv("TABGEN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

std::vector<std::uint8_t> labels_of(const Dataset& d) {
  std::vector<std::uint8_t> y(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) y[r] = static_cast<std::uint8_t>(d.condition(r));
  return y;
}

template <typename F>
void run_parallel(std::size_t tasks, std::size_t threads, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < tasks;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < std::min(threads, tasks); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

ExperimentReport augmentation_experiment(const PreparedData& data, Checkpoint& generator, const ExperimentConfig& cfg) {
  cfg.validate();
  if (generator.schema->content_hash() != data.schema->content_hash())
    throw SchemaMismatchError("generator checkpoint was trained on a different schema");
  ExperimentReport rep;
  rep.config = cfg;
  rep.generator = to_string(generator.config.variant);

  auto banks = load_banks(generator);
  if (banks.size() < 2) {
    banks.clear();
    for (Condition c : {Condition::kNonRisk, Condition::kRisk}) banks.push_back(build_bank(generator.model, data.train, c));
  }

  // Training sets: index 0 is the original split, then one per (factor, seed).
  struct TrainSet {
    int factor;
    std::size_t seed_index;
    Dataset data;
  };
  std::vector<TrainSet> sets;
  sets.push_back({1, 0, data.train});
  for (int f : cfg.factors) {
    const auto counts = augmentation_counts(data.train, f);
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
      Dataset synthetic(data.train.schema_ptr());
      for (Condition c : {Condition::kNonRisk, Condition::kRisk}) {
        GenerationRequest req;
        req.condition = c;
        req.count = counts[static_cast<std::size_t>(c)];
        req.k = cfg.k;
        req.mode = cfg.mode;
        req.seed = derive_seed(cfg.seed, "augment", {static_cast<std::uint64_t>(f), s, static_cast<std::uint64_t>(c)});
        if (req.count) synthetic.append(generate(generator.model, data.train.schema_ptr(), banks, req));
      }
      rep.consistency.push_back({f, s, class_consistency(synthetic)});
      rep.access_log.push_back({"train", "generate", "x" + std::to_string(f) + "/seed" + std::to_string(s)});
      Dataset augmented = data.train;
      augmented.append(synthetic);
      sets.push_back({f, s, std::move(augmented)});
    }
  }

  struct Task {
    std::size_t set;
    ClassifierKind kind;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < sets.size(); ++i)
    for (auto kind : cfg.classifiers) {
      if (sets[i].factor == 1) {
        for (std::size_t s = 0; s < cfg.seeds; ++s) tasks.push_back({i, kind, s});
      } else {
        tasks.push_back({i, kind, sets[i].seed_index});
      }
    }

  const auto test_labels = labels_of(data.test);
  std::vector<EvalReport> out(tasks.size());
  std::vector<std::vector<AccessEntry>> logs(tasks.size());
  const std::size_t threads = cfg.threads ? cfg.threads : evaluation_threads();
  run_parallel(tasks.size(), threads, [&](std::size_t t) {
    const Task& task = tasks[t];
    const TrainSet& set = sets[task.set];
    EvalReport& r = out[t];
    r.generator = set.factor == 1 ? "original" : rep.generator;
    r.factor = set.factor;
    r.classifier = task.kind;
    r.seed_index = task.seed_index;
    // Same classifier seed with and without augmentation, so gains are paired.
    r.seed = derive_seed(cfg.seed, "classifier", {task.seed_index});
    r.train_counts = {set.data.count(Condition::kNonRisk), set.data.count(Condition::kRisk)};
    const std::string name = to_string(task.kind) + "/x" + std::to_string(set.factor) + "/seed" + std::to_string(task.seed_index);
    logs[t].push_back({"train", "fit", name});
    logs[t].push_back({"validation", "select", name});
    auto fitted = train_classifier(task.kind, set.data, data.validation, default_grid(task.kind), r.seed);
    r.grid_index = fitted.grid_index;
    r.point = fitted.point;
    r.validation_f1 = fitted.validation_f1;
    logs[t].push_back({"test", "score", name});
    r.test = f1_scores(fitted.model->predict(data.test), test_labels);
  });
  rep.reports = std::move(out);
  for (auto& l : logs) rep.access_log.insert(rep.access_log.end(), l.begin(), l.end());
  return rep;
}

}  // namespace tabgen
