// SPDX-License-Identifier: Apache-2.0
#include "tabgen/cli/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "tabgen/bench/benchmark.hpp"
#include "tabgen/common/error.hpp"
#include "tabgen/common/hash.hpp"
#include "tabgen/dataprep/prepare.hpp"
#include "tabgen/eval/experiment.hpp"
#include "tabgen/sampling/sampler.hpp"
#include "tabgen/training/checkpoint.hpp"
#include "tabgen/training/trainer.hpp"

namespace fs = std::filesystem;

namespace tabgen {

nlohmann::json RunManifest::to_json() const {
  auto files = [](const std::vector<fs::path>& paths) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : paths) a.push_back({{"path", p.generic_string()}, {"sha256", sha256_file(p.string())}});
    return a;
  };
  return {{"command", command}, {"arguments", arguments}, {"seed", seed},       {"config_hashes", config_hashes},
          {"inputs", files(inputs)}, {"outputs", files(outputs)}, {"wall_time_s", wall_time_s}};
}

void RunManifest::write(const fs::path& path) const { write_file(path.string(), to_json().dump(2) + "\n"); }

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

void ensure_parent(const fs::path& file) {
  if (file.has_parent_path()) ensure_dir(file.parent_path());
}

fs::path sidecar(const fs::path& file, const std::string& suffix) { return fs::path(file.string() + suffix); }

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct BenchmarkArgs {
  std::size_t patients = 811;
  std::uint64_t seed = 42;
  double missing = 0.2;
  std::string out;
};

void cmd_benchmark(const BenchmarkArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  BenchConfig cfg;
  cfg.patients = a.patients;
  cfg.seed = a.seed;
  cfg.missing_rate = a.missing;
  const auto b = generate_benchmark(cfg);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_csv(b.raw, (dir / "raw.csv").string());
  save_schema(b.schema, (dir / "schema.json").string());
  RunManifest m;
  m.command = "benchmark";
  m.arguments = {{"patients", a.patients}, {"seed", a.seed}, {"missing_rate", a.missing}, {"out", a.out}};
  m.seed = a.seed;
  m.outputs = {dir / "raw.csv", dir / "schema.json"};
  m.wall_time_s = seconds_since(t0);
  m.write(dir / "manifest.json");
  std::printf("wrote %zu patients to %s\n", b.raw.rows.size(), a.out.c_str());
}

struct PrepareArgs {
  std::string schema, input, split = "0.2,0.2", out;
  std::uint64_t seed = 42;
  double prune = 0.9;
};

void cmd_prepare(const PrepareArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto parts = split_list(a.split);
  if (parts.size() != 2) throw ConfigError("--split expects \"test,validation\" fractions");
  PrepareOptions opt;
  try {
    opt.split.test_fraction = std::stod(parts[0]);
    opt.split.validation_fraction = std::stod(parts[1]);
  } catch (const std::exception&) {
    throw ConfigError("--split expects two numbers, got '" + a.split + "'");
  }
  opt.split.seed = a.seed;
  opt.prune_threshold = a.prune;
  const Schema raw_schema = load_schema(a.schema);
  const CsvTable raw = read_csv(a.input);
  const auto data = prepare(raw_schema, raw, opt);
  const fs::path dir(a.out);
  ensure_dir(dir);
  write_prepared(data, dir);
  RunManifest m;
  m.command = "prepare";
  m.arguments = {{"schema", a.schema}, {"input", a.input}, {"split", a.split}, {"seed", a.seed}, {"out", a.out}};
  m.seed = a.seed;
  m.config_hashes = {{"schema", raw_schema.content_hash()}};
  m.inputs = {a.schema, a.input};
  for (const char* f : {"schema.json", "train.csv", "val.csv", "test.csv", "prune_report.json"})
    m.outputs.push_back(dir / f);
  m.wall_time_s = seconds_since(t0);
  m.write(dir / "manifest.json");
  std::printf("train %zu, validation %zu, test %zu records; %zu attributes kept\n", data.train.rows(),
              data.validation.rows(), data.test.rows(), data.schema->columns.size());
}

struct TrainArgs {
  std::string data, config, out;
  std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  TrainingConfig cfg = a.config.empty() ? TrainingConfig{} : load_training_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  cfg.validate();
  const auto data = load_prepared(a.data);
  const Dataset* val = cfg.monitor == Monitor::kValidation ? &data.validation : nullptr;
  auto result = train(data.train, cfg, val, [](const EpochRecord& e) {
    const auto& t = e.train;
    std::printf("epoch %3d  total %.5f  ce %.5f  kld %.5f  nce %.5f  l1 %.5f  beta %.3f  alpha %.3f", e.epoch,
                t.total, t.ce, t.kld, t.nce, t.l1, t.beta, t.alpha);
    if (e.validation) std::printf("  val %.5f", *e.validation);
    std::printf("\n");
    std::fflush(stdout);
  });
  Checkpoint ckpt{cfg, data.schema, std::move(result.model)};
  ckpt.epoch = result.history.epochs.empty() ? 0 : result.history.epochs.back().epoch;
  ckpt.best_epoch = result.history.best_epoch;
  ckpt.best_loss = result.history.best_loss;
  std::vector<LatentBank> banks;
  for (Condition c : {Condition::kNonRisk, Condition::kRisk}) banks.push_back(build_bank(ckpt.model, data.train, c));
  store_banks(ckpt, banks);
  const fs::path out(a.out);
  ensure_parent(out);
  save_checkpoint(out, ckpt);
  const fs::path hist = out.has_parent_path() ? out.parent_path() / "history.json" : fs::path("history.json");
  write_file(hist.string(), result.history.to_json().dump(2) + "\n");
  RunManifest m;
  m.command = "train";
  m.arguments = {{"data", a.data}, {"config", a.config}, {"out", a.out}, {"seed", cfg.seed}};
  m.seed = cfg.seed;
  m.config_hashes = {{"training", sha256_hex(cfg.to_json().dump())}, {"schema", data.schema->content_hash()}};
  for (const char* f : {"schema.json", "train.csv", "val.csv", "test.csv"}) m.inputs.push_back(fs::path(a.data) / f);
  if (!a.config.empty()) m.inputs.push_back(a.config);
  m.outputs = {out, hist};
  m.wall_time_s = seconds_since(t0);
  m.write(sidecar(out, ".manifest.json"));
  std::printf("best epoch %d, loss %.6f%s\n", result.history.best_epoch, result.history.best_loss,
              result.history.stopped_early ? " (stopped early)" : "");
}

struct GenerateArgs {
  std::string model, cls, out, mode = "argmax";
  std::size_t count = 1, k = 5;
  std::uint64_t seed = 42;
};

void cmd_generate(const GenerateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  Checkpoint ckpt = load_checkpoint(a.model);
  GenerationRequest req;
  req.condition = parse_condition(a.cls);
  req.count = a.count;
  req.k = a.k;
  req.seed = a.seed;
  req.mode = parse_decode_mode(a.mode);
  auto banks = load_banks(ckpt);
  const Dataset rows = generate(ckpt.model, ckpt.schema, banks, req);
  const fs::path out(a.out);
  ensure_parent(out);
  write_csv(rows.to_csv(), out.string());
  const nlohmann::json provenance = {{"request", req.to_json()},
                                     {"model", a.model},
                                     {"model_sha256", sha256_file(a.model)},
                                     {"variant", to_string(ckpt.config.variant)},
                                     {"schema_hash", ckpt.schema->content_hash()},
                                     {"rows", rows.rows()}};
  const fs::path prov = sidecar(out, ".provenance.json");
  write_file(prov.string(), provenance.dump(2) + "\n");
  RunManifest m;
  m.command = "generate";
  m.arguments = {{"model", a.model}, {"class", a.cls}, {"count", a.count}, {"k", a.k},
                 {"seed", a.seed},   {"mode", a.mode}, {"out", a.out}};
  m.seed = a.seed;
  m.inputs = {a.model};
  m.outputs = {out, prov};
  m.wall_time_s = seconds_since(t0);
  m.write(sidecar(out, ".manifest.json"));
  std::printf("wrote %zu %s records to %s\n", rows.rows(), a.cls.c_str(), a.out.c_str());
}

struct EvaluateArgs {
  std::string data, model, out, factors = "2,5", classifiers = "logreg,mlp,forest", mode = "argmax";
  std::size_t seeds = 5, k = 5;
  std::uint64_t seed = 42;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  cfg.factors.clear();
  for (const auto& f : split_list(a.factors)) {
    try {
      cfg.factors.push_back(std::stoi(f));
    } catch (const std::exception&) {
      throw ConfigError("bad factor '" + f + "'");
    }
  }
  cfg.classifiers.clear();
  for (const auto& c : split_list(a.classifiers)) cfg.classifiers.push_back(parse_classifier(c));
  cfg.seeds = a.seeds;
  cfg.seed = a.seed;
  cfg.k = a.k;
  cfg.mode = parse_decode_mode(a.mode);
  const auto data = load_prepared(a.data);
  Checkpoint ckpt = load_checkpoint(a.model, data.schema->content_hash());
  const auto report = augmentation_experiment(data, ckpt, cfg);
  const fs::path out(a.out);
  ensure_parent(out);
  write_file(out.string(), report.to_json().dump(2) + "\n");
  fs::path table = out;
  table.replace_extension(".txt");
  const std::string text = report.table();
  write_file(table.string(), text);
  RunManifest m;
  m.command = "evaluate";
  m.arguments = {{"data", a.data},   {"model", a.model}, {"factors", a.factors}, {"classifiers", a.classifiers},
                 {"seeds", a.seeds}, {"seed", a.seed},   {"k", a.k},             {"mode", a.mode},
                 {"out", a.out}};
  m.seed = a.seed;
  m.config_hashes = {{"experiment", sha256_hex(cfg.to_json().dump())}};
  m.inputs = {a.model};
  for (const char* f : {"schema.json", "train.csv", "val.csv", "test.csv"}) m.inputs.push_back(fs::path(a.data) / f);
  m.outputs = {out, table};
  m.wall_time_s = seconds_since(t0);
  m.write(sidecar(out, ".manifest.json"));
  std::fputs(text.c_str(), stdout);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Conditional synthesis of categorical tabular records"};
  app.require_subcommand(1);

  BenchmarkArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Write a synthetic benchmark corpus");
  bench->add_option("--patients", ba.patients, "Number of patients")->capture_default_str();
  bench->add_option("--seed", ba.seed, "Master seed")->capture_default_str();
  bench->add_option("--missing", ba.missing, "Per-value missing rate")->capture_default_str();
  bench->add_option("--out", ba.out, "Output directory")->required();

  PrepareArgs pa;
  auto* prep = app.add_subcommand("prepare", "Derive, discretize, split, encode and prune a raw corpus");
  prep->add_option("--schema", pa.schema, "Raw schema JSON")->required();
  prep->add_option("--input", pa.input, "Raw CSV")->required();
  prep->add_option("--split", pa.split, "Test and validation fractions")->capture_default_str();
  prep->add_option("--seed", pa.seed, "Split seed")->capture_default_str();
  prep->add_option("--prune", pa.prune, "Correlation threshold for pruning")->capture_default_str();
  prep->add_option("--out", pa.out, "Output directory")->required();

  TrainArgs ta;
  auto* tr = app.add_subcommand("train", "Train a generator");
  tr->add_option("--data", ta.data, "Prepared data directory")->required();
  tr->add_option("--config", ta.config, "Training config JSON");
  tr->add_option("--out", ta.out, "Checkpoint path")->required();
  tr->add_option("--seed", ta.seed, "Overrides the config seed");

  GenerateArgs ga;
  auto* gen = app.add_subcommand("generate", "Sample synthetic records of one class");
  gen->add_option("--model", ga.model, "Checkpoint")->required();
  gen->add_option("--class", ga.cls, "risk or non-risk")->required()->check(CLI::IsMember({"risk", "non-risk"}));
  gen->add_option("--count", ga.count, "Records to generate")->capture_default_str();
  gen->add_option("--k", ga.k, "Neighbours per anchor")->capture_default_str();
  gen->add_option("--seed", ga.seed, "Sampling seed")->capture_default_str();
  gen->add_option("--mode", ga.mode, "sample or argmax decoding")->capture_default_str();
  gen->add_option("--out", ga.out, "Output CSV")->required();

  EvaluateArgs ea;
  auto* ev = app.add_subcommand("evaluate", "Augmentation experiment with downstream classifiers");
  ev->add_option("--data", ea.data, "Prepared data directory")->required();
  ev->add_option("--model", ea.model, "Generator checkpoint")->required();
  ev->add_option("--factors", ea.factors, "Augmentation factors")->capture_default_str();
  ev->add_option("--classifiers", ea.classifiers, "logreg, mlp, forest")->capture_default_str();
  ev->add_option("--seeds", ea.seeds, "Number of seeds")->capture_default_str();
  ev->add_option("--seed", ea.seed, "Master seed")->capture_default_str();
  ev->add_option("--k", ea.k, "Neighbours per anchor")->capture_default_str();
  ev->add_option("--mode", ea.mode, "sample or argmax decoding")->capture_default_str();
  ev->add_option("--out", ea.out, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_codes::kConfig;
  }

  try {
    if (*bench) cmd_benchmark(ba);
    else if (*prep) cmd_prepare(pa);
    else if (*tr) cmd_train(ta);
    else if (*gen) cmd_generate(ga);
    else if (*ev) cmd_evaluate(ea);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_codes::kIo;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tabgen
