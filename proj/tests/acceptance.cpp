// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tabgen/bench/benchmark.hpp"
#include "tabgen/common/error.hpp"
#include "tabgen/eval/experiment.hpp"
#include "tabgen/losses/losses.hpp"
#include "tabgen/numerics/gradcheck.hpp"
#include "tabgen/training/checkpoint.hpp"
#include "tabgen/training/trainer.hpp"
#include "toy_data.hpp"

using namespace tabgen;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Tensor normal(std::size_t n, std::size_t h, Rng& rng, double sd = 1.0) {
  std::normal_distribution<double> nd(0.0, sd);
  Tensor t({n, h});
  for (double& v : t.values()) v = nd(rng);
  return t;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: gradients -------------------------------------------------------------

Outcome gradients() {
  const auto t0 = Clock::now();
  ModelDims d;
  d.cardinalities = {3, 2, 4, 3, 2, 5};
  d.embedding = 3;
  d.latent = 2;
  Rng rng(0);
  CvaeModel m(d, rng);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (Parameter* p : m.parameters())
    if (p->name.ends_with(".bias"))
      for (double& v : p->value.values()) v = u(rng);
  std::vector<std::uint32_t> rows(4 * 6);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t a = 0; a < 6; ++a) rows[r * 6 + a] = rng() % d.cardinalities[a];
  const std::vector<std::uint8_t> cond{0, 1, 1, 0};
  const Tensor eps = normal(4, 2, rng), eps_pos = normal(4, 2, rng);

  Outcome o;
  double worst = 0.0;
  for (Variant v : {Variant::kSccvae, Variant::kScvae, Variant::kCcvae, Variant::kSccvaeCalpha}) {
    TrainingConfig cfg;
    cfg.variant = v;
    // Mid-ramp, so beta (and alpha for the cyclic variant) are fractional.
    const LossWeights w = cfg.weights_at(22);
    Graph g;
    const auto nodes = build_objective(g, m, rows, cond, g.input(eps), g.input(eps_pos), w);
    g.backward(nodes.total);
    const auto ps = m.parameters();
    const auto rep = finite_diff_check(g, nodes.total, ps, 1e-4, 1e-4);
    worst = std::max(worst, rep.max_rel_err);
    if (!rep.pass) {
      o.pass = false;
      o.detail += to_string(v) + " fails at " + rep.worst_param + "; ";
    }
  }
  const double t = seconds(t0);
  if (t >= 10.0) o.pass = false;
  o.detail += "4 variants, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.2f s", t);
  return o;
}

// ---- 2: loss oracles ----------------------------------------------------------

Outcome loss_oracles() {
  Outcome o;
  Rng rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double kl_err = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t h = 1 + rng() % 4;
    Tensor mu({1, h}), lv({1, h});
    std::vector<double> var(h), zero(h, 0.0), one(h, 1.0);
    for (std::size_t j = 0; j < h; ++j) {
      mu[j] = u(rng);
      lv[j] = u(rng);
      var[j] = std::exp(lv[j]);
    }
    Graph g;
    const double a = g.value(kld_standard(g, LatentNodes{g.input(mu), g.input(lv)})).item();
    const std::vector<double> m(mu.values().begin(), mu.values().end());
    kl_err = std::max(kl_err, std::abs(a - kld_two_normals(m, var, zero, one)));
  }

  double ce_err = 0.0;
  const std::vector<std::uint32_t> cards{2, 5, 3, 7};
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::vector<Tensor> logits;
    for (auto v : cards) logits.push_back(normal(n, v, rng, 3.0));
    std::vector<std::uint32_t> targets(n * cards.size());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < cards.size(); ++a) targets[r * cards.size() + a] = rng() % cards[a];
    long double oracle = 0.0L;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t a = 0; a < cards.size(); ++a) {
        long double denom = 0.0L;
        for (std::uint32_t k = 0; k < cards[a]; ++k) denom += std::exp(static_cast<long double>(logits[a](r, k)));
        oracle -= std::log(std::exp(static_cast<long double>(logits[a](r, targets[r * cards.size() + a]))) / denom);
      }
    oracle /= n;
    Graph g;
    std::vector<NodeId> ids;
    for (auto& t : logits) ids.push_back(g.input(t));
    ce_err = std::max(ce_err, std::abs(g.value(reconstruction_ce(g, ids, targets)).item() - double(oracle)));
  }

  double nce_err = 0.0;
  for (std::size_t n : {2u, 3u, 8u, 64u, 100u}) {
    Tensor z({n, 5}, 0.7);
    Graph g;
    nce_err = std::max(nce_err, std::abs(g.value(info_nce(g, g.input(z), g.input(z), 0.5)).item() - std::log(double(n))));
  }
  o.pass = kl_err <= 1e-12 && ce_err <= 1e-10 && nce_err <= 1e-12;
  o.detail = "KL " + fmt("%.1e", kl_err) + " (1e4 draws), CE " + fmt("%.1e", ce_err) + ", InfoNCE " + fmt("%.1e", nce_err);
  return o;
}

// ---- 3: schedule ----------------------------------------------------------------

Outcome schedule() {
  const ScheduleConfig cfg{4, 0.9, 1.0, 200};
  bool ok = true;
  for (int e : {0, 50, 100, 150}) ok &= cyclic_schedule(e, cfg) == 0.0;
  for (int c = 0; c < 4; ++c)
    for (int e = 45; e <= 49; ++e) ok &= cyclic_schedule(c * 50 + e, cfg) == 1.0;
  ok &= std::abs(cyclic_schedule(22, cfg) - 22.0 / 45.0) <= 1e-12;
  return {ok, "zeros at cycle starts, ones on plateaus, epoch 22 = " + fmt("%.12f", cyclic_schedule(22, cfg))};
}

// ---- 4: SMOTE -----------------------------------------------------------------

Outcome smote() {
  Rng rng(4);
  bool endpoints = true, box = true, neighbours = true;
  std::uniform_real_distribution<double> u01(0.0, 1.0), wide(-50.0, 50.0);
  for (int t = 0; t < 100000; ++t) {
    const std::size_t h = 1 + rng() % 8;
    std::vector<double> a(h), b(h);
    for (std::size_t j = 0; j < h; ++j) {
      a[j] = wide(rng);
      b[j] = wide(rng);
    }
    if (t < 1000) {
      endpoints &= smote_interpolate(a, b, 0.0) == a;
      endpoints &= smote_interpolate(a, b, 1.0) == b;
    }
    const auto z = smote_interpolate(a, b, u01(rng));
    for (std::size_t j = 0; j < h; ++j) box &= std::min(a[j], b[j]) <= z[j] && z[j] <= std::max(a[j], b[j]);
  }
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = 3 + rng() % 40, h = 1 + rng() % 6;
    LatentBank bank;
    bank.z = normal(m, h, rng);
    // Coarse grid values so exact distance ties occur.
    if (t % 2)
      for (double& v : bank.z.values()) v = std::round(v * 2.0) / 2.0;
    const std::size_t k = 1 + rng() % (m - 1), i = rng() % m;
    std::vector<std::pair<long double, std::size_t>> all;
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      long double d = 0.0L;
      for (std::size_t c = 0; c < h; ++c) {
        const long double x = static_cast<long double>(bank.z(i, c)) - bank.z(j, c);
        d += x * x;
      }
      all.emplace_back(d, j);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect;
    for (std::size_t q = 0; q < k; ++q) expect.push_back(all[q].second);
    neighbours &= knn(bank, i, k) == expect;
  }
  return {endpoints && box && neighbours,
          std::string("endpoints ") + (endpoints ? "exact" : "WRONG") + ", bounding box on 1e5 trials " +
              (box ? "held" : "VIOLATED") + ", knn on 200 banks " + (neighbours ? "matches" : "DIFFERS")};
}

// ---- shared benchmark run for 5, 6 and 8 -------------------------------------------

struct BenchRun {
  PreparedData data;
  std::optional<Checkpoint> ckpt;  // after a save/load round trip
  std::string bytes;
  double train_s = 0.0;
  TrainingHistory history;
  // Logits of the in-memory f64 model on fixed latents, for the round trip.
  Tensor probe_z;
  std::vector<std::uint8_t> probe_conds;
  std::vector<Tensor> probe_logits;
};

BenchRun& bench_run() {
  static BenchRun run = [] {
    BenchRun r;
    BenchConfig bc;
    bc.seed = 42;
    const auto b = generate_benchmark(bc);
    PrepareOptions opt;
    opt.split.seed = 42;
    r.data = prepare(b.schema, b.raw, opt);
    TrainingConfig cfg;
    cfg.seed = 42;
    cfg.patience = cfg.epochs;  // run every epoch
    const auto t0 = Clock::now();
    auto res = train(r.data.train, cfg);
    r.train_s = seconds(t0);
    r.history = res.history;
    Rng rng(8);
    r.probe_z = normal(256, res.model.dims().latent, rng);
    for (std::size_t i = 0; i < 256; ++i) r.probe_conds.push_back(i % 2);
    r.probe_logits = res.model.decode_logits(r.probe_z, r.probe_conds);
    Checkpoint ckpt{cfg, r.data.schema, std::move(res.model)};
    ckpt.epoch = res.history.epochs.back().epoch;
    ckpt.best_epoch = res.history.best_epoch;
    ckpt.best_loss = res.history.best_loss;
    std::vector<LatentBank> banks;
    for (Condition c : {Condition::kNonRisk, Condition::kRisk}) banks.push_back(build_bank(ckpt.model, r.data.train, c));
    store_banks(ckpt, banks);
    r.bytes = serialize_checkpoint(ckpt);
    r.ckpt.emplace(parse_checkpoint(r.bytes, r.data.schema->content_hash()));
    return r;
  }();
  return run;
}

// ---- 5: class consistency -------------------------------------------------------

Outcome consistency() {
  auto& run = bench_run();
  const auto t0 = Clock::now();
  auto banks = load_banks(*run.ckpt);
  Outcome o;
  std::ostringstream detail;
  detail << "811 rows, " << run.history.epochs.size() << " epochs, seed 42";
  for (Condition c : {Condition::kNonRisk, Condition::kRisk}) {
    GenerationRequest req;
    req.condition = c;
    req.count = 500;
    req.seed = derive_seed(42, "acceptance", {static_cast<std::uint64_t>(c)});
    const auto rows = generate(run.ckpt->model, run.data.schema, banks, req);
    const auto r = class_consistency(rows);
    const double acc = r.accuracy(c);
    const auto k = static_cast<std::size_t>(c);
    o.pass &= acc >= 0.95 && r.determinate[k] > 0;
    detail << ", " << condition_label(c) << " " << fmt("%.4f", acc) << " (" << r.consistent[k] << "/"
           << r.determinate[k] << ", " << r.indeterminate[k] << " indeterminate)";
  }
  const double total = run.train_s + seconds(t0);
  o.pass &= total < 15 * 60;
  detail << ", " << to_string(GenerationRequest{}.mode) << " decoding, " << fmt("%.0f s", total);
  o.detail = detail.str();
  return o;
}

// ---- 6: augmentation ------------------------------------------------------------

Outcome augmentation() {
  auto& run = bench_run();
  ExperimentConfig cfg;
  cfg.factors = {2};
  cfg.seeds = 5;
  cfg.seed = 42;
  const auto rep = augmentation_experiment(run.data, *run.ckpt, cfg);
  Outcome o;
  int non_negative = 0;
  bool floor = true;
  std::ostringstream detail;
  detail << "median weighted-F1 gain at x2 over 5 seeds:";
  for (auto kind : cfg.classifiers) {
    const double g = rep.median_gain(2, kind);
    non_negative += g >= 0.0;
    floor &= g >= -0.05;
    detail << " " << to_string(kind) << " " << fmt("%+.4f", g);
  }
  o.pass = non_negative >= 2 && floor;
  detail << " (" << non_negative << "/3 >= 0)";
  o.detail = detail.str();
  std::fputs(rep.table().c_str(), stdout);
  return o;
}

// ---- 7: variant matrix ------------------------------------------------------------

Outcome variants() {
  const auto data = toy::corpus(60, 7);
  auto run = [&](Variant v, int epochs) {
    TrainingConfig cfg;
    cfg.variant = v;
    cfg.E = 3;
    cfg.h = 2;
    cfg.epochs = epochs;
    cfg.patience = epochs;
    cfg.beta_schedule.total_epochs = cfg.alpha_schedule.total_epochs = epochs;
    cfg.batch_size = 32;
    cfg.seed = 7;
    return train(data, cfg).history;
  };
  bool ok = true;
  std::string detail;
  const auto sc = run(Variant::kScvae, 12);
  for (const auto& e : sc.epochs) ok &= e.train.nce == 0.0 && e.train.alpha == 0.0;
  detail += "SCVAE nce == 0 on " + std::to_string(sc.epochs.size()) + " epochs";
  const auto cc = run(Variant::kCcvae, 12);
  for (const auto& e : cc.epochs) ok &= e.train.l1 == 0.0 && e.train.lambda == 0.0;
  detail += ", CCVAE l1 == 0 on " + std::to_string(cc.epochs.size()) + " epochs";
  const auto ca = run(Variant::kSccvaeCalpha, 200);
  bool table = ca.epochs.size() == 200;
  if (table) {
    for (int e : {0, 50, 100, 150}) table &= ca.epochs[e].train.alpha == 0.0;
    for (int c = 0; c < 4; ++c)
      for (int e = 45; e <= 49; ++e) table &= ca.epochs[c * 50 + e].train.alpha == 1.0;
    table &= std::abs(ca.epochs[22].train.alpha - 22.0 / 45.0) <= 1e-12;
    const ScheduleConfig s{4, 0.9, 1.0, 200};
    for (int e = 0; e < 200; ++e) table &= ca.epochs[e].train.alpha == cyclic_schedule(e, s);
  }
  ok &= table;
  detail += std::string(", SCCVAE-Calpha alpha trace ") + (table ? "matches" : "DIFFERS") + " over 200 epochs";
  return {ok, detail};
}

// ---- 8: determinism and persistence ------------------------------------------------

Outcome persistence() {
  const auto data = toy::corpus(120, 8);
  auto once = [&] {
    TrainingConfig cfg;
    cfg.E = 4;
    cfg.h = 3;
    cfg.epochs = 8;
    cfg.beta_schedule.total_epochs = cfg.alpha_schedule.total_epochs = 8;
    cfg.seed = 99;
    auto res = train(data, cfg);
    Checkpoint c{cfg, data.schema_ptr(), std::move(res.model)};
    c.best_epoch = res.history.best_epoch;
    c.best_loss = res.history.best_loss;
    return serialize_checkpoint(c);
  };
  const bool same_ckpt = once() == once();

  auto& run = bench_run();
  ExperimentConfig cfg;
  cfg.factors = {2};
  cfg.classifiers = {ClassifierKind::kLogreg, ClassifierKind::kForest};
  cfg.seeds = 1;
  cfg.threads = 1;
  const std::string r1 = augmentation_experiment(run.data, *run.ckpt, cfg).to_json().dump();
  cfg.threads = 4;
  const std::string r2 = augmentation_experiment(run.data, *run.ckpt, cfg).to_json().dump();
  const bool same_report = r1 == r2;

  // Round trip of the full-size benchmark model against the in-memory model
  // it was saved from.
  auto reloaded = parse_checkpoint(run.bytes);
  const bool same_bytes = serialize_checkpoint(reloaded) == run.bytes;
  const auto& a = run.probe_logits;
  const auto b = reloaded.model.decode_logits(run.probe_z, run.probe_conds);
  double worst = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t)
    for (std::size_t i = 0; i < a[t].size(); ++i) worst = std::max(worst, std::abs(a[t][i] - b[t][i]));
  const bool close = worst <= 1e-6;
  return {same_ckpt && same_report && same_bytes && close,
          std::string("checkpoints ") + (same_ckpt ? "byte-identical" : "DIFFER") + ", reports " +
              (same_report ? "identical across thread counts" : "DIFFER") + ", reserialize " +
              (same_bytes ? "identical" : "DIFFERS") + ", max logit change " + fmt("%.2e", worst)};
}

// ---- 9: F1 ----------------------------------------------------------------------

Outcome metrics() {
  std::mt19937_64 rng(9);
  std::size_t mismatches = 0, degenerate = 0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 50;
    std::bernoulli_distribution by((rng() % 5) / 4.0), bp((rng() % 5) / 4.0), agree(0.5);
    std::vector<std::uint8_t> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = by(rng);
      p[i] = agree(rng) ? y[i] : bp(rng);
    }
    std::size_t m[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t i = 0; i < n; ++i) ++m[y[i]][p[i]];
    double f1[2], weighted = 0.0;
    bool zero_den = false;
    for (int c = 0; c < 2; ++c) {
      const std::size_t tp = m[c][c], fp = m[1 - c][c], fn = m[c][1 - c];
      zero_den |= tp + fp == 0 || tp + fn == 0;
      const double prec = tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp);
      const double rec = tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn);
      f1[c] = prec + rec == 0.0 ? 0.0 : 2.0 * prec * rec / (prec + rec);
    }
    for (int c = 0; c < 2; ++c) weighted += double(m[c][0] + m[c][1]) / double(n) * f1[c];
    degenerate += zero_den;
    const auto s = f1_scores(p, y);
    mismatches += s.f1[0] != f1[0] || s.f1[1] != f1[1] || s.weighted != weighted;
  }
  return {mismatches == 0, std::to_string(1000 - mismatches) + "/1000 exact, " + std::to_string(degenerate) +
                               " with a zero denominator"};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients},
      {"loss oracles", loss_oracles},
      {"schedule table", schedule},
      {"SMOTE properties", smote},
      {"class consistency", consistency},
      {"augmentation effect", augmentation},
      {"variant matrix", variants},
      {"determinism and persistence", persistence},
      {"metrics", metrics},
  };
  int failed = 0;
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    char head[96];
    std::snprintf(head, sizeof head, "%s criterion %zu (%s): ", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first);
    lines.push_back(head + o.detail);
    std::printf("%s\n", lines.back().c_str());
    std::fflush(stdout);
  }
  std::printf("\nsummary\n");
  for (const auto& l : lines) std::printf("%s\n", l.c_str());
  return failed ? 1 : 0;
}
