// SPDX-License-Identifier: Apache-2.0
#include "tabgen/eval/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "tabgen/common/error.hpp"
#include "tabgen/common/rng.hpp"
#include "tabgen/dataprep/preprocess.hpp"
#include "tabgen/eval/metrics.hpp"
#include "tabgen/numerics/layers.hpp"
#include "tabgen/training/adam.hpp"

namespace tabgen {

std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::kLogreg: return "logreg";
    case ClassifierKind::kMlp: return "mlp";
    case ClassifierKind::kForest: return "forest";
  }
  return "?";
}

ClassifierKind parse_classifier(const std::string& s) {
  if (s == "logreg") return ClassifierKind::kLogreg;
  if (s == "mlp") return ClassifierKind::kMlp;
  if (s == "forest" || s == "random_forest") return ClassifierKind::kForest;
  throw ConfigError("unknown classifier '" + s + "' (expected logreg, mlp or forest)");
}

FeatureLayout FeatureLayout::of(const Schema& schema) {
  FeatureLayout f;
  for (std::size_t c : schema.feature_columns()) {
    f.columns.push_back(c);
    f.offsets.push_back(f.width);
    f.width += schema.columns[c].cardinality();
  }
  return f;
}

nlohmann::json GridPoint::to_json(ClassifierKind kind) const {
  switch (kind) {
    case ClassifierKind::kLogreg: return {{"l2", l2}, {"lr", lr}, {"iterations", iterations}};
    case ClassifierKind::kMlp:
      return {{"hidden", hidden}, {"lr", lr}, {"epochs", epochs}, {"batch_size", batch_size}};
    case ClassifierKind::kForest:
      return {{"trees", trees}, {"depth", depth}, {"features", features}, {"bootstrap", bootstrap}};
  }
  return {};
}

std::vector<GridPoint> default_grid(ClassifierKind kind) {
  std::vector<GridPoint> grid;
  switch (kind) {
    case ClassifierKind::kLogreg:
      for (double l2 : {0.0, 1e-3, 1e-1}) {
        GridPoint p;
        p.l2 = l2;
        p.lr = 0.05;
        grid.push_back(p);
      }
      break;
    case ClassifierKind::kMlp:
      for (std::size_t h : {32u, 64u})
        for (double lr : {1e-3, 1e-2}) {
          GridPoint p;
          p.hidden = h;
          p.lr = lr;
          grid.push_back(p);
        }
      break;
    case ClassifierKind::kForest:
      for (std::size_t t : {50u, 100u})
        for (std::size_t d : {6u, 12u}) {
          GridPoint p;
          p.trees = t;
          p.depth = d;
          grid.push_back(p);
        }
      break;
  }
  return grid;
}

namespace {

void require_two_classes(const Dataset& train) {
  if (train.count(Condition::kRisk) == 0 || train.count(Condition::kNonRisk) == 0)
    throw ContractError("classifier training set holds a single class");
}

// ---- logistic regression ------------------------------------------------

class Logreg final : public Classifier {
 public:
  Logreg(FeatureLayout layout, std::vector<double> w, double b)
      : layout_(std::move(layout)), w_(std::move(w)), b_(b) {}
  ClassifierKind kind() const noexcept override { return ClassifierKind::kLogreg; }

  double logit(const Dataset& d, std::size_t r) const {
    double s = b_;
    for (std::size_t j = 0; j < layout_.columns.size(); ++j) s += w_[layout_.offsets[j] + d.at(r, layout_.columns[j])];
    return s;
  }

  std::vector<std::uint8_t> predict(const Dataset& d) const override {
    std::vector<std::uint8_t> out(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) out[r] = logit(d, r) > 0.0;
    return out;
  }

 private:
  FeatureLayout layout_;
  std::vector<double> w_;
  double b_;
};

std::unique_ptr<Classifier> fit_logreg(const Dataset& train, const GridPoint& p) {
  const auto layout = FeatureLayout::of(train.schema());
  // Parameter 0 is the bias, the rest the one-hot weights.
  Parameter theta("logreg", Tensor({1, layout.width + 1}));
  std::vector<Parameter*> params{&theta};
  AdamState st = AdamState::for_params(params);
  AdamConfig cfg;
  cfg.lr = p.lr;
  const double n = static_cast<double>(train.rows());
  for (std::size_t it = 0; it < p.iterations; ++it) {
    const double* w = theta.value.data();
    double* g = theta.grad.data();
    theta.zero_grad();
    for (std::size_t r = 0; r < train.rows(); ++r) {
      double s = w[0];
      for (std::size_t j = 0; j < layout.columns.size(); ++j) s += w[1 + layout.offsets[j] + train.at(r, layout.columns[j])];
      const double y = train.condition(r) == Condition::kRisk ? 1.0 : 0.0;
      const double d = (1.0 / (1.0 + std::exp(-s)) - y) / n;
      g[0] += d;
      for (std::size_t j = 0; j < layout.columns.size(); ++j) g[1 + layout.offsets[j] + train.at(r, layout.columns[j])] += d;
    }
    for (std::size_t i = 1; i <= layout.width; ++i) g[i] += p.l2 * w[i];
    adam_step(params, st, cfg);
  }
  const auto& v = theta.value.values();
  return std::make_unique<Logreg>(layout, std::vector<double>(v.begin() + 1, v.end()), v[0]);
}

// ---- multilayer perceptron ------------------------------------------------

Tensor one_hot(const Dataset& d, const FeatureLayout& layout, std::span<const std::size_t> rows) {
  Tensor x({rows.size(), layout.width});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < layout.columns.size(); ++j)
      x[i * layout.width + layout.offsets[j] + d.at(rows[i], layout.columns[j])] = 1.0;
  return x;
}

class Mlp final : public Classifier {
 public:
  Mlp(FeatureLayout layout, Linear l1, Linear l2) : layout_(std::move(layout)), l1_(std::move(l1)), l2_(std::move(l2)) {}
  ClassifierKind kind() const noexcept override { return ClassifierKind::kMlp; }

  std::vector<std::uint8_t> predict(const Dataset& d) const override {
    std::vector<std::size_t> rows(d.rows());
    std::iota(rows.begin(), rows.end(), 0);
    Linear a = l1_, b = l2_;
    Graph g;
    const NodeId out = b.apply(g, g.relu(a.apply(g, g.input(one_hot(d, layout_, rows)))));
    const Tensor& v = g.value(out);
    std::vector<std::uint8_t> pred(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) pred[r] = v.row(r)[1] > v.row(r)[0];
    return pred;
  }

 private:
  FeatureLayout layout_;
  Linear l1_, l2_;
};

std::vector<std::uint8_t> labels_of(const Dataset& d) {
  std::vector<std::uint8_t> y(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) y[r] = static_cast<std::uint8_t>(d.condition(r));
  return y;
}

std::unique_ptr<Classifier> fit_mlp(const Dataset& train, const GridPoint& p, std::uint64_t seed,
                                    const Dataset* validation) {
  const auto layout = FeatureLayout::of(train.schema());
  Linear l1("mlp.0", layout.width, p.hidden), l2("mlp.1", p.hidden, 2);
  Rng init = make_rng(seed, "mlp-init");
  l1.init_uniform(init);
  l2.init_uniform(init);
  std::vector<Parameter*> params{&l1.weight, &l1.bias, &l2.weight, &l2.bias};
  AdamState st = AdamState::for_params(params);
  AdamConfig cfg;
  cfg.lr = p.lr;
  std::vector<std::uint8_t> val_labels;
  if (validation) val_labels = labels_of(*validation);
  double best_score = -1.0;
  std::pair<Linear, Linear> best;
  for (std::size_t e = 0; e < p.epochs; ++e) {
    for (const auto& batch : make_batches(train.rows(), p.batch_size, seed, e)) {
      Tensor y({batch.size(), 2});
      for (std::size_t i = 0; i < batch.size(); ++i) y[i * 2 + static_cast<std::size_t>(train.condition(batch[i]))] = 1.0;
      Graph g;
      const NodeId logits = l2.apply(g, g.relu(l1.apply(g, g.input(one_hot(train, layout, batch)))));
      const NodeId ce = g.affine(g.sum(g.mul(g.input(std::move(y)), g.log_softmax(logits))),
                                 -1.0 / static_cast<double>(batch.size()));
      g.backward(ce);
      adam_step(params, st, cfg);
    }
    if (validation) {
      const double score = f1_scores(Mlp(layout, l1, l2).predict(*validation), val_labels).weighted;
      if (score > best_score) {
        best_score = score;
        best = {l1, l2};
      }
    }
  }
  if (validation) return std::make_unique<Mlp>(layout, std::move(best.first), std::move(best.second));
  return std::make_unique<Mlp>(layout, std::move(l1), std::move(l2));
}

// ---- random forest ---------------------------------------------------------

struct TreeNode {
  std::int32_t feature = -1;  // -1 for a leaf
  std::uint32_t threshold = 0;  // go left when x <= threshold
  std::int32_t left = -1, right = -1;
  std::uint8_t label = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<std::uint32_t>>& x, const std::vector<std::uint8_t>& y,
              const std::vector<std::uint32_t>& cards, std::size_t max_depth, std::size_t mtry, Rng& rng)
      : x_(x), y_(y), cards_(cards), max_depth_(max_depth), mtry_(mtry), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    nodes_.clear();
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  static double gini(double a, double b) {
    const double n = a + b;
    return n > 0 ? 1.0 - (a * a + b * b) / (n * n) : 0.0;
  }

  std::int32_t grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::array<double, 2> count{};
    for (std::size_t r : rows) ++count[y_[r]];
    nodes_[id].label = count[1] > count[0];
    if (count[0] == 0 || count[1] == 0 || (max_depth_ && depth >= max_depth_)) return id;

    const std::size_t p = cards_.size();
    std::vector<std::size_t> feats(p);
    std::iota(feats.begin(), feats.end(), 0);
    std::shuffle(feats.begin(), feats.end(), rng_);
    double best = gini(count[0], count[1]) - 1e-12;
    std::int32_t best_f = -1;
    std::uint32_t best_t = 0;
    // Keep drawing features past mtry until some split helps, as in CART.
    for (std::size_t fi = 0; fi < p && (fi < mtry_ || best_f < 0); ++fi) {
      const std::size_t f = feats[fi];
      std::vector<std::array<double, 2>> hist(cards_[f]);
      for (std::size_t r : rows) ++hist[x_[r][f]][y_[r]];
      std::array<double, 2> left{};
      const double n = static_cast<double>(rows.size());
      for (std::uint32_t t = 0; t + 1 < cards_[f]; ++t) {
        left[0] += hist[t][0];
        left[1] += hist[t][1];
        const double nl = left[0] + left[1], nr = n - nl;
        if (nl == 0 || nr == 0) continue;
        const double imp = (nl * gini(left[0], left[1]) + nr * gini(count[0] - left[0], count[1] - left[1])) / n;
        if (imp < best) {
          best = imp;
          best_f = static_cast<std::int32_t>(f);
          best_t = t;
        }
      }
    }
    if (best_f < 0) return id;
    std::vector<std::size_t> l, r;
    for (std::size_t row : rows) (x_[row][best_f] <= best_t ? l : r).push_back(row);
    rows.clear();
    rows.shrink_to_fit();
    nodes_[id].feature = best_f;
    nodes_[id].threshold = best_t;
    const auto li = grow(l, depth + 1);
    nodes_[id].left = li;
    const auto ri = grow(r, depth + 1);
    nodes_[id].right = ri;
    return id;
  }

  const std::vector<std::vector<std::uint32_t>>& x_;
  const std::vector<std::uint8_t>& y_;
  const std::vector<std::uint32_t>& cards_;
  std::size_t max_depth_, mtry_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

std::vector<std::vector<std::uint32_t>> feature_rows(const Dataset& d, const FeatureLayout& layout) {
  std::vector<std::vector<std::uint32_t>> x(d.rows(), std::vector<std::uint32_t>(layout.columns.size()));
  for (std::size_t r = 0; r < d.rows(); ++r)
    for (std::size_t j = 0; j < layout.columns.size(); ++j) x[r][j] = d.at(r, layout.columns[j]);
  return x;
}

class Forest final : public Classifier {
 public:
  Forest(FeatureLayout layout, std::vector<std::vector<TreeNode>> trees)
      : layout_(std::move(layout)), trees_(std::move(trees)) {}
  ClassifierKind kind() const noexcept override { return ClassifierKind::kForest; }

  std::vector<std::uint8_t> predict(const Dataset& d) const override {
    const auto x = feature_rows(d, layout_);
    std::vector<std::uint8_t> out(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) {
      std::size_t votes = 0;
      for (const auto& t : trees_) {
        std::int32_t n = 0;
        while (t[n].feature >= 0) n = x[r][t[n].feature] <= t[n].threshold ? t[n].left : t[n].right;
        votes += t[n].label;
      }
      out[r] = 2 * votes > trees_.size();  // ties go to non-risk
    }
    return out;
  }

 private:
  FeatureLayout layout_;
  std::vector<std::vector<TreeNode>> trees_;
};

std::unique_ptr<Classifier> fit_forest(const Dataset& train, const GridPoint& p, std::uint64_t seed) {
  const auto layout = FeatureLayout::of(train.schema());
  const auto x = feature_rows(train, layout);
  std::vector<std::uint8_t> y(train.rows());
  for (std::size_t r = 0; r < train.rows(); ++r) y[r] = static_cast<std::uint8_t>(train.condition(r));
  std::vector<std::uint32_t> cards;
  for (std::size_t c : layout.columns) cards.push_back(train.schema().columns[c].cardinality());
  const std::size_t mtry =
      p.features ? p.features : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(cards.size()))));
  std::vector<std::vector<TreeNode>> trees;
  for (std::size_t t = 0; t < p.trees; ++t) {
    Rng rng = make_rng(seed, "tree", {t});
    std::vector<std::size_t> rows(train.rows());
    if (p.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, train.rows() - 1);
      for (auto& r : rows) r = pick(rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder b(x, y, cards, p.depth, mtry, rng);
    trees.push_back(b.build(std::move(rows)));
  }
  return std::make_unique<Forest>(layout, std::move(trees));
}

}  // namespace

std::unique_ptr<Classifier> fit_classifier(ClassifierKind kind, const Dataset& train, const GridPoint& point,
                                           std::uint64_t seed, const Dataset* validation) {
  require_two_classes(train);
  switch (kind) {
    case ClassifierKind::kLogreg: return fit_logreg(train, point);
    case ClassifierKind::kMlp: return fit_mlp(train, point, seed, validation);
    case ClassifierKind::kForest: return fit_forest(train, point, seed);
  }
  throw ContractError("unknown classifier kind");
}

FittedClassifier train_classifier(ClassifierKind kind, const Dataset& train, const Dataset& validation,
                                  const std::vector<GridPoint>& grid, std::uint64_t seed) {
  if (grid.empty()) throw ConfigError("empty classifier grid");
  require_two_classes(train);
  const auto y = labels_of(validation);
  FittedClassifier best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto model = fit_classifier(kind, train, grid[i], derive_seed(seed, to_string(kind), {i}), &validation);
    const double score = f1_scores(model->predict(validation), y).weighted;
    if (!best.model || score > best.validation_f1) {
      best.model = std::move(model);
      best.grid_index = i;
      best.point = grid[i];
      best.validation_f1 = score;
    }
  }
  return best;
}

}  // namespace tabgen
