#include "proxtrace/angle_model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace {

constexpr double kMinGain = 1e-12;
constexpr double kPriorFloor = 1e-12;

}  // namespace

void GBCConfig::validate() const {
  if (n_estimators < 1) throw ConfigError("gbc.n_estimators must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("gbc.learning_rate must lie in (0, 1]");
  if (max_depth < 0) throw ConfigError("gbc.max_depth must be >= 0");
  if (min_samples_leaf < 1) throw ConfigError("gbc.min_samples_leaf must be >= 1");
}

// ---------------------------------------------------------------------------
// RegressionTree
// ---------------------------------------------------------------------------

RegressionTree RegressionTree::fit(std::span<const double> features, std::size_t n_features,
                                   const std::vector<std::vector<std::uint32_t>>& sorted,
                                   std::span<const double> target, int max_depth, int min_samples_leaf,
                                   std::vector<double>* fitted) {
  const std::size_t n = target.size();
  const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);

  struct Build {
    double sum = 0.0;
    std::size_t count = 0;
    int feature = -1;
    double threshold = 0.0;
    int left = -1, right = -1;
  };
  std::vector<Build> build(1);
  for (double t : target) build[0].sum += t;
  build[0].count = n;
  std::vector<int> node_of(n, 0);
  std::vector<int> frontier{0};

  struct Scan {
    std::size_t left_count = 0;
    double left_sum = 0.0;
    double last = 0.0;
    double best_gain = kMinGain;
    int best_feature = -1;
    double best_threshold = 0.0;
  };

  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<int> slot_of(build.size(), -1);
    std::vector<int> slots;
    for (int id : frontier) {
      if (build[id].count >= 2 * min_leaf) {
        slot_of[id] = static_cast<int>(slots.size());
        slots.push_back(id);
      }
    }
    if (slots.empty()) break;

    std::vector<Scan> scan(slots.size());
    for (std::size_t f = 0; f < n_features; ++f) {
      for (auto& s : scan) {
        s.left_count = 0;
        s.left_sum = 0.0;
      }
      for (std::uint32_t idx : sorted[f]) {
        const int slot = slot_of[node_of[idx]];
        if (slot < 0) continue;
        auto& s = scan[slot];
        const Build& node = build[slots[slot]];
        const double v = features[idx * n_features + f];
        if (s.left_count >= min_leaf && v > s.last) {
          const std::size_t right_count = node.count - s.left_count;
          if (right_count >= min_leaf) {
            const double right_sum = node.sum - s.left_sum;
            const double gain = s.left_sum * s.left_sum / static_cast<double>(s.left_count) +
                                right_sum * right_sum / static_cast<double>(right_count) -
                                node.sum * node.sum / static_cast<double>(node.count);
            if (gain > s.best_gain) {
              double thr = s.last + (v - s.last) / 2.0;
              if (!(thr < v)) thr = s.last;
              s.best_gain = gain;
              s.best_feature = static_cast<int>(f);
              s.best_threshold = thr;
            }
          }
        }
        ++s.left_count;
        s.left_sum += target[idx];
        s.last = v;
      }
    }

    std::vector<int> next;
    for (std::size_t k = 0; k < slots.size(); ++k) {
      if (scan[k].best_feature < 0) continue;
      const int id = slots[k];
      build[id].feature = scan[k].best_feature;
      build[id].threshold = scan[k].best_threshold;
      build[id].left = static_cast<int>(build.size());
      build[id].right = static_cast<int>(build.size() + 1);
      build.emplace_back();
      build.emplace_back();
      next.push_back(build[id].left);
      next.push_back(build[id].right);
    }
    if (next.empty()) break;
    for (std::size_t i = 0; i < n; ++i) {
      const Build& node = build[node_of[i]];
      if (node.feature < 0) continue;
      const int child = features[i * n_features + node.feature] <= node.threshold ? node.left : node.right;
      node_of[i] = child;
      build[child].sum += target[i];
      ++build[child].count;
    }
    frontier = std::move(next);
  }

  RegressionTree tree;
  std::function<void(int)> emit = [&](int id) {
    const Build& b = build[id];
    const double mean = b.count ? b.sum / static_cast<double>(b.count) : 0.0;
    const auto pos = tree.nodes_.size();
    tree.nodes_.push_back({b.feature, b.feature >= 0 ? b.threshold : 0.0, mean, -1});
    if (b.feature >= 0) {
      emit(b.left);
      tree.nodes_[pos].right = static_cast<int>(tree.nodes_.size());
      emit(b.right);
    }
  };
  emit(0);

  if (fitted) {
    fitted->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Build& leaf = build[node_of[i]];
      (*fitted)[i] = leaf.sum / static_cast<double>(leaf.count);
    }
  }
  return tree;
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& node = nodes_[i];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? i + 1 : static_cast<std::size_t>(node.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::leaf_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

std::string RegressionTree::serialize() const {
  std::string out;
  for (const auto& node : nodes_) {
    if (!out.empty()) out += ' ';
    out += std::to_string(node.feature);
    out += ' ';
    out += text::sig17(node.threshold);
    out += ' ';
    out += text::sig17(node.value);
  }
  return out;
}

RegressionTree RegressionTree::parse(std::string_view words) {
  auto tokens = text::split_ws(words);
  if (tokens.empty() || tokens.size() % 3 != 0) throw DataError("tree node list is not a multiple of 3");
  RegressionTree tree;
  std::size_t cursor = 0;
  std::function<void()> read = [&] {
    if (cursor + 3 > tokens.size()) throw DataError("truncated tree node list");
    auto f = text::to_int(tokens[cursor]);
    auto t = text::to_double(tokens[cursor + 1]);
    auto v = text::to_double(tokens[cursor + 2]);
    if (!f || !t || !v || *f < -1) throw DataError("malformed tree node");
    cursor += 3;
    const auto pos = tree.nodes_.size();
    tree.nodes_.push_back({static_cast<int>(*f), *t, *v, -1});
    if (*f >= 0) {
      read();
      tree.nodes_[pos].right = static_cast<int>(tree.nodes_.size());
      read();
    }
  };
  read();
  if (cursor != tokens.size()) throw DataError("trailing nodes after tree");
  return tree;
}

// ---------------------------------------------------------------------------
// SoftmaxBooster
// ---------------------------------------------------------------------------

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> p(scores.begin(), scores.end());
  if (p.empty()) return p;
  const double m = *std::max_element(p.begin(), p.end());
  double z = 0.0;
  for (auto& v : p) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : p) v /= z;
  return p;
}

namespace {

double mean_log_loss(const std::vector<double>& scores, std::span<const int> labels, std::size_t k) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* row = &scores[i * k];
    const double m = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::size_t c = 0; c < k; ++c) z += std::exp(row[c] - m);
    total += m + std::log(z) - row[labels[i]];
  }
  return total / static_cast<double>(labels.size());
}

std::size_t argmax_low(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace

SoftmaxBooster SoftmaxBooster::train(std::span<const double> features, std::size_t n_features,
                                     std::span<const int> labels, std::size_t n_classes, const GBCConfig& config) {
  config.validate();
  const std::size_t n = labels.size();
  if (n == 0) throw DataError("cannot train a booster on zero examples");
  if (n_classes < 1) throw DataError("booster needs at least one class");
  if (features.size() != n * n_features) throw DataError("feature matrix does not match label count");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw DataError("label out of range: " + std::to_string(y));

  std::vector<std::vector<std::uint32_t>> sorted(n_features);
  for (std::size_t f = 0; f < n_features; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      return features[a * n_features + f] < features[b * n_features + f];
    });
  }

  SoftmaxBooster model;
  model.n_features_ = n_features;
  model.learning_rate_ = config.learning_rate;
  std::vector<double> counts(n_classes, 0.0);
  for (int y : labels) counts[y] += 1.0;
  for (double c : counts) model.initial_.push_back(std::log(std::max(c / static_cast<double>(n), kPriorFloor)));

  std::vector<double> scores(n * n_classes);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(model.initial_.begin(), model.initial_.end(), scores.begin() + i * n_classes);
  model.loss_.push_back(mean_log_loss(scores, labels, n_classes));

  std::vector<double> prob(n * n_classes), residual(n), fitted;
  for (int round = 0; round < config.n_estimators; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      auto p = softmax(std::span<const double>(&scores[i * n_classes], n_classes));
      std::copy(p.begin(), p.end(), prob.begin() + i * n_classes);
    }
    for (std::size_t k = 0; k < n_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (static_cast<std::size_t>(labels[i]) == k ? 1.0 : 0.0) - prob[i * n_classes + k];
      model.trees_.push_back(RegressionTree::fit(features, n_features, sorted, residual, config.max_depth,
                                                 config.min_samples_leaf, &fitted));
      for (std::size_t i = 0; i < n; ++i) scores[i * n_classes + k] += config.learning_rate * fitted[i];
    }
    model.loss_.push_back(mean_log_loss(scores, labels, n_classes));
  }
  return model;
}

std::vector<double> SoftmaxBooster::scores(std::span<const double> x) const {
  if (x.size() != n_features_)
    throw DataError("booster expects " + std::to_string(n_features_) + " features, got " + std::to_string(x.size()));
  std::vector<double> s = initial_;
  const std::size_t k = initial_.size();
  for (std::size_t t = 0; t < trees_.size(); ++t) s[t % k] += learning_rate_ * trees_[t].predict(x);
  return s;
}

std::vector<double> SoftmaxBooster::probabilities(std::span<const double> x) const { return softmax(scores(x)); }

std::size_t SoftmaxBooster::predict(std::span<const double> x) const { return argmax_low(scores(x)); }

void SoftmaxBooster::save(KvDocument& doc, std::string_view prefix) const {
  const std::string p(prefix);
  const std::size_t k = initial_.size();
  doc.set(p + "n_features", std::to_string(n_features_));
  doc.set(p + "n_classes", std::to_string(k));
  doc.set(p + "rounds", std::to_string(k ? trees_.size() / k : 0));
  doc.set_doubles(p + "learning_rate", {learning_rate_});
  doc.set_doubles(p + "initial", initial_);
  doc.set_doubles(p + "training_loss", loss_);
  for (std::size_t t = 0; t < trees_.size(); ++t)
    doc.set(p + "tree." + std::to_string(t / k) + "." + std::to_string(t % k), trees_[t].serialize());
}

SoftmaxBooster SoftmaxBooster::load(const KvDocument& doc, std::string_view prefix) {
  const std::string p(prefix);
  SoftmaxBooster m;
  const auto nf = doc.get_int(p + "n_features");
  const auto k = doc.get_int(p + "n_classes");
  const auto rounds = doc.get_int(p + "rounds");
  if (nf < 1 || k < 1 || rounds < 0) throw DataError("booster header out of range");
  m.n_features_ = static_cast<std::size_t>(nf);
  m.learning_rate_ = doc.get_double(p + "learning_rate");
  m.initial_ = doc.get_doubles(p + "initial");
  m.loss_ = doc.get_doubles(p + "training_loss");
  if (m.initial_.size() != static_cast<std::size_t>(k)) throw DataError("booster initial scores have wrong length");
  for (long long r = 0; r < rounds; ++r) {
    for (long long c = 0; c < k; ++c) {
      auto tree = RegressionTree::parse(doc.get(p + "tree." + std::to_string(r) + "." + std::to_string(c)));
      for (const auto& node : tree.nodes())
        if (node.feature >= nf) throw DataError("tree references feature beyond model width");
      m.trees_.push_back(std::move(tree));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// AngleModel
// ---------------------------------------------------------------------------

std::size_t angle_class_index(int degrees) {
  auto it = std::find(kAngleClasses.begin(), kAngleClasses.end(), degrees);
  if (it == kAngleClasses.end()) throw DataError("angle label outside the 8-class set: " + std::to_string(degrees));
  return static_cast<std::size_t>(it - kAngleClasses.begin());
}

std::array<double, kAngleFeatureCount> AngleModel::raw_features(const FeatureRow& row) {
  return {row.attitude[0],       row.attitude[1],       row.attitude[2],
          row.magnetic_field[0], row.magnetic_field[1], row.magnetic_field[2]};
}

std::array<double, kAngleFeatureCount> AngleModel::normalized(const FeatureRow& row) const {
  auto x = raw_features(row);
  for (std::size_t f = 0; f < kAngleFeatureCount; ++f) x[f] = (x[f] - mean_[f]) / std_[f];
  return x;
}

AngleModel AngleModel::train(std::span<const FeatureRow> rows, std::span<const int> angles, const GBCConfig& config) {
  if (rows.empty()) throw DataError("cannot train the angle model on zero rows");
  if (rows.size() != angles.size()) throw DataError("angle labels do not match row count");

  std::vector<int> labels;
  labels.reserve(angles.size());
  for (int a : angles) labels.push_back(static_cast<int>(angle_class_index(a)));

  AngleModel model;
  const double n = static_cast<double>(rows.size());
  for (std::size_t f = 0; f < kAngleFeatureCount; ++f) {
    double sum = 0.0;
    for (const auto& r : rows) sum += raw_features(r)[f];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : rows) {
      const double d = raw_features(r)[f] - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / n);
    model.mean_[f] = mean;
    model.std_[f] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<double> x;
  x.reserve(rows.size() * kAngleFeatureCount);
  for (const auto& r : rows) {
    auto v = model.normalized(r);
    x.insert(x.end(), v.begin(), v.end());
  }
  model.booster_ = SoftmaxBooster::train(x, kAngleFeatureCount, labels, kAngleClasses.size(), config);
  return model;
}

AnglePrediction AngleModel::predict(const FeatureRow& row) const {
  if (booster_.n_features() != kAngleFeatureCount || booster_.n_classes() != kAngleClasses.size())
    throw DataError("angle model shape does not match the attitude/magnetic-field schema");
  auto x = normalized(row);
  auto p = booster_.probabilities(x);
  AnglePrediction out;
  std::copy(p.begin(), p.end(), out.probabilities.begin());
  out.angle = kAngleClasses[argmax_low(p)];
  return out;
}

void AngleModel::save(KvDocument& doc) const {
  doc.set_doubles("angle.norm.mean", {mean_.begin(), mean_.end()});
  doc.set_doubles("angle.norm.std", {std_.begin(), std_.end()});
  booster_.save(doc, "angle.");
}

AngleModel AngleModel::load(const KvDocument& doc) {
  AngleModel m;
  auto mean = doc.get_doubles("angle.norm.mean");
  auto sd = doc.get_doubles("angle.norm.std");
  if (mean.size() != kAngleFeatureCount || sd.size() != kAngleFeatureCount)
    throw DataError("angle model normalization has the wrong width");
  std::copy(mean.begin(), mean.end(), m.mean_.begin());
  std::copy(sd.begin(), sd.end(), m.std_.begin());
  m.booster_ = SoftmaxBooster::load(doc, "angle.");
  if (m.booster_.n_features() != kAngleFeatureCount || m.booster_.n_classes() != kAngleClasses.size())
    throw DataError("angle model shape does not match the attitude/magnetic-field schema");
  return m;
}

}  // namespace proxtrace
