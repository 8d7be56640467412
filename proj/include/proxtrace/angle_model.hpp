#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "proxtrace/ingest.hpp"
#include "proxtrace/sidecar.hpp"

namespace proxtrace {

struct GBCConfig {
  int n_estimators = 100;
  double learning_rate = 0.2;
  int max_depth = 3;
  int min_samples_leaf = 5;
  std::uint64_t seed = 0;  // the fit is deterministic; kept for provenance

  void validate() const;
};

/// Depth-limited least-squares regression tree stored as a preorder node list.
/// The left child of an internal node is the next node; `right` indexes the other.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0;  // leaf output; mean target for internal nodes
    int right = -1;
  };

  /// Exact greedy variance-reduction splits; rows go left when x <= threshold.
  /// `sorted` holds, per feature, sample indices ordered by that feature.
  static RegressionTree fit(std::span<const double> features, std::size_t n_features,
                            const std::vector<std::vector<std::uint32_t>>& sorted, std::span<const double> target,
                            int max_depth, int min_samples_leaf, std::vector<double>* fitted = nullptr);

  double predict(std::span<const double> x) const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const noexcept;

  /// "feature threshold value" triples in preorder.
  std::string serialize() const;
  static RegressionTree parse(std::string_view words);

 private:
  std::vector<Node> nodes_;
};

/// Multiclass stagewise boosting on the softmax log-loss: each round fits one
/// tree per class to (one-hot - probability) and adds it with shrinkage.
class SoftmaxBooster {
 public:
  /// `features` is row-major n x n_features; labels are class indices < n_classes.
  static SoftmaxBooster train(std::span<const double> features, std::size_t n_features,
                              std::span<const int> labels, std::size_t n_classes, const GBCConfig& config);

  std::vector<double> scores(std::span<const double> x) const;
  std::vector<double> probabilities(std::span<const double> x) const;
  /// Argmax; ties go to the lower class index.
  std::size_t predict(std::span<const double> x) const;

  std::size_t n_classes() const noexcept { return initial_.size(); }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t tree_count() const noexcept { return trees_.size(); }
  const std::vector<double>& initial_scores() const noexcept { return initial_; }
  /// Mean log-loss on the training set: entry 0 before any round, then one per round.
  const std::vector<double>& training_loss() const noexcept { return loss_; }

  void save(KvDocument& doc, std::string_view prefix) const;
  static SoftmaxBooster load(const KvDocument& doc, std::string_view prefix);

 private:
  std::size_t n_features_ = 0;
  double learning_rate_ = 0.0;
  std::vector<double> initial_;
  std::vector<RegressionTree> trees_;  // round-major: trees_[round * n_classes + class]
  std::vector<double> loss_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

inline constexpr std::array<int, 8> kAngleClasses = {0, 45, 90, 135, 180, 225, 270, 315};
inline constexpr std::size_t kAngleFeatureCount = 6;  // attitude x3, magnetic field x3

/// Throws DataError for angles outside {0, 45, ..., 315}.
std::size_t angle_class_index(int degrees);

struct AnglePrediction {
  int angle = 0;
  std::array<double, kAngleClasses.size()> probabilities{};
};

/// Stage 1: facing angle from z-scored attitude and magnetic field.
class AngleModel {
 public:
  static AngleModel train(std::span<const FeatureRow> rows, std::span<const int> angles, const GBCConfig& config);

  AnglePrediction predict(const FeatureRow& row) const;
  /// Raw (un-normalized) attitude + magnetic-field vector for a row.
  static std::array<double, kAngleFeatureCount> raw_features(const FeatureRow& row);

  const SoftmaxBooster& booster() const noexcept { return booster_; }
  const std::array<double, kAngleFeatureCount>& feature_mean() const noexcept { return mean_; }
  const std::array<double, kAngleFeatureCount>& feature_std() const noexcept { return std_; }

  void save(KvDocument& doc) const;
  static AngleModel load(const KvDocument& doc);

 private:
  std::array<double, kAngleFeatureCount> normalized(const FeatureRow& row) const;

  SoftmaxBooster booster_;
  std::array<double, kAngleFeatureCount> mean_{};
  std::array<double, kAngleFeatureCount> std_{};
};

}  // namespace proxtrace
