#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "proxtrace/core.hpp"
#include "proxtrace/ingest.hpp"
#include "proxtrace/sidecar.hpp"

namespace proxtrace {

struct NetConfig {
  std::vector<int> hidden_layers{256, 128, 64};
  double learning_rate = 0.02;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double gamma = 0.9;  // step decay factor
  int step_size = 10;  // epochs per decay step
  int epochs = 1000;
  int batch_size = 256;
  std::uint64_t seed = 0;

  void validate() const;
  /// lr * gamma^floor(epoch / step_size), epochs counted from 0.
  double learning_rate_at(int epoch) const;
};

/// Fully connected ReLU network with a linear output layer. Parameters live in
/// one flat buffer: per layer, a row-major (out x in) weight block then the bias.
class DenseNetwork {
 public:
  struct LayerShape {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  DenseNetwork() = default;
  /// All parameters zero.
  DenseNetwork(std::size_t input_dim, const std::vector<int>& hidden, std::size_t output_dim);

  /// He fan-in normal weights, zero biases.
  void init_he(std::mt19937_64& rng);

  std::size_t input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<LayerShape>& layers() const noexcept { return layers_; }
  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  /// Row-major n x output_dim logits for row-major n x input_dim inputs.
  std::vector<double> logits(std::span<const double> x) const;

  /// Mean softmax cross-entropy over the batch; fills `gradient` (same layout as
  /// parameters) when non-null.
  double loss(std::span<const double> x, std::span<const int> labels, std::vector<double>* gradient = nullptr) const;

 private:
  std::vector<LayerShape> layers_;
  std::vector<double> params_;
};

struct RowPrediction {
  DistanceClass distance = DistanceClass::d1_2;
  std::array<double, kNumDistanceClasses> probabilities{};
};

/// Stage 2: per-row distance classifier over encoded feature rows.
class DistanceModel {
 public:
  DistanceModel() = default;
  DistanceModel(DenseNetwork network, EncodingSchema schema);

  /// Mini-batch Adam on mean cross-entropy with step decay and per-epoch
  /// shuffling from config.seed. `x` is row-major n x dim.
  /// Throws DivergenceError when an epoch loss is not finite.
  static DistanceModel train(std::span<const double> x, std::size_t dim, std::span<const DistanceClass> labels,
                             const NetConfig& config, EncodingSchema schema = {});

  /// Per-row softmax and argmax (ties to the smaller distance).
  std::vector<RowPrediction> predict_rows(std::span<const double> x) const;

  const DenseNetwork& network() const noexcept { return network_; }
  DenseNetwork& network() noexcept { return network_; }
  const EncodingSchema& schema() const noexcept { return schema_; }
  double initial_loss() const noexcept { return initial_loss_; }
  const std::vector<double>& epoch_loss() const noexcept { return epoch_loss_; }

  void save(KvDocument& doc) const;
  static DistanceModel load(const KvDocument& doc);

 private:
  DenseNetwork network_;
  EncodingSchema schema_;
  double initial_loss_ = 0.0;
  std::vector<double> epoch_loss_;
};

/// Most frequent class; ties to the smaller distance. Throws DataError when empty.
DistanceClass aggregate_event(std::span<const DistanceClass> predictions);

enum class LookMode { first, last, full };

std::string_view to_string(LookMode m) noexcept;
LookMode parse_look_mode(std::string_view text);

/// Rows of the earliest look, the latest look, or all rows.
std::vector<FeatureRow> select_look(std::span<const FeatureRow> rows, LookMode mode);

}  // namespace proxtrace
