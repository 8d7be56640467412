#include "proxtrace/distance_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "proxtrace/error.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

constexpr std::size_t kPredictChunk = 4096;

}  // namespace

void NetConfig::validate() const {
  for (int w : hidden_layers)
    if (w < 1) throw ConfigError("net.hidden_layers widths must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("net.learning_rate must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("net.epsilon must be > 0");
  if (!(gamma > 0.0)) throw ConfigError("net.gamma must be > 0");
  if (step_size < 1) throw ConfigError("net.step_size must be >= 1");
  if (epochs < 1) throw ConfigError("net.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("net.batch_size must be >= 1");
}

double NetConfig::learning_rate_at(int epoch) const {
  return learning_rate * std::pow(gamma, static_cast<double>(epoch / step_size));
}

// ---------------------------------------------------------------------------
// DenseNetwork
// ---------------------------------------------------------------------------

DenseNetwork::DenseNetwork(std::size_t input_dim, const std::vector<int>& hidden, std::size_t output_dim) {
  if (input_dim == 0 || output_dim == 0) throw DataError("network dimensions must be positive");
  std::size_t in = input_dim, offset = 0;
  auto add = [&](std::size_t out) {
    LayerShape s{in, out, offset, offset + in * out};
    offset = s.bias_offset + out;
    layers_.push_back(s);
    in = out;
  };
  for (int w : hidden) {
    if (w < 1) throw DataError("hidden layer width must be >= 1");
    add(static_cast<std::size_t>(w));
  }
  add(output_dim);
  params_.assign(offset, 0.0);
}

void DenseNetwork::init_he(std::mt19937_64& rng) {
  for (const auto& l : layers_) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(l.in)));
    for (std::size_t i = 0; i < l.in * l.out; ++i) params_[l.weight_offset + i] = dist(rng);
    std::fill_n(params_.begin() + static_cast<std::ptrdiff_t>(l.bias_offset), l.out, 0.0);
  }
}

std::vector<double> DenseNetwork::logits(std::span<const double> x) const {
  const std::size_t dim = input_dim();
  if (dim == 0 || x.size() % dim != 0)
    throw DataError("input width does not match the network (" + std::to_string(dim) + ")");
  const auto n = static_cast<Eigen::Index>(x.size() / dim);
  Eigen::MatrixXd a = ConstRowMap(x.data(), n, static_cast<Eigen::Index>(dim));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    ConstRowMap w(params_.data() + l.weight_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + l.bias_offset, static_cast<Eigen::Index>(l.out));
    Eigen::MatrixXd z = a * w.transpose();
    z.rowwise() += b;
    if (li + 1 < layers_.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  std::vector<double> out(static_cast<std::size_t>(a.size()));
  RowMap(out.data(), a.rows(), a.cols()) = a;
  return out;
}

double DenseNetwork::loss(std::span<const double> x, std::span<const int> labels, std::vector<double>* gradient) const {
  const std::size_t dim = input_dim();
  const std::size_t k = output_dim();
  if (x.size() != labels.size() * dim) throw DataError("batch width does not match the network");
  const auto n = static_cast<Eigen::Index>(labels.size());
  if (n == 0) throw DataError("empty batch");

  // Forward, keeping pre-activations for the backward pass.
  std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[i] = output of layer i-1 (post-ReLU)
  std::vector<Eigen::MatrixXd> pre;
  acts.emplace_back(ConstRowMap(x.data(), n, static_cast<Eigen::Index>(dim)));
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    ConstRowMap w(params_.data() + l.weight_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    Eigen::Map<const Eigen::RowVectorXd> b(params_.data() + l.bias_offset, static_cast<Eigen::Index>(l.out));
    Eigen::MatrixXd z = acts.back() * w.transpose();
    z.rowwise() += b;
    pre.push_back(z);
    if (li + 1 < layers_.size()) acts.push_back(z.cwiseMax(0.0));
  }

  Eigen::MatrixXd& z = pre.back();
  Eigen::MatrixXd delta(n, static_cast<Eigen::Index>(k));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw DataError("label out of range");
    const double m = z.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
    const double s = e.sum();
    total += m + std::log(s) - z(i, y);
    delta.row(i) = e / s;
    delta(i, y) -= 1.0;
  }
  const double mean_loss = total / static_cast<double>(n);
  if (!gradient) return mean_loss;

  gradient->assign(params_.size(), 0.0);
  delta /= static_cast<double>(n);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    RowMap gw(gradient->data() + l.weight_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    Eigen::Map<Eigen::RowVectorXd> gb(gradient->data() + l.bias_offset, static_cast<Eigen::Index>(l.out));
    gw.noalias() = delta.transpose() * acts[li];
    gb = delta.colwise().sum();
    if (li == 0) break;
    ConstRowMap w(params_.data() + l.weight_offset, static_cast<Eigen::Index>(l.out), static_cast<Eigen::Index>(l.in));
    Eigen::MatrixXd back = delta * w;
    delta = back.cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
  }
  return mean_loss;
}

// ---------------------------------------------------------------------------
// DistanceModel
// ---------------------------------------------------------------------------

DistanceModel::DistanceModel(DenseNetwork network, EncodingSchema schema)
    : network_(std::move(network)), schema_(std::move(schema)) {
  if (network_.output_dim() != kNumDistanceClasses) throw DataError("distance network must have 4 outputs");
}

DistanceModel DistanceModel::train(std::span<const double> x, std::size_t dim, std::span<const DistanceClass> labels,
                                   const NetConfig& config, EncodingSchema schema) {
  config.validate();
  if (labels.empty()) throw DataError("cannot train the distance model on zero rows");
  if (dim == 0 || x.size() != labels.size() * dim)
    throw DataError("feature matrix is not " + std::to_string(labels.size()) + " x " + std::to_string(dim));
  if (!schema.numeric.empty() || !schema.carry_vocab.empty()) {
    if (schema.dimension() != dim)
      throw DataError("schema dimension " + std::to_string(schema.dimension()) + " does not match data width " +
                      std::to_string(dim));
  }

  std::mt19937_64 rng(config.seed);
  DenseNetwork net(dim, config.hidden_layers, kNumDistanceClasses);
  net.init_he(rng);

  const std::size_t n = labels.size();
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(class_index(labels[i]));

  DistanceModel model(std::move(net), std::move(schema));
  model.initial_loss_ = model.network_.loss(x, y);

  auto params = model.network_.parameters();
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<double> xb;
  std::vector<int> yb;
  double beta1_t = 1.0, beta2_t = 1.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = config.learning_rate_at(epoch);
    double total = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      xb.resize((end - start) * dim);
      yb.resize(end - start);
      for (std::size_t i = start; i < end; ++i) {
        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(order[i] * dim), dim,
                    xb.begin() + static_cast<std::ptrdiff_t>((i - start) * dim));
        yb[i - start] = y[order[i]];
      }
      const double l = model.network_.loss(xb, yb, &grad);
      total += l * static_cast<double>(end - start);

      beta1_t *= config.beta1;
      beta2_t *= config.beta2;
      const double c1 = 1.0 - beta1_t, c2 = 1.0 - beta2_t;
      for (std::size_t p = 0; p < params.size(); ++p) {
        m[p] = config.beta1 * m[p] + (1.0 - config.beta1) * grad[p];
        v[p] = config.beta2 * v[p] + (1.0 - config.beta2) * grad[p] * grad[p];
        params[p] -= lr * (m[p] / c1) / (std::sqrt(v[p] / c2) + config.epsilon);
      }
    }
    const double epoch_loss = total / static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("distance model diverged: non-finite loss at epoch " + std::to_string(epoch) +
                            " (lr " + text::shortest(lr) + ")");
    model.epoch_loss_.push_back(epoch_loss);
  }
  return model;
}

std::vector<RowPrediction> DistanceModel::predict_rows(std::span<const double> x) const {
  const std::size_t dim = network_.input_dim();
  if (dim == 0 || x.size() % dim != 0)
    throw DataError("row width does not match the distance model (" + std::to_string(dim) + ")");
  const std::size_t n = x.size() / dim;
  std::vector<RowPrediction> out;
  out.reserve(n);
  for (std::size_t start = 0; start < n; start += kPredictChunk) {
    const std::size_t end = std::min(n, start + kPredictChunk);
    auto z = network_.logits(x.subspan(start * dim, (end - start) * dim));
    for (std::size_t i = 0; i < end - start; ++i) {
      const double* row = &z[i * kNumDistanceClasses];
      const double mx = *std::max_element(row, row + kNumDistanceClasses);
      RowPrediction p;
      double s = 0.0;
      for (std::size_t c = 0; c < kNumDistanceClasses; ++c) s += p.probabilities[c] = std::exp(row[c] - mx);
      std::size_t best = 0;
      for (std::size_t c = 0; c < kNumDistanceClasses; ++c) {
        p.probabilities[c] /= s;
        if (row[c] > row[best]) best = c;
      }
      p.distance = class_from_index(best);
      out.push_back(p);
    }
  }
  return out;
}

void DistanceModel::save(KvDocument& doc) const {
  const auto& layers = network_.layers();
  doc.set("net.input_dim", std::to_string(network_.input_dim()));
  doc.set("net.layers", std::to_string(layers.size()));
  auto params = network_.parameters();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string p = "net.layer." + std::to_string(i) + ".";
    doc.set(p + "shape", std::to_string(l.out) + " " + std::to_string(l.in));
    doc.set_doubles(p + "weight", {params.begin() + static_cast<std::ptrdiff_t>(l.weight_offset),
                                   params.begin() + static_cast<std::ptrdiff_t>(l.bias_offset)});
    doc.set_doubles(p + "bias", {params.begin() + static_cast<std::ptrdiff_t>(l.bias_offset),
                                 params.begin() + static_cast<std::ptrdiff_t>(l.bias_offset + l.out)});
  }
  doc.set_doubles("net.initial_loss", {initial_loss_});
  doc.set_doubles("net.epoch_loss", epoch_loss_);
  schema_.save(doc, "schema.");
}

DistanceModel DistanceModel::load(const KvDocument& doc) {
  const auto input_dim = doc.get_int("net.input_dim");
  const auto n_layers = doc.get_int("net.layers");
  if (input_dim < 1 || n_layers < 1) throw DataError("distance model header out of range");
  std::vector<int> hidden;
  std::vector<std::vector<double>> weights, biases;
  std::size_t prev = static_cast<std::size_t>(input_dim), out_dim = 0;
  for (long long i = 0; i < n_layers; ++i) {
    const std::string p = "net.layer." + std::to_string(i) + ".";
    auto shape = doc.get_words(p + "shape");
    auto out = shape.size() == 2 ? text::to_int(shape[0]) : std::nullopt;
    auto in = shape.size() == 2 ? text::to_int(shape[1]) : std::nullopt;
    if (!out || !in || *out < 1 || static_cast<std::size_t>(*in) != prev)
      throw DataError("distance model layer " + std::to_string(i) + " has an inconsistent shape");
    weights.push_back(doc.get_doubles(p + "weight"));
    biases.push_back(doc.get_doubles(p + "bias"));
    if (weights.back().size() != static_cast<std::size_t>(*out * *in) ||
        biases.back().size() != static_cast<std::size_t>(*out))
      throw DataError("distance model layer " + std::to_string(i) + " has the wrong parameter count");
    if (i + 1 < n_layers) hidden.push_back(static_cast<int>(*out));
    prev = static_cast<std::size_t>(*out);
    out_dim = prev;
  }
  DenseNetwork net(static_cast<std::size_t>(input_dim), hidden, out_dim);
  auto params = net.parameters();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const auto& l = net.layers()[i];
    std::copy(weights[i].begin(), weights[i].end(), params.begin() + static_cast<std::ptrdiff_t>(l.weight_offset));
    std::copy(biases[i].begin(), biases[i].end(), params.begin() + static_cast<std::ptrdiff_t>(l.bias_offset));
  }
  for (double p : params)
    if (!std::isfinite(p)) throw DataError("distance model holds non-finite parameters");
  DistanceModel model(std::move(net), EncodingSchema::load(doc, "schema."));
  if (model.schema_.dimension() != model.network_.input_dim())
    throw DataError("distance model schema width does not match its input layer");
  model.initial_loss_ = doc.get_double("net.initial_loss");
  model.epoch_loss_ = doc.get_doubles("net.epoch_loss");
  return model;
}

// ---------------------------------------------------------------------------
// Aggregation and look selection
// ---------------------------------------------------------------------------

DistanceClass aggregate_event(std::span<const DistanceClass> predictions) {
  if (predictions.empty()) throw DataError("cannot aggregate an event with no row predictions");
  std::array<std::size_t, kNumDistanceClasses> counts{};
  for (auto c : predictions) ++counts[class_index(c)];
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumDistanceClasses; ++c)
    if (counts[c] > counts[best]) best = c;
  return class_from_index(best);
}

std::string_view to_string(LookMode m) noexcept {
  switch (m) {
    case LookMode::first: return "first";
    case LookMode::last: return "last";
    case LookMode::full: return "full";
  }
  return "?";
}

LookMode parse_look_mode(std::string_view s) {
  if (s == "first") return LookMode::first;
  if (s == "last") return LookMode::last;
  if (s == "full") return LookMode::full;
  throw ConfigError("look mode must be first, last or full (got '" + std::string(s) + "')");
}

std::vector<FeatureRow> select_look(std::span<const FeatureRow> rows, LookMode mode) {
  if (rows.empty() || mode == LookMode::full) return {rows.begin(), rows.end()};
  auto cmp = [](const FeatureRow& a, const FeatureRow& b) { return a.look_index < b.look_index; };
  const int target = mode == LookMode::first ? std::min_element(rows.begin(), rows.end(), cmp)->look_index
                                             : std::max_element(rows.begin(), rows.end(), cmp)->look_index;
  std::vector<FeatureRow> out;
  for (const auto& r : rows)
    if (r.look_index == target) out.push_back(r);
  return out;
}

}  // namespace proxtrace
