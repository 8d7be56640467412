#include "proxtrace/pipeline.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <unordered_map>

#include "proxtrace/error.hpp"
#include "proxtrace/parallel.hpp"
#include "proxtrace/text.hpp"

namespace proxtrace {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kAngleFormat = "proxtrace-angle-model";
constexpr std::string_view kDistanceFormat = "proxtrace-distance-model";

double parse_real(std::string_view key, std::string_view v) {
  auto d = text::to_double(text::trim(v));
  if (!d) throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  return *d;
}

long long parse_integer(std::string_view key, std::string_view v) {
  auto i = text::to_int(text::trim(v));
  if (!i) throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(v) + "'");
  return *i;
}

std::vector<double> parse_reals(std::string_view key, std::string_view v) {
  std::vector<double> out;
  for (auto w : text::split_ws(v)) out.push_back(parse_real(key, w));
  return out;
}

template <std::size_t N>
std::array<double, N> parse_weights(std::string_view key, std::string_view v) {
  auto list = parse_reals(key, v);
  if (list.size() != N) throw ConfigError(std::string(key) + ": expected " + std::to_string(N) + " weights");
  std::array<double, N> out{};
  std::copy(list.begin(), list.end(), out.begin());
  return out;
}

PathLossParams parse_params(std::string_view key, std::string_view v) {
  auto list = parse_reals(key, v);
  if (list.size() != 2) throw ConfigError(std::string(key) + ": expected 'tx_power exponent'");
  return {list[0], list[1]};
}

std::string join_reals(std::span<const double> v) {
  std::string out;
  for (double d : v) {
    if (!out.empty()) out += ' ';
    out += text::shortest(d);
  }
  return out;
}

template <typename T>
std::string join_ints(const std::vector<T>& v) {
  std::string out;
  for (auto i : v) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
  }
  return out;
}

std::string render_params(const PathLossParams& p) {
  return text::shortest(p.tx_power) + " " + text::shortest(p.exponent);
}

std::string render_thresholds(const std::vector<Threshold>& ts) {
  std::string out;
  for (const auto& t : ts) {
    if (!out.empty()) out += ' ';
    out += std::string(to_string(t.subset)) + ":" + text::shortest(t.distance);
  }
  return out;
}

std::vector<Threshold> parse_thresholds(std::string_view key, std::string_view v) {
  std::vector<Threshold> out;
  for (auto w : text::split_ws(v)) {
    auto colon = w.find(':');
    if (colon == std::string_view::npos) throw ConfigError(std::string(key) + ": expected grain:D, got '" + std::string(w) + "'");
    Grain g;
    try {
      g = parse_grain(w.substr(0, colon));
    } catch (const DataError& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
    out.push_back({g, parse_real(key, w.substr(colon + 1))});
  }
  return out;
}

void check_fingerprint(const KvDocument& doc, const RunConfig& cfg, const fs::path& path) {
  const auto stored = doc.get("fingerprint");
  const auto current = cfg.fingerprint();
  if (stored != current)
    throw ConfigError("model " + path.string() + " was trained with config fingerprint " + std::string(stored) +
                      " but the current config fingerprint is " + current +
                      "; retrain or restore the matching configuration");
}

KvDocument load_sidecar(const fs::path& path, std::string_view format) {
  auto doc = KvDocument::parse(text::read_file(path));
  if (doc.get("format") != format)
    throw DataError(path.string() + " is not a " + std::string(format) + " file");
  return doc;
}

struct LoadedEvent {
  EventFile event;
  std::vector<FeatureRow> rows;
};

std::vector<LoadedEvent> load_events(const RunConfig& cfg, std::string_view split) {
  auto files = list_event_files(cfg, split);
  if (files.empty()) throw DataError("no event files under " + (split_dir(cfg, split) / "events").string());
  std::vector<LoadedEvent> out(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    try {
      out[i].event = parse_event_file(text::read_file(files[i]));
      out[i].rows = assemble_rows(out[i].event, cfg.params);
    } catch (const DataError& e) {
      throw DataError(files[i].string() + ": " + e.what());
    }
  });
  return out;
}

void attach_angles(std::vector<FeatureRow>& rows, const AngleModel& model) {
  for (auto& r : rows) r.angle = model.predict(r).angle;
}

DistanceClass predict_event(std::vector<FeatureRow> rows, const AngleModel* angle_model, const DistanceModel& model,
                            LookMode look) {
  rows = select_look(rows, look);
  if (rows.empty()) throw DataError("no complete feature rows in the selected look(s)");
  if (angle_model) attach_angles(rows, *angle_model);
  auto x = encode_rows(rows, model.schema());
  auto preds = model.predict_rows(x);
  std::vector<DistanceClass> classes;
  classes.reserve(preds.size());
  for (const auto& p : preds) classes.push_back(p.distance);
  return aggregate_event(classes);
}

RunConfig variant_config(const RunConfig& base, const std::string& model_name, const FeatureMask& mask,
                         LookMode look) {
  RunConfig cfg = base;
  cfg.model_dir = base.model_dir / "ablation" / model_name;
  cfg.feature_mask = mask;
  cfg.look_mode = look;
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

void RunConfig::set(std::string_view raw_key, std::string_view raw_value) {
  const auto key = text::trim(raw_key);
  const auto value = text::trim(raw_value);
  const std::string k(key);
  auto& g = generator;

  if (k == "run.seed") seed = static_cast<std::uint64_t>(parse_integer(k, value));
  else if (k == "run.jobs") jobs = static_cast<int>(parse_integer(k, value));
  else if (k == "paths.corpus") corpus_dir = std::string(value);
  else if (k == "paths.models") model_dir = std::string(value);
  else if (k == "paths.reports") report_dir = std::string(value);
  else if (k == "gen.events_per_class") g.events_per_class = static_cast<int>(parse_integer(k, value));
  else if (k == "gen.grain_mix") g.grain_mix = parse_real(k, value);
  else if (k == "gen.shadowing_sigma") g.shadowing_sigma = parse_real(k, value);
  else if (k == "gen.sample_rate") g.sample_rate = parse_real(k, value);
  else if (k == "gen.look_step") g.look_step = parse_real(k, value);
  else if (k == "gen.missing_probability") g.missing_probability = parse_real(k, value);
  else if (k == "gen.carry_weights") g.carry_weights = parse_weights<kNumCarryLocations>(k, value);
  else if (k == "gen.pose_weights") g.pose_weights = parse_weights<kNumPoses>(k, value);
  else if (k == "gen.tx_power_choices") {
    g.tx_power_choices.clear();
    for (auto w : text::split_ws(value)) g.tx_power_choices.push_back(static_cast<int>(parse_integer(k, w)));
  } else if (k == "features.coarse_params") params.coarse = parse_params(k, value);
  else if (k == "features.fine_params") params.fine = parse_params(k, value);
  else if (k == "features.mask") feature_mask = FeatureMask::parse(value);
  else if (k == "features.look") look_mode = parse_look_mode(value);
  else if (k == "gbc.n_estimators") gbc.n_estimators = static_cast<int>(parse_integer(k, value));
  else if (k == "gbc.learning_rate") gbc.learning_rate = parse_real(k, value);
  else if (k == "gbc.max_depth") gbc.max_depth = static_cast<int>(parse_integer(k, value));
  else if (k == "gbc.min_samples_leaf") gbc.min_samples_leaf = static_cast<int>(parse_integer(k, value));
  else if (k == "net.hidden_layers") {
    net.hidden_layers.clear();
    for (auto w : text::split_ws(value)) net.hidden_layers.push_back(static_cast<int>(parse_integer(k, w)));
  } else if (k == "net.learning_rate") net.learning_rate = parse_real(k, value);
  else if (k == "net.beta1") net.beta1 = parse_real(k, value);
  else if (k == "net.beta2") net.beta2 = parse_real(k, value);
  else if (k == "net.epsilon") net.epsilon = parse_real(k, value);
  else if (k == "net.gamma") net.gamma = parse_real(k, value);
  else if (k == "net.step_size") net.step_size = static_cast<int>(parse_integer(k, value));
  else if (k == "net.epochs") net.epochs = static_cast<int>(parse_integer(k, value));
  else if (k == "net.batch_size") net.batch_size = static_cast<int>(parse_integer(k, value));
  else if (k == "score.thresholds") scoring.thresholds = parse_thresholds(k, value);
  else if (k == "score.w_miss") scoring.w_miss = parse_real(k, value);
  else if (k == "score.w_fa") scoring.w_fa = parse_real(k, value);
  else if (k == "score.time") scoring.time_threshold = parse_real(k, value);
  else if (k == "predict.split") {
    if (std::find(kSplits.begin(), kSplits.end(), value) == kSplits.end())
      throw ConfigError("predict.split must be train, dev or test");
    predict_split = std::string(value);
  } else {
    throw ConfigError("unknown config key '" + k + "'");
  }
}

void RunConfig::apply_text(std::string_view doc) {
  auto lines = text::split(doc, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    auto line = text::trim(lines[n]);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(n + 1) + ": expected 'section.key = value'");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw ConfigError("config line " + std::to_string(n + 1) + ": " + e.what());
    }
  }
}

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("run.jobs must be >= 1");
  generator.validate();
  gbc.validate();
  net.validate();
  scoring.validate();
  if (!(params.coarse.exponent > 0.0 && params.fine.exponent > 0.0))
    throw ConfigError("path-loss exponents must be > 0");
}

std::string RunConfig::to_text() const {
  const auto& g = generator;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"run.seed", std::to_string(seed)},
      {"run.jobs", std::to_string(jobs)},
      {"paths.corpus", corpus_dir.string()},
      {"paths.models", model_dir.string()},
      {"paths.reports", report_dir.string()},
      {"gen.events_per_class", std::to_string(g.events_per_class)},
      {"gen.grain_mix", text::shortest(g.grain_mix)},
      {"gen.shadowing_sigma", text::shortest(g.shadowing_sigma)},
      {"gen.sample_rate", text::shortest(g.sample_rate)},
      {"gen.look_step", text::shortest(g.look_step)},
      {"gen.missing_probability", text::shortest(g.missing_probability)},
      {"gen.carry_weights", join_reals(g.carry_weights)},
      {"gen.pose_weights", join_reals(g.pose_weights)},
      {"gen.tx_power_choices", join_ints(g.tx_power_choices)},
      {"features.coarse_params", render_params(params.coarse)},
      {"features.fine_params", render_params(params.fine)},
      {"features.mask", feature_mask.to_string()},
      {"features.look", std::string(to_string(look_mode))},
      {"gbc.n_estimators", std::to_string(gbc.n_estimators)},
      {"gbc.learning_rate", text::shortest(gbc.learning_rate)},
      {"gbc.max_depth", std::to_string(gbc.max_depth)},
      {"gbc.min_samples_leaf", std::to_string(gbc.min_samples_leaf)},
      {"net.hidden_layers", join_ints(net.hidden_layers)},
      {"net.learning_rate", text::shortest(net.learning_rate)},
      {"net.beta1", text::shortest(net.beta1)},
      {"net.beta2", text::shortest(net.beta2)},
      {"net.epsilon", text::shortest(net.epsilon)},
      {"net.gamma", text::shortest(net.gamma)},
      {"net.step_size", std::to_string(net.step_size)},
      {"net.epochs", std::to_string(net.epochs)},
      {"net.batch_size", std::to_string(net.batch_size)},
      {"score.thresholds", render_thresholds(scoring.thresholds)},
      {"score.w_miss", text::shortest(scoring.w_miss)},
      {"score.w_fa", text::shortest(scoring.w_fa)},
      {"score.time", text::shortest(scoring.time_threshold)},
      {"predict.split", predict_split},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::fingerprint() const {
  const std::string all = to_text();
  std::string canon;
  for (auto line : text::split(all, '\n')) {
    if (line.starts_with("run.seed") || line.starts_with("features.coarse_params") ||
        line.starts_with("features.fine_params") || line.starts_with("features.mask") ||
        line.starts_with("gbc.") || line.starts_with("net.")) {
      canon += line;
      canon += '\n';
    }
  }
  return text::hex64(text::fnv1a(canon));
}

RunConfig RunConfig::load(const fs::path& path) {
  RunConfig cfg;
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  cfg.apply_text(body);
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept {
  return event_seed(master, text::fnv1a(stage));
}

fs::path split_dir(const RunConfig& cfg, std::string_view split) { return cfg.corpus_dir / std::string(split); }
fs::path angle_model_path(const RunConfig& cfg) { return cfg.model_dir / "angle_model.txt"; }
fs::path distance_model_path(const RunConfig& cfg) { return cfg.model_dir / "distance_model.txt"; }
fs::path default_output_path(const RunConfig& cfg, std::string_view split) {
  return cfg.report_dir / (std::string(split) + "_output.tsv");
}

GeneratorConfig split_generator(const RunConfig& cfg, std::string_view split) {
  GeneratorConfig g = cfg.generator;
  g.seed = derive_seed(cfg.seed, "gen." + std::string(split));
  g.params_by_grain = cfg.params;
  g.labelled = split != "test";
  g.id_prefix = std::string(split) + "_";
  return g;
}

std::vector<fs::path> list_event_files(const RunConfig& cfg, std::string_view split) {
  std::vector<fs::path> files;
  const auto dir = split_dir(cfg, split) / "events";
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".evt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_gen(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  for (auto split : kSplits) {
    const auto gcfg = split_generator(cfg, split);
    auto corpus = generate_corpus(gcfg, cfg.jobs);
    const auto dir = split_dir(cfg, split);
    std::error_code ec;
    fs::remove_all(dir / "events", ec);
    if (ec) throw DataError("cannot clear " + (dir / "events").string());
    write_corpus(dir, corpus, split != "test", split == "train");
    log << "gen: " << split << ": " << corpus.events.size() << " events -> " << dir.string() << "\n";
  }
}

void cmd_train_angle(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.feature_mask.angle) {
    log << "train-angle: angle is masked, skipping stage 1\n";
    return;
  }
  auto events = load_events(cfg, "train");
  auto truth_list = parse_truth_file(text::read_file(split_dir(cfg, "train") / "truth.tsv"));
  std::unordered_map<std::string, const GroundTruth*> truth;
  for (const auto& t : truth_list) truth[t.event_id] = &t;

  std::vector<FeatureRow> rows;
  std::vector<int> angles;
  for (const auto& e : events) {
    auto it = truth.find(e.event.metadata.event_id);
    if (it == truth.end()) throw DataError("no angle ground truth for event " + e.event.metadata.event_id);
    for (const auto& r : e.rows) {
      rows.push_back(r);
      angles.push_back(it->second->angle_at(r.timestamp));
    }
  }
  GBCConfig gbc = cfg.gbc;
  gbc.seed = derive_seed(cfg.seed, "gbc");
  auto model = AngleModel::train(rows, angles, gbc);

  std::size_t correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += model.predict(rows[i]).angle == angles[i];

  KvDocument doc;
  doc.set("format", std::string(kAngleFormat));
  doc.set("version", "1");
  doc.set("fingerprint", cfg.fingerprint());
  model.save(doc);
  text::write_file_atomic(angle_model_path(cfg), "# proxtrace stage-1 angle model\n" + doc.serialize());
  log << "train-angle: " << rows.size() << " rows, train accuracy "
      << text::fixed(static_cast<double>(correct) / static_cast<double>(rows.size()), 4) << ", final log-loss "
      << text::fixed(model.booster().training_loss().back(), 6) << " -> " << angle_model_path(cfg).string() << "\n";
}

void cmd_train_dist(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  auto events = load_events(cfg, "train");
  auto key = parse_key_file(text::read_file(split_dir(cfg, "train") / "key.tsv"));
  std::unordered_map<std::string, DistanceClass> labels;
  for (const auto& k : key) labels[k.event_id] = k.reference;

  std::optional<AngleModel> angle_model;
  if (!cfg.feature_mask.angle) {
    auto doc = load_sidecar(angle_model_path(cfg), kAngleFormat);
    check_fingerprint(doc, cfg, angle_model_path(cfg));
    angle_model = AngleModel::load(doc);
  }

  std::vector<FeatureRow> rows;
  std::vector<DistanceClass> targets;
  for (auto& e : events) {
    auto it = labels.find(e.event.metadata.event_id);
    if (it == labels.end()) throw DataError("event " + e.event.metadata.event_id + " is missing from the train key");
    if (angle_model) attach_angles(e.rows, *angle_model);
    for (const auto& r : e.rows) {
      rows.push_back(r);
      targets.push_back(it->second);
    }
  }
  auto schema = fit_schema(rows, cfg.feature_mask, cfg.params);
  auto x = encode_rows(rows, schema);
  NetConfig net = cfg.net;
  net.seed = derive_seed(cfg.seed, "net");
  const std::size_t dim = schema.dimension();
  auto model = DistanceModel::train(x, dim, targets, net, std::move(schema));

  auto preds = model.predict_rows(x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i].distance == targets[i];

  KvDocument doc;
  doc.set("format", std::string(kDistanceFormat));
  doc.set("version", "1");
  doc.set("fingerprint", cfg.fingerprint());
  model.save(doc);
  text::write_file_atomic(distance_model_path(cfg), "# proxtrace stage-2 distance model\n" + doc.serialize());
  log << "train-dist: " << rows.size() << " rows x " << dim << " features, loss "
      << text::fixed(model.initial_loss(), 4) << " -> " << text::fixed(model.epoch_loss().back(), 4)
      << ", train row accuracy " << text::fixed(static_cast<double>(correct) / static_cast<double>(rows.size()), 4)
      << " -> " << distance_model_path(cfg).string() << "\n";
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  cmd_train_angle(cfg, log);
  cmd_train_dist(cfg, log);
}

PredictResult cmd_predict(const RunConfig& cfg, std::string_view split, const fs::path& output, std::ostream& log) {
  cfg.validate();
  auto ddoc = load_sidecar(distance_model_path(cfg), kDistanceFormat);
  check_fingerprint(ddoc, cfg, distance_model_path(cfg));
  const auto model = DistanceModel::load(ddoc);
  if (model.schema().mask != cfg.feature_mask)
    throw ConfigError("distance model was trained with mask '" + model.schema().mask.to_string() + "'");
  std::optional<AngleModel> angle_model;
  if (!cfg.feature_mask.angle) {
    auto adoc = load_sidecar(angle_model_path(cfg), kAngleFormat);
    check_fingerprint(adoc, cfg, angle_model_path(cfg));
    angle_model = AngleModel::load(adoc);
  }

  auto files = list_event_files(cfg, split);
  if (files.empty()) throw DataError("no event files under " + (split_dir(cfg, split) / "events").string());
  std::vector<std::optional<SystemOutputEntry>> slots(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
    try {
      auto event = parse_event_file(text::read_file(files[i]));
      auto rows = assemble_rows(event, cfg.params);
      auto cls = predict_event(std::move(rows), angle_model ? &*angle_model : nullptr, model, cfg.look_mode);
      slots[i] = SystemOutputEntry{event.metadata.event_id, metres(cls)};
    } catch (const DataError& e) {
      errors[i] = files[i].string() + ": " + e.what();
    }
  });

  PredictResult result;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (slots[i]) result.predictions.push_back(*slots[i]);
    else result.failures.push_back(errors[i]);
  }
  std::sort(result.predictions.begin(), result.predictions.end(),
            [](const auto& a, const auto& b) { return a.event_id < b.event_id; });
  text::write_file_atomic(output, serialize_system_output(result.predictions));
  log << "predict: " << split << " (look=" << to_string(cfg.look_mode) << "): " << result.predictions.size()
      << " events -> " << output.string() << "\n";
  for (const auto& f : result.failures) log << "predict: failed " << f << "\n";
  return result;
}

ScoreReport cmd_score(const RunConfig& cfg, const fs::path& key, const fs::path& output, const fs::path& prefix,
                      std::ostream& log) {
  cfg.scoring.validate();
  auto report = score_run(key, output, cfg.scoring);
  fs::path txt = prefix, csv = prefix;
  txt += ".txt";
  csv += ".csv";
  text::write_file_atomic(txt, report.render_text());
  text::write_file_atomic(csv, report.render_csv());
  log << report.render_text();
  return report;
}

std::vector<AblationVariant> cmd_ablate(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  FeatureMask none, no_grain, no_dist, no_angle;
  no_grain.coarse_grain = true;
  no_dist.expected_distance = true;
  no_angle.angle = true;

  struct Plan {
    std::string name;
    std::string model;
    FeatureMask mask;
    LookMode look;
  };
  const std::vector<Plan> plans = {
      {"baseline", "baseline", none, LookMode::full},
      {"no_coarse_grain", "no_coarse_grain", no_grain, LookMode::full},
      {"no_expected_distance", "no_expected_distance", no_dist, LookMode::full},
      {"no_angle", "no_angle", no_angle, LookMode::full},
      {"look_first", "baseline", none, LookMode::first},
      {"look_last", "baseline", none, LookMode::last},
      {"look_full", "baseline", none, LookMode::full},
  };

  const auto key = split_dir(cfg, cfg.predict_split) / "key.tsv";
  const auto out_dir = cfg.report_dir / "ablation";
  std::vector<AblationVariant> variants;
  std::map<std::string, bool> trained;
  std::string blocks;
  for (const auto& s : plans) {
    auto vcfg = variant_config(cfg, s.model, s.mask, s.look);
    if (!trained[s.model]) {
      log << "ablate: training " << s.model << " (mask=" << s.mask.to_string() << ")\n";
      cmd_train(vcfg, log);
      trained[s.model] = true;
    }
    const auto output = out_dir / (s.name + ".output.tsv");
    auto result = cmd_predict(vcfg, cfg.predict_split, output, log);
    if (!result.failures.empty())
      throw DataError("ablation variant " + s.name + ": " + std::to_string(result.failures.size()) +
                      " event(s) failed to predict");
    log << "== " << s.name << " ==\n";
    auto report = cmd_score(vcfg, key, output, out_dir / s.name, log);
    blocks += "== " + s.name + " (mask=" + s.mask.to_string() + ", look=" + std::string(to_string(s.look)) + ") ==\n";
    blocks += report.render_text() + "\n";
    variants.push_back({s.name, s.mask, s.look, std::move(report)});
  }
  const auto summary = render_summary(variants);
  text::write_file_atomic(out_dir / "summary.txt", summary);
  text::write_file_atomic(out_dir / "ablation.txt", blocks + summary);
  log << summary;
  return variants;
}

std::string render_summary(const std::vector<AblationVariant>& variants) {
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  auto cell = [](const std::optional<double>& v, int digits) { return v ? text::fixed(*v, digits) : std::string("invalid"); };
  std::string out = pad("variant", 22) + pad("mask", 20) + pad("look", 7) + pad("P_miss", 8) + pad("P_fa", 8) +
                    pad("nDCF", 8) + "nDCF(4dp)\n";
  for (const auto& v : variants) {
    const auto& r = v.report;
    out += pad(v.name, 22) + pad(v.mask.to_string(), 20) + pad(std::string(to_string(v.look)), 7) +
           pad(cell(r.average_p_miss, 2), 8) + pad(cell(r.average_p_fa, 2), 8) + pad(cell(r.average_ndcf, 2), 8) +
           cell(r.average_ndcf, 4) + "\n";
  }
  return out;
}

std::string cmd_report(const std::vector<fs::path>& csv_files) {
  if (csv_files.empty()) throw ConfigError("report needs at least one CSV report");
  std::string out;
  std::vector<AblationVariant> rows;
  for (const auto& path : csv_files) {
    auto report = ScoreReport::parse_csv(text::read_file(path));
    out += "== " + path.stem().string() + " ==\n" + report.render_text() + "\n";
    rows.push_back({path.stem().string(), {}, LookMode::full, std::move(report)});
  }
  if (rows.size() > 1) {
    std::string summary = "variant                 average nDCF\n";
    for (const auto& r : rows) {
      std::string name = r.name;
      if (name.size() < 24) name.append(24 - name.size(), ' ');
      summary += name + (r.report.average_ndcf ? text::fixed(*r.report.average_ndcf, 2) : "invalid") + "\n";
    }
    out += summary;
  }
  return out;
}

}  // namespace proxtrace
