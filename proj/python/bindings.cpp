#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "proxtrace/error.hpp"
#include "proxtrace/pipeline.hpp"

namespace py = pybind11;
using namespace proxtrace;

namespace {

PathLossParams params_for(const std::string& grain, std::optional<std::pair<double, double>> params) {
  if (params) return {params->first, params->second};
  if (grain == "midpoint") return kMidpointParams;
  return default_params(parse_grain(grain));
}

py::dict report_dict(const ScoreReport& r) {
  py::list rows;
  for (const auto& row : r.rows) {
    py::dict d;
    d["subset"] = std::string(to_string(row.subset));
    d["D"] = row.distance;
    d["valid"] = row.valid;
    d["p_miss"] = row.valid ? py::cast(row.p_miss) : py::none();
    d["p_fa"] = row.valid ? py::cast(row.p_fa) : py::none();
    d["ndcf"] = row.valid ? py::cast(row.ndcf) : py::none();
    d["n_target"] = row.n_target;
    d["n_nontarget"] = row.n_nontarget;
    rows.append(d);
  }
  py::dict out;
  out["rows"] = rows;
  out["average_p_miss"] = r.average_p_miss;
  out["average_p_fa"] = r.average_p_fa;
  out["average_ndcf"] = r.average_ndcf;
  out["text"] = r.render_text();
  return out;
}

py::dict row_dict(const FeatureRow& r) {
  py::dict d;
  d["timestamp"] = r.timestamp;
  d["look_index"] = r.look_index;
  d["gyroscope"] = r.gyro;
  d["magnetic_field"] = r.magnetic_field;
  d["accelerometer"] = r.accelerometer;
  d["attitude"] = r.attitude;
  d["rssi"] = r.rssi;
  d["tx_power"] = r.tx_power;
  d["carry"] = std::string(to_string(r.carry_location));
  d["pose"] = std::string(to_string(r.pose));
  d["grain"] = std::string(to_string(r.grain));
  d["expected_distance"] = r.expected_distance;
  d["attenuation"] = r.attenuation;
  return d;
}

RunConfig make_config(const std::string& text, const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  cfg.apply_text(text);
  for (const auto& [k, v] : overrides) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "BLE proximity (TC4TL) classification toolkit";

  static py::exception<Error> base(m, "Error");
  static py::exception<ConfigError> config_error(m, "ConfigError", base.ptr());
  static py::exception<DataError> data_error(m, "DataError", base.ptr());
  static py::exception<DivergenceError> divergence_error(m, "DivergenceError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      config_error(e.what());
    } catch (const DivergenceError& e) {
      divergence_error(e.what());
    } catch (const DataError& e) {
      data_error(e.what());
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def(
      "expected_distance",
      [](double rssi, const std::string& grain, std::optional<std::pair<double, double>> params) {
        return expected_distance(rssi, params_for(grain, params));
      },
      py::arg("rssi"), py::arg("grain") = "coarse", py::arg("params") = py::none(),
      "Path-loss distance estimate in metres. grain is coarse, fine or midpoint; params=(tx_power, exponent) "
      "overrides it.");
  m.def(
      "sample_rssi",
      [](double distance, const std::string& grain, double noise_db) {
        return sample_rssi(distance, params_for(grain, std::nullopt), noise_db);
      },
      py::arg("distance"), py::arg("grain") = "coarse", py::arg("noise_db") = 0.0);
  m.def("attenuation", &attenuation, py::arg("tx_power"), py::arg("rssi"));
  m.def(
      "quantize_distance", [](double metres_in) { return metres(quantize_distance(metres_in)); },
      py::arg("metres"), "Snap a protocol distance to its class (1.2, 1.8, 3.0 or 4.5).");
  m.def(
      "decide", [](double d, double threshold) { return decide(d, threshold) == ContactLabel::tc4tl; },
      py::arg("distance"), py::arg("threshold"), "True when the pair counts as a TC4TL contact.");
  m.def("ndcf", &ndcf, py::arg("p_miss"), py::arg("p_fa"), py::arg("w_miss") = 1.0, py::arg("w_fa") = 1.0);
  m.def(
      "aggregate_event",
      [](const std::vector<double>& distances) {
        std::vector<DistanceClass> cls;
        for (double d : distances) cls.push_back(class_from_metres(d));
        return metres(aggregate_event(cls));
      },
      py::arg("distances"), "Mode of per-row predictions; ties go to the smaller distance.");

  m.def(
      "parse_event",
      [](const std::string& bytes) {
        auto e = parse_event_file(bytes);
        py::dict d;
        d["event_id"] = e.metadata.event_id;
        d["grain"] = std::string(to_string(e.metadata.grain));
        d["tx_power"] = e.metadata.tx_power;
        d["carry"] = std::string(to_string(e.metadata.carry_location));
        d["pose"] = std::string(to_string(e.metadata.pose));
        d["reference_distance"] = e.metadata.reference_distance
                                      ? py::cast(metres(*e.metadata.reference_distance))
                                      : py::none();
        d["looks"] = e.looks.size();
        d["readings"] = e.reading_count();
        d["serialized"] = serialize_event_file(e);
        return d;
      },
      py::arg("text"));
  m.def(
      "feature_rows",
      [](const std::string& bytes) {
        py::list rows;
        for (const auto& r : assemble_rows(parse_event_file(bytes))) rows.append(row_dict(r));
        return rows;
      },
      py::arg("text"), "Forward-filled rows, one per bluetooth reading.");

  m.def(
      "score",
      [](const std::string& key, const std::string& output) {
        return report_dict(score(parse_key_file(key), parse_system_output(output)));
      },
      py::arg("key_text"), py::arg("output_text"));
  m.def(
      "score_files",
      [](const std::filesystem::path& key, const std::filesystem::path& output) {
        return report_dict(score_run(key, output));
      },
      py::arg("key_path"), py::arg("output_path"));

  m.def(
      "config_text",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        return make_config(text, overrides).to_text();
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Canonical config dump after applying overrides.");

  m.def(
      "gen",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        const auto cfg = make_config(text, overrides);
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_gen(cfg, log);
        return log.str();
      },
      py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{});
  m.def(
      "train",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        const auto cfg = make_config(text, overrides);
        std::ostringstream log;
        py::gil_scoped_release release;
        cmd_train(cfg, log);
        return log.str();
      },
      py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{});
  m.def(
      "predict",
      [](const std::string& text, const std::map<std::string, std::string>& overrides, std::string split) {
        const auto cfg = make_config(text, overrides);
        if (split.empty()) split = cfg.predict_split;
        std::ostringstream log;
        PredictResult result;
        {
          py::gil_scoped_release release;
          result = cmd_predict(cfg, split, default_output_path(cfg, split), log);
        }
        py::list preds;
        for (const auto& p : result.predictions) preds.append(py::make_tuple(p.event_id, p.distance_m));
        py::dict d;
        d["predictions"] = preds;
        d["failures"] = result.failures;
        d["output"] = default_output_path(cfg, split);
        return d;
      },
      py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      py::arg("split") = "");
}
