#pragma once

#include <string>

#include <json.hpp>

#include "doalab/bench.hpp"
#include "doalab/sigmodel.hpp"

namespace doalab {

using json = nlohmann::json;

inline json geometry_to_json(const ArrayGeometry& g) {
  json j;
  j["kind"] = to_string(g.kind());
  j["baseline"] = g.baseline();
  j["positions"] = std::vector<double>(
      g.positions().data(), g.positions().data() + g.positions().size());
  if (!g.kind_params().empty()) j["params"] = g.kind_params();
  return j;
}

inline ArrayGeometry geometry_from_json(const json& j) {
  const std::string kind = j.value("kind", "arbitrary");
  const double baseline = j.value("baseline", 1.0);
  if (kind == "ula") {
    if (j.contains("m")) return ArrayGeometry::ula(j["m"].get<int>(), baseline);
    if (j.contains("params"))
      return ArrayGeometry::ula(j["params"][0].get<int>(), baseline);
    return ArrayGeometry::ula(int(j.at("positions").size()), baseline);
  }
  if (kind == "nested") {
    const auto p = j.contains("params")
                       ? j["params"].get<std::vector<int>>()
                       : std::vector<int>{j.at("m1").get<int>(),
                                          j.at("m2").get<int>()};
    return ArrayGeometry::nested(p[0], p[1], baseline);
  }
  if (kind == "coprime") {
    std::vector<int> p;
    if (j.contains("params"))
      p = j["params"].get<std::vector<int>>();
    else
      p = {j.at("m1").get<int>(), j.at("m2").get<int>(), j.value("f", 1)};
    const std::int64_t offset = j.value("offset", 0);
    return ArrayGeometry::coprime(p[0], p[1], p.size() > 2 ? p[2] : 1, offset,
                                  baseline);
  }
  if (kind == "thinned-ula") {
    if (j.contains("grid"))
      return ArrayGeometry::thinned_ula(
          j["grid"].get<std::vector<std::int64_t>>(), baseline);
    std::vector<std::int64_t> grid;
    for (double p : j.at("positions").get<std::vector<double>>())
      grid.push_back(std::int64_t(std::llround(p / baseline)));
    return ArrayGeometry::thinned_ula(grid, baseline);
  }
  return ArrayGeometry::arbitrary(
      j.at("positions").get<std::vector<double>>(), baseline);
}

// CLI shorthand: "ula:10", "nested:3,3", "coprime:3,4,1",
// "thinned:0,1,4,6", "arbitrary:0,0.5,1.7".
inline ArrayGeometry geometry_from_string(const std::string& text) {
  const std::size_t colon = text.find(':');
  require(colon != std::string::npos,
          "geometry string must look like kind:args — " + text);
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  std::size_t pos = colon + 1;
  while (pos <= text.size() && pos != 0) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    if (next > pos) args.push_back(std::stod(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  require(!args.empty(), "geometry string has no arguments: " + text);
  if (kind == "ula") return ArrayGeometry::ula(int(args[0]));
  if (kind == "nested") {
    require(args.size() >= 2, "nested geometry needs m1,m2");
    return ArrayGeometry::nested(int(args[0]), int(args[1]));
  }
  if (kind == "coprime") {
    require(args.size() >= 2, "coprime geometry needs m1,m2[,f[,offset]]");
    return ArrayGeometry::coprime(int(args[0]), int(args[1]),
                                  args.size() > 2 ? int(args[2]) : 1,
                                  args.size() > 3 ? std::int64_t(args[3]) : 0);
  }
  if (kind == "thinned") {
    std::vector<std::int64_t> grid;
    for (double a : args) grid.push_back(std::int64_t(std::llround(a)));
    return ArrayGeometry::thinned_ula(grid);
  }
  if (kind == "arbitrary") return ArrayGeometry::arbitrary(args);
  throw std::invalid_argument("unknown geometry kind: " + kind);
}

inline json complex_matrix_to_json(const CMat& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json rrow = json::array(), irow = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rrow.push_back(m(i, j).real());
      irow.push_back(m(i, j).imag());
    }
    re.push_back(rrow);
    im.push_back(irow);
  }
  return json{{"re", re}, {"im", im}};
}

inline CMat complex_matrix_from_json(const json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  const Eigen::Index rows = Eigen::Index(re.size());
  const Eigen::Index cols = rows > 0 ? Eigen::Index(re[0].size()) : 0;
  CMat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jx = 0; jx < cols; ++jx)
      m(i, jx) = cxd(re[std::size_t(i)][std::size_t(jx)].get<double>(),
                     im[std::size_t(i)][std::size_t(jx)].get<double>());
  return m;
}

inline json scenario_to_json(const Scenario& sc) {
  json j;
  j["geometry"] = geometry_to_json(sc.geometry);
  j["thetas"] = sc.thetas;
  j["model"] =
      sc.model == SignalModel::unconditional ? "unconditional" : "conditional";
  switch (sc.correlation) {
    case Correlation::uncorrelated: j["correlation"] = "uncorrelated"; break;
    case Correlation::coherent: j["correlation"] = "coherent"; break;
    case Correlation::matrix: j["correlation"] = "matrix"; break;
  }
  j["snr_db"] = sc.snr_db;
  j["noise_var"] = sc.noise_var;
  j["snapshots"] = sc.snapshots;
  j["seed"] = sc.seed;
  if (sc.source_cov) j["source_cov"] = complex_matrix_to_json(*sc.source_cov);
  if (!sc.subarrays.empty()) j["subarrays"] = sc.subarrays;
  if (!sc.known_lags.empty()) j["lags"] = sc.known_lags;
  return j;
}

inline Scenario scenario_from_json(const json& j) {
  Scenario sc;
  sc.geometry = geometry_from_json(j.at("geometry"));
  sc.thetas = j.at("thetas").get<std::vector<double>>();
  sc.model = j.value("model", std::string("unconditional")) == "conditional"
                 ? SignalModel::conditional
                 : SignalModel::unconditional;
  const std::string corr = j.value("correlation", std::string("uncorrelated"));
  sc.correlation = corr == "coherent"
                       ? Correlation::coherent
                       : (corr == "matrix" ? Correlation::matrix
                                           : Correlation::uncorrelated);
  sc.snr_db = j.value("snr_db", 0.0);
  sc.noise_var = j.value("noise_var", 1.0);
  sc.snapshots = j.value("snapshots", 1);
  sc.seed = j.value("seed", std::uint64_t(0));
  if (j.contains("source_cov"))
    sc.source_cov = complex_matrix_from_json(j["source_cov"]);
  if (j.contains("subarrays"))
    sc.subarrays = j["subarrays"].get<std::vector<std::vector<int>>>();
  if (j.contains("lags"))
    sc.known_lags = j["lags"].get<std::vector<double>>();
  sc.validate();
  return sc;
}

inline MethodOptions method_options_from_json(const json& j) {
  MethodOptions o;
  o.grid_step = j.value("grid_step", 0.5);
  o.mu = j.value("mu", -1.0);
  o.mu_scale = j.value("mu_scale", 1.0);
  o.refine = j.value("refine", true);
  o.smoothing_window = j.value("window", -1);
  if (j.value("weighting", std::string("identity")) == "optimal")
    o.weighting = WsfWeighting::optimal;
  if (j.value("solve", std::string("ls")) == "tls")
    o.esprit_solve = EspritSolve::tls;
  return o;
}

inline ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.scenario = scenario_from_json(j.at("scenario"));
  const auto& sweep = j.at("sweep");
  cfg.sweep = sweep.value("variable", std::string("snapshots")) == "snr_db"
                  ? SweepVariable::snr_db
                  : SweepVariable::snapshots;
  cfg.sweep_values = sweep.at("values").get<std::vector<double>>();
  for (const auto& mj : j.at("methods")) {
    MethodConfig mc;
    mc.name = mj.at("name").get<std::string>();
    mc.options = method_options_from_json(mj);
    cfg.methods.push_back(std::move(mc));
  }
  cfg.trials = j.value("trials", 500);
  cfg.seed = j.value("seed", std::uint64_t(1));
  cfg.threads = j.value("threads", 0);
  cfg.resolution_threshold = j.value("resolution_threshold", 0.0);
  cfg.include_crb = j.value("include_crb", false);
  cfg.validate();
  return cfg;
}

}  // namespace doalab
