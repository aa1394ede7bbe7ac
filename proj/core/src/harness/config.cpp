#include "dhmm/harness/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "dhmm/errors.hpp"

namespace dhmm::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs `fn`, prefixing any validation or JSON error with the config section.
template <class Fn>
auto in_section(const std::string& section, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("config [" + section + "]: " + e.what());
  } catch (const json::exception& e) {
    throw ValidationError("config [" + section + "]: " + e.what());
  } catch (const Error& e) {
    throw ValidationError("config [" + section + "]: " + e.what());
  }
}

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(std::string("missing key '") + key + "'");
  return j.at(key);
}

Eigen::MatrixXd to_matrix(const json& j) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw ValidationError("expected a 2-D array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw ValidationError("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

fs::path resolve_file(const std::string& name, const fs::path& base_dir) {
  const fs::path p(name);
  if (p.is_absolute()) return p;
  for (const fs::path& dir : {base_dir, preset_dir()}) {
    const fs::path candidate = dir / p;
    if (fs::exists(candidate)) return candidate;
  }
  throw ValidationError("file not found: " + name);
}

struct NetworkBuild {
  CombinationMatrix combination;
  NetworkInfo info;
};

Graph build_graph(const json& j, const fs::path& base_dir, std::string& description) {
  if (j.contains("preset")) {
    const auto name = j.at("preset").get<std::string>();
    description = "preset " + name;
    return Graph::from_edge_file(preset_dir() / "topologies" / (name + ".edges"));
  }
  if (j.contains("edges")) {
    const auto file = j.at("edges").get<std::string>();
    description = "edge list " + file;
    return Graph::from_edge_file(resolve_file(file, base_dir));
  }
  if (j.contains("edge_list")) {
    const auto k = require(j, "agents").get<std::size_t>();
    Graph g(k);
    for (const auto& e : j.at("edge_list")) g.add_edge(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    description = "inline edge list";
    return g;
  }
  const auto kind = require(j, "graph").get<std::string>();
  const auto k = require(j, "agents").get<std::size_t>();
  const bool loops = j.value("self_loops", true);
  description = kind + " graph";
  if (kind == "complete") return Graph::complete(k, loops);
  if (kind == "path") return Graph::path(k, loops);
  if (kind == "ring") return Graph::ring(k, loops);
  if (kind == "star") return Graph::star(k, loops);
  throw ValidationError("unknown graph kind '" + kind + "'");
}

NetworkBuild build_network(const json& j, const fs::path& base_dir) {
  NetworkInfo info;
  if (j.contains("matrix")) {
    CombinationMatrix a(to_matrix(j.at("matrix")));
    info.description = "explicit combination matrix";
    info.agents = a.agents();
    info.rho2 = second_eigenvalue_modulus(a);
    for (std::size_t k = 0; k < a.agents(); ++k) {
      std::size_t d = 0;
      for (std::size_t l = 0; l < a.agents(); ++l) d += (l != k && a(l, k) > 0.0) ? 1 : 0;
      info.degrees.push_back(d);
    }
    return {std::move(a), std::move(info)};
  }
  const Graph g = build_graph(j, base_dir, info.description);
  const auto report = connectivity_check(g);
  if (!report.connected) throw ValidationError(report.diagnostics);
  const auto rule = j.value("weights", std::string("metropolis"));
  std::optional<CombinationMatrix> a;
  if (rule == "metropolis") {
    a = metropolis_weights(g);
  } else if (rule == "uniform") {
    a = uniform_weights(g);
  } else {
    throw ValidationError("unknown weight rule '" + rule + "'");
  }
  info.description += ", " + rule + " weights";
  info.agents = g.agents();
  info.rho2 = second_eigenvalue_modulus(*a);
  for (std::size_t k = 0; k < g.agents(); ++k) info.degrees.push_back(g.degree(k));
  return {std::move(*a), std::move(info)};
}

TransitionModel build_transition(const json& j) {
  if (j.contains("bsc")) return TransitionModel::binary_symmetric(j.at("bsc").get<double>());
  if (j.contains("identity")) return TransitionModel::identity(j.at("identity").get<std::size_t>());
  const auto orientation = j.value("orientation", std::string("column"));
  if (orientation != "column" && orientation != "row") {
    throw ValidationError("orientation must be 'column' or 'row'");
  }
  return TransitionModel(to_matrix(require(j, "matrix")),
                         orientation == "row" ? Orientation::RowStochastic : Orientation::ColumnStochastic);
}

LikelihoodModel build_likelihood(const json& j) {
  const auto family = require(j, "family").get<std::string>();
  if (family == "gaussian") {
    return LikelihoodModel::gaussian(require(j, "means").get<std::vector<double>>(),
                                     require(j, "sigma").get<double>());
  }
  if (family == "truncated-gaussian") {
    return LikelihoodModel::truncated_gaussian(
        require(j, "means").get<std::vector<double>>(), require(j, "sigma").get<double>(),
        require(j, "lower").get<double>(), require(j, "upper").get<double>());
  }
  if (family == "categorical") {
    return LikelihoodModel::categorical(require(j, "pmf").get<std::vector<std::vector<double>>>());
  }
  throw ValidationError("unknown likelihood family '" + family + "'");
}

NetworkLikelihoods build_likelihoods(const json& j, std::size_t agents) {
  if (j.contains("agents")) {
    std::vector<LikelihoodModel> models;
    for (const auto& m : j.at("agents")) models.push_back(build_likelihood(m));
    if (models.size() != agents) {
      throw ValidationError("expected " + std::to_string(agents) + " per-agent models, got " +
                            std::to_string(models.size()));
    }
    return NetworkLikelihoods(std::move(models));
  }
  return NetworkLikelihoods::replicate(build_likelihood(j), agents);
}

AlgorithmSpec build_algorithm(const json& j, std::size_t agents) {
  AlgorithmSpec spec;
  spec.variant = parse_variant(require(j, "variant").get<std::string>());
  if (j.contains("gamma")) {
    const auto& g = j.at("gamma");
    if (g.is_string()) {
      if (g.get<std::string>() != "K") throw ValidationError("gamma must be a number or \"K\"");
      spec.gamma = static_cast<double>(agents);
    } else {
      spec.gamma = g.get<double>();
    }
  }
  spec.delta = j.value("delta", spec.delta);
  spec.validate();
  return spec;
}

ExperimentConfig build_point(const json& doc, const fs::path& base_dir, const Overrides& ov) {
  auto net = in_section("network", [&] { return build_network(require(doc, "network"), base_dir); });
  auto transition = in_section("transition", [&] { return build_transition(require(doc, "transition")); });
  auto likelihoods = in_section("likelihoods", [&] {
    return build_likelihoods(require(doc, "likelihoods"), net.info.agents);
  });
  auto scenario = in_section("initial", [&] {
    auto s = analysis::Scenario::make(std::move(transition), std::move(likelihoods), net.combination);
    if (doc.contains("initial")) {
      const auto& init = doc.at("initial");
      if (init.contains("state_prior")) s.state_prior = Belief(init.at("state_prior").get<std::vector<double>>());
      if (init.contains("belief")) s.initial_belief = Belief(init.at("belief").get<std::vector<double>>());
    }
    s.validate();
    return s;
  });
  ExperimentConfig cfg(std::move(scenario));
  cfg.name = doc.value("name", std::string("experiment"));
  cfg.network = std::move(net.info);

  cfg.algorithms = in_section("algorithm", [&] {
    std::vector<AlgorithmSpec> algs;
    if (doc.contains("algorithms")) {
      for (const auto& a : doc.at("algorithms")) algs.push_back(build_algorithm(a, cfg.network.agents));
    } else if (doc.contains("algorithm")) {
      algs.push_back(build_algorithm(doc.at("algorithm"), cfg.network.agents));
    }
    return algs;
  });

  in_section("run", [&] {
    const json run = doc.value("run", json::object());
    cfg.run.runs = run.value("runs", cfg.run.runs);
    cfg.run.horizon = run.value("horizon", cfg.run.horizon);
    cfg.run.seed = run.value("seed", cfg.run.seed);
    cfg.run.threads = run.value("threads", cfg.run.threads);
    cfg.run.block_size = run.value("block_size", cfg.run.block_size);
    cfg.tail_window = run.value("tail_window", cfg.tail_window);
    cfg.risk_tol = run.value("risk_tol", cfg.risk_tol);
    cfg.error_tol = run.value("error_tol", cfg.error_tol);
    if (ov.seed) cfg.run.seed = *ov.seed;
    if (ov.runs) cfg.run.runs = *ov.runs;
    if (ov.horizon) cfg.run.horizon = *ov.horizon;
    if (ov.threads) cfg.run.threads = *ov.threads;
    cfg.run.validate();
    if (cfg.tail_window == 0) throw ValidationError("tail_window must be >= 1");
    cfg.tail_window = std::min(cfg.tail_window, cfg.run.horizon);
  });

  if (doc.contains("oracle")) {
    cfg.oracle = in_section("oracle", [&] {
      const auto& o = doc.at("oracle");
      OracleSettings s;
      const auto v = o.value("variant", std::string("consensus"));
      if (v == "consensus") {
        s.variant = OracleVariant::Consensus;
      } else if (v == "diffusion") {
        s.variant = OracleVariant::Diffusion;
      } else {
        throw ValidationError("oracle variant must be 'consensus' or 'diffusion'");
      }
      s.steps = o.value("steps", s.steps);
      s.runs = o.value("runs", s.runs);
      s.merge = o.value("merge", s.merge);
      s.pilot_runs = o.value("pilot_runs", s.pilot_runs);
      s.tv_limit = o.value("tv_limit", s.tv_limit);
      s.dp_limit = o.value("dp_limit", s.dp_limit);
      if (ov.runs) s.runs = *ov.runs;
      if (s.steps == 0 || s.runs == 0 || s.merge == 0) throw ValidationError("steps, runs and merge must be >= 1");
      return s;
    });
  }
  if (doc.contains("counterexample")) {
    cfg.counterexample = in_section("counterexample", [&] {
      const auto& c = doc.at("counterexample");
      CounterexampleSettings s;
      s.runs = c.value("runs", s.runs);
      s.step = c.value("step", s.step);
      if (ov.runs) s.runs = *ov.runs;
      if (s.runs == 0 || s.step == 0) throw ValidationError("runs and step must be >= 1");
      return s;
    });
  }
  return cfg;
}

}  // namespace

fs::path preset_dir() {
  if (const char* env = std::getenv("DHMM_PRESET_DIR"); env && *env) return env;
#ifdef DHMM_PRESET_DIR
  return DHMM_PRESET_DIR;
#else
  return "presets";
#endif
}

std::vector<ExperimentConfig> parse_experiment(const std::string& json_text, const fs::path& base_dir,
                                               const Overrides& overrides) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: top level must be an object");

  std::vector<ExperimentConfig> points;
  if (!doc.contains("sweep")) {
    points.push_back(build_point(doc, base_dir, overrides));
    return points;
  }
  const json sweep = doc.at("sweep");
  if (!sweep.is_array() || sweep.empty()) throw ValidationError("config [sweep]: expected a non-empty array");
  json base = doc;
  base.erase("sweep");
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    json patched = base;
    json patch = sweep.at(i);
    const std::string label = patch.value("label", "p" + std::to_string(i));
    patch.erase("label");
    for (const auto& [key, value] : patch.items()) patched[key] = value;
    auto cfg = in_section("sweep " + label, [&] { return build_point(patched, base_dir, overrides); });
    cfg.label = label;
    points.push_back(std::move(cfg));
  }
  return points;
}

std::vector<ExperimentConfig> load_experiment(const std::string& path_or_preset, const Overrides& overrides) {
  fs::path path(path_or_preset);
  if (!fs::exists(path) && !path.has_extension() && !path.has_parent_path()) {
    path = preset_dir() / (path_or_preset + ".json");
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("config: cannot open " + path_or_preset);
  std::ostringstream text;
  text << in.rdbuf();
  auto points = parse_experiment(text.str(), path.parent_path(), overrides);
  for (auto& p : points) p.source = path;
  return points;
}

}  // namespace dhmm::harness
