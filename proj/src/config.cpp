#include "mcimplicit/config.hpp"

#include <fstream>
#include <set>

namespace mcimplicit {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& path,
                    const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError(path + "." + it.key(), "unknown field");
}

template <typename T>
T get_or(const json& j, const std::string& path, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, e.what());
  }
}

template <typename T>
T get_required(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, e.what());
  }
}

// Scalar-or-array grid field.
template <typename T>
std::vector<T> get_grid(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) throw ConfigError(path + "." + key, "missing required field");
  const json& v = j.at(key);
  std::vector<T> out;
  try {
    if (v.is_array()) {
      out = v.get<std::vector<T>>();
    } else {
      out.push_back(v.get<T>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key, e.what());
  }
  if (out.empty()) throw ConfigError(path + "." + key, "grid must be nonempty");
  return out;
}

std::optional<std::uint64_t> get_seed(const json& j, const std::string& path) {
  if (!j.contains("seed")) return std::nullopt;
  try {
    return j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw ConfigError(path + ".seed", e.what());
  }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "config",
                 {"schema_version", "name", "master_seed", "ground_truth", "sampling",
                  "init", "optimizer", "diagnostics", "replication", "output"});
  ExperimentConfig cfg;
  cfg.schema_version = get_required<int>(j, "config", "schema_version");
  if (cfg.schema_version != 1)
    throw ConfigError("config.schema_version", "unsupported schema version");
  cfg.name = get_required<std::string>(j, "config", "name");
  cfg.master_seed = get_or<std::uint64_t>(j, "config", "master_seed", 0);

  {
    if (!j.contains("ground_truth"))
      throw ConfigError("config.ground_truth", "missing required field");
    const json& g = j.at("ground_truth");
    const std::string path = "config.ground_truth";
    reject_unknown(g, path, {"d", "r", "kappa", "sigma1", "style", "seed"});
    cfg.gt.d = get_required<Eigen::Index>(g, path, "d");
    cfg.gt.r = get_required<Eigen::Index>(g, path, "r");
    cfg.gt.kappa = get_required<double>(g, path, "kappa");
    cfg.gt.sigma1 = get_or<double>(g, path, "sigma1", 1.0);
    cfg.gt.style = get_or<std::string>(g, path, "style", "haar");
    cfg.gt.seed = get_seed(g, path);
  }

  {
    if (!j.contains("sampling"))
      throw ConfigError("config.sampling", "missing required field");
    const json& s = j.at("sampling");
    const std::string path = "config.sampling";
    reject_unknown(s, path, {"p", "seed"});
    cfg.sampling.p_grid = get_grid<double>(s, path, "p");
    for (double p : cfg.sampling.p_grid)
      if (!(p > 0.0 && p <= 1.0)) throw ConfigError(path + ".p", "p must be in (0, 1]");
    cfg.sampling.seed = get_seed(s, path);
  }

  {
    if (!j.contains("init")) throw ConfigError("config.init", "missing required field");
    const json& s = j.at("init");
    const std::string path = "config.init";
    reject_unknown(s, path, {"scheme", "r_prime", "alpha", "seed"});
    cfg.init.scheme = get_required<std::string>(s, path, "scheme");
    parse_init_scheme(cfg.init.scheme);  // validates the name
    cfg.init.r_prime_grid = get_grid<Eigen::Index>(s, path, "r_prime");
    if (!s.contains("alpha")) throw ConfigError(path + ".alpha", "missing required field");
    const json& a = s.at("alpha");
    if (a.is_object()) {
      reject_unknown(a, path + ".alpha", {"rule", "c_alpha"});
      if (get_required<std::string>(a, path + ".alpha", "rule") != "theorem")
        throw ConfigError(path + ".alpha.rule", "only the 'theorem' rule is recognized");
      cfg.init.alpha.theorem_rule = true;
      cfg.init.alpha.c_alpha = get_or<double>(a, path + ".alpha", "c_alpha", 0.1);
    } else {
      cfg.init.alpha.grid = get_grid<double>(s, path, "alpha");
      for (double v : cfg.init.alpha.grid)
        if (!(v >= 0.0)) throw ConfigError(path + ".alpha", "alpha must be >= 0");
    }
    cfg.init.seed = get_seed(s, path);
  }

  {
    if (!j.contains("optimizer"))
      throw ConfigError("config.optimizer", "missing required field");
    const json& s = j.at("optimizer");
    const std::string path = "config.optimizer";
    reject_unknown(s, path, {"eta", "max_iters", "stop_tol", "record_every"});
    if (!s.contains("eta")) throw ConfigError(path + ".eta", "missing required field");
    const json& e = s.at("eta");
    reject_unknown(e, path + ".eta", {"rule", "c_eta", "value"});
    const std::string rule = get_required<std::string>(e, path + ".eta", "rule");
    if (rule == "theorem") {
      cfg.optimizer.eta.kind = EtaRule::Kind::theorem;
      cfg.optimizer.eta.value = get_or<double>(e, path + ".eta", "c_eta", 0.25);
    } else if (rule == "explicit") {
      cfg.optimizer.eta.kind = EtaRule::Kind::explicit_value;
      cfg.optimizer.eta.value = get_required<double>(e, path + ".eta", "value");
    } else {
      throw ConfigError(path + ".eta.rule", "must be 'theorem' or 'explicit'");
    }
    cfg.optimizer.max_iters = get_required<long>(s, path, "max_iters");
    if (cfg.optimizer.max_iters < 1)
      throw ConfigError(path + ".max_iters", "must be >= 1");
    cfg.optimizer.stop_tol = get_or<double>(s, path, "stop_tol", 0.0);
    if (cfg.optimizer.stop_tol < 0.0)
      throw ConfigError(path + ".stop_tol", "must be >= 0");
    cfg.optimizer.record_every = get_or<long>(s, path, "record_every", 1);
    if (cfg.optimizer.record_every < 1)
      throw ConfigError(path + ".record_every", "must be >= 1");
  }

  if (j.contains("diagnostics")) {
    const json& s = j.at("diagnostics");
    const std::string path = "config.diagnostics";
    reject_unknown(s, path,
                   {"decomposition", "checks", "assert_checks", "thm1_regime",
                    "gamma1", "c_max", "basin_constant", "loo"});
    cfg.diagnostics.decomposition = get_or<bool>(s, path, "decomposition", true);
    cfg.diagnostics.checks =
        get_or<std::vector<std::string>>(s, path, "checks", {});
    for (const std::string& c : cfg.diagnostics.checks)
      if (c != "descent" && c != "onestep" && c != "helpers" && c != "drift")
        throw ConfigError(path + ".checks", "unknown check '" + c + "'");
    cfg.diagnostics.assert_checks = get_or<bool>(s, path, "assert_checks", false);
    cfg.diagnostics.thm1_regime = get_or<bool>(s, path, "thm1_regime", false);
    cfg.diagnostics.gamma1 = get_or<double>(s, path, "gamma1", 1.0);
    cfg.diagnostics.c_max = get_or<double>(s, path, "c_max", 100.0);
    cfg.diagnostics.basin_constant = get_or<double>(s, path, "basin_constant", 1.0);
    if (s.contains("loo")) {
      const json& l = s.at("loo");
      reject_unknown(l, path + ".loo", {"count", "kinds"});
      if (l.contains("count")) {
        if (l.at("count").is_string()) {
          if (l.at("count").get<std::string>() != "all")
            throw ConfigError(path + ".loo.count", "must be a count or \"all\"");
          cfg.diagnostics.loo.count = -1;
        } else {
          cfg.diagnostics.loo.count = get_required<Eigen::Index>(l, path + ".loo", "count");
        }
      }
      if (l.contains("kinds")) {
        cfg.diagnostics.loo.classical = false;
        cfg.diagnostics.loo.weakly_coupled = false;
        for (const auto& k : l.at("kinds")) {
          const std::string name = k.get<std::string>();
          if (name == "classical") cfg.diagnostics.loo.classical = true;
          else if (name == "weakly_coupled") cfg.diagnostics.loo.weakly_coupled = true;
          else throw ConfigError(path + ".loo.kinds", "unknown kind '" + name + "'");
        }
      }
    }
  }

  if (j.contains("replication")) {
    const json& s = j.at("replication");
    reject_unknown(s, "config.replication", {"n_seeds"});
    cfg.n_seeds = get_or<long>(s, "config.replication", "n_seeds", 1);
    if (cfg.n_seeds < 1) throw ConfigError("config.replication.n_seeds", "must be >= 1");
  }

  if (j.contains("output")) {
    const json& s = j.at("output");
    reject_unknown(s, "config.output", {"directory", "formats", "svg"});
    cfg.output.directory = get_or<std::string>(s, "config.output", "directory", "");
    if (s.contains("formats")) {
      cfg.output.csv = false;
      cfg.output.json = false;
      for (const auto& f : s.at("formats")) {
        const std::string name = f.get<std::string>();
        if (name == "csv") cfg.output.csv = true;
        else if (name == "json") cfg.output.json = true;
        else throw ConfigError("config.output.formats", "unknown format '" + name + "'");
      }
    }
    cfg.output.svg = get_or<bool>(s, "config.output", "svg", false);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["name"] = cfg.name;
  j["master_seed"] = cfg.master_seed;
  json g{{"d", cfg.gt.d},       {"r", cfg.gt.r},         {"kappa", cfg.gt.kappa},
         {"sigma1", cfg.gt.sigma1}, {"style", cfg.gt.style}};
  if (cfg.gt.seed) g["seed"] = *cfg.gt.seed;
  j["ground_truth"] = g;
  json s{{"p", cfg.sampling.p_grid}};
  if (cfg.sampling.seed) s["seed"] = *cfg.sampling.seed;
  j["sampling"] = s;
  json i{{"scheme", cfg.init.scheme}, {"r_prime", cfg.init.r_prime_grid}};
  if (cfg.init.alpha.theorem_rule)
    i["alpha"] = json{{"rule", "theorem"}, {"c_alpha", cfg.init.alpha.c_alpha}};
  else
    i["alpha"] = cfg.init.alpha.grid;
  if (cfg.init.seed) i["seed"] = *cfg.init.seed;
  j["init"] = i;
  json e = cfg.optimizer.eta.kind == EtaRule::Kind::theorem
               ? json{{"rule", "theorem"}, {"c_eta", cfg.optimizer.eta.value}}
               : json{{"rule", "explicit"}, {"value", cfg.optimizer.eta.value}};
  j["optimizer"] = json{{"eta", e},
                        {"max_iters", cfg.optimizer.max_iters},
                        {"stop_tol", cfg.optimizer.stop_tol},
                        {"record_every", cfg.optimizer.record_every}};
  json loo{{"count", cfg.diagnostics.loo.count}};
  json kinds = json::array();
  if (cfg.diagnostics.loo.classical) kinds.push_back("classical");
  if (cfg.diagnostics.loo.weakly_coupled) kinds.push_back("weakly_coupled");
  loo["kinds"] = kinds;
  j["diagnostics"] = json{{"decomposition", cfg.diagnostics.decomposition},
                          {"checks", cfg.diagnostics.checks},
                          {"assert_checks", cfg.diagnostics.assert_checks},
                          {"thm1_regime", cfg.diagnostics.thm1_regime},
                          {"gamma1", cfg.diagnostics.gamma1},
                          {"c_max", cfg.diagnostics.c_max},
                          {"basin_constant", cfg.diagnostics.basin_constant},
                          {"loo", loo}};
  j["replication"] = json{{"n_seeds", cfg.n_seeds}};
  json formats = json::array();
  if (cfg.output.csv) formats.push_back("csv");
  if (cfg.output.json) formats.push_back("json");
  j["output"] = json{{"directory", cfg.output.directory},
                     {"formats", formats},
                     {"svg", cfg.output.svg}};
  return j;
}

json ground_truth_to_json(const GroundTruth& gt) {
  std::vector<double> basis;
  basis.reserve(static_cast<std::size_t>(gt.d * gt.r));
  for (Eigen::Index i = 0; i < gt.d; ++i)
    for (Eigen::Index k = 0; k < gt.r; ++k) basis.push_back(gt.basis.matrix()(i, k));
  return json{{"d", gt.d},
              {"r", gt.r},
              {"spectrum", std::vector<double>(gt.spectrum.data(),
                                               gt.spectrum.data() + gt.spectrum.size())},
              {"mu", gt.mu},
              {"kappa", gt.kappa},
              {"basis", basis},
              {"seed", gt.seed},
              {"style", gt.style}};
}

GroundTruth ground_truth_from_json(const json& j) {
  const auto d = j.at("d").get<Eigen::Index>();
  const auto r = j.at("r").get<Eigen::Index>();
  const auto basis_flat = j.at("basis").get<std::vector<double>>();
  if (basis_flat.size() != static_cast<std::size_t>(d * r))
    throw ConfigError("ground_truth.basis", "wrong length");
  Matrix v(d, r);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < r; ++k)
      v(i, k) = basis_flat[static_cast<std::size_t>(i * r + k)];
  const auto spec = j.at("spectrum").get<std::vector<double>>();
  if (spec.size() != static_cast<std::size_t>(r))
    throw ConfigError("ground_truth.spectrum", "wrong length");
  Vector spectrum(r);
  for (Eigen::Index i = 0; i < r; ++i) spectrum(i) = spec[static_cast<std::size_t>(i)];
  return GroundTruth{d,
                     r,
                     OrthonormalBasis(std::move(v)),
                     std::move(spectrum),
                     j.at("mu").get<double>(),
                     j.at("kappa").get<double>(),
                     j.at("seed").get<std::uint64_t>(),
                     j.at("style").get<std::string>()};
}

json observation_set_to_json(const ObservationSet& obs) {
  return json{{"d", obs.d()},
              {"p", obs.p()},
              {"seed", obs.seed()},
              {"rle", mask_to_rle(obs)}};
}

ObservationSet observation_set_from_json(const json& j) {
  return mask_from_rle(j.at("d").get<Eigen::Index>(), j.at("p").get<double>(),
                       j.at("seed").get<std::uint64_t>(),
                       j.at("rle").get<std::vector<std::uint64_t>>());
}

}  // namespace mcimplicit
