#include "netkf/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace netkf {

namespace {

using nlohmann::json;

std::string at_index(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

const json& require(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ScenarioError(path + "." + key, "required field is missing");
  }
  return obj.at(key);
}

void allow_only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) {
    throw ScenarioError(path, "expected an object");
  }
  for (const auto& item : obj.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
      throw ScenarioError(path + "." + item.key(), "unknown field");
    }
  }
}

double to_double(const json& v, const std::string& path) {
  if (!v.is_number()) {
    throw ScenarioError(path, "expected a number");
  }
  return v.get<double>();
}

std::uint64_t to_count(const json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
    throw ScenarioError(path, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

std::string to_string_field(const json& v, const std::string& path) {
  if (!v.is_string()) {
    throw ScenarioError(path, "expected a string");
  }
  return v.get<std::string>();
}

std::vector<double> to_vector(const json& v, const std::string& path) {
  if (!v.is_array()) {
    throw ScenarioError(path, "expected an array of numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(to_double(v[i], at_index(path, i)));
  }
  return out;
}

Vector to_eigen_vector(const json& v, const std::string& path) {
  const auto values = to_vector(v, path);
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

bool is_matrix(const json& v) {
  return v.is_array() && !v.empty() && v[0].is_array() && (v[0].empty() || v[0][0].is_number());
}

Matrix to_matrix(const json& v, const std::string& path) {
  if (v.is_number()) {
    return Matrix::Constant(1, 1, v.get<double>());
  }
  if (!is_matrix(v)) {
    throw ScenarioError(path, "expected a matrix given as an array of rows");
  }
  const std::size_t rows = v.size();
  const std::size_t cols = v[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = to_vector(v[i], at_index(path, i));
    if (row.size() != cols) {
      throw ScenarioError(at_index(path, i), "row has " + std::to_string(row.size()) +
                                                 " entries, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
    }
  }
  return m;
}

// A single matrix, or a list of matrices forming one period of a time-varying sequence.
PeriodicSequence<Matrix> to_periodic(const json& v, const std::string& path) {
  if (v.is_number() || is_matrix(v)) {
    return PeriodicSequence<Matrix>({to_matrix(v, path)});
  }
  if (!v.is_array() || v.empty()) {
    throw ScenarioError(path, "expected a matrix or a nonempty list of matrices");
  }
  std::vector<Matrix> period;
  for (std::size_t i = 0; i < v.size(); ++i) {
    period.push_back(to_matrix(v[i], at_index(path, i)));
  }
  return PeriodicSequence<Matrix>(std::move(period));
}

PlantModel parse_plant(const json& j, const std::string& path) {
  allow_only(j, path, {"A", "Q", "x0", "P0", "sensors"});
  PlantModel plant;
  plant.a_table = to_periodic(require(j, path, "A"), path + ".A");
  plant.n = plant.a_table.table().front().rows();
  plant.q_table = to_periodic(require(j, path, "Q"), path + ".Q");
  plant.x0 = j.contains("x0") ? to_eigen_vector(j.at("x0"), path + ".x0")
                              : Vector::Zero(plant.n);
  plant.p0 = to_matrix(require(j, path, "P0"), path + ".P0");
  const json& sensors = require(j, path, "sensors");
  if (!sensors.is_array() || sensors.empty()) {
    throw ScenarioError(path + ".sensors", "expected a nonempty list of sensors");
  }
  for (std::size_t m = 0; m < sensors.size(); ++m) {
    const std::string sp = at_index(path + ".sensors", m);
    allow_only(sensors[m], sp, {"C", "R"});
    SensorSpec s;
    s.c = to_matrix(require(sensors[m], sp, "C"), sp + ".C");
    s.r_table = to_periodic(require(sensors[m], sp, "R"), sp + ".R");
    plant.sensors.push_back(std::move(s));
  }
  return plant;
}

HoldingTimeDistribution parse_holding(const json& j, const std::string& path) {
  allow_only(j, path, {"point", "uniform", "pmf"});
  if (j.size() != 1) {
    throw ScenarioError(path, "give exactly one of point, uniform, pmf");
  }
  if (j.contains("point")) {
    const auto d = to_count(j.at("point"), path + ".point");
    if (d < 1) {
      throw ScenarioError(path + ".point", "holding times start at 1");
    }
    return HoldingTimeDistribution::point_mass(d);
  }
  if (j.contains("uniform")) {
    const json& u = j.at("uniform");
    if (!u.is_array() || u.size() != 2) {
      throw ScenarioError(path + ".uniform", "expected [lo, hi]");
    }
    const auto lo = to_count(u[0], path + ".uniform[0]");
    const auto hi = to_count(u[1], path + ".uniform[1]");
    if (lo < 1 || hi < lo) {
      throw ScenarioError(path + ".uniform", "need 1 <= lo <= hi");
    }
    return HoldingTimeDistribution::uniform(lo, hi);
  }
  const json& pmf = j.at("pmf");
  if (!pmf.is_array()) {
    throw ScenarioError(path + ".pmf",
                        "holding times need a finite support given as a list of probabilities");
  }
  return HoldingTimeDistribution(to_vector(pmf, path + ".pmf"));
}

void raise_first(const std::vector<Violation>& violations) {
  if (violations.empty()) {
    return;
  }
  std::string msg = violations.front().message;
  for (std::size_t i = 1; i < violations.size(); ++i) {
    msg += "; " + violations[i].field + ": " + violations[i].message;
  }
  throw ScenarioError(violations.front().field, msg);
}

NetworkChain parse_chain(const json& j, const std::string& path) {
  const std::string type = to_string_field(require(j, path, "type"), path + ".type");
  if (type == "markov") {
    allow_only(j, path, {"type", "P", "initial"});
    MarkovNetworkChain c;
    c.transition = to_matrix(require(j, path, "P"), path + ".P");
    if (j.contains("initial")) {
      c.initial = to_eigen_vector(j.at("initial"), path + ".initial");
    } else {
      c.initial = Vector::Zero(c.transition.rows());
      if (c.initial.size() > 0) {
        c.initial(0) = 1.0;
      }
    }
    raise_first(validate_chain(c, path));
    return c;
  }
  if (type == "semi_markov") {
    allow_only(j, path, {"type", "Q", "holding", "initial"});
    SemiMarkovNetworkChain c;
    c.embedded = to_matrix(require(j, path, "Q"), path + ".Q");
    const json& holding = require(j, path, "holding");
    if (!holding.is_array()) {
      throw ScenarioError(path + ".holding", "expected one holding-time law per state");
    }
    for (std::size_t i = 0; i < holding.size(); ++i) {
      c.holding.push_back(parse_holding(holding[i], at_index(path + ".holding", i)));
    }
    if (j.contains("initial")) {
      c.initial = to_eigen_vector(j.at("initial"), path + ".initial");
    } else {
      c.initial = Vector::Zero(c.embedded.rows());
      if (c.initial.size() > 0) {
        c.initial(0) = 1.0;
      }
    }
    raise_first(validate_chain(c, path));
    return c;
  }
  throw ScenarioError(path + ".type", "unknown chain type '" + type +
                                          "' (expected markov or semi_markov)");
}

GainDistribution parse_gain(const json& j, const std::string& path) {
  const std::string type = to_string_field(require(j, path, "type"), path + ".type");
  if (type == "point") {
    allow_only(j, path, {"type", "value"});
    return PointMassGain{to_double(require(j, path, "value"), path + ".value")};
  }
  if (type == "exponential" || type == "rayleigh") {
    allow_only(j, path, {"type", "mean"});
    return ExponentialGain{to_double(require(j, path, "mean"), path + ".mean")};
  }
  if (type == "lognormal") {
    allow_only(j, path, {"type", "mu", "sigma"});
    return LogNormalGain{to_double(require(j, path, "mu"), path + ".mu"),
                         to_double(require(j, path, "sigma"), path + ".sigma")};
  }
  if (type == "discrete") {
    allow_only(j, path, {"type", "values", "probs"});
    return DiscreteGain{to_vector(require(j, path, "values"), path + ".values"),
                        to_vector(require(j, path, "probs"), path + ".probs")};
  }
  throw ScenarioError(path + ".type", "unknown gain distribution '" + type + "'");
}

SuccessFunction parse_success(const json& j, const std::string& path) {
  const std::string type = to_string_field(require(j, path, "type"), path + ".type");
  SuccessFunction f;
  if (j.contains("attempts")) {
    f.attempts = static_cast<unsigned>(to_count(j.at("attempts"), path + ".attempts"));
  }
  if (type == "fsk") {
    allow_only(j, path, {"type", "noise_density", "attempts"});
    f.form = FskSuccess{to_double(require(j, path, "noise_density"), path + ".noise_density")};
  } else if (type == "exp_snr") {
    allow_only(j, path, {"type", "scale", "attempts"});
    f.form = ExpSnrSuccess{to_double(require(j, path, "scale"), path + ".scale")};
  } else if (type == "table") {
    allow_only(j, path, {"type", "x", "b", "values", "attempts"});
    f.form = TableSuccess{to_vector(require(j, path, "x"), path + ".x"),
                          to_vector(require(j, path, "b"), path + ".b"),
                          to_matrix(require(j, path, "values"), path + ".values")};
  } else {
    throw ScenarioError(path + ".type", "unknown success function '" + type + "'");
  }
  return f;
}

PowerPolicy parse_power(const json& j, const std::string& path) {
  const std::string type = to_string_field(require(j, path, "type"), path + ".type");
  if (type == "constant") {
    allow_only(j, path, {"type", "u"});
    return ConstantPower{to_double(require(j, path, "u"), path + ".u")};
  }
  if (type == "saturated_inverse") {
    allow_only(j, path, {"type", "K", "u_min", "u_max"});
    return SaturatedInversePower{to_double(require(j, path, "K"), path + ".K"),
                                 to_double(require(j, path, "u_min"), path + ".u_min"),
                                 to_double(require(j, path, "u_max"), path + ".u_max")};
  }
  if (type == "per_state") {
    allow_only(j, path, {"type", "u"});
    return PerStatePower{to_vector(require(j, path, "u"), path + ".u")};
  }
  throw ScenarioError(path + ".type", "unknown power policy '" + type + "'");
}

RatePolicy parse_rate(const json& j, const std::string& path) {
  const std::string type = to_string_field(require(j, path, "type"), path + ".type");
  if (type == "constant") {
    allow_only(j, path, {"type", "b"});
    return ConstantRate{to_double(require(j, path, "b"), path + ".b")};
  }
  if (type == "per_state") {
    allow_only(j, path, {"type", "b"});
    return PerStateRate{to_vector(require(j, path, "b"), path + ".b")};
  }
  throw ScenarioError(path + ".type", "unknown rate policy '" + type + "'");
}

LinkModel parse_link(const json& j, const std::string& path) {
  if (j.contains("phi")) {
    allow_only(j, path, {"phi"});
    return DirectLink{to_vector(j.at("phi"), path + ".phi")};
  }
  allow_only(j, path, {"gain", "success", "power", "rate"});
  PhysicalLink link;
  const json& gains = require(j, path, "gain");
  if (!gains.is_array()) {
    throw ScenarioError(path + ".gain", "expected one gain law per network state");
  }
  for (std::size_t i = 0; i < gains.size(); ++i) {
    link.gain_by_state.push_back(parse_gain(gains[i], at_index(path + ".gain", i)));
  }
  link.success = parse_success(require(j, path, "success"), path + ".success");
  if (j.contains("power")) {
    link.power = parse_power(j.at("power"), path + ".power");
  }
  if (j.contains("rate")) {
    link.rate = parse_rate(j.at("rate"), path + ".rate");
  }
  return link;
}

}  // namespace

Scenario parse_scenario(std::string_view json_text, const std::string& origin) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ScenarioError(origin, std::string("parse error: ") + e.what());
  }
  allow_only(root, "scenario",
             {"schema_version", "name", "plant", "topology", "chain", "links", "experiment",
              "certificates"});
  Scenario s;
  s.schema_version = static_cast<int>(
      to_count(require(root, "scenario", "schema_version"), "scenario.schema_version"));
  if (s.schema_version != kScenarioSchemaVersion) {
    throw ScenarioError("scenario.schema_version",
                        "unsupported version " + std::to_string(s.schema_version));
  }
  if (root.contains("name")) {
    s.name = to_string_field(root.at("name"), "scenario.name");
  }
  s.plant = parse_plant(require(root, "scenario", "plant"), "plant");
  raise_first(validate_model(s.plant));
  const std::size_t m_count = s.plant.sensors.size();

  if (root.contains("topology")) {
    const json& t = root.at("topology");
    allow_only(t, "topology", {"parent"});
    const json& parents = require(t, "topology", "parent");
    if (!parents.is_array()) {
      throw ScenarioError("topology.parent", "expected a list of parent node ids");
    }
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      ids.push_back(to_count(parents[i], at_index("topology.parent", i)));
    }
    if (ids.size() != m_count) {
      throw ScenarioError("topology.parent", "has " + std::to_string(ids.size()) +
                                                 " entries, plant has " + std::to_string(m_count) +
                                                 " sensors");
    }
    try {
      s.topology = Topology(std::move(ids));
    } catch (const ModelError& e) {
      throw ScenarioError("topology.parent", e.what());
    }
  } else {
    s.topology = Topology::star(m_count);
  }

  s.chain = parse_chain(require(root, "scenario", "chain"), "chain");
  const std::size_t states = s.state_count();

  const json& links = require(root, "scenario", "links");
  if (!links.is_array() || links.size() != m_count) {
    throw ScenarioError("links", "expected one link per sensor (" + std::to_string(m_count) + ")");
  }
  for (std::size_t m = 0; m < links.size(); ++m) {
    const std::string lp = at_index("links", m);
    s.links.push_back(parse_link(links[m], lp));
    raise_first(validate_link(s.links.back(), states, lp));
  }

  if (root.contains("experiment")) {
    const json& e = root.at("experiment");
    allow_only(e, "experiment", {"trials", "horizon", "seed"});
    if (e.contains("trials")) {
      s.experiment.trials = to_count(e.at("trials"), "experiment.trials");
    }
    if (e.contains("horizon")) {
      s.experiment.horizon = to_count(e.at("horizon"), "experiment.horizon");
    }
    if (e.contains("seed")) {
      s.experiment.seed = to_count(e.at("seed"), "experiment.seed");
    }
    if (s.experiment.trials < 1 || s.experiment.horizon < 1) {
      throw ScenarioError("experiment", "trials and horizon must be >= 1");
    }
  }
  if (root.contains("certificates")) {
    const json& c = root.at("certificates");
    allow_only(c, "certificates", {"check", "rank_tolerance", "mc_samples"});
    if (c.contains("check")) {
      const json& list = c.at("check");
      if (!list.is_array()) {
        throw ScenarioError("certificates.check", "expected a list of certificate names");
      }
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = at_index("certificates.check", i);
        std::string name = to_string_field(list[i], path);
        if (name != "theorem1" && name != "theorem2" && name != "corollary1") {
          throw ScenarioError(path, "unknown certificate '" + name + "'");
        }
        s.certificates.checks.push_back(std::move(name));
      }
    }
    if (c.contains("rank_tolerance")) {
      try {
        s.certificates.tolerance =
            RankTolerance(to_double(c.at("rank_tolerance"), "certificates.rank_tolerance"));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError("certificates.rank_tolerance", e.what());
      }
    }
    if (c.contains("mc_samples")) {
      s.certificates.mc_samples = to_count(c.at("mc_samples"), "certificates.mc_samples");
    }
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ScenarioError(path.string(), "cannot open scenario file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  Scenario s = parse_scenario(buf.str(), path.string());
  if (s.name.empty()) {
    s.name = path.stem().string();
  }
  return s;
}

}  // namespace netkf
