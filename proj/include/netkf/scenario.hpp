#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "netkf/network.hpp"
#include "netkf/plant.hpp"
#include "netkf/stability.hpp"

namespace netkf {

inline constexpr int kScenarioSchemaVersion = 1;

/// Parse or validation failure; `field()` names the offending JSON path.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct ExperimentSpec {
  std::size_t trials = 100;
  std::size_t horizon = 200;
  std::uint64_t seed = 1;
};

struct CertificateSpec {
  std::vector<std::string> checks;  // empty: choose from the chain type
  RankTolerance tolerance;
  std::size_t mc_samples = 1'000'000;
};

struct Scenario {
  int schema_version = kScenarioSchemaVersion;
  std::string name;
  PlantModel plant;
  Topology topology = Topology::star(1);
  NetworkChain chain;
  std::vector<LinkModel> links;
  ExperimentSpec experiment;
  CertificateSpec certificates;

  std::size_t state_count() const { return netkf::state_count(chain); }
  bool is_semi_markov() const { return std::holds_alternative<SemiMarkovNetworkChain>(chain); }
  PhiTable phi() const { return phi_table(links, state_count()); }
  CertificateOptions certificate_options() const {
    return {certificates.tolerance, certificates.mc_samples, experiment.seed};
  }
};

Scenario parse_scenario(std::string_view json_text, const std::string& origin = "<scenario>");

Scenario load_scenario(const std::filesystem::path& path);

}  // namespace netkf
