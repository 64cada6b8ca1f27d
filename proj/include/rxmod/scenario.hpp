#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rxmod/units.hpp"

namespace rxmod::scenario {

using units::Quantity;

// Kinetic data for one reaction. Rate constants carry SI-canonical derived
// units matching the rate-law order. The Arrhenius pair is supported but not
// exercised by the shipped templates.
struct KineticsSpec {
  Quantity k_forward;
  std::optional<Quantity> k_reverse;
  std::optional<std::pair<Quantity, Quantity>> arrhenius;  // (k0, Ea)
};

struct Reaction {
  std::map<std::string, int> reactants;  // species -> stoichiometric nu >= 1
  std::map<std::string, int> products;
  bool reversible = false;
  KineticsSpec kinetics;
};

struct ReactionScheme {
  std::vector<std::string> components;  // ordered species names
  std::vector<Reaction> reactions;
};

struct OperationMode {
  bool isothermal = false;
  bool adiabatic = false;
};

struct DensityModel {
  bool constant = true;
  // Non-constant case only: per-species molar masses and pure densities.
  std::map<std::string, Quantity> molar_mass;
  std::map<std::string, Quantity> pure_density;
};

// Full structured description of one reactor case. Parameter values are kept
// in their prompt units; conversion to SI happens downstream.
struct ReactorScenario {
  std::string template_id;
  std::uint64_t seed = 0;
  ReactionScheme scheme;
  OperationMode mode;
  DensityModel density;
  std::map<std::string, Quantity> parameters;
  std::set<std::string> omitted;  // required parameters excluded from the prompt
};

enum class Topology { kSingle, kConsecutive, kParallel };

struct ScenarioTemplate {
  std::string id;
  OperationMode mode;
  bool constant_density = true;
  int n_components = 2;
  bool reversible = false;
  Topology topology = Topology::kSingle;
  std::set<std::string> omitted;  // omission case only
  bool extrapolation = false;
};

// The 26 training templates: 4 operation modes x 6 reaction scenarios for
// constant density, plus the two non-constant-density templates. Ordering is
// fixed and covered by a golden test.
std::vector<ScenarioTemplate> enumerate_templates();

// The four extrapolation templates: (a) consecutive reaction, (b) parallel
// reactions, (c) non-constant density with five components, (d) a
// training-style template with omitted parameters.
std::vector<ScenarioTemplate> extrapolation_templates();

// Lookup across both lists; nullptr when the id is unknown.
std::optional<ScenarioTemplate> find_template(const std::string& id);

// Ordered species names for a template (A, B, C, [D,] E naming).
std::vector<std::string> species_names(const ScenarioTemplate& t);

// Ordered canonical names of the parameters the prompt must supply; a pure
// function of (mode, density, scheme shape). Kinetic constants are carried
// in the scheme, not here.
std::vector<std::string> required_parameters(const ScenarioTemplate& t);

// Sub-ranges used when drawing parameter values (SI magnitudes), chosen so
// every instantiated system is stable and integrable while all prompt
// magnitudes stay inside prompt_range.
struct SamplingConfig {
  double prompt_range_lo = 1e-4;
  double prompt_range_hi = 1e5;
  double si_prob = 0.5;  // probability of keeping the SI unit in the prompt
};

// Deterministic instantiation: identical (template, seed) pairs produce
// bit-identical scenarios.
ReactorScenario instantiate(const ScenarioTemplate& t, std::uint64_t seed,
                            const SamplingConfig& cfg = {});

// ---------------------------------------------------------------------------
// Record serialization: one JSON object per scenario, stable field order.
// ---------------------------------------------------------------------------
std::string to_json(const ReactorScenario& s);
ReactorScenario scenario_from_json(const std::string& text);

// ---------------------------------------------------------------------------
// Seed derivation for reproducible corpus streams.
// ---------------------------------------------------------------------------
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, const std::string& template_id,
                          std::uint64_t stream, std::uint64_t index);

}  // namespace rxmod::scenario
