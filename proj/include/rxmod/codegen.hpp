#pragma once

#include <cstdint>
#include <string>

#include "rxmod/frontend.hpp"
#include "rxmod/physics.hpp"
#include "rxmod/scenario.hpp"

namespace rxmod::codegen {

struct QAPair {
  std::string system_message;
  std::string question;
  std::string answer;  // empty for question-only (omission) records
  std::string template_id;
  std::uint64_t seed = 0;
};

// Fixed instruction text so corpora stay reproducible; overridable through
// the CLI config file.
const std::string& default_system_message();

// Deterministic prose description of the scenario: operating mode, reaction
// scheme in LaTeX with numeric stoichiometric coefficients, density
// assumption and every given parameter with value and prompt unit. Omitted
// parameters are absent from the text.
std::string render_question(const scenario::ReactorScenario& s);

// Reference model as a frontend AST; rendering goes through the shared
// pretty-printer so parse(render_answer(s)) round-trips byte-identically.
frontend::ModelicaAST answer_ast(const scenario::ReactorScenario& s,
                                 const physics::EquationSystem& sys);
std::string render_answer(const scenario::ReactorScenario& s,
                          const physics::EquationSystem& sys);

// Bundles system message, question and (for fully specified scenarios) the
// reference answer.
QAPair make_qa(const scenario::ReactorScenario& s,
               const std::string& system_message = default_system_message());

}  // namespace rxmod::codegen
