#include "rxmod/codegen.hpp"

#include <cmath>

#include "rxmod/errors.hpp"

namespace rxmod::codegen {

namespace ex = rxmod::expr;
using scenario::ReactorScenario;

const std::string& default_system_message() {
  static const std::string msg =
      "You are an expert in chemical reaction engineering and the Modelica "
      "modeling language. Given the textual description of a dynamic reactor "
      "scenario, respond with one complete, simulatable Modelica model of the "
      "system. Declare every given parameter with its value converted to SI "
      "units, use Modelica built-in physical types instead of generic Real "
      "types wherever possible, give every state variable a start value, and "
      "append a descriptive comment to every line of code. Output only "
      "Modelica code.";
  return msg;
}

namespace {

std::string latex_name(const std::string& name) {
  if (name == "q") return "q";
  if (name == "V") return "V";
  if (name == "V0") return "V_0";
  if (name == "T") return "T";
  if (name == "T_in") return "T_{in}";
  if (name == "T_cool") return "T_{cool}";
  if (name == "rho") return "\\rho";
  if (name == "cp") return "c_p";
  if (name == "UA") return "UA";
  if (name.rfind("dHr", 0) == 0) return "\\Delta H_{r," + name.substr(3) + "}";
  if (name.rfind("kf", 0) == 0) return "k_{f," + name.substr(2) + "}";
  if (name.rfind("kr", 0) == 0) return "k_{r," + name.substr(2) + "}";
  if (name.rfind("rho", 0) == 0) return "\\rho_{" + name.substr(3) + "}";
  if (name[0] == 'M') return "M_{" + name.substr(1) + "}";
  if (name[0] == 'c' && name.back() == '0')
    return "c_{" + name.substr(1, name.size() - 2) + ",0}";
  return name;
}

std::string phrase_for(const std::string& name) {
  if (name == "q") return "the inlet volumetric flow rate is";
  if (name == "V") return "the reaction volume is";
  if (name == "V0") return "the nominal reaction volume is";
  if (name == "T") return "the reactor temperature is held constant at";
  if (name == "T_in") return "the feed enters at";
  if (name == "T_cool") return "the coolant temperature is";
  if (name == "rho") return "the density of the mixture is";
  if (name == "cp") return "the specific heat capacity of the mixture is";
  if (name == "UA")
    return "the product of heat transfer coefficient and exchange area is";
  if (name.rfind("dHr", 0) == 0)
    return "the molar reaction enthalpy of reaction " + name.substr(3) + " is";
  if (name.rfind("rho", 0) == 0)
    return "the density of pure " + name.substr(3) + " is";
  if (name[0] == 'M') return "the molar mass of " + name.substr(1) + " is";
  if (name[0] == 'c' && name.back() == '0')
    return "the inlet concentration of " + name.substr(1, name.size() - 2) +
           " is";
  return "the value of " + name + " is";
}

std::string quantity_latex(const std::string& name, const units::Quantity& q) {
  return "$" + latex_name(name) + " = " + ex::format_double(q.value) + "\\," +
         q.unit.latex + "$";
}

std::string reaction_latex(const scenario::Reaction& r,
                           const std::vector<std::string>& species) {
  auto side = [&](const std::map<std::string, int>& st) {
    std::string out;
    for (const auto& sp : species) {
      const auto it = st.find(sp);
      if (it == st.end()) continue;
      if (!out.empty()) out += " + ";
      if (it->second != 1) out += std::to_string(it->second) + "\\,";
      out += sp;
    }
    return out;
  };
  const char* arrow = r.reversible ? " \\leftrightarrow " : " \\rightarrow ";
  return "$" + side(r.reactants) + arrow + side(r.products) + "$";
}

std::string mode_prose(const scenario::OperationMode& m) {
  if (m.isothermal && m.adiabatic) return "isothermal, adiabatic mode";
  if (m.isothermal)
    return "isothermal mode with heat exchange through a cooling jacket";
  if (m.adiabatic) return "non-isothermal, adiabatic mode";
  return "non-isothermal mode with heat exchange through a cooling jacket";
}

}  // namespace

std::string render_question(const ReactorScenario& s) {
  const auto tmpl = scenario::find_template(s.template_id);
  std::string text = "Consider a continuous stirred-tank reactor (CSTR) "
                     "operated in " +
                     mode_prose(s.mode) + ". ";

  const auto& reactions = s.scheme.reactions;
  if (reactions.size() == 1) {
    text += std::string("The following ") +
            (reactions[0].reversible ? "reversible" : "irreversible") +
            " reaction takes place between " +
            std::to_string(s.scheme.components.size()) + " components: " +
            reaction_latex(reactions[0], s.scheme.components) + ". ";
  } else {
    const bool consecutive =
        tmpl && tmpl->topology == scenario::Topology::kConsecutive;
    text += std::string("The following ") +
            (reactions[0].reversible ? "reversible" : "irreversible") +
            (consecutive ? " consecutive reactions take place: "
                         : " parallel reactions take place: ");
    for (std::size_t i = 0; i < reactions.size(); ++i) {
      if (i) text += " and ";
      text += reaction_latex(reactions[i], s.scheme.components) +
              " (reaction " + std::to_string(i + 1) + ")";
    }
    text += ". ";
  }

  if (s.density.constant) {
    text += "The density of the reaction mixture can be assumed constant. ";
  } else {
    text += "The density of the reaction mixture depends on composition; "
            "assume volume additivity of the pure components and "
            "constant-volume overflow operation. ";
  }

  text += "The following data are given:";
  std::vector<std::string> names;
  if (tmpl) {
    for (const auto& n : scenario::required_parameters(*tmpl))
      if (s.parameters.count(n)) names.push_back(n);
  } else {
    for (const auto& [n, q] : s.parameters) names.push_back(n);
  }
  for (const auto& name : names)
    text += " " + phrase_for(name) + " " +
            quantity_latex(name, s.parameters.at(name)) + ";";
  for (std::size_t r = 0; r < reactions.size(); ++r) {
    const std::string idx = std::to_string(r + 1);
    text += " the forward rate constant of reaction " + idx + " is " +
            quantity_latex("kf" + idx, reactions[r].kinetics.k_forward) + ";";
    if (reactions[r].kinetics.k_reverse)
      text += " the reverse rate constant of reaction " + idx + " is " +
              quantity_latex("kr" + idx, *reactions[r].kinetics.k_reverse) + ";";
  }
  if (!text.empty() && text.back() == ';') text.back() = '.';

  text += " Provide a complete dynamic Modelica model of this reactor.";
  return text;
}

frontend::ModelicaAST answer_ast(const ReactorScenario& s,
                                 const physics::EquationSystem& sys) {
  (void)s;
  frontend::ModelicaAST ast;
  ast.model_name = "CSTR";
  ast.end_name = "CSTR";
  ast.has_equation_section = true;
  ast.has_end = true;

  auto value_expr = [](double v) {
    return v < 0 ? ex::neg(ex::num(-v)) : ex::num(v);
  };

  for (const auto& p : sys.parameters) {
    frontend::Declaration d;
    d.is_parameter = true;
    d.type_name = p.modelica_type;
    d.name = p.name;
    d.value = value_expr(p.si_value);
    d.comment = p.comment;
    ast.declarations.push_back(std::move(d));
  }
  for (const auto& v : sys.unknowns) {
    frontend::Declaration d;
    d.is_parameter = false;
    d.type_name = v.modelica_type;
    d.name = v.name;
    if (!v.start_param.empty())
      d.modifiers.emplace_back("start", ex::sym(v.start_param));
    d.comment = v.comment;
    ast.declarations.push_back(std::move(d));
  }
  for (const auto& eq : sys.equations) {
    frontend::ParsedEquation pe;
    pe.lhs = eq.lhs;
    pe.rhs = eq.rhs;
    pe.comment = eq.comment;
    ast.equations.push_back(std::move(pe));
  }
  return ast;
}

std::string render_answer(const ReactorScenario& s,
                          const physics::EquationSystem& sys) {
  return frontend::print(answer_ast(s, sys));
}

QAPair make_qa(const ReactorScenario& s, const std::string& system_message) {
  QAPair qa;
  qa.system_message = system_message;
  qa.template_id = s.template_id;
  qa.seed = s.seed;
  qa.question = render_question(s);
  if (s.omitted.empty()) {
    const auto sys = physics::build_equations(s);
    qa.answer = render_answer(s, sys);
  }
  return qa;
}

}  // namespace rxmod::codegen
