#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rxmod/physics.hpp"

namespace rxmod::sim {

// Discrete solution record: all unknowns at every accepted step plus the
// derivative values the solver actually used, so substituting a sample back
// into the residual reproduces (numerical) zero.
struct Trajectory {
  std::vector<double> times;
  std::vector<std::string> columns;               // unknown names
  std::vector<std::vector<double>> values;        // [sample][unknown]
  std::vector<std::vector<double>> derivatives;   // [sample][unknown], NaN for algebraics
  std::vector<std::string> aux_columns;           // named derived series
  std::vector<std::vector<double>> aux_values;    // [sample][aux]
  bool used_implicit = false;

  std::size_t size() const { return times.size(); }

  // Delimited text export: time plus one column per unknown.
  std::string to_tsv() const;
};

struct SimulateOptions {
  std::optional<double> t_end;  // default: 10 residence times (10*V/q)
  int n_steps = 1000;
  bool force_implicit = false;
  double refine_tol = 1e-6;       // explicit path: successive refinement agreement
  int max_steps = 1 << 19;        // refinement cap before falling back / giving up
  double newton_tol = 1e-10;
  int max_newton_iterations = 50;
  double jacobian_perturbation = 1e-7;
  double stiffness_switch = 100.0;  // switch to implicit when ||J||*h exceeds this
};

// Integrates the system from its start values. Explicit classical RK4 with
// step-halving refinement for ODE-shaped systems; implicit first-order
// stepping with damped Newton for DAE systems, stiff cases and anything not
// in explicit shape. Throws NewtonDivergence, StepLimitExceeded or
// NonFiniteState.
Trajectory simulate(const physics::EquationSystem& sys,
                    const SimulateOptions& opts = {});

// Default horizon used when opts.t_end is unset.
double default_t_end(const physics::EquationSystem& sys);

// ---------------------------------------------------------------------------
// Newton plumbing, exposed for the finite-difference validation checks.
// ---------------------------------------------------------------------------

using ResidualFn = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

// Residual of one backward-Euler step: der slots are (v - prev)/h for
// states, algebraic rows are evaluated at v and time t.
ResidualFn implicit_step_residual(const physics::CompiledSystem& cs,
                                  Eigen::VectorXd prev, double h, double t);

// Forward (or central) finite-difference Jacobian with per-variable relative
// perturbation.
Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& v,
                            double rel_perturbation, bool central = false);

}  // namespace rxmod::sim
