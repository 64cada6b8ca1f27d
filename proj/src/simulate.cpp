#include "rxmod/simulate.hpp"

#include <cmath>
#include <limits>

#include "rxmod/errors.hpp"
#include "rxmod/expr.hpp"

namespace rxmod::sim {

using physics::CompiledSystem;
using physics::EquationSystem;
using physics::VarKind;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Layout {
  const EquationSystem* sys;
  std::vector<int> state_idx;  // unknown indices of differential variables
  std::vector<int> alg_idx;

  explicit Layout(const EquationSystem& s) : sys(&s) {
    for (std::size_t i = 0; i < s.unknowns.size(); ++i) {
      if (s.unknowns[i].kind == VarKind::kDifferential)
        state_idx.push_back(static_cast<int>(i));
      else
        alg_idx.push_back(static_cast<int>(i));
    }
  }
};

bool is_concentration(const physics::Variable& v) {
  return v.name.size() >= 2 && v.name[0] == 'c' && v.name != "cp";
}

void check_finite(const Eigen::VectorXd& v, int step) {
  for (int i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw NonFiniteState("non-finite state component at step " +
                           std::to_string(step));
}

}  // namespace

double default_t_end(const EquationSystem& sys) {
  const auto* q = sys.find_parameter("q");
  const auto* v = sys.find_parameter("V");
  if (!v) v = sys.find_parameter("V0");
  if (q && v && q->si_value > 0.0) return 10.0 * v->si_value / q->si_value;
  return 10.0;
}

std::string Trajectory::to_tsv() const {
  std::string out = "time";
  for (const auto& c : columns) out += "\t" + c;
  out += "\n";
  for (std::size_t k = 0; k < times.size(); ++k) {
    out += expr::format_double(times[k]);
    for (const double v : values[k]) out += "\t" + expr::format_double(v);
    out += "\n";
  }
  return out;
}

ResidualFn implicit_step_residual(const CompiledSystem& cs, Eigen::VectorXd prev,
                                  double h, double t) {
  const EquationSystem& sys = cs.system();
  const int n = static_cast<int>(sys.unknowns.size());
  return [&cs, &sys, prev = std::move(prev), h, t, n](const Eigen::VectorXd& v,
                                                      Eigen::VectorXd& out) {
    thread_local std::vector<double> slots;
    slots = cs.make_slots();
    for (int i = 0; i < n; ++i) {
      slots[cs.unknown_slot(i)] = v[i];
      if (cs.der_slot(i) >= 0) slots[cs.der_slot(i)] = (v[i] - prev[i]) / h;
    }
    slots[cs.time_slot()] = t;
    out.resize(n);
    for (int e = 0; e < n; ++e) out[e] = cs.eval_residual(e, slots);
  };
}

Eigen::MatrixXd fd_jacobian(const ResidualFn& f, const Eigen::VectorXd& v,
                            double rel_perturbation, bool central) {
  const int n = static_cast<int>(v.size());
  Eigen::VectorXd base(n), hi(n), lo(n);
  if (!central) f(v, base);
  Eigen::MatrixXd J(n, n);
  for (int j = 0; j < n; ++j) {
    const double delta = rel_perturbation * std::max(std::fabs(v[j]), 1.0);
    Eigen::VectorXd vp = v;
    vp[j] += delta;
    f(vp, hi);
    if (central) {
      Eigen::VectorXd vm = v;
      vm[j] -= delta;
      f(vm, lo);
      J.col(j) = (hi - lo) / (2.0 * delta);
    } else {
      J.col(j) = (hi - base) / delta;
    }
  }
  return J;
}

namespace {

// ---------------------------------------------------------------------------
// Implicit first-order stepping with damped Newton iteration.
// ---------------------------------------------------------------------------

struct ImplicitIntegrator {
  const EquationSystem& sys;
  const CompiledSystem& cs;
  const Layout& layout;
  const SimulateOptions& opts;

  Eigen::VectorXd solve_step(const Eigen::VectorXd& prev, double h, double t,
                             int step_no) const {
    const int n = static_cast<int>(sys.unknowns.size());
    ResidualFn G = implicit_step_residual(cs, prev, h, t);
    Eigen::VectorXd v = prev;
    Eigen::VectorXd g(n), g_try(n);
    G(v, g);
    for (int it = 0; it < opts.max_newton_iterations; ++it) {
      const Eigen::MatrixXd J =
          fd_jacobian(G, v, opts.jacobian_perturbation, false);
      const Eigen::VectorXd delta = J.partialPivLu().solve(-g);
      if (!delta.allFinite())
        throw NewtonDivergence(step_no, "singular iteration matrix");
      // Damped line search on the residual norm.
      double lambda = 1.0;
      const double g0 = g.norm();
      bool accepted = false;
      for (int k = 0; k < 7; ++k, lambda *= 0.5) {
        const Eigen::VectorXd v_try = v + lambda * delta;
        G(v_try, g_try);
        if (g_try.allFinite() && (g_try.norm() <= (1.0 - 0.25 * lambda) * g0 ||
                                  g_try.norm() <= opts.newton_tol)) {
          v = v_try;
          g = g_try;
          accepted = true;
          break;
        }
      }
      if (!accepted) throw NewtonDivergence(step_no, "line search failed");
      bool converged = true;
      for (int j = 0; j < n; ++j) {
        if (std::fabs(lambda * delta[j]) >
            opts.newton_tol * std::max(1.0, std::fabs(v[j]))) {
          converged = false;
          break;
        }
      }
      if (converged) return v;
    }
    throw NewtonDivergence(step_no, "no convergence within iteration limit");
  }
};

Trajectory run_implicit(const EquationSystem& sys, const CompiledSystem& cs,
                        const Layout& layout, double t_end,
                        const SimulateOptions& opts) {
  const int n = static_cast<int>(sys.unknowns.size());
  ImplicitIntegrator integ{sys, cs, layout, opts};

  int n_steps = opts.n_steps;
  while (true) {
    const double h = t_end / n_steps;
    Trajectory traj;
    traj.used_implicit = true;
    for (const auto& u : sys.unknowns) traj.columns.push_back(u.name);

    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = sys.unknowns[i].start;
    // Consistent initialization: a micro backward-Euler step supplies the
    // algebraic components and the initial derivative values.
    const double h0 = std::max(t_end * 1e-9, 1e-300);
    const Eigen::VectorXd v_eps = integ.solve_step(v, h0, h0, 0);
    Eigen::VectorXd state0 = v;
    for (const int ai : layout.alg_idx) state0[ai] = v_eps[ai];
    Eigen::VectorXd der0 = (v_eps - v) / h0;

    auto push_sample = [&](double t, const Eigen::VectorXd& vals,
                           const Eigen::VectorXd& ders) {
      traj.times.push_back(t);
      std::vector<double> row(n), drow(n, kNaN);
      for (int i = 0; i < n; ++i) {
        row[i] = vals[i];
        if (sys.unknowns[i].kind == VarKind::kDifferential) drow[i] = ders[i];
      }
      traj.values.push_back(std::move(row));
      traj.derivatives.push_back(std::move(drow));
    };
    push_sample(0.0, state0, der0);

    bool positivity_ok = true;
    Eigen::VectorXd prev = state0;
    for (int k = 1; k <= n_steps; ++k) {
      const double t = h * k;
      const Eigen::VectorXd next = integ.solve_step(prev, h, t, k);
      check_finite(next, k);
      for (const int si : layout.state_idx) {
        if (is_concentration(sys.unknowns[si]) && next[si] < -1e-9) {
          positivity_ok = false;
          break;
        }
      }
      if (!positivity_ok) break;
      push_sample(t, next, (next - prev) / h);
      prev = next;
    }
    if (positivity_ok) return traj;
    if (2 * n_steps > opts.max_steps)
      throw StepLimitExceeded("implicit refinement exceeded step limit");
    n_steps *= 2;
  }
}

// ---------------------------------------------------------------------------
// Explicit RK4 with global step-halving refinement.
// ---------------------------------------------------------------------------

struct ExplicitRunner {
  const EquationSystem& sys;
  const CompiledSystem& cs;
  const physics::ExplicitForm& form;
  const Layout& layout;
  std::vector<double> slots;
  std::vector<expr::CompiledExpr> rhs_c, coef_c, alg_c;
  std::vector<bool> has_coef;

  ExplicitRunner(const EquationSystem& s, const CompiledSystem& c,
                 const physics::ExplicitForm& f, const Layout& lay)
      : sys(s), cs(c), form(f), layout(lay) {
    // Compile against a map mirroring the system layout.
    auto& sm = slot_map_;
    for (const auto& p : s.parameters) sm.intern(p.name);
    for (const auto& u : s.unknowns) sm.intern(u.name);
    for (const auto& u : s.unknowns)
      if (u.kind == VarKind::kDifferential)
        sm.intern(expr::SlotMap::der_slot(u.name));
    sm.intern("time");
    for (const auto& de : form.der_eqs) {
      rhs_c.push_back(*expr::CompiledExpr::compile(de.rhs, sm, true));
      has_coef.push_back(de.coefficient != nullptr);
      coef_c.push_back(*expr::CompiledExpr::compile(
          de.coefficient ? de.coefficient : expr::num(1.0), sm, true));
    }
    for (const auto& ae : form.alg_eqs)
      alg_c.push_back(*expr::CompiledExpr::compile(ae.rhs, sm, true));
    slots.assign(sm.size(), kNaN);
    for (const auto& p : s.parameters)
      slots[*sm.find(p.name)] = p.si_value;
    time_slot_ = *sm.find("time");
    unknown_slot_.resize(s.unknowns.size());
    for (std::size_t i = 0; i < s.unknowns.size(); ++i)
      unknown_slot_[i] = *sm.find(s.unknowns[i].name);
  }

  expr::SlotMap slot_map_;
  int time_slot_ = -1;
  std::vector<int> unknown_slot_;

  // xdot for the state vector; optionally captures algebraic values.
  void f(const Eigen::VectorXd& x, double t, Eigen::VectorXd& xdot,
         Eigen::VectorXd* alg = nullptr) {
    for (std::size_t k = 0; k < layout.state_idx.size(); ++k)
      slots[unknown_slot_[layout.state_idx[k]]] = x[static_cast<int>(k)];
    slots[time_slot_] = t;
    for (std::size_t k = 0; k < form.alg_eqs.size(); ++k) {
      const double v = alg_c[k].eval(slots);
      slots[unknown_slot_[form.alg_eqs[k].var]] = v;
      if (alg) (*alg)[static_cast<int>(k)] = v;
    }
    for (std::size_t k = 0; k < form.der_eqs.size(); ++k) {
      double v = rhs_c[k].eval(slots);
      if (has_coef[k]) v /= coef_c[k].eval(slots);
      xdot[static_cast<int>(k)] = v;
    }
  }

  // One full integration; returns states at every step.
  std::vector<Eigen::VectorXd> integrate(double t_end, int n_steps) {
    const int ns = static_cast<int>(layout.state_idx.size());
    const double h = t_end / n_steps;
    std::vector<Eigen::VectorXd> out;
    out.reserve(n_steps + 1);
    Eigen::VectorXd x(ns);
    for (int k = 0; k < ns; ++k)
      x[k] = sys.unknowns[layout.state_idx[k]].start;
    out.push_back(x);
    Eigen::VectorXd k1(ns), k2(ns), k3(ns), k4(ns);
    for (int step = 1; step <= n_steps; ++step) {
      const double t = h * (step - 1);
      f(x, t, k1);
      f(x + 0.5 * h * k1, t + 0.5 * h, k2);
      f(x + 0.5 * h * k2, t + 0.5 * h, k3);
      f(x + h * k3, t + h, k4);
      x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      check_finite(x, step);
      out.push_back(x);
    }
    return out;
  }

  bool positivity_ok(const std::vector<Eigen::VectorXd>& xs) const {
    for (const auto& x : xs)
      for (std::size_t k = 0; k < layout.state_idx.size(); ++k)
        if (is_concentration(sys.unknowns[layout.state_idx[k]]) &&
            x[static_cast<int>(k)] < -1e-9)
          return false;
    return true;
  }
};

Trajectory run_explicit(const EquationSystem& sys, const CompiledSystem& cs,
                        const physics::ExplicitForm& form, const Layout& layout,
                        double t_end, const SimulateOptions& opts, bool* gave_up) {
  ExplicitRunner runner(sys, cs, form, layout);
  *gave_up = false;

  int n = opts.n_steps;
  std::vector<Eigen::VectorXd> coarse;
  try {
    coarse = runner.integrate(t_end, n);
  } catch (const NonFiniteState&) {
    coarse.clear();
  }
  while (true) {
    if (2 * n > opts.max_steps) {
      *gave_up = true;
      return {};
    }
    std::vector<Eigen::VectorXd> fine;
    try {
      fine = runner.integrate(t_end, 2 * n);
    } catch (const NonFiniteState&) {
      fine.clear();
    }
    bool converged = !coarse.empty() && !fine.empty();
    if (converged) {
      for (int k = 0; k <= n && converged; ++k) {
        const auto& a = coarse[k];
        const auto& b = fine[2 * k];
        for (int j = 0; j < a.size(); ++j) {
          if (std::fabs(a[j] - b[j]) >
              opts.refine_tol * (1.0 + std::max(std::fabs(a[j]), std::fabs(b[j])))) {
            converged = false;
            break;
          }
        }
      }
      if (converged && !runner.positivity_ok(fine)) converged = false;
    }
    if (converged) {
      // Assemble the trajectory from the finer grid.
      const int n_fine = 2 * n;
      const double h = t_end / n_fine;
      Trajectory traj;
      for (const auto& u : sys.unknowns) traj.columns.push_back(u.name);
      const int nu = static_cast<int>(sys.unknowns.size());
      const int ns = static_cast<int>(layout.state_idx.size());
      const int na = static_cast<int>(layout.alg_idx.size());
      Eigen::VectorXd xdot(ns), alg(std::max(na, 1));
      for (int k = 0; k <= n_fine; ++k) {
        runner.f(fine[k], h * k, xdot, &alg);
        std::vector<double> row(nu, kNaN), drow(nu, kNaN);
        for (int j = 0; j < ns; ++j) {
          row[layout.state_idx[j]] = fine[k][j];
          drow[layout.state_idx[j]] = xdot[j];
        }
        for (std::size_t j = 0; j < form.alg_eqs.size(); ++j)
          row[form.alg_eqs[j].var] = alg[static_cast<int>(j)];
        traj.times.push_back(h * k);
        traj.values.push_back(std::move(row));
        traj.derivatives.push_back(std::move(drow));
      }
      return traj;
    }
    coarse = std::move(fine);
    n *= 2;
  }
}

void append_aux(const EquationSystem& sys, const CompiledSystem& cs,
                Trajectory& traj) {
  if (sys.aux.empty()) return;
  for (const auto& a : sys.aux) traj.aux_columns.push_back(a.name);
  auto slots = cs.make_slots();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    for (std::size_t i = 0; i < sys.unknowns.size(); ++i)
      slots[cs.unknown_slot(static_cast<int>(i))] = traj.values[k][i];
    slots[cs.time_slot()] = traj.times[k];
    std::vector<double> row(sys.aux.size());
    for (std::size_t i = 0; i < sys.aux.size(); ++i)
      row[i] = cs.eval_aux(static_cast<int>(i), slots);
    traj.aux_values.push_back(std::move(row));
  }
}

// Infinity norm of the state Jacobian at the initial point, used for the
// stiffness switch.
double stiffness_estimate(const EquationSystem& sys, const CompiledSystem& cs,
                          const physics::ExplicitForm& form, const Layout& layout) {
  ExplicitRunner runner(sys, cs, form, layout);
  const int ns = static_cast<int>(layout.state_idx.size());
  Eigen::VectorXd x0(ns);
  for (int k = 0; k < ns; ++k) x0[k] = sys.unknowns[layout.state_idx[k]].start;
  ResidualFn f = [&](const Eigen::VectorXd& v, Eigen::VectorXd& out) {
    out.resize(ns);
    runner.f(v, 0.0, out);
  };
  const Eigen::MatrixXd J = fd_jacobian(f, x0, 1e-7, false);
  return J.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

Trajectory simulate(const EquationSystem& sys, const SimulateOptions& opts) {
  const double t_end = opts.t_end.value_or(default_t_end(sys));
  CompiledSystem cs(sys);
  Layout layout(sys);

  const auto form = physics::explicit_form(sys);
  bool use_explicit = form.ok && !opts.force_implicit;
  if (use_explicit) {
    const double L = stiffness_estimate(sys, cs, form, layout);
    if (std::isfinite(L) &&
        L * (t_end / opts.n_steps) > opts.stiffness_switch)
      use_explicit = false;
  }

  Trajectory traj;
  bool gave_up = false;
  if (use_explicit) {
    traj = run_explicit(sys, cs, form, layout, t_end, opts, &gave_up);
    if (gave_up) traj = run_implicit(sys, cs, layout, t_end, opts);
  } else {
    traj = run_implicit(sys, cs, layout, t_end, opts);
  }
  append_aux(sys, cs, traj);
  return traj;
}

}  // namespace rxmod::sim
