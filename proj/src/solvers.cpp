#include "adaedit/solvers.hpp"

#include <cmath>
#include <optional>
#include <ostream>
#include <string>

#include "adaedit/csv.hpp"
#include "adaedit/errors.hpp"

namespace adaedit {

std::string_view to_string(SolverKind k) {
  switch (k) {
    case SolverKind::kEuler: return "euler";
    case SolverKind::kMidpoint: return "midpoint";
    case SolverKind::kReuseVelocity: return "reuse_velocity";
  }
  return "unknown";
}

SolverKind parse_solver_kind(std::string_view name) {
  if (name == "euler") return SolverKind::kEuler;
  if (name == "midpoint") return SolverKind::kMidpoint;
  if (name == "reuse_velocity") return SolverKind::kReuseVelocity;
  throw ConfigError("solver: unknown kind '" + std::string(name) + "'");
}

TimeGrid TimeGrid::uniform(int steps) {
  if (steps < 1) throw ConfigError("time grid needs at least one step");
  std::vector<double> t(steps + 1);
  for (int i = 0; i <= steps; ++i) t[i] = static_cast<double>(i) / steps;
  t.back() = 1.0;
  return TimeGrid(std::move(t));
}

TimeGrid::TimeGrid(std::vector<double> times) : t_(std::move(times)) {
  if (t_.size() < 2) throw ConfigError("time grid needs at least one step");
  if (t_.front() != 0.0 || t_.back() != 1.0) throw ConfigError("time grid must run from 0 to 1");
  for (std::size_t i = 1; i < t_.size(); ++i)
    if (!(t_[i] > t_[i - 1])) throw ConfigError("time grid must be strictly increasing");
}

namespace {

void guard(const Latent& z, int step) {
  if (!z.all_finite())
    throw DivergenceError("non-finite state at step " + std::to_string(step), step);
  if (z.l2_norm() > kDivergenceNorm)
    throw DivergenceError("state norm exceeded bound at step " + std::to_string(step), step);
}

// Shared driver. `sign` is +1 for sampling and -1 for inversion; the state
// moves from `from` to the other end of each interval with signed width.
class Integrator {
 public:
  Integrator(const VelocityField& v, const Conditioning& cond, const HookProvider& hooks, SolverKind kind)
      : v_(v), cond_(cond), hooks_(hooks), kind_(kind) {}

  // Advances z across step `step` starting at time t with signed width h.
  Latent advance(const Latent& z, double t, double h, int step) {
    int stage = 0;
    auto eval = [&](const Latent& x, double tt) {
      ++evals_;
      const InjectionHooks hk = hooks_ ? hooks_(step, stage) : InjectionHooks{};
      ++stage;
      return v_.evaluate(x, tt, cond_, hk);
    };
    switch (kind_) {
      case SolverKind::kEuler:
        return z.plus_scaled(h, eval(z, t));
      case SolverKind::kMidpoint: {
        const Latent k1 = eval(z, t);
        const Latent k2 = eval(z.plus_scaled(0.5 * h, k1), t + 0.5 * h);
        return z.plus_scaled(h, k2);
      }
      case SolverKind::kReuseVelocity: {
        const Latent k1 = carried_ ? *carried_ : eval(z, t);
        Latent k2 = eval(z.plus_scaled(0.5 * h, k1), t + 0.5 * h);
        Latent next = z.plus_scaled(h, k2);
        carried_ = std::move(k2);
        return next;
      }
    }
    return z;
  }

  int evals() const noexcept { return evals_; }

 private:
  const VelocityField& v_;
  const Conditioning& cond_;
  const HookProvider& hooks_;
  SolverKind kind_;
  std::optional<Latent> carried_;
  int evals_ = 0;
};

}  // namespace

Trajectory integrate_forward(const VelocityField& v, const Latent& z0, const TimeGrid& grid,
                             SolverKind kind, const Conditioning& cond, const HookProvider& hooks) {
  guard(z0, 0);
  const int T = grid.steps();
  Trajectory tr;
  tr.states.reserve(T + 1);
  tr.states.push_back(z0);
  tr.evals_after.push_back(0);
  Integrator integ(v, cond, hooks, kind);
  for (int i = 0; i < T; ++i) {
    Latent next = integ.advance(tr.states.back(), grid.time(i), grid.width(i), i);
    guard(next, i);
    tr.states.push_back(std::move(next));
    tr.evals_after.push_back(integ.evals());
  }
  tr.velocity_evals = integ.evals();
  return tr;
}

Trajectory integrate_backward(const VelocityField& v, const Latent& z1, const TimeGrid& grid,
                              SolverKind kind, const Conditioning& cond, const HookProvider& hooks) {
  const int T = grid.steps();
  guard(z1, T - 1);
  Trajectory tr;
  tr.states.assign(T + 1, Latent{});
  tr.evals_after.assign(T + 1, 0);
  tr.states[T] = z1;
  Integrator integ(v, cond, hooks, kind);
  for (int i = T - 1; i >= 0; --i) {
    Latent prev = integ.advance(tr.states[i + 1], grid.time(i + 1), -grid.width(i), step_index_map(grid, i));
    guard(prev, i);
    tr.states[i] = std::move(prev);
    tr.evals_after[i] = integ.evals();
  }
  tr.velocity_evals = integ.evals();
  return tr;
}

int step_index_map(const TimeGrid& grid, int inversion_step) {
  if (inversion_step < 0 || inversion_step >= grid.steps())
    throw IndexError("inversion step " + std::to_string(inversion_step) + " out of range");
  return inversion_step;
}

double fitted_order(const std::vector<int>& steps, const std::vector<double>& errors) {
  if (steps.size() != errors.size() || steps.size() < 2)
    throw ShapeError("fitted_order needs at least two (T, error) pairs");
  const double n = static_cast<double>(steps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double x = std::log(1.0 / steps[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const TimeGrid& grid) {
  os << "step,t,norm,eval_count\n";
  for (std::size_t i = 0; i < tr.states.size(); ++i)
    os << i << ',' << csv::format(grid.time(static_cast<int>(i))) << ','
       << csv::format(tr.states[i].l2_norm()) << ',' << tr.evals_after[i] << '\n';
}

}  // namespace adaedit
