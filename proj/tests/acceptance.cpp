// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "hybrid_servo/block_tilting.h"
#include "hybrid_servo/errors.h"
#include "hybrid_servo/hybrid_servo.h"
#include "hybrid_servo/verifier.h"
#include "test_support.h"

namespace hs = hybrid_servo;
using hs::Matrix;
using hs::Vector;
using Clock = std::chrono::steady_clock;

namespace {

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool Report(int k, bool pass, const std::string& detail) {
  std::printf("CRITERION %d: %s %s\n", k, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  return pass;
}

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

struct TiltingStep {
  hs::tilting::TiltingState state;
  hs::SystemInstance inst;
  hs::GuardConditions guard;
  hs::StepSolution sol;
};

std::vector<TiltingStep> SolveTrajectory(const hs::tilting::TiltingScenario& s,
                                         const hs::SolverConfig& cfg) {
  std::vector<TiltingStep> out;
  for (const auto& st : hs::tilting::PlannedTrajectory(s)) {
    auto [inst, guard] = hs::tilting::BuildInstance(st, s);
    TiltingStep step{st, inst, guard, hs::SolveStep(inst, guard, cfg)};
    out.push_back(std::move(step));
  }
  return out;
}

// Criterion 1: one velocity-controlled axis at every step for seeds 0-9.
bool StructureCriterion(const hs::tilting::TiltingScenario& s) {
  const auto start = Clock::now();
  int bad = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    hs::SolverConfig cfg;
    cfg.velocity.rng_seed = seed;
    for (const auto& step : SolveTrajectory(s, cfg)) {
      ++total;
      if (step.sol.velocity.n_av != 1) ++bad;
    }
  }
  const double secs = Seconds(start);
  return Report(1, bad == 0 && secs < 10.0,
                Fmt("n_av == 1 at %d/%d steps (seeds 0-9), %.2f s", total - bad, total, secs));
}

// Criterion 2: commanded hand direction follows the arc, perpendicular to the
// hand-to-axis line.
bool DirectionCriterion(const hs::tilting::TiltingScenario& s, const std::vector<TiltingStep>& steps) {
  double worst_cos = 0.0, worst_dot = INFINITY;
  for (const auto& step : steps) {
    const Eigen::Vector3d dir = step.sol.velocity.C.row(0).tail<3>().transpose();
    const Eigen::Vector3d arc = hs::tilting::PlannedHandVelocity(step.state, s);
    const Eigen::Vector3d r = step.state.hand - s.table_contacts[0];
    const Eigen::Vector3d line = r - r.dot(s.rotation_axis) * s.rotation_axis;
    worst_dot = std::min(worst_dot, dir.dot(arc.normalized()) / dir.norm());
    worst_cos = std::max(worst_cos, std::abs(dir.dot(line)) / (dir.norm() * line.norm()));
  }
  return Report(2, worst_dot > 0.0 && worst_cos <= 0.2,
                Fmt("min cos(dir, arc) = %.4f, max |cos(dir, hand-axis line)| = %.4f", worst_dot,
                    worst_cos));
}

// Criterion 3: the Y component of the world-frame hand force is small.
bool ForceStructureCriterion(const std::vector<TiltingStep>& steps) {
  double worst = 0.0;
  for (const auto& step : steps) {
    const Vector f = step.sol.velocity.T.fullPivLu().solve(step.sol.force.eta);
    const Eigen::Vector3d hand = f.tail<3>();
    worst = std::max(worst, std::abs(hand.y()) / hand.norm());
  }
  return Report(3, worst <= 0.1, Fmt("max |f_y| / |f| = %.3g", worst));
}

// Criterion 4: subspace equality on random instances.
bool SubspaceCriterion() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  std::vector<hs::SystemInstance> instances;
  for (int i = 0; i < 200; ++i) instances.push_back(hs::testing::RandomFeasibleInstance(rng));
  auto count = [&](int starts) {
    int ok = 0;
    hs::VelocitySolverConfig cfg;
    cfg.num_starts = starts;
    for (const auto& inst : instances) {
      try {
        if (hs::verify::CheckVelocitySolution(inst, hs::SolveVelocity(inst, cfg)).pass) ++ok;
      } catch (const hs::SolverError&) {
      }
    }
    return ok;
  };
  const int ok3 = count(3);
  const int ok20 = count(20);
  const double secs = Seconds(start);
  return Report(4, ok3 >= 198 && ok20 == 200 && secs < 60.0,
                Fmt("N_s=3: %d/200, N_s=20: %d/200, %.2f s", ok3, ok20, secs));
}

// Criterion 5: KKT solve equals the min-norm projection.
bool KktCriterion() {
  std::mt19937_64 rng(5150);
  int ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int m_f = hs::testing::UniformInt(1, 12, rng);
    const int m_r = hs::testing::UniformInt(1, m_f, rng);
    const int n_af = hs::testing::UniformInt(0, 3, rng);
    hs::NewtonAssembly a;
    a.n_af = n_af;
    a.M_free = hs::testing::RandomMatrix(m_r, m_f, rng);
    a.M_eta_f = hs::testing::RandomMatrix(m_r, n_af, rng);
    a.rhs = hs::testing::RandomVector(m_r, rng);
    const Vector eta_af = hs::testing::RandomVector(n_af, rng);
    const Vector f = hs::SolveKkt(hs::BuildKkt(a), eta_af).f_free;
    const Vector oracle =
        a.M_free.completeOrthogonalDecomposition().pseudoInverse() * (a.rhs - a.M_eta_f * eta_af);
    const double err = (f - oracle).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err <= 1e-7) ++ok;
  }
  return Report(5, ok == 200, Fmt("%d/200 within 1e-7, max error %.3g", ok, worst));
}

// Random contact problem whose force stage has n_af in {1, 2} and a unique
// minimum-norm equilibrium.
struct ForceProblem {
  hs::SystemInstance inst;
  hs::GuardConditions guard;
  Matrix T;
  int n_av = 0;
};

ForceProblem RandomForceProblem(std::mt19937_64& rng) {
  using hs::testing::UniformInt;
  ForceProblem p;
  const int n_u = UniformInt(0, 3, rng);
  const int n_a = UniformInt(1, 4, rng);
  const int n_af = UniformInt(1, std::min(2, n_a), rng);
  p.n_av = n_a - n_af;
  const int n = n_u + n_a;
  const int n_phi = n - p.n_av + UniformInt(0, 2, rng);
  p.inst.n_u = n_u;
  p.inst.n_a = n_a;
  p.inst.N = hs::testing::RandomMatrix(n_phi, n, rng);
  p.inst.G = Matrix::Zero(0, n);
  p.inst.b_G = Vector::Zero(0);
  p.inst.F = 5.0 * hs::testing::RandomVector(n, rng);
  p.T = Matrix::Identity(n, n);
  p.T.bottomRightCorner(n_a, n_a) = hs::testing::RandomOrthogonal(n_a, rng);

  // Guards anchored at the equilibrium for a random command so that most
  // problems are feasible; a few get negative slack.
  const int rows = UniformInt(2, 8, rng);
  p.guard = hs::EmptyGuard(n_phi, n);
  p.guard.Lambda = hs::testing::RandomMatrix(rows, n_phi + n, rng);
  const hs::verify::EquilibriumOracle oracle(p.inst, p.guard, p.T, p.n_av);
  const Vector eta0 = 10.0 * hs::testing::RandomVector(n_af, rng);
  const hs::verify::Equilibrium eq = oracle.Solve(eta0);
  Vector x(n_phi + n);
  x << eq.lambda, p.T.fullPivLu().solve(eq.eta);
  std::uniform_real_distribution<double> slack(-0.5, 3.0);
  p.guard.b_Lambda = p.guard.Lambda * x;
  for (int i = 0; i < rows; ++i) p.guard.b_Lambda(i) += slack(rng);
  return p;
}

// Criterion 6: the LP optimum is at least as good as a grid search.
bool LpGridCriterion() {
  std::mt19937_64 rng(606);
  int ok = 0, tried = 0;
  double worst = INFINITY;
  while (tried < 50) {
    ForceProblem p;
    try {
      p = RandomForceProblem(rng);
    } catch (const hs::SolverError&) {
      continue;  // degenerate draw; resample
    }
    ++tried;
    hs::ForceSolverConfig cfg;
    cfg.f_max = 50.0;
    const double lp = hs::MaximizeGuardMargin(p.inst, p.guard, p.T, p.n_av, cfg).objective_margin;
    const auto grid = hs::verify::BruteForceForceOracle(p.inst, p.guard, p.T, p.n_av, 50.0, 0.25);
    worst = std::min(worst, lp - grid.best_margin);
    if (lp >= grid.best_margin - 0.05) ++ok;
  }
  return Report(6, ok == 50, Fmt("%d/50 with LP >= grid - 0.05, min(LP - grid) = %.3g", ok, worst));
}

// Criterion 7: balance and guards hold at every tilting step.
bool ResidualCriterion(const std::vector<TiltingStep>& steps) {
  double worst_res = 0.0, worst_margin = INFINITY;
  for (const auto& step : steps) {
    const auto check = hs::verify::CheckForceSolution(step.inst, step.guard, step.sol.velocity.T,
                                                      step.sol.force);
    worst_res = std::max(worst_res, check.newton_residual);
    worst_margin = std::min(worst_margin, check.min_guard_margin);
  }
  return Report(7, worst_res <= 1e-6 && worst_margin >= 0.0,
                Fmt("max Newton residual %.3g, min guard margin %.4f", worst_res, worst_margin));
}

// Criterion 8: per-step solve time.
bool TimingCriterion(const hs::tilting::TiltingScenario& s) {
  std::vector<double> ms;
  for (const auto& st : hs::tilting::PlannedTrajectory(s)) {
    auto [inst, guard] = hs::tilting::BuildInstance(st, s);
    const auto start = Clock::now();
    hs::SolveStep(inst, guard, {});
    ms.push_back(1e3 * Seconds(start));
  }
  std::vector<double> sorted = ms;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  return Report(8, sorted.back() <= 350.0,
                Fmt("max %.2f ms, median %.2f ms per step (N_s = 3)", sorted.back(), median));
}

// Criterion 9: corrupted solutions are rejected.
bool SabotageCriterion(const std::vector<TiltingStep>& steps) {
  int caught = 0, cases = 0, clean = 0;
  for (const auto& step : steps) {
    const auto& v = step.sol.velocity;
    const auto& f = step.sol.force;
    if (hs::verify::CheckVelocitySolution(step.inst, v).pass &&
        hs::verify::CheckForceSolution(step.inst, step.guard, v.T, f).pass) {
      ++clean;
    }
    std::vector<std::function<bool()>> sabotage = {
        [&] {
          Matrix C = v.C;
          C.row(0).setZero();
          return hs::verify::CheckVelocitySolution(step.inst, C, v.b_C).pass;
        },
        [&] {
          Vector b = v.b_C;
          b(0) *= 1.5;
          return hs::verify::CheckVelocitySolution(step.inst, v.C, b).pass;
        },
        [&] {
          // A command the contacts already enforce.
          const Matrix C = hs::linalg::RowSpaceBasis(step.inst.N).basis.col(0).transpose();
          return hs::verify::CheckVelocitySolution(step.inst, C, C * v.v_star).pass;
        },
        [&] {
          Vector eta = f.eta;
          eta(0) += 1e-3;
          return hs::verify::CheckForceSolution(step.inst, step.guard, v.T, f.lambda, eta).pass;
        },
        [&] {
          Vector lambda = f.lambda;
          lambda(3) += 0.5;
          return hs::verify::CheckForceSolution(step.inst, step.guard, v.T, lambda, f.eta).pass;
        },
        [&] {
          // Balanced but outside the friction cone: push the commanded force
          // far past the guard limits.
          const hs::verify::EquilibriumOracle oracle(step.inst, step.guard, v.T, v.n_av);
          const auto eq = oracle.Solve(f.eta_af + Vector::Constant(f.eta_af.size(), 200.0));
          return hs::verify::CheckForceSolution(step.inst, step.guard, v.T, eq.lambda, eq.eta).pass;
        },
    };
    for (const auto& s : sabotage) {
      ++cases;
      if (!s()) ++caught;
    }
  }
  const int n = static_cast<int>(steps.size());
  return Report(9, caught == cases && clean == n,
                Fmt("%d/%d corrupted solutions rejected, %d/%d solver outputs accepted", caught, cases,
                    clean, n));
}

}  // namespace

int main() {
  const hs::tilting::TiltingScenario scenario;
  const std::vector<TiltingStep> steps = SolveTrajectory(scenario, {});
  bool all = true;
  all &= StructureCriterion(scenario);
  all &= DirectionCriterion(scenario, steps);
  all &= ForceStructureCriterion(steps);
  all &= SubspaceCriterion();
  all &= KktCriterion();
  all &= LpGridCriterion();
  all &= ResidualCriterion(steps);
  all &= TimingCriterion(scenario);
  all &= SabotageCriterion(steps);
  return all ? 0 : 1;
}
