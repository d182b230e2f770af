#pragma once

// Euler-Maruyama simulation of the perturbed system with first-crossing
// detection of the target surface, and the ensemble driver producing the
// rescaled exit statistics. Paths are pure functions of their path_seed, so
// ensembles are reproducible for any worker count.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "exitlim/fields.hpp"
#include "exitlim/flow.hpp"
#include "exitlim/limit_law.hpp"

namespace exitlim {

enum class ExitStatus { kExited, kCapped, kLeftBox };

struct ExitSample {
  std::uint64_t path_seed = 0;
  ExitStatus status = ExitStatus::kCapped;
  double tau = 0.0;           // valid when exited
  Eigen::VectorXd x_exit;     // valid when exited; |g(x_exit)| <= g_residual
  double g_residual = 0.0;
  bool has_snapshot = false;  // state recorded at the deterministic hit time
  Eigen::VectorXd x_snapshot;
};

struct McParams {
  double eps = 0.0;
  std::size_t n = 0;
  std::uint64_t master_seed = 0;
  double h_sde = 0.0;
  double t_cap = 0.0;
  int jobs = 1;
};

struct ExitEnsemble {
  McParams params;
  double alpha = 1.0;
  std::vector<ExitSample> samples;  // ordered by path index
  std::size_t n_exited = 0, n_capped = 0, n_left_box = 0;

  // Rescaled arrays over exited samples, in path order.
  std::vector<double> u;        // eps^-alpha (tau - T)
  Eigen::MatrixXd w;            // eps^-alpha (x_exit - z), one row per exit
  std::vector<double> pib_w;    // pi_b of the rescaled deviation at time T
                                // (NaN when the path never reached T)
  Eigen::MatrixXd pim_w;        // tangent coordinates of pi_M of the exit rows
};

// One path: Euler-Maruyama with step h_sde, crossing detected by a sign
// change of g between consecutive states and refined by linear interpolation
// of g. `snapshot_time` additionally records the (interpolated) state at
// that time, continuing past the crossing if needed.
ExitSample simulate_path(const ProblemSpec& spec, double eps, double h_sde, double t_cap,
                         std::uint64_t path_seed,
                         std::optional<double> snapshot_time = std::nullopt);

// n paths with path_seed = split_seed(master_seed, i); fills the rescaled
// arrays from the flow data. Identical results for any `jobs`.
ExitEnsemble run_ensemble(const ProblemSpec& spec, const FlowResult& flow,
                          const Projections& proj, double alpha, const McParams& params);

// (Re)computes the rescaled arrays of an ensemble against the given flow.
void rescale(ExitEnsemble& ensemble, const FlowResult& flow, const Projections& proj,
             double alpha);

}  // namespace exitlim
