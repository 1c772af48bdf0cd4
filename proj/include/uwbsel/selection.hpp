#pragma once

#include <optional>
#include <span>
#include <vector>

#include "uwbsel/estimator.hpp"
#include "uwbsel/sim.hpp"

namespace uwbsel {

/// One-step effect of ranging to an anchor: the change in covariance trace
/// a scalar range update would produce (never positive).
struct AnchorScore {
  int anchor_id = -1;
  double trace_delta = 0.0;     // tr(Sigma+) - tr(Sigma), m^2-dominated
  double predicted_range = 0.0; // m
};

enum class PolicyKind { kSequential, kGreedy };

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::kGreedy;
  std::vector<int> order;  // sequential only; a permutation of anchor ids

  static SelectionPolicy greedy() { return {PolicyKind::kGreedy, {}}; }
  static SelectionPolicy sequential(std::vector<int> order) {
    return {PolicyKind::kSequential, std::move(order)};
  }
};

/// Closed-form trace change for a range update to `anchor`:
///
///   tr(dSigma) = -(|Sxx e|^2 + |Sxv^T e|^2 + |Sxd^T e|^2) / (e^T Sxx e + r)
///
/// using only the position row of blocks (a handful of 3-vector products;
/// no 9x9 algebra). Throws FilterError when the anchor coincides with the
/// estimate or the denominator is zero (possible only for r = 0 with
/// Sxx e = 0).
AnchorScore score_anchor(const Covariance& cov, const Vec3& x_hat,
                         const Anchor& anchor, double range_var);

/// Scores every anchor, silently skipping the ones score_anchor rejects.
std::vector<AnchorScore> score_anchors(const Covariance& cov,
                                       const Vec3& x_hat,
                                       std::span<const Anchor> anchors,
                                       double range_var);

/// Picks the anchor to range against at one measurement slot.
///  - greedy: the id with the most negative trace_delta; near-ties (1e-12
///    relative) break toward the lowest id; excluded anchors are skipped.
///    Returns nullopt when every anchor is excluded.
///  - sequential: order[step mod N], ignoring the covariance entirely.
std::optional<int> select_anchor(const Covariance& cov, const Vec3& x_hat,
                                 std::span<const Anchor> anchors,
                                 double range_var,
                                 const SelectionPolicy& policy, long step);

}  // namespace uwbsel
