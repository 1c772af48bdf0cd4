#include "uwbsel/selection.hpp"

#include <algorithm>
#include <cmath>

namespace uwbsel {

AnchorScore score_anchor(const Covariance& cov, const Vec3& x_hat,
                         const Anchor& anchor, double range_var) {
  const Vec3 d = x_hat - anchor.p;
  const double dist = d.norm();
  if (!(dist > kMinAnchorDistance)) {
    throw FilterError("score_anchor: anchor " + std::to_string(anchor.id) +
                      " coincides with the position estimate");
  }
  const Vec3 e = d / dist;

  const Mat9& S = cov.full();
  const double den = e.dot(S.block<3, 3>(0, 0) * e) + range_var;
  if (!(den > 0.0)) {
    throw FilterError("score_anchor: zero innovation variance for anchor " +
                      std::to_string(anchor.id));
  }
  // Block column of Sigma H^T: (Sxx e, Svx e, Sdx e). With Sigma symmetric
  // these are the Sx(.) blocks transposed.
  const double num = (S.block<3, 3>(0, 0) * e).squaredNorm() +
                     (S.block<3, 3>(3, 0) * e).squaredNorm() +
                     (S.block<3, 3>(6, 0) * e).squaredNorm();
  return AnchorScore{anchor.id, -num / den, dist};
}

std::vector<AnchorScore> score_anchors(const Covariance& cov,
                                       const Vec3& x_hat,
                                       std::span<const Anchor> anchors,
                                       double range_var) {
  std::vector<AnchorScore> out;
  out.reserve(anchors.size());
  for (const Anchor& a : anchors) {
    try {
      out.push_back(score_anchor(cov, x_hat, a, range_var));
    } catch (const FilterError&) {
      // a degenerate candidate, not a degenerate decision
    }
  }
  return out;
}

std::optional<int> select_anchor(const Covariance& cov, const Vec3& x_hat,
                                 std::span<const Anchor> anchors,
                                 double range_var,
                                 const SelectionPolicy& policy, long step) {
  if (anchors.empty()) {
    throw FilterError("select_anchor: no anchors");
  }

  if (policy.kind == PolicyKind::kSequential) {
    if (policy.order.empty()) {
      throw FilterError("select_anchor: sequential policy without an order");
    }
    const std::size_t n = policy.order.size();
    const std::size_t i =
        static_cast<std::size_t>(((step % static_cast<long>(n)) + n) %
                                 static_cast<long>(n));
    return policy.order[i];
  }

  std::vector<AnchorScore> scores =
      score_anchors(cov, x_hat, anchors, range_var);
  if (scores.empty()) {
    return std::nullopt;
  }
  // Lowest id first, then keep the incumbent unless a later candidate is
  // better beyond a 1e-12 relative tie band: exact and near ties resolve
  // to the lowest id deterministically.
  std::sort(scores.begin(), scores.end(),
            [](const AnchorScore& a, const AnchorScore& b) {
              return a.anchor_id < b.anchor_id;
            });
  const AnchorScore* best = &scores.front();
  for (const AnchorScore& s : scores) {
    const double tie = 1e-12 * std::max(std::abs(s.trace_delta),
                                        std::abs(best->trace_delta));
    if (s.trace_delta < best->trace_delta - tie) {
      best = &s;
    }
  }
  return best->anchor_id;
}

}  // namespace uwbsel
