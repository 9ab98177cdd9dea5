#include "ehalloc/waterfill.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ehalloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double available(const Eigen::VectorXd& cumulative, int first, int last) {
  const double before = first > 0 ? cumulative(first - 1) : 0.0;
  return std::max(cumulative(last) - before, 0.0);
}

// Picks the stretch end with the smallest level; ties go to the later end.
template <typename Level>
int lowest_end(int first, int m, Level level) {
  int best = -1;
  double best_u = kInf;
  for (int r = first; r < m; ++r) {
    const double u = level(r);
    if (best < 0 || u <= best_u * (1.0 + 1e-12)) {
      best = r;
      best_u = std::min(u, best_u);
    }
  }
  return best;
}

}  // namespace

Eigen::VectorXd staircase(const Eigen::VectorXd& cumulative) {
  const int m = static_cast<int>(cumulative.size());
  Eigen::VectorXd J = Eigen::VectorXd::Zero(m);
  int first = 0;
  while (first < m) {
    const int end = lowest_end(first, m, [&](int r) {
      return available(cumulative, first, r) / static_cast<double>(r - first + 1);
    });
    const double rate = available(cumulative, first, end) / static_cast<double>(end - first + 1);
    J.segment(first, end - first + 1).setConstant(rate);
    first = end + 1;
  }
  return J;
}

double waterfill_level(const Eigen::VectorXd& c, const Eigen::VectorXd& b, int first, int last,
                       double energy) {
  if (energy <= 0.0) return 0.0;
  std::vector<std::pair<double, int>> thresholds;  // u at which slot j starts receiving energy
  for (int j = first; j <= last; ++j) {
    const double cb = c(j) * b(j);
    if (cb > 0.0) thresholds.emplace_back(1.0 / std::sqrt(cb), j);
  }
  if (thresholds.empty()) return kInf;
  std::sort(thresholds.begin(), thresholds.end());
  double slope = 0.0;   // Σ √(c/b) over active slots
  double offset = 0.0;  // Σ 1/b over active slots
  double u = kInf;
  for (size_t k = 0; k < thresholds.size(); ++k) {
    const int j = thresholds[k].second;
    slope += std::sqrt(c(j) / b(j));
    offset += 1.0 / b(j);
    u = (energy + offset) / slope;
    if (k + 1 == thresholds.size() || u <= thresholds[k + 1].first) break;
  }
  return u;
}

Eigen::VectorXd directional_waterfill(const Eigen::VectorXd& c, const Eigen::VectorXd& b,
                                      const Eigen::VectorXd& cumulative) {
  const int m = static_cast<int>(cumulative.size());
  Eigen::VectorXd J = Eigen::VectorXd::Zero(m);
  int first = 0;
  while (first < m) {
    const int end = lowest_end(first, m, [&](int r) {
      return waterfill_level(c, b, first, r, available(cumulative, first, r));
    });
    const double u = waterfill_level(c, b, first, end, available(cumulative, first, end));
    if (u == kInf) {
      // nothing left can use energy; any causal spending is optimal
      for (int j = first; j < m; ++j) J(j) = available(cumulative, j, j);
      break;
    }
    for (int j = first; j <= end; ++j) {
      const double cb = c(j) * b(j);
      if (cb > 0.0) J(j) = std::max(0.0, (std::sqrt(cb) * u - 1.0) / b(j));
    }
    first = end + 1;
  }
  return J;
}

}  // namespace ehalloc
