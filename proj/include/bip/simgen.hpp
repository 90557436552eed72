#pragma once

#include "bip/types.hpp"

#include <cstdint>
#include <vector>

namespace bip {

struct ScenarioSpec {
  int scenario = 1;     // 1, 2 or 3
  int setting = 1;      // 1..5, scenario 1 only
  bool overlap = true;  // scenarios 2 and 3
  Index n = 200;
  Index n_test = 200;
  Index p1 = 500;
  Index p2 = 500;
  std::uint64_t seed = 1;
  /// i.i.d. N(0,1) feature noise in Settings 1-4, which otherwise use the
  /// network covariance. Setting 5 and scenarios 2-3 always use i.i.d. noise.
  bool iid_noise = false;

  void validate() const;
};

struct GroundTruth {
  std::vector<Matrix> A;              // per view, 4 x p
  Matrix U;                           // training scores, n x 4
  Vector a;                           // outcome coefficients
  std::vector<std::vector<Index>> signal;         // per view, sorted nonzero columns
  std::vector<std::vector<bool>> group_is_signal; // per view, per group
};

struct SimulatedData {
  ViewSet train;
  ViewSet test;
  GroupDesign groups;
  GroundTruth truth;
};

inline constexpr int kSimComponents = 4;
inline constexpr Index kNetworkSize = 100;
inline constexpr Index kNetworkBlock = 10;

/// Network covariance: ten 10 x 10 blocks (main variable first, 0.7 to its
/// connected variables, 0.49 among them) followed by an identity.
Matrix build_block_covariance(Index p);

/// Ten network groups plus one group holding every remaining variable.
ViewGroups simulation_groups(Index p);

/// Loadings of the two views for a spec (4 x p1 and 4 x p2).
std::vector<Matrix> scenario_loadings(const ScenarioSpec& spec);
Vector scenario_outcome_coefficients(int scenario);

SimulatedData simulate(const ScenarioSpec& spec);

}  // namespace bip
