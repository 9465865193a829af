#pragma once

// Redundant-state merging: states whose emission distributions lie within a
// threshold of each other are collapsed onto one survivor per group, and the
// base weights of the discarded states are damped so that later transition
// draws avoid them.

#include "rhsmm/core.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace rhsmm {

struct MergeGroup {
    int anchor = 0;
    std::vector<int> members;  // includes the anchor
    int survivor = 0;
};

struct MergeOutcome {
    std::vector<int> labels_tilde;
    Eigen::VectorXd beta_damped;  // before renormalization
    Eigen::VectorXd beta_tilde;   // on the simplex
    std::vector<MergeGroup> groups;
};

struct MergeOptions {
    double tau = 1.5;
    double damping = 0.1;
    DivergenceParams params = DivergenceParams::MeansOnly;
};

/// Euclidean distance between emission means, optionally with the per-channel
/// standard deviations appended. Throws std::invalid_argument on a dimension mismatch.
[[nodiscard]] double divergence(const GaussianParamsMV& a, const GaussianParamsMV& b,
                                DivergenceParams params = DivergenceParams::MeansOnly);

/// Survivor probabilities for the candidates: inbound transition mass from the
/// complement states, normalized; uniform when that mass is zero.
[[nodiscard]] std::vector<double> merge_group_weights(std::span<const int> candidates, std::span<const int> complement,
                                                      const Eigen::MatrixXd& pi);

[[nodiscard]] MergeOutcome merge_redundant_states(std::span<const int> labels, const Eigen::VectorXd& beta,
                                                  const Eigen::MatrixXd& pi, std::span<const GaussianParamsMV> theta,
                                                  const MergeOptions& options, Rng& rng);

}  // namespace rhsmm
