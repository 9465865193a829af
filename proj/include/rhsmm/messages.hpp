#pragma once

// Explicit-duration backward messages and block sampling of the segment
// sequence. All arithmetic is in log space.

#include "rhsmm/core.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace rhsmm {

/// Backward messages over the active states plus the tables they were built
/// from, so a sampler can reuse them without recomputing emissions.
///
/// Row t of log_b holds log p(y_{t+1:T} | x_t = i, segment ends at t) and
/// row t of log_bstar holds log p(y_{t+1:T} | x_{t+1} = i, segment starts at
/// t+1), with times 1-based as in y_1..y_T. Column k refers to active[k].
struct BackwardMessages {
    Eigen::MatrixXd log_b;
    Eigen::MatrixXd log_bstar;

    std::vector<int> active;
    Eigen::MatrixXd cum_loglik;  // (T+1) x K prefix sums of emission log-densities
    Eigen::MatrixXd log_pi_bar;  // K x K
    Eigen::MatrixXd log_pmf;     // (d_max+1) x K, row d
    Eigen::MatrixXd log_sf;      // (d_max+1) x K, row d: log P(D > d)
    int d_max = 0;

    [[nodiscard]] int length() const { return static_cast<int>(log_b.rows()) - 1; }
    [[nodiscard]] int num_active() const { return static_cast<int>(active.size()); }
};

[[nodiscard]] std::vector<int> all_states(int k);

/// T x |active| matrix of emission log-densities.
[[nodiscard]] Eigen::MatrixXd emission_loglik(const ObservationSequence& y, std::span<const GaussianParamsMV> theta,
                                              std::span<const int> active);

[[nodiscard]] BackwardMessages backward_messages(const ObservationSequence& y, const ModelState& model,
                                                 std::span<const int> active, std::optional<int> d_max);

/// p(x_1 = active[k] | y) for the given initial distribution over active states.
[[nodiscard]] std::vector<double> initial_state_marginal(const BackwardMessages& msgs, std::span<const double> initial);

/// log p(y_{1:T}) with a uniform initial distribution over the active states.
[[nodiscard]] double log_likelihood(const BackwardMessages& msgs);

/// Draws a segmentation from the posterior implied by the messages. A final
/// segment drawn from the censoring lump is recorded as running to T.
/// Throws std::domain_error on a degenerate (all -inf) categorical.
[[nodiscard]] SegmentSequence sample_segments(const BackwardMessages& msgs, Rng& rng);

}  // namespace rhsmm
