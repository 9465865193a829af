#pragma once

// Block Gibbs sampler for the weak-limit HDP-HSMM with an optional redundant
// state merge after each state-sequence draw.

#include "rhsmm/core.hpp"
#include "rhsmm/merge.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rhsmm {

/// Two independent engines: the merge step draws from its own stream so that
/// a merge which changes nothing leaves the main chain untouched.
struct SamplerRng {
    Rng main;
    Rng merge;

    explicit SamplerRng(std::uint64_t seed);
};

struct SamplerState {
    ModelState model;
    std::vector<int> labels;          // after the merge step (x tilde)
    std::vector<int> sampled_labels;  // straight from the message-passing draw
    Eigen::VectorXd beta_tilde;
    std::vector<MergeGroup> last_groups;
    int iteration = 0;

    bool operator==(const SamplerState& other) const;
};

[[nodiscard]] GaussianParamsMV sample_emission_prior(const EmissionPrior& prior, Rng& rng);

/// Semi-conjugate draws (mean given the current covariance, then covariance
/// given the new mean) for states with data; prior draws for the rest.
[[nodiscard]] std::vector<GaussianParamsMV> resample_emission_params(const ObservationSequence& y,
                                                                     std::span<const int> labels,
                                                                     std::span<const GaussianParamsMV> current,
                                                                     int k_max, const EmissionPrior& prior, Rng& rng);

/// The final segment is right-censored and does not contribute.
[[nodiscard]] std::vector<DurationParams> resample_duration_params(const SegmentSequence& seg, int k_max,
                                                                   const DurationPrior& prior, Rng& rng);

/// Chinese-restaurant table counts for the auxiliary-variable beta update.
[[nodiscard]] Eigen::MatrixXi sample_table_counts(const Eigen::MatrixXi& n, const Eigen::VectorXd& beta_tilde,
                                                  double alpha, Rng& rng);

struct BetaAndTransitions {
    Eigen::VectorXd beta;
    Eigen::MatrixXd pi;
};

[[nodiscard]] BetaAndTransitions resample_beta_and_transitions(const SegmentSequence& seg,
                                                               const Eigen::VectorXd& beta_tilde,
                                                               const Hyperparams& hyper, Rng& rng);

/// Orders states by emission mean (lexicographic, ties by duration rate) with
/// the states present in labels first. Applies the permutation to the model and
/// labels and returns it as permutation[new] = old.
std::vector<int> apply_identifiability(ModelState& model, std::vector<int>& labels);

/// Prior draw of the full model, then a state sequence sampled from it.
[[nodiscard]] SamplerState initialize_sampler(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng);

void gibbs_iteration(SamplerState& state, const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng);

/// log p(y, x | theta, omega, pi_bar) with a uniform initial state and a
/// right-censored final segment.
[[nodiscard]] double data_log_likelihood(const ModelState& model, const SegmentSequence& seg,
                                         const ObservationSequence& y);

/// log p(y, x, theta, omega, pi, beta). Terms are summed in sorted order so
/// that any relabeling gives a bit-identical value.
[[nodiscard]] double joint_log_density(const ModelState& model, std::span<const int> labels,
                                       const ObservationSequence& y, const Hyperparams& hyper);

/// Potential scale reduction over equal-length series (truncated to the shortest).
[[nodiscard]] double gelman_rubin(const std::vector<std::vector<double>>& chains);

/// gelman_rubin on the two halves of one series.
[[nodiscard]] double split_gelman_rubin(std::span<const double> series);

struct ChainSample {
    int iteration = 0;
    std::vector<GaussianParamsMV> theta;
    std::vector<DurationParams> omega;
    Eigen::MatrixXd pi;
    std::vector<int> labels;
    double log_likelihood = 0.0;
    std::vector<Eigen::VectorXd> occupied_means;  // ordered
};

struct PosteriorChain {
    std::vector<ChainSample> samples;
    int iterations_run = 0;
    bool converged = false;
    std::vector<std::string> gr_names;
    std::vector<double> gr_values;
};

struct PointEstimate {
    std::vector<int> states;  // surviving labels, ascending
    std::vector<GaussianParamsMV> theta_hat;
    std::vector<DurationParams> omega_hat;
    Eigen::MatrixXd pi_hat;  // over surviving states
    std::vector<int> labels;
    std::vector<double> occupancy;
    int num_states = 0;
};

struct ChainResult {
    PosteriorChain chain;
    PointEstimate estimate;
};

using IterationObserver = std::function<void(const SamplerState&)>;

/// Runs until convergence or max_iter. Never throws on an empty chain.
[[nodiscard]] PosteriorChain sample_chain(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng,
                                          const IterationObserver& observer = {});

/// Per-timestep label modes over the final window, with parameter means taken
/// from the sampled state covering each surviving state's timesteps.
/// Throws std::runtime_error on an empty chain.
[[nodiscard]] PointEstimate point_estimate(const PosteriorChain& chain, double window_frac);

/// Throws std::invalid_argument when T < 2.
[[nodiscard]] ChainResult run_chain(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng,
                                    const IterationObserver& observer = {});

}  // namespace rhsmm
