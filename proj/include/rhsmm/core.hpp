#pragma once

// Sequences, segmentations, sampler state and hyperparameters.

#include "rhsmm/distributions.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace rhsmm {

/// T x p matrix of samples at uniform time steps.
struct ObservationSequence {
    Eigen::MatrixXd values;
    double sample_rate_hz = 1.0;

    ObservationSequence() = default;
    explicit ObservationSequence(Eigen::MatrixXd v, double rate_hz = 1.0);

    [[nodiscard]] int length() const { return static_cast<int>(values.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(values.cols()); }

    /// Throws std::invalid_argument when empty or non-finite.
    void validate() const;
};

struct Segment {
    int label = 0;
    int duration = 1;

    bool operator==(const Segment&) const = default;
};

using SegmentSequence = std::vector<Segment>;

[[nodiscard]] int total_duration(const SegmentSequence& seg);

/// Checks positive durations, no equal adjacent labels, labels in [0, k_max)
/// and, when given, total duration == t. Throws std::invalid_argument.
void validate_segments(const SegmentSequence& seg, int k_max, std::optional<int> t = std::nullopt);

[[nodiscard]] std::vector<int> to_label_vector(const SegmentSequence& seg);
[[nodiscard]] SegmentSequence from_label_vector(std::span<const int> labels);

/// Self-transitions removed and rows renormalized. Throws std::domain_error
/// on a row whose diagonal carries all of the mass.
[[nodiscard]] Eigen::MatrixXd bar_transitions(const Eigen::MatrixXd& pi);

/// Counts of consecutive segment label pairs.
[[nodiscard]] Eigen::MatrixXi transition_counts(const SegmentSequence& seg, int k);

struct ModelState {
    Eigen::VectorXd beta;
    Eigen::MatrixXd pi;
    std::vector<GaussianParamsMV> theta;
    std::vector<DurationParams> omega;

    [[nodiscard]] int num_states() const { return static_cast<int>(beta.size()); }
};

/// Simplex checks on beta and every pi row (1e-9) plus size consistency.
void validate_model(const ModelState& model);

enum class DivergenceParams { MeansOnly, MeansAndStdDevs };

struct Hyperparams {
    double gamma = 6.0;
    double alpha = 6.0;
    EmissionPrior emission_prior = ScalarEmissionPrior{};
    DurationPrior duration_prior{1.0, 7.0};
    double tau = 1.5;
    int k_max = 20;
    std::optional<int> d_max;  // nullopt: full length
    int burn_in = 100;
    int thin = 5;
    int max_iter = 10000;
    double gr_threshold = 1.1;
    double estimate_window_frac = 0.2;
    bool robust = true;

    double damping = 0.1;
    DivergenceParams divergence = DivergenceParams::MeansOnly;
    int check_every = 100;  // retained samples between convergence checks
    double occupancy_floor = 0.01;

    void validate() const;
};

}  // namespace rhsmm
