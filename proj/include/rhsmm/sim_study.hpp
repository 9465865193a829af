#pragma once

// Ground-truth generation, change-point scoring and the replication harness
// comparing the baseline and robust samplers.

#include "rhsmm/core.hpp"
#include "rhsmm/gibbs.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace rhsmm {

struct TrueState {
    GaussianParams1D emission;
    double duration_rate = 6.0;       // zero-truncated Poisson rate
    std::vector<double> transition;   // zero diagonal
};

struct GroundTruth {
    std::vector<TrueState> states;
    int n_segments = 30;

    /// Three states: means 4, 0, -4, unit variances, rate 6.
    [[nodiscard]] static GroundTruth three_state_reference(int n_segments = 30);
    void validate() const;
};

struct GeneratedSequence {
    ObservationSequence y;
    SegmentSequence truth;
};

[[nodiscard]] GeneratedSequence generate_sequence(const GroundTruth& truth, Rng& rng);

/// 1-based times t with x_{t+1} != x_t.
[[nodiscard]] std::vector<int> change_point_set(const SegmentSequence& seg);

struct CpMetrics {
    int missed = 0;
    int extra = 0;
    int matched = 0;
};

/// Greedy one-to-one matching in increasing time order within +-window.
[[nodiscard]] CpMetrics cp_metrics(std::span<const int> true_cps, std::span<const int> est_cps, int window);

[[nodiscard]] int count_states(std::span<const int> labels);

struct ReplicationRecord {
    int rep = 0;
    std::string model;
    bool converged = false;
    int iterations = 0;
    int n_states = 0;
    int missed_cp = 0;
    int extra_cp = 0;
    std::vector<double> means;  // ascending, surviving states
    std::vector<double> rates;  // aligned with means
    std::string error;
};

struct ModelSummary {
    std::string model;
    int n_runs = 0;
    int n_converged = 0;
    double mean_iterations = 0.0;
    double mean_missed_cp = 0.0;
    double mean_extra_cp = 0.0;
    std::map<int, int> state_histogram;  // converged runs only
};

struct ReplicationSummary {
    std::vector<ReplicationRecord> records;
    ModelSummary baseline;
    ModelSummary robust;
};

struct StudyOptions {
    int cp_window = 1;
    unsigned threads = 0;  // 0: hardware concurrency
    std::function<void(const ReplicationRecord&)> on_record;
};

/// Seed for replication `rep` derived from the master seed.
[[nodiscard]] std::uint64_t replication_seed(std::uint64_t master, int rep, int stream);

/// Fits one replication's dataset with one model and scores it.
[[nodiscard]] ReplicationRecord score_replication(int rep, const std::string& model_name, const GeneratedSequence& data,
                                                  const Hyperparams& hyper, std::uint64_t fit_seed, int cp_window);

[[nodiscard]] ModelSummary summarize(const std::vector<ReplicationRecord>& records, const std::string& model);

[[nodiscard]] ReplicationSummary run_replication_study(const Hyperparams& baseline, const Hyperparams& robust,
                                                       const GroundTruth& truth, int n_reps,
                                                       std::uint64_t master_seed, const StudyOptions& options = {});

void write_replication_csv(std::ostream& out, const std::vector<ReplicationRecord>& records);
void write_summary_csv(std::ostream& out, const ReplicationSummary& summary);
[[nodiscard]] std::string format_summary_table(const ReplicationSummary& summary);

}  // namespace rhsmm
