#pragma once

// CSV ingestion, trip preprocessing, run configuration and the fit command.

#include "rhsmm/core.hpp"
#include "rhsmm/gibbs.hpp"

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rhsmm {

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OrderingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ChannelStats {
    double mean = 0.0;
    double std_dev = 1.0;
};

/// A time-indexed table: column 0 is `t`, the rest are channels.
struct SeriesTable {
    std::vector<std::string> channels;
    std::vector<double> t;
    ObservationSequence y;
};

inline const std::vector<std::string> kTripChannels{"accel", "lane_offset", "yaw_rate"};

struct TripRecord {
    std::string trip_id;
    std::vector<double> t;
    ObservationSequence raw;
    std::vector<ChannelStats> normalization_stats;  // empty until normalized
};

/// Reads a CSV whose header starts with `t`. When `required` is non-empty the
/// value columns are exactly those, in order. The sample rate is inferred from
/// the span of t (1 Hz for a single row).
[[nodiscard]] SeriesTable load_series_csv(const std::filesystem::path& path,
                                          const std::vector<std::string>& required = {});

/// Header `t,accel,lane_offset,yaw_rate`. The trip id is the file stem.
[[nodiscard]] TripRecord load_trip_csv(const std::filesystem::path& path);

/// Block means over `factor` samples. A trailing partial block is dropped.
[[nodiscard]] ObservationSequence downsample(const ObservationSequence& y, int factor);

struct Normalized {
    ObservationSequence y;
    std::vector<ChannelStats> stats;
};

/// Per-channel z-score with the population standard deviation.
[[nodiscard]] Normalized normalize(const ObservationSequence& y);
[[nodiscard]] ObservationSequence denormalize(const ObservationSequence& y, const std::vector<ChannelStats>& stats);
[[nodiscard]] std::vector<GaussianParamsMV> denormalize_means(const std::vector<GaussianParamsMV>& theta,
                                                              const std::vector<ChannelStats>& stats);

enum class EmissionFamily { Scalar, Multivariate };

struct RunConfig {
    Hyperparams hyper;
    EmissionFamily emission = EmissionFamily::Scalar;
    std::uint64_t seed = 0;
    std::filesystem::path input;
    std::filesystem::path output_dir = ".";
    int downsample_factor = 1;
    bool normalize = false;
    bool quiet = false;
    // Raw emission_prior_* values, resolved once the channel count is known.
    std::map<std::string, std::string> emission_prior_keys;
};

/// Defaults for a p-channel multivariate fit: MVN(0, I) mean prior and an
/// inverse-Wishart(p + 2, I) covariance prior.
[[nodiscard]] MvEmissionPrior default_mv_prior(int p);

/// Applies `key = value` lines (`#` starts a comment). Unknown keys and bad
/// values throw ConfigError.
void apply_config(std::istream& in, RunConfig& cfg);
void load_config_file(const std::filesystem::path& path, RunConfig& cfg);

/// Builds hyper.emission_prior for p channels from the family defaults and
/// any emission_prior_* keys, then validates it.
void finalize_emission_prior(RunConfig& cfg, int p);

struct StateSummary {
    int label = 0;
    Eigen::VectorXd mean;  // original units
    Eigen::MatrixXd covariance;
    double rate = 0.0;
    double occupancy = 0.0;
};

struct FitSummary {
    std::string model;
    std::uint64_t seed = 0;
    int dim = 1;
    int downsample_factor = 1;
    bool normalized = false;
    std::vector<ChannelStats> normalization_stats;
    std::vector<StateSummary> states;
    Eigen::MatrixXd pi_hat;
    int iterations = 0;
    bool converged = false;
    std::vector<std::string> gr_names;
    std::vector<double> gr_values;
    SegmentSequence segments;
};

/// Loads input, preprocesses (downsample, then normalize), fits one chain and
/// writes segmentation.csv, segments.csv, model_summary.json and traces.csv.
FitSummary fit_command(const RunConfig& cfg);

void write_segmentation_csv(std::ostream& out, const SegmentSequence& seg);
void write_segments_csv(std::ostream& out, const SegmentSequence& seg);
void write_traces_csv(std::ostream& out, const PosteriorChain& chain);
void write_summary_json(std::ostream& out, const FitSummary& summary);

[[nodiscard]] FitSummary read_summary_json(const std::filesystem::path& path);

/// Parses a segments.csv back into a segment sequence, checking contiguity.
[[nodiscard]] SegmentSequence read_segments_csv(std::istream& in);

/// Rewrites segmentation.csv and segments.csv from a saved summary.
void export_segments(const std::filesystem::path& summary_path, const std::filesystem::path& output_dir);

/// Writes a 1-D series as `t,y` with t = 1..T.
void write_series_csv(std::ostream& out, const ObservationSequence& y, const std::string& column = "y");

/// Writes a trip as `t,accel,lane_offset,yaw_rate` with t in seconds.
void write_trip_csv(std::ostream& out, const ObservationSequence& y);

struct SyntheticTripOptions {
    double seconds = 600.0;
    double rate_hz = 10.0;
    double mean_maneuver_seconds = 25.0;
};

/// Three-channel kinematic trip built from a small set of maneuver types. Each
/// maneuver carries a slow within-maneuver drift and AR(1) noise, so a single
/// maneuver tends to look like several nearby emission states.
[[nodiscard]] ObservationSequence synthetic_trip(const SyntheticTripOptions& options, Rng& rng);

/// Formats with 9 significant digits.
[[nodiscard]] std::string fmt_num(double v);

}  // namespace rhsmm
