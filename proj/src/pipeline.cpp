#include "rhsmm/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rhsmm {

using ordered_json = nlohmann::ordered_json;

std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

template <typename Int>
bool parse_int(const std::string& s, Int& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path.string());
    return out;
}

double to_json_number(double v) { return std::stod(fmt_num(v)); }

ordered_json number_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return to_json_number(v);
}

}  // namespace

SeriesTable load_series_csv(const std::filesystem::path& path, const std::vector<std::string>& required) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
    const auto header = split_csv(line);
    if (header.empty() || header[0] != "t") throw SchemaError(path.string() + ": first column must be 't'");
    SeriesTable table;
    table.channels.assign(header.begin() + 1, header.end());
    if (!required.empty()) {
        for (const auto& col : required) {
            if (std::find(table.channels.begin(), table.channels.end(), col) == table.channels.end()) {
                throw SchemaError(path.string() + ": missing column '" + col + "'");
            }
        }
        if (table.channels != required) throw SchemaError(path.string() + ": unexpected column layout");
    }
    if (table.channels.empty()) throw SchemaError(path.string() + ": no value columns");
    const std::size_t p = table.channels.size();

    std::vector<double> values;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw SchemaError(path.string() + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(header.size()));
        }
        double t = 0.0;
        if (!parse_double(cells[0], t) || !std::isfinite(t)) {
            throw DataError(path.string() + ": row " + std::to_string(row) + ": non-finite value in column 't'");
        }
        if (!table.t.empty() && !(t > table.t.back())) {
            throw OrderingError(path.string() + ": row " + std::to_string(row) + ": t is not strictly increasing");
        }
        table.t.push_back(t);
        for (std::size_t c = 0; c < p; ++c) {
            double v = 0.0;
            if (!parse_double(cells[c + 1], v) || !std::isfinite(v)) {
                throw DataError(path.string() + ": row " + std::to_string(row) + ": non-finite value in column '" +
                                table.channels[c] + "'");
            }
            values.push_back(v);
        }
    }
    if (row == 0) throw DataError(path.string() + ": no data rows");
    Eigen::MatrixXd m(row, static_cast<Eigen::Index>(p));
    for (int r = 0; r < row; ++r) {
        for (std::size_t c = 0; c < p; ++c) m(r, static_cast<Eigen::Index>(c)) = values[static_cast<std::size_t>(r) * p + c];
    }
    double rate = 1.0;
    if (row > 1) rate = (row - 1) / (table.t.back() - table.t.front());
    table.y = ObservationSequence(std::move(m), rate);
    return table;
}

TripRecord load_trip_csv(const std::filesystem::path& path) {
    auto table = load_series_csv(path, kTripChannels);
    TripRecord trip;
    trip.trip_id = path.stem().string();
    trip.t = std::move(table.t);
    trip.raw = std::move(table.y);
    return trip;
}

ObservationSequence downsample(const ObservationSequence& y, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    const int n = y.length() / factor;
    if (n == 0) throw std::invalid_argument("downsample: sequence shorter than the factor");
    Eigen::MatrixXd out(n, y.dim());
    for (int i = 0; i < n; ++i) {
        out.row(i) = y.values.middleRows(static_cast<Eigen::Index>(i) * factor, factor).colwise().mean();
    }
    return ObservationSequence(std::move(out), y.sample_rate_hz / factor);
}

Normalized normalize(const ObservationSequence& y) {
    if (y.length() == 0) throw std::invalid_argument("normalize: empty sequence");
    Normalized out;
    Eigen::MatrixXd z = y.values;
    for (int c = 0; c < y.dim(); ++c) {
        double mean = y.values.col(c).mean();
        mean += (y.values.col(c).array() - mean).mean();  // second pass against cancellation
        const double var = (y.values.col(c).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        if (!(sd > 0.0)) throw std::domain_error("normalize: channel " + std::to_string(c) + " has zero variance");
        z.col(c) = (y.values.col(c).array() - mean) / sd;
        out.stats.push_back({mean, sd});
    }
    out.y = ObservationSequence(std::move(z), y.sample_rate_hz);
    return out;
}

ObservationSequence denormalize(const ObservationSequence& y, const std::vector<ChannelStats>& stats) {
    if (static_cast<int>(stats.size()) != y.dim()) throw std::invalid_argument("denormalize: stats size mismatch");
    Eigen::MatrixXd v = y.values;
    for (int c = 0; c < y.dim(); ++c) {
        const auto& s = stats[static_cast<std::size_t>(c)];
        v.col(c) = v.col(c).array() * s.std_dev + s.mean;
    }
    return ObservationSequence(std::move(v), y.sample_rate_hz);
}

std::vector<GaussianParamsMV> denormalize_means(const std::vector<GaussianParamsMV>& theta,
                                                const std::vector<ChannelStats>& stats) {
    const auto p = static_cast<Eigen::Index>(stats.size());
    Eigen::VectorXd sd(p);
    Eigen::VectorXd mu(p);
    for (Eigen::Index c = 0; c < p; ++c) {
        sd(c) = stats[static_cast<std::size_t>(c)].std_dev;
        mu(c) = stats[static_cast<std::size_t>(c)].mean;
    }
    std::vector<GaussianParamsMV> out;
    out.reserve(theta.size());
    for (const auto& th : theta) {
        if (th.dim() != p) throw std::invalid_argument("denormalize_means: dimension mismatch");
        out.push_back({th.mean.cwiseProduct(sd) + mu, sd.asDiagonal() * th.covariance * sd.asDiagonal()});
    }
    return out;
}

MvEmissionPrior default_mv_prior(int p) {
    if (p < 1) throw std::invalid_argument("default_mv_prior: p must be >= 1");
    MvEmissionPrior prior;
    prior.mean_prior.mean = Eigen::VectorXd::Zero(p);
    prior.mean_prior.covariance = Eigen::MatrixXd::Identity(p, p);
    prior.covariance_prior.dof = p + 2.0;
    prior.covariance_prior.scale = Eigen::MatrixXd::Identity(p, p);
    return prior;
}

namespace {

double config_double(const std::string& key, const std::string& v) {
    double d = 0.0;
    if (!parse_double(v, d) || !std::isfinite(d)) throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    return d;
}

int config_int(const std::string& key, const std::string& v) {
    int i = 0;
    if (!parse_int(v, i)) throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return i;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& v) {
    auto& h = cfg.hyper;
    if (key == "gamma") {
        h.gamma = config_double(key, v);
    } else if (key == "alpha") {
        h.alpha = config_double(key, v);
    } else if (key == "k_max") {
        h.k_max = config_int(key, v);
    } else if (key == "d_max") {
        if (v == "full") {
            h.d_max.reset();
        } else {
            h.d_max = config_int(key, v);
        }
    } else if (key == "tau") {
        h.tau = config_double(key, v);
    } else if (key == "burn_in") {
        h.burn_in = config_int(key, v);
    } else if (key == "thin") {
        h.thin = config_int(key, v);
    } else if (key == "max_iter") {
        h.max_iter = config_int(key, v);
    } else if (key == "gr_threshold") {
        h.gr_threshold = config_double(key, v);
    } else if (key == "estimate_window_frac") {
        h.estimate_window_frac = config_double(key, v);
    } else if (key == "model") {
        if (v != "baseline" && v != "robust") throw ConfigError("config: model must be 'baseline' or 'robust'");
        h.robust = v == "robust";
    } else if (key == "emission") {
        if (v == "scalar") {
            cfg.emission = EmissionFamily::Scalar;
        } else if (v == "multivariate") {
            cfg.emission = EmissionFamily::Multivariate;
        } else {
            throw ConfigError("config: emission must be 'scalar' or 'multivariate'");
        }
    } else if (key == "duration_prior_shape") {
        h.duration_prior.shape = config_double(key, v);
    } else if (key == "duration_prior_scale") {
        h.duration_prior.scale = config_double(key, v);
    } else if (key.starts_with("emission_prior_")) {
        cfg.emission_prior_keys[key] = v;
    } else if (key == "seed") {
        if (!parse_int(v, cfg.seed)) throw ConfigError("config: seed expects an unsigned integer");
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

}  // namespace

void apply_config(std::istream& in, RunConfig& cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string body = trim(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(std::string_view(body).substr(0, eq));
        const std::string value = trim(std::string_view(body).substr(eq + 1));
        if (key.empty() || value.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        apply_key(cfg, key, value);
    }
}

void load_config_file(const std::filesystem::path& path, RunConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open config " + path.string());
    apply_config(in, cfg);
}

void finalize_emission_prior(RunConfig& cfg, int p) {
    auto take = [&](const std::string& key) -> std::optional<double> {
        const auto it = cfg.emission_prior_keys.find(key);
        if (it == cfg.emission_prior_keys.end()) return std::nullopt;
        return config_double(key, it->second);
    };
    const std::vector<std::string> scalar_keys{"emission_prior_mean", "emission_prior_mean_variance",
                                               "emission_prior_variance_shape", "emission_prior_variance_scale"};
    const std::vector<std::string> mv_keys{"emission_prior_mean", "emission_prior_mean_cov", "emission_prior_iw_dof",
                                           "emission_prior_iw_scale"};
    const auto& allowed = cfg.emission == EmissionFamily::Scalar ? scalar_keys : mv_keys;
    for (const auto& [key, value] : cfg.emission_prior_keys) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError("config: key '" + key + "' does not apply to this emission family");
        }
    }
    if (cfg.emission == EmissionFamily::Scalar) {
        if (p != 1) throw ConfigError("scalar emission needs exactly one value column, got " + std::to_string(p));
        ScalarEmissionPrior prior;
        if (auto v = take("emission_prior_mean")) prior.mean_prior.mean = *v;
        if (auto v = take("emission_prior_mean_variance")) prior.mean_prior.variance = *v;
        if (auto v = take("emission_prior_variance_shape")) prior.variance_prior.shape = *v;
        if (auto v = take("emission_prior_variance_scale")) prior.variance_prior.scale = *v;
        cfg.hyper.emission_prior = prior;
    } else {
        auto prior = default_mv_prior(p);
        if (auto v = take("emission_prior_mean")) prior.mean_prior.mean.setConstant(*v);
        if (auto v = take("emission_prior_mean_cov")) prior.mean_prior.covariance *= *v;
        if (auto v = take("emission_prior_iw_dof")) prior.covariance_prior.dof = *v;
        if (auto v = take("emission_prior_iw_scale")) prior.covariance_prior.scale *= *v;
        cfg.hyper.emission_prior = prior;
    }
    try {
        validate(cfg.hyper.emission_prior);
        cfg.hyper.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

void write_segmentation_csv(std::ostream& out, const SegmentSequence& seg) {
    out << "t,label\n";
    int t = 1;
    for (const auto& s : seg) {
        for (int u = 0; u < s.duration; ++u) out << t++ << ',' << s.label << '\n';
    }
}

void write_segments_csv(std::ostream& out, const SegmentSequence& seg) {
    out << "segment_id,label,start,duration\n";
    int start = 1;
    for (std::size_t i = 0; i < seg.size(); ++i) {
        out << i << ',' << seg[i].label << ',' << start << ',' << seg[i].duration << '\n';
        start += seg[i].duration;
    }
}

SegmentSequence read_segments_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != "segment_id,label,start,duration") {
        throw SchemaError("segments table: expected header segment_id,label,start,duration");
    }
    SegmentSequence seg;
    int expected_start = 1;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        int id = 0;
        Segment s;
        int start = 0;
        if (cells.size() != 4 || !parse_int(cells[0], id) || !parse_int(cells[1], s.label) ||
            !parse_int(cells[2], start) || !parse_int(cells[3], s.duration)) {
            throw SchemaError("segments table: malformed row '" + line + "'");
        }
        if (id != static_cast<int>(seg.size()) || start != expected_start || s.duration < 1 || s.label < 0) {
            throw DataError("segments table: row " + std::to_string(id) + " is not contiguous");
        }
        expected_start += s.duration;
        seg.push_back(s);
    }
    return seg;
}

void write_traces_csv(std::ostream& out, const PosteriorChain& chain) {
    std::size_t ranks = chain.samples.empty() ? 0 : std::numeric_limits<std::size_t>::max();
    for (const auto& s : chain.samples) ranks = std::min(ranks, s.occupied_means.size());
    const Eigen::Index p = ranks > 0 ? chain.samples.front().occupied_means.front().size() : 0;
    out << "iteration,log_likelihood,n_occupied";
    for (std::size_t r = 0; r < ranks; ++r) {
        for (Eigen::Index c = 0; c < p; ++c) out << ",mean_rank" << r << "_ch" << c;
    }
    out << '\n';
    for (const auto& s : chain.samples) {
        out << s.iteration << ',' << fmt_num(s.log_likelihood) << ',' << s.occupied_means.size();
        for (std::size_t r = 0; r < ranks; ++r) {
            for (Eigen::Index c = 0; c < p; ++c) out << ',' << fmt_num(s.occupied_means[r](c));
        }
        out << '\n';
    }
}

void write_summary_json(std::ostream& out, const FitSummary& summary) {
    ordered_json j;
    j["format"] = "rhsmm-fit-summary";
    j["version"] = 1;
    j["model"] = summary.model;
    j["seed"] = summary.seed;
    j["dim"] = summary.dim;
    j["downsample_factor"] = summary.downsample_factor;
    ordered_json norm;
    norm["applied"] = summary.normalized;
    norm["std_convention"] = "population";
    norm["channels"] = ordered_json::array();
    for (const auto& s : summary.normalization_stats) {
        norm["channels"].push_back({{"mean", to_json_number(s.mean)}, {"std", to_json_number(s.std_dev)}});
    }
    j["normalization"] = norm;
    j["num_states"] = summary.states.size();
    j["states"] = ordered_json::array();
    for (const auto& s : summary.states) {
        ordered_json st;
        st["label"] = s.label;
        st["mean"] = ordered_json::array();
        for (Eigen::Index c = 0; c < s.mean.size(); ++c) st["mean"].push_back(to_json_number(s.mean(c)));
        st["covariance"] = ordered_json::array();
        for (Eigen::Index r = 0; r < s.covariance.rows(); ++r) {
            ordered_json row = ordered_json::array();
            for (Eigen::Index c = 0; c < s.covariance.cols(); ++c) row.push_back(to_json_number(s.covariance(r, c)));
            st["covariance"].push_back(row);
        }
        st["duration_rate"] = to_json_number(s.rate);
        st["occupancy"] = to_json_number(s.occupancy);
        j["states"].push_back(st);
    }
    j["pi_hat"] = ordered_json::array();
    for (Eigen::Index r = 0; r < summary.pi_hat.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < summary.pi_hat.cols(); ++c) row.push_back(to_json_number(summary.pi_hat(r, c)));
        j["pi_hat"].push_back(row);
    }
    ordered_json conv;
    conv["iterations"] = summary.iterations;
    conv["converged"] = summary.converged;
    conv["r_hat"] = ordered_json::array();
    for (std::size_t i = 0; i < summary.gr_names.size(); ++i) {
        conv["r_hat"].push_back({{"scalar", summary.gr_names[i]}, {"value", number_or_null(summary.gr_values[i])}});
    }
    j["convergence"] = conv;
    j["segments"] = ordered_json::array();
    for (const auto& s : summary.segments) j["segments"].push_back({{"label", s.label}, {"duration", s.duration}});
    out << j.dump(2) << '\n';
}

FitSummary read_summary_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "rhsmm-fit-summary") throw SchemaError(path.string() + ": not a fit summary");
        FitSummary s;
        s.model = j.at("model").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.dim = j.at("dim").get<int>();
        s.downsample_factor = j.at("downsample_factor").get<int>();
        s.normalized = j.at("normalization").at("applied").get<bool>();
        for (const auto& c : j.at("normalization").at("channels")) {
            s.normalization_stats.push_back({c.at("mean").get<double>(), c.at("std").get<double>()});
        }
        const auto p = static_cast<Eigen::Index>(s.dim);
        for (const auto& st : j.at("states")) {
            StateSummary ss;
            ss.label = st.at("label").get<int>();
            ss.mean.resize(p);
            ss.covariance.resize(p, p);
            for (Eigen::Index c = 0; c < p; ++c) {
                ss.mean(c) = st.at("mean").at(static_cast<std::size_t>(c)).get<double>();
                for (Eigen::Index d = 0; d < p; ++d) {
                    ss.covariance(c, d) =
                        st.at("covariance").at(static_cast<std::size_t>(c)).at(static_cast<std::size_t>(d)).get<double>();
                }
            }
            ss.rate = st.at("duration_rate").get<double>();
            ss.occupancy = st.at("occupancy").get<double>();
            s.states.push_back(std::move(ss));
        }
        const auto k = static_cast<Eigen::Index>(s.states.size());
        s.pi_hat.resize(k, k);
        for (Eigen::Index r = 0; r < k; ++r) {
            for (Eigen::Index c = 0; c < k; ++c) {
                s.pi_hat(r, c) = j.at("pi_hat").at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
            }
        }
        const auto& conv = j.at("convergence");
        s.iterations = conv.at("iterations").get<int>();
        s.converged = conv.at("converged").get<bool>();
        for (const auto& r : conv.at("r_hat")) {
            s.gr_names.push_back(r.at("scalar").get<std::string>());
            const auto& v = r.at("value");
            s.gr_values.push_back(v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>());
        }
        for (const auto& seg : j.at("segments")) {
            s.segments.push_back({seg.at("label").get<int>(), seg.at("duration").get<int>()});
        }
        try {
            validate_segments(s.segments, std::max<int>(1, static_cast<int>(k)));
        } catch (const std::invalid_argument& e) {
            throw DataError(path.string() + ": " + e.what());
        }
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

void export_segments(const std::filesystem::path& summary_path, const std::filesystem::path& output_dir) {
    const auto s = read_summary_json(summary_path);
    std::filesystem::create_directories(output_dir);
    auto seg_out = open_output(output_dir / "segmentation.csv");
    write_segmentation_csv(seg_out, s.segments);
    auto tab_out = open_output(output_dir / "segments.csv");
    write_segments_csv(tab_out, s.segments);
}

FitSummary fit_command(const RunConfig& cfg_in) {
    RunConfig cfg = cfg_in;
    if (cfg.input.empty()) throw FileError("fit: no input file given");
    if (!std::filesystem::exists(cfg.input)) throw FileError("fit: input file not found: " + cfg.input.string());
    const auto table = load_series_csv(cfg.input);
    if (table.channels == kTripChannels) (void)load_trip_csv(cfg.input);
    finalize_emission_prior(cfg, table.y.dim());

    ObservationSequence y = table.y;
    if (cfg.downsample_factor > 1) y = downsample(y, cfg.downsample_factor);
    std::vector<ChannelStats> stats;
    if (cfg.normalize) {
        auto n = normalize(y);
        y = std::move(n.y);
        stats = std::move(n.stats);
    }

    SamplerRng rng(cfg.seed);
    const auto result = run_chain(y, cfg.hyper, rng);
    const auto& est = result.estimate;

    FitSummary summary;
    summary.model = cfg.hyper.robust ? "robust" : "baseline";
    summary.seed = cfg.seed;
    summary.dim = y.dim();
    summary.downsample_factor = cfg.downsample_factor;
    summary.normalized = cfg.normalize;
    summary.normalization_stats = stats;
    const auto theta = cfg.normalize ? denormalize_means(est.theta_hat, stats) : est.theta_hat;
    for (std::size_t a = 0; a < est.states.size(); ++a) {
        summary.states.push_back({static_cast<int>(a), theta[a].mean, theta[a].covariance, est.omega_hat[a].rate,
                                  est.occupancy[a]});
    }
    summary.pi_hat = est.pi_hat;
    summary.iterations = result.chain.iterations_run;
    summary.converged = result.chain.converged;
    summary.gr_names = result.chain.gr_names;
    summary.gr_values = result.chain.gr_values;

    // Surviving states are reported as 0..K-1 in identifiability order.
    std::vector<int> compact(est.labels.size());
    for (std::size_t t = 0; t < est.labels.size(); ++t) {
        const auto it = std::lower_bound(est.states.begin(), est.states.end(), est.labels[t]);
        compact[t] = static_cast<int>(it - est.states.begin());
    }
    summary.segments = from_label_vector(compact);

    std::filesystem::create_directories(cfg.output_dir);
    auto seg_out = open_output(cfg.output_dir / "segmentation.csv");
    write_segmentation_csv(seg_out, summary.segments);
    auto tab_out = open_output(cfg.output_dir / "segments.csv");
    write_segments_csv(tab_out, summary.segments);
    auto json_out = open_output(cfg.output_dir / "model_summary.json");
    write_summary_json(json_out, summary);
    auto trace_out = open_output(cfg.output_dir / "traces.csv");
    write_traces_csv(trace_out, result.chain);
    return summary;
}

void write_series_csv(std::ostream& out, const ObservationSequence& y, const std::string& column) {
    out << "t," << column << '\n';
    for (int t = 0; t < y.length(); ++t) out << t + 1 << ',' << fmt_num(y.values(t, 0)) << '\n';
}

void write_trip_csv(std::ostream& out, const ObservationSequence& y) {
    if (y.dim() != 3) throw std::invalid_argument("write_trip_csv: need 3 channels");
    out << "t,accel,lane_offset,yaw_rate\n";
    for (int t = 0; t < y.length(); ++t) {
        out << fmt_num(t / y.sample_rate_hz);
        for (int c = 0; c < 3; ++c) out << ',' << fmt_num(y.values(t, c));
        out << '\n';
    }
}

ObservationSequence synthetic_trip(const SyntheticTripOptions& options, Rng& rng) {
    if (!(options.seconds > 0.0 && options.rate_hz > 0.0 && options.mean_maneuver_seconds > 0.0)) {
        throw std::invalid_argument("synthetic_trip: options must be positive");
    }
    // Maneuver means in channel-scale units: cruise, accelerate, brake, left
    // turn, right turn, lane change.
    const Eigen::Vector3d scale(1.0, 0.5, 5.0);
    const std::vector<Eigen::Vector3d> maneuvers{
        {0.0, 0.0, 0.0}, {1.2, 0.0, 0.0}, {-1.5, 0.0, 0.0}, {-0.4, -0.6, 2.0}, {-0.4, 0.6, -2.0}, {0.2, -1.5, 0.3},
    };
    const int t_len = static_cast<int>(std::lround(options.seconds * options.rate_hz));
    if (t_len < 1) throw std::invalid_argument("synthetic_trip: empty trip");
    const double phi = std::exp(-1.0 / (8.0 * options.rate_hz));  // 8 s correlation time
    const double ar_sd = 0.3;
    const double white_sd = 0.1;
    const double drift_sd = 0.35;

    std::normal_distribution<double> z(0.0, 1.0);
    std::poisson_distribution<int> dur(options.mean_maneuver_seconds);
    std::uniform_int_distribution<int> first(0, static_cast<int>(maneuvers.size()) - 1);
    std::uniform_int_distribution<int> other(1, static_cast<int>(maneuvers.size()) - 1);

    Eigen::MatrixXd y(t_len, 3);
    Eigen::Vector3d ar = Eigen::Vector3d::Zero();
    for (int c = 0; c < 3; ++c) ar(c) = ar_sd * z(rng);
    int m = first(rng);
    int t = 0;
    while (t < t_len) {
        const int len = std::max(5, dur(rng)) * static_cast<int>(std::lround(options.rate_hz));
        Eigen::Vector3d slope;
        for (int c = 0; c < 3; ++c) slope(c) = drift_sd * z(rng);
        for (int u = 0; u < len && t < t_len; ++u, ++t) {
            const double frac = len > 1 ? static_cast<double>(u) / (len - 1) - 0.5 : 0.0;
            for (int c = 0; c < 3; ++c) {
                ar(c) = phi * ar(c) + ar_sd * std::sqrt(1.0 - phi * phi) * z(rng);
                const double v = maneuvers[static_cast<std::size_t>(m)](c) + slope(c) * frac + ar(c) + white_sd * z(rng);
                y(t, c) = v * scale(c);
            }
        }
        m = (m + other(rng)) % static_cast<int>(maneuvers.size());
    }
    return ObservationSequence(std::move(y), options.rate_hz);
}

}  // namespace rhsmm
