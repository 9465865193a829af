#include "rhsmm/core.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rhsmm {

ObservationSequence::ObservationSequence(Eigen::MatrixXd v, double rate_hz)
    : values(std::move(v)), sample_rate_hz(rate_hz) {
    validate();
}

void ObservationSequence::validate() const {
    if (values.rows() < 1 || values.cols() < 1) throw std::invalid_argument("observation sequence is empty");
    if (!values.allFinite()) throw std::invalid_argument("observation sequence has non-finite entries");
    if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("sample rate must be > 0");
}

int total_duration(const SegmentSequence& seg) {
    int t = 0;
    for (const auto& s : seg) t += s.duration;
    return t;
}

void validate_segments(const SegmentSequence& seg, int k_max, std::optional<int> t) {
    if (seg.empty()) throw std::invalid_argument("segment sequence is empty");
    for (std::size_t s = 0; s < seg.size(); ++s) {
        if (seg[s].duration < 1) throw std::invalid_argument("segment duration must be >= 1");
        if (seg[s].label < 0 || seg[s].label >= k_max) throw std::invalid_argument("segment label out of range");
        if (s > 0 && seg[s].label == seg[s - 1].label) {
            throw std::invalid_argument("adjacent segments share label " + std::to_string(seg[s].label));
        }
    }
    if (t && total_duration(seg) != *t) throw std::invalid_argument("segment durations do not sum to T");
}

std::vector<int> to_label_vector(const SegmentSequence& seg) {
    std::vector<int> x;
    x.reserve(static_cast<std::size_t>(total_duration(seg)));
    for (const auto& s : seg) x.insert(x.end(), static_cast<std::size_t>(s.duration), s.label);
    return x;
}

SegmentSequence from_label_vector(std::span<const int> labels) {
    if (labels.empty()) throw std::invalid_argument("label vector is empty");
    SegmentSequence seg;
    for (int x : labels) {
        if (!seg.empty() && seg.back().label == x) {
            ++seg.back().duration;
        } else {
            seg.push_back({x, 1});
        }
    }
    return seg;
}

Eigen::MatrixXd bar_transitions(const Eigen::MatrixXd& pi) {
    const Eigen::Index k = pi.rows();
    Eigen::MatrixXd out = pi;
    for (Eigen::Index i = 0; i < k; ++i) {
        out(i, i) = 0.0;
        const double off = out.row(i).sum();
        if (!(off > 0.0)) throw std::domain_error("degenerate transition row " + std::to_string(i));
        out.row(i) /= off;
    }
    return out;
}

Eigen::MatrixXi transition_counts(const SegmentSequence& seg, int k) {
    Eigen::MatrixXi n = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t s = 1; s < seg.size(); ++s) {
        const int i = seg[s - 1].label;
        const int j = seg[s].label;
        if (i < 0 || i >= k || j < 0 || j >= k) throw std::invalid_argument("transition_counts: label out of range");
        if (i != j) ++n(i, j);
    }
    return n;
}

void validate_model(const ModelState& model) {
    const Eigen::Index k = model.beta.size();
    if (k < 1) throw std::invalid_argument("model has no states");
    if (model.pi.rows() != k || model.pi.cols() != k || static_cast<Eigen::Index>(model.theta.size()) != k ||
        static_cast<Eigen::Index>(model.omega.size()) != k) {
        throw std::invalid_argument("model component sizes disagree");
    }
    if ((model.beta.array() < 0.0).any() || std::abs(model.beta.sum() - 1.0) > 1e-9) {
        throw std::invalid_argument("beta is not on the simplex");
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        if ((model.pi.row(i).array() < 0.0).any() || std::abs(model.pi.row(i).sum() - 1.0) > 1e-9) {
            throw std::invalid_argument("pi row " + std::to_string(i) + " is not on the simplex");
        }
        if (!(model.omega[static_cast<std::size_t>(i)].rate > 0.0)) throw std::invalid_argument("duration rate must be > 0");
    }
}

void Hyperparams::validate() const {
    if (!(gamma > 0.0) || !(alpha > 0.0)) throw std::invalid_argument("gamma and alpha must be > 0");
    if (!(tau >= 0.0)) throw std::invalid_argument("tau must be >= 0");
    if (k_max < 2) throw std::invalid_argument("k_max must be >= 2");
    if (d_max && *d_max < 1) throw std::invalid_argument("d_max must be >= 1");
    if (burn_in < 0) throw std::invalid_argument("burn_in must be >= 0");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    if (max_iter < 0) throw std::invalid_argument("max_iter must be >= 0");
    if (!(estimate_window_frac > 0.0 && estimate_window_frac <= 1.0)) {
        throw std::invalid_argument("estimate_window_frac must be in (0, 1]");
    }
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("damping must be in (0, 1]");
    if (check_every < 8) throw std::invalid_argument("check_every must be >= 8");
    if (!(duration_prior.shape > 0.0) || !(duration_prior.scale > 0.0)) {
        throw std::invalid_argument("duration prior must be > 0");
    }
    rhsmm::validate(emission_prior);
}

}  // namespace rhsmm
