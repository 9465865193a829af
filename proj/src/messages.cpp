#include "rhsmm/messages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rhsmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Terms this far below the running maximum contribute less than 1e-21 each.
constexpr double kNegligible = 48.0;

double lse_buffer(const double* v, int n) {
    double mx = kNegInf;
    for (int i = 0; i < n; ++i) mx = std::max(mx, v[i]);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    const double cutoff = mx - kNegligible;
    for (int i = 0; i < n; ++i) {
        if (v[i] > cutoff) s += std::exp(v[i] - mx);
    }
    return mx + std::log(s);
}

}  // namespace

std::vector<int> all_states(int k) {
    std::vector<int> s(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = i;
    return s;
}

Eigen::MatrixXd emission_loglik(const ObservationSequence& y, std::span<const GaussianParamsMV> theta,
                                std::span<const int> active) {
    const int t_len = y.length();
    const int p = y.dim();
    const auto k = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd ll(t_len, k);
    constexpr double log2pi = 1.8378770664093454835606594728112;
    for (Eigen::Index c = 0; c < k; ++c) {
        const auto& th = theta[static_cast<std::size_t>(active[static_cast<std::size_t>(c)])];
        if (th.dim() != p) throw std::invalid_argument("emission dimension does not match observations");
        if (p == 1) {
            const double var = th.covariance(0, 0);
            if (!(var > 0.0)) throw std::domain_error("emission variance must be > 0");
            const double mu = th.mean(0);
            const double norm = -0.5 * (log2pi + std::log(var));
            for (int t = 0; t < t_len; ++t) {
                const double r = y.values(t, 0) - mu;
                ll(t, c) = norm - 0.5 * r * r / var;
            }
            continue;
        }
        const auto llt = stable_llt(th.covariance);
        double logdet = 0.0;
        for (int i = 0; i < p; ++i) logdet += std::log(llt.matrixLLT()(i, i));
        const double norm = -0.5 * (p * log2pi) - logdet;
        Eigen::MatrixXd centered = (y.values.rowwise() - th.mean.transpose()).transpose();
        llt.matrixL().solveInPlace(centered);
        ll.col(c) = (norm - 0.5 * centered.colwise().squaredNorm().array()).transpose();
    }
    return ll;
}

BackwardMessages backward_messages(const ObservationSequence& y, const ModelState& model, std::span<const int> active,
                                   std::optional<int> d_max) {
    if (active.empty()) throw std::invalid_argument("backward_messages: empty active set");
    if (d_max && *d_max < 1) throw std::invalid_argument("backward_messages: d_max must be >= 1");
    const int t_len = y.length();
    const int k = static_cast<int>(active.size());
    for (int s : active) {
        if (s < 0 || s >= model.num_states()) throw std::invalid_argument("backward_messages: active state out of range");
    }

    BackwardMessages m;
    m.active.assign(active.begin(), active.end());
    m.d_max = std::min(d_max.value_or(t_len), t_len);

    const Eigen::MatrixXd ll = emission_loglik(y, model.theta, active);
    m.cum_loglik.resize(t_len + 1, k);
    m.cum_loglik.row(0).setZero();
    for (int t = 0; t < t_len; ++t) m.cum_loglik.row(t + 1) = m.cum_loglik.row(t) + ll.row(t);

    // pi_bar over the active states. A row with no off-diagonal mass among them
    // (e.g. a lone state) simply has no way out.
    m.log_pi_bar.resize(k, k);
    for (int a = 0; a < k; ++a) {
        const int i = active[static_cast<std::size_t>(a)];
        double off = 0.0;
        for (int b = 0; b < k; ++b) {
            if (b != a) off += model.pi(i, active[static_cast<std::size_t>(b)]);
        }
        for (int b = 0; b < k; ++b) {
            const double v = b == a ? 0.0 : model.pi(i, active[static_cast<std::size_t>(b)]);
            m.log_pi_bar(a, b) = (off > 0.0 && v > 0.0) ? std::log(v / off) : kNegInf;
        }
    }

    m.log_pmf.resize(m.d_max + 1, k);
    m.log_sf.resize(m.d_max + 1, k);
    for (int c = 0; c < k; ++c) {
        const double rate = model.omega[static_cast<std::size_t>(active[static_cast<std::size_t>(c)])].rate;
        m.log_pmf(0, c) = kNegInf;
        for (int d = 1; d <= m.d_max; ++d) m.log_pmf(d, c) = shifted_poisson_logpmf(d, rate);
        for (int d = 0; d <= m.d_max; ++d) m.log_sf(d, c) = shifted_poisson_log_sf(d, rate);
    }

    m.log_b.resize(t_len + 1, k);
    m.log_bstar.resize(t_len + 1, k);
    m.log_b.row(t_len).setZero();
    m.log_bstar.row(t_len).setZero();

    std::vector<double> buf(static_cast<std::size_t>(m.d_max) + 1);
    std::vector<double> row(static_cast<std::size_t>(k));
    for (int t = t_len - 1; t >= 0; --t) {
        const int dlim = std::min(m.d_max, t_len - t);
        for (int c = 0; c < k; ++c) {
            const double base = m.cum_loglik(t, c);
            const double* lb = m.log_b.col(c).data();
            const double* cum = m.cum_loglik.col(c).data();
            const double* pmf = m.log_pmf.col(c).data();
            for (int d = 1; d <= dlim; ++d) {
                buf[static_cast<std::size_t>(d - 1)] = lb[t + d] + pmf[d] + (cum[t + d] - base);
            }
            buf[static_cast<std::size_t>(dlim)] = m.log_sf(dlim, c) + (cum[t_len] - base);
            m.log_bstar(t, c) = lse_buffer(buf.data(), dlim + 1);
        }
        for (int a = 0; a < k; ++a) {
            for (int b = 0; b < k; ++b) row[static_cast<std::size_t>(b)] = m.log_pi_bar(a, b) + m.log_bstar(t, b);
            m.log_b(t, a) = lse_buffer(row.data(), k);
        }
    }
    return m;
}

std::vector<double> initial_state_marginal(const BackwardMessages& msgs, std::span<const double> initial) {
    const int k = msgs.num_active();
    if (static_cast<int>(initial.size()) != k) throw std::invalid_argument("initial distribution size mismatch");
    std::vector<double> w(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        const double pc = initial[static_cast<std::size_t>(c)];
        w[static_cast<std::size_t>(c)] = (pc > 0.0 ? std::log(pc) : kNegInf) + msgs.log_bstar(0, c);
    }
    const double norm = log_sum_exp(w);
    if (!std::isfinite(norm)) throw std::domain_error("initial_state_marginal: zero evidence");
    for (double& v : w) v = std::exp(v - norm);
    return w;
}

double log_likelihood(const BackwardMessages& msgs) {
    const int k = msgs.num_active();
    std::vector<double> w(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = msgs.log_bstar(0, c);
    return log_sum_exp(w) - std::log(static_cast<double>(k));
}

SegmentSequence sample_segments(const BackwardMessages& msgs, Rng& rng) {
    const int t_len = msgs.length();
    const int k = msgs.num_active();
    SegmentSequence seg;

    std::vector<double> w(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = msgs.log_bstar(0, c);
    int state = sample_log_categorical(w, rng);

    std::vector<double> dw(static_cast<std::size_t>(msgs.d_max) + 1);
    int t = 0;
    while (true) {
        const int dlim = std::min(msgs.d_max, t_len - t);
        const double base = msgs.cum_loglik(t, state);
        for (int d = 1; d <= dlim; ++d) {
            dw[static_cast<std::size_t>(d - 1)] =
                msgs.log_b(t + d, state) + msgs.log_pmf(d, state) + (msgs.cum_loglik(t + d, state) - base);
        }
        dw[static_cast<std::size_t>(dlim)] = msgs.log_sf(dlim, state) + (msgs.cum_loglik(t_len, state) - base);
        const int pick = sample_log_categorical(std::span<const double>(dw.data(), static_cast<std::size_t>(dlim) + 1), rng);
        const int duration = pick == dlim ? t_len - t : pick + 1;
        seg.push_back({msgs.active[static_cast<std::size_t>(state)], duration});
        t += duration;
        if (t >= t_len) break;
        for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = msgs.log_pi_bar(state, c) + msgs.log_bstar(t, c);
        state = sample_log_categorical(w, rng);
    }
    return seg;
}

}  // namespace rhsmm
