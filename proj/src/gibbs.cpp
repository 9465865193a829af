#include "rhsmm/gibbs.hpp"

#include "rhsmm/messages.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rhsmm {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

double sorted_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double s = 0.0;
    for (double v : terms) s += v;
    return s;
}

std::vector<double> clamped(const Eigen::VectorXd& v) {
    std::vector<double> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = std::max(v(i), kTiny);
    return out;
}

std::vector<Eigen::VectorXd> ordered_occupied_means(const std::vector<GaussianParamsMV>& theta,
                                                    std::span<const int> labels, double floor_frac) {
    std::vector<int> counts(theta.size(), 0);
    for (int x : labels) ++counts[static_cast<std::size_t>(x)];
    const double floor_count = floor_frac * static_cast<double>(labels.size());
    std::vector<Eigen::VectorXd> means;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (counts[i] > 0 && static_cast<double>(counts[i]) >= floor_count) means.push_back(theta[i].mean);
    }
    std::sort(means.begin(), means.end(), lex_less);
    return means;
}

}  // namespace

SamplerRng::SamplerRng(std::uint64_t seed) {
    const auto lo = static_cast<std::uint32_t>(seed);
    const auto hi = static_cast<std::uint32_t>(seed >> 32);
    std::seed_seq main_seq{lo, hi, 0u};
    std::seed_seq merge_seq{lo, hi, 1u};
    main.seed(main_seq);
    merge.seed(merge_seq);
}

bool SamplerState::operator==(const SamplerState& other) const {
    if (iteration != other.iteration || labels != other.labels || sampled_labels != other.sampled_labels) return false;
    if (beta_tilde != other.beta_tilde || model.beta != other.model.beta || model.pi != other.model.pi) return false;
    if (model.theta.size() != other.model.theta.size()) return false;
    for (std::size_t i = 0; i < model.theta.size(); ++i) {
        if (model.theta[i].mean != other.model.theta[i].mean ||
            model.theta[i].covariance != other.model.theta[i].covariance ||
            model.omega[i].rate != other.model.omega[i].rate) {
            return false;
        }
    }
    return true;
}

GaussianParamsMV sample_emission_prior(const EmissionPrior& prior, Rng& rng) {
    if (const auto* s = std::get_if<ScalarEmissionPrior>(&prior)) {
        GaussianParamsMV th;
        th.mean = Eigen::VectorXd::Constant(1, sample_normal(s->mean_prior.mean, s->mean_prior.variance, rng));
        th.covariance = Eigen::MatrixXd::Constant(1, 1, sample_inv_gamma(s->variance_prior, rng));
        return th;
    }
    const auto& mv = std::get<MvEmissionPrior>(prior);
    GaussianParamsMV th;
    th.mean = sample_mvn(mv.mean_prior.mean, mv.mean_prior.covariance, rng);
    th.covariance = sample_inv_wishart(mv.covariance_prior, rng);
    return th;
}

std::vector<GaussianParamsMV> resample_emission_params(const ObservationSequence& y, std::span<const int> labels,
                                                       std::span<const GaussianParamsMV> current, int k_max,
                                                       const EmissionPrior& prior, Rng& rng) {
    if (static_cast<int>(labels.size()) != y.length()) throw std::invalid_argument("labels length != T");
    const int p = y.dim();
    if (emission_dim(prior) != p) throw std::invalid_argument("emission prior dimension != observation dimension");
    std::vector<std::vector<int>> members(static_cast<std::size_t>(k_max));
    for (int t = 0; t < y.length(); ++t) {
        const int x = labels[static_cast<std::size_t>(t)];
        if (x < 0 || x >= k_max) throw std::invalid_argument("label out of range");
        members[static_cast<std::size_t>(x)].push_back(t);
    }

    std::vector<GaussianParamsMV> out(static_cast<std::size_t>(k_max));
    for (int i = 0; i < k_max; ++i) {
        const auto& idx = members[static_cast<std::size_t>(i)];
        const bool has_current = static_cast<int>(current.size()) > i && current[static_cast<std::size_t>(i)].dim() == p;
        if (idx.empty() || !has_current) {
            out[static_cast<std::size_t>(i)] = sample_emission_prior(prior, rng);
            if (idx.empty()) continue;
        } else {
            out[static_cast<std::size_t>(i)] = current[static_cast<std::size_t>(i)];
        }
        auto& th = out[static_cast<std::size_t>(i)];
        if (const auto* s = std::get_if<ScalarEmissionPrior>(&prior)) {
            std::vector<double> data(idx.size());
            for (std::size_t n = 0; n < idx.size(); ++n) data[n] = y.values(idx[n], 0);
            const auto mpost = normal_mean_conditional(data, th.covariance(0, 0), s->mean_prior);
            th.mean(0) = sample_normal(mpost.mean, mpost.variance, rng);
            const auto vpost = inv_gamma_variance_conditional(data, th.mean(0), s->variance_prior);
            th.covariance(0, 0) = sample_inv_gamma(vpost, rng);
        } else {
            const auto& mv = std::get<MvEmissionPrior>(prior);
            std::vector<Eigen::VectorXd> data(idx.size());
            for (std::size_t n = 0; n < idx.size(); ++n) data[n] = y.values.row(idx[n]).transpose();
            const auto mpost = mvn_mean_conditional(data, th.covariance, mv.mean_prior);
            th.mean = sample_mvn(mpost.mean, mpost.covariance, rng);
            const auto cpost = inv_wishart_scale_conditional(data, th.mean, mv.covariance_prior);
            th.covariance = sample_inv_wishart(cpost, rng);
        }
    }
    return out;
}

std::vector<DurationParams> resample_duration_params(const SegmentSequence& seg, int k_max, const DurationPrior& prior,
                                                     Rng& rng) {
    std::vector<std::vector<int>> durations(static_cast<std::size_t>(k_max));
    for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
        const int x = seg[s].label;
        if (x < 0 || x >= k_max) throw std::invalid_argument("label out of range");
        durations[static_cast<std::size_t>(x)].push_back(seg[s].duration);
    }
    std::vector<DurationParams> out(static_cast<std::size_t>(k_max));
    for (int i = 0; i < k_max; ++i) {
        const auto post = gamma_duration_conditional(durations[static_cast<std::size_t>(i)], prior);
        double rate = sample_gamma(post.shape, post.rate, rng);
        // A Gamma(1, .) draw can be exactly zero only through underflow.
        out[static_cast<std::size_t>(i)].rate = std::max(rate, 1e-12);
    }
    return out;
}

Eigen::MatrixXi sample_table_counts(const Eigen::MatrixXi& n, const Eigen::VectorXd& beta_tilde, double alpha,
                                    Rng& rng) {
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n.rows(), n.cols());
    for (Eigen::Index i = 0; i < n.rows(); ++i) {
        for (Eigen::Index j = 0; j < n.cols(); ++j) {
            const double conc = alpha * beta_tilde(j);
            for (int c = 0; c < n(i, j); ++c) {
                if (c == 0) {
                    ++m(i, j);
                    continue;
                }
                const double u = std::generate_canonical<double, 53>(rng);
                if (u < conc / (conc + c)) ++m(i, j);
            }
        }
    }
    return m;
}

BetaAndTransitions resample_beta_and_transitions(const SegmentSequence& seg, const Eigen::VectorXd& beta_tilde,
                                                 const Hyperparams& hyper, Rng& rng) {
    const int k = hyper.k_max;
    if (beta_tilde.size() != k) throw std::invalid_argument("beta_tilde size != k_max");
    if ((beta_tilde.array() < 0.0).any()) throw std::invalid_argument("beta_tilde entries must be >= 0");
    const Eigen::MatrixXi n = transition_counts(seg, k);
    const Eigen::MatrixXi m = sample_table_counts(n, beta_tilde, hyper.alpha, rng);

    Eigen::VectorXd conc(k);
    for (int j = 0; j < k; ++j) conc(j) = hyper.gamma / k + m.col(j).sum();
    const auto beta_draw = sample_dirichlet(clamped(conc), rng);

    BetaAndTransitions out;
    out.beta = Eigen::Map<const Eigen::VectorXd>(beta_draw.data(), k);
    out.pi.resize(k, k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd row_conc = hyper.alpha * out.beta + n.row(i).transpose().cast<double>();
        const auto c = clamped(row_conc);
        std::vector<double> row;
        // Redraw the rare row whose off-diagonal mass underflows to zero.
        for (int attempt = 0; attempt < 1000; ++attempt) {
            row = sample_dirichlet(c, rng);
            if (row[static_cast<std::size_t>(i)] < 1.0) break;
        }
        if (!(row[static_cast<std::size_t>(i)] < 1.0)) throw std::domain_error("transition row stuck on self-transition");
        out.pi.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), k);
    }
    return out;
}

std::vector<int> apply_identifiability(ModelState& model, std::vector<int>& labels) {
    const int k = model.num_states();
    std::vector<char> used(static_cast<std::size_t>(k), 0);
    for (int x : labels) used[static_cast<std::size_t>(x)] = 1;
    std::vector<int> perm(static_cast<std::size_t>(k));
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
        if (used[static_cast<std::size_t>(a)] != used[static_cast<std::size_t>(b)]) {
            return used[static_cast<std::size_t>(a)] > used[static_cast<std::size_t>(b)];
        }
        const auto& ma = model.theta[static_cast<std::size_t>(a)].mean;
        const auto& mb = model.theta[static_cast<std::size_t>(b)].mean;
        if (lex_less(ma, mb)) return true;
        if (lex_less(mb, ma)) return false;
        return model.omega[static_cast<std::size_t>(a)].rate < model.omega[static_cast<std::size_t>(b)].rate;
    });

    ModelState out;
    out.beta.resize(k);
    out.pi.resize(k, k);
    out.theta.resize(static_cast<std::size_t>(k));
    out.omega.resize(static_cast<std::size_t>(k));
    std::vector<int> inverse(static_cast<std::size_t>(k));
    for (int a = 0; a < k; ++a) {
        const int old = perm[static_cast<std::size_t>(a)];
        inverse[static_cast<std::size_t>(old)] = a;
        out.beta(a) = model.beta(old);
        out.theta[static_cast<std::size_t>(a)] = std::move(model.theta[static_cast<std::size_t>(old)]);
        out.omega[static_cast<std::size_t>(a)] = model.omega[static_cast<std::size_t>(old)];
        for (int b = 0; b < k; ++b) out.pi(a, b) = model.pi(old, perm[static_cast<std::size_t>(b)]);
    }
    model = std::move(out);
    for (int& x : labels) x = inverse[static_cast<std::size_t>(x)];
    return perm;
}

SamplerState initialize_sampler(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng) {
    hyper.validate();
    y.validate();
    const int k = hyper.k_max;
    SamplerState state;
    auto& model = state.model;
    const std::vector<double> beta_conc(static_cast<std::size_t>(k), hyper.gamma / k);
    const auto beta = sample_dirichlet(beta_conc, rng.main);
    model.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), k);
    // No transitions observed yet: pi rows come from Dir(alpha * beta).
    const auto bt = resample_beta_and_transitions(SegmentSequence{{0, 1}}, model.beta, hyper, rng.main);
    model.pi = bt.pi;
    model.theta.resize(static_cast<std::size_t>(k));
    model.omega.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        model.theta[static_cast<std::size_t>(i)] = sample_emission_prior(hyper.emission_prior, rng.main);
        model.omega[static_cast<std::size_t>(i)].rate =
            std::max(sample_gamma(hyper.duration_prior.shape, 1.0 / hyper.duration_prior.scale, rng.main), 1e-12);
    }
    std::vector<int> none;
    apply_identifiability(model, none);
    const auto msgs = backward_messages(y, model, all_states(k), hyper.d_max);
    state.sampled_labels = to_label_vector(sample_segments(msgs, rng.main));
    state.labels = state.sampled_labels;
    state.beta_tilde = model.beta;
    return state;
}

void gibbs_iteration(SamplerState& state, const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng) {
    const int k = hyper.k_max;
    const SegmentSequence prev = from_label_vector(state.labels);

    auto bt = resample_beta_and_transitions(prev, state.beta_tilde, hyper, rng.main);
    ModelState model;
    model.beta = std::move(bt.beta);
    model.pi = std::move(bt.pi);
    model.theta = resample_emission_params(y, state.labels, state.model.theta, k, hyper.emission_prior, rng.main);
    model.omega = resample_duration_params(prev, k, hyper.duration_prior, rng.main);

    std::vector<int> prev_labels = state.labels;
    apply_identifiability(model, prev_labels);

    const auto msgs = backward_messages(y, model, all_states(k), hyper.d_max);
    state.sampled_labels = to_label_vector(sample_segments(msgs, rng.main));

    if (hyper.robust) {
        const MergeOptions opts{hyper.tau, hyper.damping, hyper.divergence};
        auto outcome = merge_redundant_states(state.sampled_labels, model.beta, model.pi, model.theta, opts, rng.merge);
        state.labels = std::move(outcome.labels_tilde);
        state.beta_tilde = std::move(outcome.beta_tilde);
        state.last_groups = std::move(outcome.groups);
    } else {
        state.labels = state.sampled_labels;
        state.beta_tilde = model.beta;
        state.last_groups.clear();
    }
    state.model = std::move(model);
    ++state.iteration;
}

double data_log_likelihood(const ModelState& model, const SegmentSequence& seg, const ObservationSequence& y) {
    validate_segments(seg, model.num_states(), y.length());
    const Eigen::MatrixXd pi_bar = bar_transitions(model.pi);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(y.length()) + 2 * seg.size() + 1);
    terms.push_back(-std::log(static_cast<double>(model.num_states())));
    int t = 0;
    for (std::size_t s = 0; s < seg.size(); ++s) {
        const int x = seg[s].label;
        const auto& th = model.theta[static_cast<std::size_t>(x)];
        for (int u = t; u < t + seg[s].duration; ++u) {
            terms.push_back(emission_logpdf(Eigen::VectorXd(y.values.row(u).transpose()), th));
        }
        const double rate = model.omega[static_cast<std::size_t>(x)].rate;
        const bool last = s + 1 == seg.size();
        terms.push_back(last ? shifted_poisson_log_sf(seg[s].duration - 1, rate)
                             : shifted_poisson_logpmf(seg[s].duration, rate));
        if (!last) terms.push_back(std::log(pi_bar(x, seg[s + 1].label)));
        t += seg[s].duration;
    }
    return sorted_sum(std::move(terms));
}

double joint_log_density(const ModelState& model, std::span<const int> labels, const ObservationSequence& y,
                         const Hyperparams& hyper) {
    const int k = model.num_states();
    std::vector<double> terms;
    terms.push_back(data_log_likelihood(model, from_label_vector(labels), y));

    // beta ~ Dir(gamma / K)
    const double a0 = hyper.gamma / k;
    terms.push_back(std::lgamma(hyper.gamma) - k * std::lgamma(a0));
    for (int j = 0; j < k; ++j) terms.push_back((a0 - 1.0) * std::log(model.beta(j)));

    // pi_i ~ Dir(alpha * beta)
    std::vector<double> bsum(model.beta.data(), model.beta.data() + k);
    const double conc_total = hyper.alpha * sorted_sum(bsum);
    for (int i = 0; i < k; ++i) {
        terms.push_back(std::lgamma(conc_total));
        for (int j = 0; j < k; ++j) {
            const double c = hyper.alpha * model.beta(j);
            terms.push_back(-std::lgamma(c) + (c - 1.0) * std::log(model.pi(i, j)));
        }
    }

    for (int i = 0; i < k; ++i) {
        const auto& th = model.theta[static_cast<std::size_t>(i)];
        if (const auto* s = std::get_if<ScalarEmissionPrior>(&hyper.emission_prior)) {
            terms.push_back(normal_logpdf(th.mean(0), s->mean_prior.mean, s->mean_prior.variance));
            terms.push_back(inv_gamma_logpdf(th.covariance(0, 0), s->variance_prior));
        } else {
            const auto& mv = std::get<MvEmissionPrior>(hyper.emission_prior);
            terms.push_back(emission_logpdf(th.mean, GaussianParamsMV{mv.mean_prior.mean, mv.mean_prior.covariance}));
            terms.push_back(inv_wishart_logpdf(th.covariance, mv.covariance_prior));
        }
        terms.push_back(gamma_logpdf(model.omega[static_cast<std::size_t>(i)].rate, hyper.duration_prior.shape,
                                     1.0 / hyper.duration_prior.scale));
    }
    return sorted_sum(std::move(terms));
}

double gelman_rubin(const std::vector<std::vector<double>>& chains) {
    if (chains.size() < 2) throw std::invalid_argument("gelman_rubin: need at least 2 series");
    std::size_t n = chains.front().size();
    for (const auto& c : chains) n = std::min(n, c.size());
    if (n < 4) throw std::invalid_argument("gelman_rubin: series must have length >= 4");
    const double m = static_cast<double>(chains.size());
    const double nn = static_cast<double>(n);
    std::vector<double> means;
    double w = 0.0;
    for (const auto& c : chains) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += c[i];
        mean /= nn;
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (c[i] - mean) * (c[i] - mean);
        w += var / (nn - 1.0);
        means.push_back(mean);
    }
    w /= m;
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
    double b_over_n = 0.0;
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= (m - 1.0);
    if (w <= 0.0) return b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return std::sqrt(((nn - 1.0) / nn * w + b_over_n) / w);
}

double split_gelman_rubin(std::span<const double> series) {
    const std::size_t half = series.size() / 2;
    std::vector<std::vector<double>> chains{{series.begin(), series.begin() + static_cast<std::ptrdiff_t>(half)},
                                           {series.end() - static_cast<std::ptrdiff_t>(half), series.end()}};
    return gelman_rubin(chains);
}

namespace {

void evaluate_convergence(PosteriorChain& chain, double threshold) {
    chain.gr_names.clear();
    chain.gr_values.clear();
    std::vector<double> ll;
    std::size_t ranks = std::numeric_limits<std::size_t>::max();
    for (const auto& s : chain.samples) {
        ll.push_back(s.log_likelihood);
        ranks = std::min(ranks, s.occupied_means.size());
    }
    chain.gr_names.emplace_back("log_likelihood");
    chain.gr_values.push_back(split_gelman_rubin(ll));
    for (std::size_t r = 0; r < ranks; ++r) {
        const auto p = chain.samples.front().occupied_means[r].size();
        for (Eigen::Index c = 0; c < p; ++c) {
            std::vector<double> series;
            series.reserve(chain.samples.size());
            for (const auto& s : chain.samples) series.push_back(s.occupied_means[r](c));
            chain.gr_names.push_back("mean_rank" + std::to_string(r) + "_ch" + std::to_string(c));
            chain.gr_values.push_back(split_gelman_rubin(series));
        }
    }
    chain.converged = std::all_of(chain.gr_values.begin(), chain.gr_values.end(),
                                  [&](double v) { return v < threshold; });
}

}  // namespace

PosteriorChain sample_chain(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng,
                            const IterationObserver& observer) {
    PosteriorChain chain;
    SamplerState state = initialize_sampler(y, hyper, rng);
    for (int it = 1; it <= hyper.max_iter; ++it) {
        gibbs_iteration(state, y, hyper, rng);
        chain.iterations_run = it;
        if (observer) observer(state);
        if (it <= hyper.burn_in || (it - hyper.burn_in) % hyper.thin != 0) continue;

        ChainSample s;
        s.iteration = it;
        s.theta = state.model.theta;
        s.omega = state.model.omega;
        s.pi = state.model.pi;
        s.labels = state.labels;
        s.log_likelihood = data_log_likelihood(state.model, from_label_vector(state.labels), y);
        s.occupied_means = ordered_occupied_means(state.model.theta, state.labels, hyper.occupancy_floor);
        chain.samples.push_back(std::move(s));

        if (chain.samples.size() % static_cast<std::size_t>(hyper.check_every) == 0) {
            evaluate_convergence(chain, hyper.gr_threshold);
            if (chain.converged) break;
        }
    }
    return chain;
}

PointEstimate point_estimate(const PosteriorChain& chain, double window_frac) {
    if (chain.samples.empty()) throw std::runtime_error("point_estimate: chain has no retained samples");
    if (!(window_frac > 0.0 && window_frac <= 1.0)) throw std::invalid_argument("window fraction must be in (0, 1]");
    const std::size_t n = chain.samples.size();
    const std::size_t w = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(window_frac * static_cast<double>(n))));
    const std::size_t first = n - std::min(w, n);
    const std::size_t count = n - first;
    const auto& ref = chain.samples.back();
    const int k = static_cast<int>(ref.theta.size());
    const std::size_t t_len = ref.labels.size();

    PointEstimate est;
    est.labels.resize(t_len);
    std::vector<int> votes(static_cast<std::size_t>(k));
    for (std::size_t t = 0; t < t_len; ++t) {
        std::fill(votes.begin(), votes.end(), 0);
        for (std::size_t s = first; s < n; ++s) ++votes[static_cast<std::size_t>(chain.samples[s].labels[t])];
        est.labels[t] = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    std::vector<int> occ(static_cast<std::size_t>(k), 0);
    for (int x : est.labels) ++occ[static_cast<std::size_t>(x)];
    for (int i = 0; i < k; ++i) {
        if (occ[static_cast<std::size_t>(i)] > 0) est.states.push_back(i);
    }
    est.num_states = static_cast<int>(est.states.size());

    const auto ks = static_cast<Eigen::Index>(est.states.size());
    est.pi_hat = Eigen::MatrixXd::Zero(ks, ks);
    // matched[s][a]: label in sample s covering most of the timesteps assigned
    // to surviving state a, so parameter averages follow the segmentation even
    // when sample-to-sample label indices shift.
    std::vector<std::vector<int>> matched(n - first, std::vector<int>(static_cast<std::size_t>(ks)));
    for (Eigen::Index a = 0; a < ks; ++a) {
        const int x = est.states[static_cast<std::size_t>(a)];
        const int p = ref.theta[static_cast<std::size_t>(x)].dim();
        GaussianParamsMV th{Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p)};
        double rate = 0.0;
        for (std::size_t s = first; s < n; ++s) {
            std::fill(votes.begin(), votes.end(), 0);
            for (std::size_t t = 0; t < t_len; ++t) {
                if (est.labels[t] == x) ++votes[static_cast<std::size_t>(chain.samples[s].labels[t])];
            }
            const auto l = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
            matched[s - first][static_cast<std::size_t>(a)] = static_cast<int>(l);
            th.mean += chain.samples[s].theta[l].mean;
            th.covariance += chain.samples[s].theta[l].covariance;
            rate += chain.samples[s].omega[l].rate;
        }
        th.mean /= static_cast<double>(count);
        th.covariance /= static_cast<double>(count);
        est.theta_hat.push_back(std::move(th));
        est.omega_hat.push_back({rate / static_cast<double>(count)});
        est.occupancy.push_back(static_cast<double>(occ[static_cast<std::size_t>(x)]) / static_cast<double>(t_len));
    }
    for (std::size_t s = first; s < n; ++s) {
        const Eigen::MatrixXd bar = bar_transitions(chain.samples[s].pi);
        for (Eigen::Index a = 0; a < ks; ++a) {
            for (Eigen::Index b = 0; b < ks; ++b) {
                const auto& m = matched[s - first];
                const int la = m[static_cast<std::size_t>(a)];
                const int lb = m[static_cast<std::size_t>(b)];
                if (la != lb) est.pi_hat(a, b) += bar(la, lb);
            }
        }
    }
    for (Eigen::Index a = 0; a < ks; ++a) {
        const double r = est.pi_hat.row(a).sum();
        if (r > 0.0) est.pi_hat.row(a) /= r;
    }
    return est;
}

ChainResult run_chain(const ObservationSequence& y, const Hyperparams& hyper, SamplerRng& rng,
                      const IterationObserver& observer) {
    if (y.length() < 2) throw std::invalid_argument("run_chain: need T >= 2");
    ChainResult r;
    r.chain = sample_chain(y, hyper, rng, observer);
    r.estimate = point_estimate(r.chain, hyper.estimate_window_frac);
    return r;
}

}  // namespace rhsmm
