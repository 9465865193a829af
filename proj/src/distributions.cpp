#include "rhsmm/distributions.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace rhsmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double uniform_open_zero(Rng& rng) {
    // (0, 1]
    return 1.0 - std::generate_canonical<double, 53>(rng);
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double s = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
    return 2.0 * s;
}

double log_multivariate_gamma(double a, int p) {
    double s = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
    for (int j = 0; j < p; ++j) s += std::lgamma(a - 0.5 * j);
    return s;
}

}  // namespace

int emission_dim(const EmissionPrior& prior) {
    if (const auto* mv = std::get_if<MvEmissionPrior>(&prior)) {
        return static_cast<int>(mv->mean_prior.mean.size());
    }
    return 1;
}

void validate(const EmissionPrior& prior) {
    if (const auto* s = std::get_if<ScalarEmissionPrior>(&prior)) {
        if (!(s->mean_prior.variance > 0.0)) throw std::invalid_argument("emission prior: mean variance must be > 0");
        if (!(s->variance_prior.shape > 0.0) || !(s->variance_prior.scale > 0.0)) {
            throw std::invalid_argument("emission prior: inverse-gamma shape and scale must be > 0");
        }
        return;
    }
    const auto& mv = std::get<MvEmissionPrior>(prior);
    const auto p = mv.mean_prior.mean.size();
    if (p < 1) throw std::invalid_argument("emission prior: empty mean");
    if (mv.mean_prior.covariance.rows() != p || mv.mean_prior.covariance.cols() != p ||
        mv.covariance_prior.scale.rows() != p || mv.covariance_prior.scale.cols() != p) {
        throw std::invalid_argument("emission prior: dimension mismatch");
    }
    if (!(mv.covariance_prior.dof > static_cast<double>(p) - 1.0)) {
        throw std::invalid_argument("emission prior: inverse-Wishart dof must exceed p - 1");
    }
    if (mv.mean_prior.covariance.llt().info() != Eigen::Success ||
        mv.covariance_prior.scale.llt().info() != Eigen::Success) {
        throw std::invalid_argument("emission prior: matrices must be SPD");
    }
}

// ---- samplers ----

double sample_log_gamma(double shape, Rng& rng) {
    if (shape >= 1.0) {
        std::gamma_distribution<double> g(shape, 1.0);
        return std::log(g(rng));
    }
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    return std::log(g(rng)) + std::log(uniform_open_zero(rng)) / shape;
}

std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng) {
    if (concentration.empty()) throw std::invalid_argument("invalid concentration: empty");
    for (double c : concentration) {
        if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("invalid concentration: entries must be > 0");
    }
    std::vector<double> logs(concentration.size());
    for (std::size_t i = 0; i < concentration.size(); ++i) logs[i] = sample_log_gamma(concentration[i], rng);
    const double norm = log_sum_exp(logs);
    std::vector<double> out(logs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        out[i] = std::exp(logs[i] - norm);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

double sample_gamma(double shape, double rate, Rng& rng) {
    std::gamma_distribution<double> g(shape, 1.0 / rate);
    return g(rng);
}

double sample_normal(double mean, double variance, Rng& rng) {
    std::normal_distribution<double> n(mean, std::sqrt(variance));
    return n(rng);
}

double sample_inv_gamma(const InvGammaPrior& params, Rng& rng) {
    std::gamma_distribution<double> g(params.shape, 1.0);
    return params.scale / g(rng);
}

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng) {
    const auto llt = stable_llt(covariance);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXd z(mean.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = n(rng);
    return mean + llt.matrixL() * z;
}

Eigen::MatrixXd sample_inv_wishart(const InvWishartPrior& params, Rng& rng) {
    const Eigen::Index p = params.scale.rows();
    if (!(params.dof > static_cast<double>(p) - 1.0)) {
        throw std::invalid_argument("inverse-Wishart dof must exceed p - 1");
    }
    // Bartlett decomposition of W ~ Wishart(dof, scale^-1); the draw is W^-1.
    const Eigen::MatrixXd scale_inv = stable_llt(params.scale).solve(Eigen::MatrixXd::Identity(p, p));
    const auto llt = stable_llt(0.5 * (scale_inv + scale_inv.transpose()));
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
    std::normal_distribution<double> n(0.0, 1.0);
    for (Eigen::Index i = 0; i < p; ++i) {
        std::chi_squared_distribution<double> chi(params.dof - static_cast<double>(i));
        a(i, i) = std::sqrt(chi(rng));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = n(rng);
    }
    const Eigen::MatrixXd la = llt.matrixL() * a;
    const Eigen::MatrixXd w = la * la.transpose();
    Eigen::MatrixXd sigma = stable_llt(w).solve(Eigen::MatrixXd::Identity(p, p));
    return 0.5 * (sigma + sigma.transpose());
}

int sample_log_categorical(std::span<const double> log_weights, Rng& rng) {
    if (log_weights.empty()) throw std::domain_error("degenerate posterior: empty categorical");
    double mx = kNegInf;
    for (double w : log_weights) {
        if (std::isnan(w)) throw std::domain_error("degenerate posterior: NaN weight");
        mx = std::max(mx, w);
    }
    if (!std::isfinite(mx)) throw std::domain_error("degenerate posterior: all weights are -inf");
    double total = 0.0;
    for (double w : log_weights) total += std::exp(w - mx);
    const double u = std::generate_canonical<double, 53>(rng) * total;
    double acc = 0.0;
    int last_positive = 0;
    for (std::size_t i = 0; i < log_weights.size(); ++i) {
        const double p = std::exp(log_weights[i] - mx);
        if (p <= 0.0) continue;
        acc += p;
        last_positive = static_cast<int>(i);
        if (u < acc) return static_cast<int>(i);
    }
    return last_positive;
}

double log_sum_exp(std::span<const double> values) {
    double mx = kNegInf;
    for (double v : values) mx = std::max(mx, v);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double v : values) s += std::exp(v - mx);
    return mx + std::log(s);
}

Eigen::LLT<Eigen::MatrixXd> stable_llt(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) return llt;
    llt.compute(m + 1e-9 * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    if (llt.info() != Eigen::Success) throw std::domain_error("matrix is not symmetric positive-definite");
    return llt;
}

// ---- conjugate updates ----

NormalPrior1D normal_mean_conditional(std::span<const double> data, double variance, const NormalPrior1D& prior) {
    if (!(variance > 0.0) || !(prior.variance > 0.0)) throw std::invalid_argument("variances must be > 0");
    if (data.empty()) return prior;
    double sum = 0.0;
    for (double y : data) sum += y;
    const double n = static_cast<double>(data.size());
    const double post_var = 1.0 / (1.0 / prior.variance + n / variance);
    return {post_var * (prior.mean / prior.variance + sum / variance), post_var};
}

InvGammaPrior inv_gamma_variance_conditional(std::span<const double> data, double mean, const InvGammaPrior& prior) {
    if (!(prior.shape > 0.0) || !(prior.scale > 0.0)) throw std::invalid_argument("inverse-gamma prior must be > 0");
    if (data.empty()) return prior;
    double ss = 0.0;
    for (double y : data) ss += (y - mean) * (y - mean);
    return {prior.shape + 0.5 * static_cast<double>(data.size()), prior.scale + 0.5 * ss};
}

MvnPrior mvn_mean_conditional(std::span<const Eigen::VectorXd> data, const Eigen::MatrixXd& covariance,
                              const MvnPrior& prior) {
    if (data.empty()) return prior;
    const Eigen::Index p = prior.mean.size();
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd prior_prec = stable_llt(prior.covariance).solve(id);
    const Eigen::MatrixXd lik_prec = stable_llt(covariance).solve(id);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(p);
    for (const auto& y : data) {
        if (y.size() != p) throw std::invalid_argument("observation dimension mismatch");
        sum += y;
    }
    const double n = static_cast<double>(data.size());
    Eigen::MatrixXd post_prec = prior_prec + n * lik_prec;
    post_prec = 0.5 * (post_prec + post_prec.transpose());
    Eigen::MatrixXd post_cov = stable_llt(post_prec).solve(id);
    post_cov = 0.5 * (post_cov + post_cov.transpose());
    Eigen::VectorXd post_mean = post_cov * (prior_prec * prior.mean + lik_prec * sum);
    return {std::move(post_mean), std::move(post_cov)};
}

InvWishartPrior inv_wishart_scale_conditional(std::span<const Eigen::VectorXd> data, const Eigen::VectorXd& mean,
                                              const InvWishartPrior& prior) {
    // Pure arithmetic: dof validity is checked where the distribution is used.
    if (!(prior.dof > 0.0)) throw std::invalid_argument("inverse-Wishart dof must be > 0");
    if (data.empty()) return prior;
    Eigen::MatrixXd scatter = prior.scale;
    for (const auto& y : data) {
        if (y.size() != mean.size()) throw std::invalid_argument("observation dimension mismatch");
        const Eigen::VectorXd r = y - mean;
        scatter.noalias() += r * r.transpose();
    }
    return {prior.dof + static_cast<double>(data.size()), std::move(scatter)};
}

GammaShapeRate gamma_duration_conditional(std::span<const int> durations, const DurationPrior& prior) {
    if (!(prior.shape > 0.0) || !(prior.scale > 0.0)) throw std::invalid_argument("duration prior must be > 0");
    double excess = 0.0;
    for (int d : durations) {
        if (d < 1) throw std::invalid_argument("invalid duration: durations must be >= 1");
        excess += d - 1;
    }
    return {prior.shape + excess, 1.0 / prior.scale + static_cast<double>(durations.size())};
}

// ---- densities ----

double shifted_poisson_logpmf(int d, double rate) {
    if (d < 1) throw std::domain_error("shifted Poisson: duration must be >= 1");
    if (!(rate > 0.0)) throw std::domain_error("shifted Poisson: rate must be > 0");
    if (d == 1) return -rate;
    return (d - 1) * std::log(rate) - rate - std::lgamma(static_cast<double>(d));
}

double shifted_poisson_log_sf(int d, double rate) {
    if (d < 0) throw std::domain_error("shifted Poisson: survival index must be >= 0");
    if (!(rate > 0.0)) throw std::domain_error("shifted Poisson: rate must be > 0");
    if (d == 0) return 0.0;
    // P(D > d) = P(N >= d) for N ~ Poisson(rate), the regularized lower
    // incomplete gamma P(d, rate).
    const double a = d;
    const double x = rate;
    if (x < a + 1.0) {
        double term = 1.0;
        double sum = 1.0;
        for (int k = 1; k < 10000; ++k) {
            term *= x / (a + k);
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return a * std::log(x) - x - std::lgamma(a + 1.0) + std::log(sum);
    }
    return std::log1p(-boost::math::gamma_q(a, x));
}

double normal_logpdf(double x, double mean, double variance) {
    const double r = x - mean;
    return -0.5 * (kLog2Pi + std::log(variance) + r * r / variance);
}

double emission_logpdf(double y, const GaussianParams1D& theta) { return normal_logpdf(y, theta.mean, theta.variance); }

double emission_logpdf(const Eigen::VectorXd& y, const GaussianParamsMV& theta) {
    const Eigen::Index p = theta.mean.size();
    if (y.size() != p || theta.covariance.rows() != p || theta.covariance.cols() != p) {
        throw std::invalid_argument("emission_logpdf: dimension mismatch");
    }
    const auto llt = stable_llt(theta.covariance);
    const Eigen::VectorXd z = llt.matrixL().solve(y - theta.mean);
    return -0.5 * (static_cast<double>(p) * kLog2Pi + log_det_from_llt(llt) + z.squaredNorm());
}

double inv_gamma_logpdf(double x, const InvGammaPrior& params) {
    if (!(x > 0.0)) return kNegInf;
    return params.shape * std::log(params.scale) - std::lgamma(params.shape) - (params.shape + 1.0) * std::log(x) -
           params.scale / x;
}

double gamma_logpdf(double x, double shape, double rate) {
    if (!(x > 0.0)) return kNegInf;
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double inv_wishart_logpdf(const Eigen::MatrixXd& x, const InvWishartPrior& params) {
    const int p = static_cast<int>(x.rows());
    Eigen::LLT<Eigen::MatrixXd> llt_x(x);
    if (llt_x.info() != Eigen::Success) return kNegInf;
    const auto llt_s = stable_llt(params.scale);
    const double nu = params.dof;
    const Eigen::MatrixXd x_inv_psi = llt_x.solve(params.scale);
    return 0.5 * nu * log_det_from_llt(llt_s) - 0.5 * nu * p * std::numbers::ln2 - log_multivariate_gamma(0.5 * nu, p) -
           0.5 * (nu + p + 1.0) * log_det_from_llt(llt_x) - 0.5 * x_inv_psi.trace();
}

double dirichlet_logpdf(std::span<const double> x, std::span<const double> concentration) {
    if (x.size() != concentration.size()) throw std::invalid_argument("dirichlet_logpdf: size mismatch");
    double total = 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        total += concentration[i];
        s += -std::lgamma(concentration[i]) + (concentration[i] - 1.0) * std::log(x[i]);
    }
    return s + std::lgamma(total);
}

}  // namespace rhsmm
