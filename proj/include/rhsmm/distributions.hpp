#pragma once

// Conjugate and semi-conjugate updates, samplers and log-densities for the
// emission (Gaussian), duration (shifted Poisson) and transition (Dirichlet)
// distributions used by the sampler. Every function is pure apart from an
// explicitly passed random engine.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace rhsmm {

using Rng = std::mt19937_64;

struct GaussianParams1D {
    double mean = 0.0;
    double variance = 1.0;
};

/// Multivariate Gaussian. The scalar family is stored as p = 1.
struct GaussianParamsMV {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;

    [[nodiscard]] int dim() const { return static_cast<int>(mean.size()); }
};

/// Rate of the shifted Poisson: d = 1 + Poisson(rate), mean duration 1 + rate.
struct DurationParams {
    double rate = 1.0;
};

struct NormalPrior1D {
    double mean = 0.0;
    double variance = 1.0;
};

/// Inverse-gamma with shape a and scale b (density ∝ x^{-a-1} e^{-b/x}).
struct InvGammaPrior {
    double shape = 1.0;
    double scale = 1.0;
};

struct MvnPrior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

struct InvWishartPrior {
    double dof = 1.0;
    Eigen::MatrixXd scale;
};

struct ScalarEmissionPrior {
    NormalPrior1D mean_prior{0.0, 4.0};
    InvGammaPrior variance_prior{2.0, 2.0};
};

struct MvEmissionPrior {
    MvnPrior mean_prior;
    InvWishartPrior covariance_prior;
};

using EmissionPrior = std::variant<ScalarEmissionPrior, MvEmissionPrior>;

[[nodiscard]] int emission_dim(const EmissionPrior& prior);
void validate(const EmissionPrior& prior);

/// Gamma prior on the duration rate in shape-scale form (mean shape*scale).
struct DurationPrior {
    double shape = 1.0;
    double scale = 7.0;
};

/// Gamma posterior in shape-rate form.
struct GammaShapeRate {
    double shape = 1.0;
    double rate = 1.0;
};

// ---- samplers ----

/// Draws from Dirichlet(concentration). Works in log space so that very
/// small concentrations do not underflow the whole vector.
[[nodiscard]] std::vector<double> sample_dirichlet(std::span<const double> concentration, Rng& rng);

/// log of a Gamma(shape, 1) draw, accurate for tiny shapes.
[[nodiscard]] double sample_log_gamma(double shape, Rng& rng);

[[nodiscard]] double sample_gamma(double shape, double rate, Rng& rng);
[[nodiscard]] double sample_normal(double mean, double variance, Rng& rng);
[[nodiscard]] double sample_inv_gamma(const InvGammaPrior& params, Rng& rng);
[[nodiscard]] Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance, Rng& rng);
[[nodiscard]] Eigen::MatrixXd sample_inv_wishart(const InvWishartPrior& params, Rng& rng);

/// Index drawn with probability proportional to exp(log_weights[i]).
/// Throws std::domain_error when every weight is -inf or NaN.
[[nodiscard]] int sample_log_categorical(std::span<const double> log_weights, Rng& rng);

[[nodiscard]] double log_sum_exp(std::span<const double> values);

/// Cholesky factor of an SPD matrix; retries once with 1e-9 I jitter when
/// the matrix is numerically singular, then throws std::domain_error.
[[nodiscard]] Eigen::LLT<Eigen::MatrixXd> stable_llt(const Eigen::MatrixXd& m);

// ---- conjugate updates ----

[[nodiscard]] NormalPrior1D normal_mean_conditional(std::span<const double> data, double variance,
                                                    const NormalPrior1D& prior);

[[nodiscard]] InvGammaPrior inv_gamma_variance_conditional(std::span<const double> data, double mean,
                                                           const InvGammaPrior& prior);

[[nodiscard]] MvnPrior mvn_mean_conditional(std::span<const Eigen::VectorXd> data,
                                            const Eigen::MatrixXd& covariance, const MvnPrior& prior);

[[nodiscard]] InvWishartPrior inv_wishart_scale_conditional(std::span<const Eigen::VectorXd> data,
                                                            const Eigen::VectorXd& mean,
                                                            const InvWishartPrior& prior);

/// Posterior over the shifted-Poisson rate given complete durations (all >= 1).
[[nodiscard]] GammaShapeRate gamma_duration_conditional(std::span<const int> durations,
                                                        const DurationPrior& prior);

// ---- densities ----

[[nodiscard]] double shifted_poisson_logpmf(int d, double rate);

/// log P(D > d) for the shifted Poisson; log_sf(0) = 0.
[[nodiscard]] double shifted_poisson_log_sf(int d, double rate);

[[nodiscard]] double emission_logpdf(double y, const GaussianParams1D& theta);
[[nodiscard]] double emission_logpdf(const Eigen::VectorXd& y, const GaussianParamsMV& theta);

[[nodiscard]] double normal_logpdf(double x, double mean, double variance);
[[nodiscard]] double inv_gamma_logpdf(double x, const InvGammaPrior& params);
[[nodiscard]] double gamma_logpdf(double x, double shape, double rate);
[[nodiscard]] double inv_wishart_logpdf(const Eigen::MatrixXd& x, const InvWishartPrior& params);
[[nodiscard]] double dirichlet_logpdf(std::span<const double> x, std::span<const double> concentration);

}  // namespace rhsmm
