#include "oracles.hpp"
#include "rhsmm/distributions.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rhsmm;

namespace {

constexpr double kGridTv = 1e-4;

double iw_logpdf_oracle(const Eigen::MatrixXd& x, double nu, const Eigen::MatrixXd& psi) {
    const double p = static_cast<double>(x.rows());
    double log_mvgamma = p * (p - 1.0) / 4.0 * std::log(std::numbers::pi);
    for (int j = 0; j < x.rows(); ++j) log_mvgamma += std::lgamma(nu / 2.0 - j / 2.0);
    return nu / 2.0 * std::log(psi.determinant()) - nu * p / 2.0 * std::log(2.0) - log_mvgamma -
           (nu + p + 1.0) / 2.0 * std::log(x.determinant()) - 0.5 * (psi * x.inverse()).trace();
}

double mvn_logpdf_oracle(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::MatrixXd& s) {
    const double p = static_cast<double>(y.size());
    const Eigen::VectorXd r = y - mu;
    return -0.5 * p * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(s.determinant()) -
           0.5 * r.dot(s.inverse() * r);
}

Eigen::MatrixXd random_spd(int p, Rng& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd a(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) a(i, j) = z(rng);
    }
    return a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(p, p);
}

}  // namespace

TEST_SUITE("dirichlet") {
    TEST_CASE("huge symmetric concentration is near the mean") {
        Rng rng(1);
        const std::vector<double> c{1e9, 1e9};
        const auto x = sample_dirichlet(c, rng);
        CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-3));
        CHECK(x[1] == doctest::Approx(0.5).epsilon(1e-3));
    }

    TEST_CASE("uniform Dirichlet empirical mean") {
        Rng rng(2);
        const std::vector<double> c{1, 1, 1};
        std::vector<double> mean(3, 0.0);
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto x = sample_dirichlet(c, rng);
            double s = 0.0;
            for (int j = 0; j < 3; ++j) {
                mean[static_cast<std::size_t>(j)] += x[static_cast<std::size_t>(j)] / n;
                s += x[static_cast<std::size_t>(j)];
                CHECK(x[static_cast<std::size_t>(j)] >= 0.0);
            }
            REQUIRE(std::abs(s - 1.0) <= 1e-12);
        }
        for (double m : mean) CHECK(std::abs(m - 1.0 / 3.0) < 0.01);
    }

    TEST_CASE("non-positive concentration is rejected") {
        Rng rng(3);
        CHECK_THROWS_AS((void)sample_dirichlet(std::vector<double>{1.0, 0.0}, rng), std::invalid_argument);
        CHECK_THROWS_AS((void)sample_dirichlet(std::vector<double>{1.0, -2.0}, rng), std::invalid_argument);
    }

    TEST_CASE("tiny concentrations still land on the simplex") {
        Rng rng(4);
        const std::vector<double> c(20, 1e-300);
        for (int i = 0; i < 100; ++i) {
            const auto x = sample_dirichlet(c, rng);
            double s = 0.0;
            for (double v : x) {
                CHECK(std::isfinite(v));
                s += v;
            }
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }

    TEST_CASE("exchangeable under permutation of concentrations") {
        Rng rng(5);
        const std::vector<double> a{0.5, 2.0, 4.0};
        const std::vector<double> b{4.0, 0.5, 2.0};
        const int n = 40000;
        std::vector<double> ma(3, 0.0);
        std::vector<double> mb(3, 0.0);
        for (int i = 0; i < n; ++i) {
            const auto xa = sample_dirichlet(a, rng);
            const auto xb = sample_dirichlet(b, rng);
            for (std::size_t j = 0; j < 3; ++j) {
                ma[j] += xa[j] / n;
                mb[j] += xb[j] / n;
            }
        }
        // b is a rotated by one position.
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(ma[j] - mb[(j + 1) % 3]) < 0.01);
        CHECK(std::abs(ma[2] - 4.0 / 6.5) < 0.01);
    }

    TEST_CASE("log-gamma sampler for a tiny shape matches digamma") {
        Rng rng(6);
        const double a = 1e-3;
        const int n = 100000;
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += sample_log_gamma(a, rng) / n;
        const double digamma = -1.0 / a - std::numbers::egamma + std::numbers::pi * std::numbers::pi / 6.0 * a;
        const double se = std::sqrt(1.0 / (a * a)) / std::sqrt(static_cast<double>(n));
        CHECK(std::abs(mean - digamma) < 5.0 * se);
    }
}

TEST_SUITE("normal mean") {
    TEST_CASE("empty data returns the prior") {
        const NormalPrior1D prior{0.0, 4.0};
        const auto post = normal_mean_conditional({}, 1.0, prior);
        CHECK(post.mean == 0.0);
        CHECK(post.variance == 4.0);
    }

    TEST_CASE("single observation") {
        const std::vector<double> d{4.0};
        const auto post = normal_mean_conditional(d, 1.0, {0.0, 4.0});
        CHECK(post.variance == doctest::Approx(0.8).epsilon(1e-12));
        CHECK(post.mean == doctest::Approx(3.2).epsilon(1e-12));
    }

    TEST_CASE("two observations") {
        const std::vector<double> d{2.0, 2.0};
        const auto post = normal_mean_conditional(d, 1.0, {0.0, 4.0});
        CHECK(post.variance == doctest::Approx(1.0 / 2.25).epsilon(1e-12));
        CHECK(post.mean == doctest::Approx(16.0 / 9.0).epsilon(1e-12));
    }

    TEST_CASE("grid oracle on randomized datasets") {
        Rng rng(10);
        std::uniform_real_distribution<double> u(-5.0, 5.0);
        std::uniform_int_distribution<int> n_dist(0, 6);
        for (int rep = 0; rep < 8; ++rep) {
            std::vector<double> d(static_cast<std::size_t>(n_dist(rng)));
            for (double& v : d) v = u(rng);
            const double var = 0.3 + std::abs(u(rng));
            const NormalPrior1D prior{u(rng) * 0.5, 1.0 + std::abs(u(rng))};
            const auto post = normal_mean_conditional(d, var, prior);
            auto grid = [&](double mu) {
                double l = oracle::normal_logpdf(mu, prior.mean, prior.variance);
                for (double v : d) l += oracle::normal_logpdf(v, mu, var);
                return l;
            };
            auto closed = [&](double mu) { return oracle::normal_logpdf(mu, post.mean, post.variance); };
            const double sd = std::sqrt(post.variance);
            const double tv = oracle::grid_tv(grid, closed, post.mean - 12 * sd, post.mean + 12 * sd, 20001);
            CHECK(tv < kGridTv);
        }
    }
}

TEST_SUITE("inverse-gamma variance") {
    TEST_CASE("worked examples") {
        const InvGammaPrior prior{2.0, 2.0};
        const auto e = inv_gamma_variance_conditional({}, 0.0, prior);
        CHECK(e.shape == 2.0);
        CHECK(e.scale == 2.0);
        const std::vector<double> d{4.0, 6.0};
        const auto p = inv_gamma_variance_conditional(d, 5.0, prior);
        CHECK(p.shape == doctest::Approx(3.0));
        CHECK(p.scale == doctest::Approx(3.0));
        const std::vector<double> one{5.0};
        const auto q = inv_gamma_variance_conditional(one, 5.0, prior);
        CHECK(q.shape == doctest::Approx(2.5));
        CHECK(q.scale == doctest::Approx(2.0));
    }

    TEST_CASE("grid oracle on randomized datasets") {
        Rng rng(11);
        std::uniform_real_distribution<double> u(-3.0, 3.0);
        std::uniform_int_distribution<int> n_dist(1, 8);
        for (int rep = 0; rep < 8; ++rep) {
            std::vector<double> d(static_cast<std::size_t>(n_dist(rng)));
            for (double& v : d) v = u(rng);
            const double mean = u(rng) * 0.3;
            const InvGammaPrior prior{1.5 + std::abs(u(rng)), 0.5 + std::abs(u(rng))};
            const auto post = inv_gamma_variance_conditional(d, mean, prior);
            // Integrate over u = log(sigma^2); the Jacobian is the same on both sides.
            auto grid = [&](double lu) {
                const double s2 = std::exp(lu);
                double l = oracle::inv_gamma_logpdf(s2, prior.shape, prior.scale) + lu;
                for (double v : d) l += oracle::normal_logpdf(v, mean, s2);
                return l;
            };
            auto closed = [&](double lu) { return oracle::inv_gamma_logpdf(std::exp(lu), post.shape, post.scale) + lu; };
            CHECK(oracle::grid_tv(grid, closed, -12.0, 8.0, 40001) < kGridTv);
        }
    }
}

TEST_SUITE("multivariate normal mean") {
    TEST_CASE("empty data returns the prior") {
        MvnPrior prior{Eigen::Vector2d(1.0, -1.0), Eigen::Matrix2d::Identity() * 2.0};
        const auto post = mvn_mean_conditional({}, Eigen::Matrix2d::Identity(), prior);
        CHECK(post.mean == prior.mean);
        CHECK(post.covariance == prior.covariance);
    }

    TEST_CASE("one observation with equal precisions") {
        MvnPrior prior{Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()};
        const std::vector<Eigen::VectorXd> d{Eigen::Vector3d(1, 1, 1)};
        const auto post = mvn_mean_conditional(d, Eigen::Matrix3d::Identity(), prior);
        CHECK((post.mean - Eigen::Vector3d::Constant(0.5)).norm() < 1e-12);
        CHECK((post.covariance - 0.5 * Eigen::Matrix3d::Identity()).norm() < 1e-12);
        // One coordinate by grid integration.
        auto grid = [&](double m) { return oracle::normal_logpdf(m, 0.0, 1.0) + oracle::normal_logpdf(1.0, m, 1.0); };
        auto closed = [&](double m) { return oracle::normal_logpdf(m, post.mean(0), post.covariance(0, 0)); };
        CHECK(oracle::grid_tv(grid, closed, -8.0, 8.0, 20001) < kGridTv);
    }

    TEST_CASE("p = 1 reduces to the scalar update") {
        Rng rng(12);
        std::normal_distribution<double> z(0.0, 2.0);
        for (int rep = 0; rep < 5; ++rep) {
            std::vector<double> d(4);
            std::vector<Eigen::VectorXd> dv;
            for (double& v : d) {
                v = z(rng);
                dv.push_back(Eigen::VectorXd::Constant(1, v));
            }
            const NormalPrior1D p1{0.3, 4.0};
            const MvnPrior pm{Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Constant(1, 1, 4.0)};
            const auto a = normal_mean_conditional(d, 1.7, p1);
            const auto b = mvn_mean_conditional(dv, Eigen::MatrixXd::Constant(1, 1, 1.7), pm);
            CHECK(b.mean(0) == doctest::Approx(a.mean).epsilon(1e-12));
            CHECK(b.covariance(0, 0) == doctest::Approx(a.variance).epsilon(1e-12));
        }
    }

    TEST_CASE("2-D grid oracle on randomized datasets") {
        Rng rng(13);
        std::normal_distribution<double> z(0.0, 1.5);
        for (int rep = 0; rep < 5; ++rep) {
            const Eigen::MatrixXd cov = random_spd(2, rng);
            const MvnPrior prior{Eigen::Vector2d(z(rng), z(rng)), random_spd(2, rng)};
            std::vector<Eigen::VectorXd> d;
            for (int i = 0; i < 1 + rep; ++i) d.push_back(Eigen::Vector2d(z(rng), z(rng)));
            const auto post = mvn_mean_conditional(d, cov, prior);
            auto grid = [&](double a, double b) {
                const Eigen::Vector2d mu(a, b);
                double l = mvn_logpdf_oracle(mu, prior.mean, prior.covariance);
                for (const auto& v : d) l += mvn_logpdf_oracle(v, mu, cov);
                return l;
            };
            auto closed = [&](double a, double b) {
                return mvn_logpdf_oracle(Eigen::Vector2d(a, b), post.mean, post.covariance);
            };
            const double s0 = std::sqrt(post.covariance(0, 0));
            const double s1 = std::sqrt(post.covariance(1, 1));
            const double tv = oracle::grid_tv_2d(grid, closed, post.mean(0) - 10 * s0, post.mean(0) + 10 * s0,
                                                 post.mean(1) - 10 * s1, post.mean(1) + 10 * s1, 601);
            CHECK(tv < kGridTv);
        }
    }

    TEST_CASE("p = 3 posterior differs from prior x likelihood by a constant") {
        Rng rng(14);
        std::normal_distribution<double> z(0.0, 1.0);
        const Eigen::MatrixXd cov = random_spd(3, rng);
        const MvnPrior prior{Eigen::Vector3d(z(rng), z(rng), z(rng)), random_spd(3, rng)};
        std::vector<Eigen::VectorXd> d;
        for (int i = 0; i < 4; ++i) d.push_back(Eigen::Vector3d(z(rng), z(rng), z(rng)));
        const auto post = mvn_mean_conditional(d, cov, prior);
        std::vector<double> diffs;
        for (int i = 0; i < 20; ++i) {
            const Eigen::Vector3d mu(z(rng), z(rng), z(rng));
            double l = mvn_logpdf_oracle(mu, prior.mean, prior.covariance);
            for (const auto& v : d) l += mvn_logpdf_oracle(v, mu, cov);
            diffs.push_back(mvn_logpdf_oracle(mu, post.mean, post.covariance) - l);
        }
        for (double v : diffs) CHECK(v == doctest::Approx(diffs.front()).epsilon(1e-9));
    }
}

TEST_SUITE("inverse-Wishart scale") {
    TEST_CASE("worked examples") {
        const InvWishartPrior prior{2.0, Eigen::Matrix3d::Identity()};
        const auto e = inv_wishart_scale_conditional({}, Eigen::Vector3d::Zero(), prior);
        CHECK(e.dof == 2.0);
        CHECK(e.scale == prior.scale);
        const std::vector<Eigen::VectorXd> at_mean{Eigen::Vector3d(1, 2, 3)};
        const auto m = inv_wishart_scale_conditional(at_mean, Eigen::Vector3d(1, 2, 3), prior);
        CHECK(m.dof == 3.0);
        CHECK(m.scale == prior.scale);
        const std::vector<Eigen::VectorXd> e1{Eigen::Vector3d(1, 0, 0)};
        const auto q = inv_wishart_scale_conditional(e1, Eigen::Vector3d::Zero(), prior);
        Eigen::Matrix3d expect = Eigen::Matrix3d::Identity();
        expect(0, 0) = 2.0;
        CHECK(q.dof == 3.0);
        CHECK((q.scale - expect).norm() == 0.0);
    }

    TEST_CASE("p = 1 grid oracle on randomized datasets") {
        Rng rng(15);
        std::normal_distribution<double> z(0.0, 1.5);
        for (int rep = 0; rep < 6; ++rep) {
            const InvWishartPrior prior{1.0 + rep * 0.7, Eigen::MatrixXd::Constant(1, 1, 0.5 + rep * 0.3)};
            const Eigen::VectorXd mean = Eigen::VectorXd::Constant(1, z(rng) * 0.2);
            std::vector<Eigen::VectorXd> d;
            for (int i = 0; i < 2 + rep; ++i) d.push_back(Eigen::VectorXd::Constant(1, z(rng)));
            const auto post = inv_wishart_scale_conditional(d, mean, prior);
            auto grid = [&](double lu) {
                const Eigen::MatrixXd s = Eigen::MatrixXd::Constant(1, 1, std::exp(lu));
                double l = iw_logpdf_oracle(s, prior.dof, prior.scale) + lu;
                for (const auto& v : d) l += oracle::normal_logpdf(v(0), mean(0), s(0, 0));
                return l;
            };
            auto closed = [&](double lu) {
                return iw_logpdf_oracle(Eigen::MatrixXd::Constant(1, 1, std::exp(lu)), post.dof, post.scale) + lu;
            };
            CHECK(oracle::grid_tv(grid, closed, -14.0, 10.0, 40001) < kGridTv);
        }
    }

    TEST_CASE("p = 2, 3 posterior differs from prior x likelihood by a constant") {
        Rng rng(16);
        std::normal_distribution<double> z(0.0, 1.0);
        for (int p : {2, 3}) {
            const InvWishartPrior prior{p + 1.5, random_spd(p, rng)};
            Eigen::VectorXd mean(p);
            for (int c = 0; c < p; ++c) mean(c) = z(rng);
            std::vector<Eigen::VectorXd> d;
            for (int i = 0; i < 5; ++i) {
                Eigen::VectorXd v(p);
                for (int c = 0; c < p; ++c) v(c) = z(rng);
                d.push_back(v);
            }
            const auto post = inv_wishart_scale_conditional(d, mean, prior);
            std::vector<double> diffs;
            for (int i = 0; i < 20; ++i) {
                const Eigen::MatrixXd s = random_spd(p, rng);
                double l = iw_logpdf_oracle(s, prior.dof, prior.scale);
                for (const auto& v : d) l += mvn_logpdf_oracle(v, mean, s);
                diffs.push_back(iw_logpdf_oracle(s, post.dof, post.scale) - l);
            }
            for (double v : diffs) CHECK(v == doctest::Approx(diffs.front()).epsilon(1e-9));
        }
    }

    TEST_CASE("library density agrees with the oracle density") {
        Rng rng(17);
        for (int p : {1, 2, 3}) {
            const InvWishartPrior prior{p + 2.0, random_spd(p, rng)};
            const Eigen::MatrixXd s = random_spd(p, rng);
            CHECK(inv_wishart_logpdf(s, prior) == doctest::Approx(iw_logpdf_oracle(s, prior.dof, prior.scale)).epsilon(1e-10));
        }
    }

    TEST_CASE("sampler mean matches scale / (dof - p - 1)") {
        Rng rng(18);
        const InvWishartPrior prior{8.0, random_spd(3, rng)};
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(3, 3);
        const int n = 40000;
        for (int i = 0; i < n; ++i) mean += sample_inv_wishart(prior, rng) / n;
        const Eigen::MatrixXd expect = prior.scale / (8.0 - 3.0 - 1.0);
        CHECK((mean - expect).norm() / expect.norm() < 0.03);
    }

    TEST_CASE("invalid dof is rejected by prior validation") {
        MvEmissionPrior prior{{Eigen::Vector3d::Zero(), Eigen::Matrix3d::Identity()}, {2.0, Eigen::Matrix3d::Identity()}};
        CHECK_THROWS_AS(validate(EmissionPrior{prior}), std::invalid_argument);
        prior.covariance_prior.dof = 5.0;
        CHECK_NOTHROW(validate(EmissionPrior{prior}));
    }
}

TEST_SUITE("durations") {
    TEST_CASE("gamma update examples") {
        const DurationPrior prior{1.0, 7.0};
        const auto e = gamma_duration_conditional({}, prior);
        CHECK(e.shape == 1.0);
        CHECK(e.rate == doctest::Approx(1.0 / 7.0));
        const std::vector<int> d{7, 7, 7};
        const auto p = gamma_duration_conditional(d, prior);
        CHECK(p.shape == doctest::Approx(19.0));
        CHECK(p.rate == doctest::Approx(22.0 / 7.0));
        const std::vector<int> one{1};
        const auto q = gamma_duration_conditional(one, prior);
        CHECK(q.shape == doctest::Approx(1.0));
        CHECK(q.rate == doctest::Approx(1.0 / 7.0 + 1.0));
        const std::vector<int> bad{3, 0};
        CHECK_THROWS_AS((void)gamma_duration_conditional(bad, prior), std::invalid_argument);
    }

    TEST_CASE("gamma update grid oracle on randomized durations") {
        Rng rng(20);
        std::poisson_distribution<int> pois(5.0);
        std::uniform_int_distribution<int> n_dist(1, 8);
        const std::vector<int> fixed{7, 7, 7};
        for (int rep = 0; rep < 8; ++rep) {
            std::vector<int> d = fixed;
            if (rep > 0) {
                d.assign(static_cast<std::size_t>(n_dist(rng)), 0);
                for (int& v : d) v = 1 + pois(rng);
            }
            const DurationPrior prior{1.0 + 0.3 * rep, 7.0 - 0.5 * rep};
            const auto post = gamma_duration_conditional(d, prior);
            auto grid = [&](double lu) {
                const double lam = std::exp(lu);
                double l = oracle::gamma_logpdf(lam, prior.shape, 1.0 / prior.scale) + lu;
                for (int v : d) l += oracle::poisson_logpmf(v - 1, lam);
                return l;
            };
            auto closed = [&](double lu) { return oracle::gamma_logpdf(std::exp(lu), post.shape, post.rate) + lu; };
            CHECK(oracle::grid_tv(grid, closed, -10.0, 5.0, 40001) < kGridTv);
        }
    }

    TEST_CASE("shifted Poisson pmf examples") {
        CHECK(shifted_poisson_logpmf(1, 1e-12) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(shifted_poisson_logpmf(7, 6.0) == doctest::Approx(6 * std::log(6.0) - 6.0 - std::log(720.0)).epsilon(1e-12));
        CHECK(shifted_poisson_logpmf(7, 6.0) == doctest::Approx(-1.8286).epsilon(1e-4));
        CHECK_THROWS_AS((void)shifted_poisson_logpmf(0, 6.0), std::domain_error);
    }

    TEST_CASE("survival function examples") {
        CHECK(shifted_poisson_log_sf(0, 6.0) == 0.0);
        CHECK(shifted_poisson_log_sf(1, 6.0) == doctest::Approx(std::log1p(-std::exp(-6.0))).epsilon(1e-12));
        CHECK(shifted_poisson_log_sf(1, 6.0) == doctest::Approx(-0.00248).epsilon(1e-2));
    }

    TEST_CASE("pmf plus survival sums to one and survival is monotone") {
        for (double lam : {0.5, 6.0, 20.0}) {
            double cum = 0.0;
            double prev_sf = 0.0;
            for (int d = 1; d <= 200; ++d) {
                cum += std::exp(shifted_poisson_logpmf(d, lam));
                const double sf = shifted_poisson_log_sf(d, lam);
                CHECK(std::abs(cum + std::exp(sf) - 1.0) < 1e-10);
                CHECK(sf <= prev_sf);
                prev_sf = sf;
            }
        }
    }

    TEST_CASE("survival function matches a direct tail sum, including deep tails") {
        for (double lam : {0.5, 3.0, 6.0, 20.0}) {
            for (int d = 0; d <= 60; ++d) {
                const double expect = oracle::shifted_poisson_log_tail(d + 1, lam);
                CHECK(shifted_poisson_log_sf(d, lam) == doctest::Approx(expect).epsilon(1e-10));
            }
        }
    }
}

TEST_SUITE("emission densities") {
    TEST_CASE("scalar examples") {
        CHECK(emission_logpdf(2.5, GaussianParams1D{2.5, 1.0}) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)));
        CHECK(emission_logpdf(4.0, GaussianParams1D{4.0, 1.0}) == emission_logpdf(0.0, GaussianParams1D{0.0, 1.0}));
        CHECK(emission_logpdf(1.3, GaussianParams1D{-0.2, 2.5}) ==
              doctest::Approx(oracle::normal_logpdf(1.3, -0.2, 2.5)).epsilon(1e-14));
    }

    TEST_CASE("multivariate examples") {
        const GaussianParamsMV th{Eigen::Vector3d(1, 2, 3), Eigen::Matrix3d::Identity()};
        const double at_mean = emission_logpdf(Eigen::VectorXd(Eigen::Vector3d(1, 2, 3)), th);
        CHECK(at_mean == doctest::Approx(-1.5 * std::log(2 * std::numbers::pi)));
        CHECK(at_mean == doctest::Approx(3.0 * emission_logpdf(0.0, GaussianParams1D{0.0, 1.0})));
        Rng rng(21);
        const GaussianParamsMV g{Eigen::Vector3d(0.5, -1, 2), random_spd(3, rng)};
        const Eigen::VectorXd y = Eigen::Vector3d(0.1, 0.2, 0.3);
        CHECK(emission_logpdf(y, g) == doctest::Approx(mvn_logpdf_oracle(y, g.mean, g.covariance)).epsilon(1e-12));
        CHECK_THROWS_AS((void)emission_logpdf(Eigen::VectorXd(Eigen::Vector2d(1, 2)), th), std::invalid_argument);
    }
}

TEST_SUITE("numerics") {
    TEST_CASE("log categorical rejects degenerate weights") {
        Rng rng(30);
        const double ninf = -std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS((void)sample_log_categorical(std::vector<double>{ninf, ninf}, rng), std::domain_error);
        CHECK(sample_log_categorical(std::vector<double>{ninf, 0.0, ninf}, rng) == 1);
    }

    TEST_CASE("log categorical frequencies") {
        Rng rng(31);
        const std::vector<double> lw{std::log(0.2) - 700.0, std::log(0.5) - 700.0, std::log(0.3) - 700.0};
        std::vector<int> counts(3, 0);
        const int n = 30000;
        for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_log_categorical(lw, rng))];
        const std::vector<double> p{0.2, 0.5, 0.3};
        for (std::size_t i = 0; i < 3; ++i) {
            const double sd = std::sqrt(n * p[i] * (1 - p[i]));
            CHECK(std::abs(counts[i] - n * p[i]) < 3.0 * sd);
        }
    }

    TEST_CASE("stable Cholesky tolerates a singular scatter matrix") {
        const Eigen::Matrix2d s = Eigen::Vector2d(1, 1) * Eigen::RowVector2d(1, 1);
        const auto llt = stable_llt(s);
        CHECK(llt.info() == Eigen::Success);
        CHECK_THROWS_AS((void)stable_llt(-Eigen::Matrix2d::Identity()), std::domain_error);
    }
}
