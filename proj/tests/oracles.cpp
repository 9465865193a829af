#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {
constexpr double kLog2Pi = 1.83787706640934548356;
}

double normal_logpdf(double x, double mean, double variance) {
    return -0.5 * (kLog2Pi + std::log(variance)) - 0.5 * (x - mean) * (x - mean) / variance;
}

double inv_gamma_logpdf(double x, double shape, double scale) {
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

double gamma_logpdf(double x, double shape, double rate) {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double poisson_logpmf(int k, double rate) { return k * std::log(rate) - rate - std::lgamma(k + 1.0); }

double shifted_poisson_log_tail(int d, double rate) {
    if (d <= 1) return 0.0;
    // P(D >= d) = P(Poisson >= d - 1), summed upward from the first term.
    std::vector<double> terms;
    for (int k = d - 1; k < d - 1 + 400; ++k) {
        terms.push_back(poisson_logpmf(k, rate));
        if (k > rate && terms.back() < terms.front() - 60.0) break;
    }
    return log_sum_exp(terms);
}

double upper_regularized_gamma(double a, double x) {
    if (x <= 0.0) return 1.0;
    const long double la = a;
    const long double lx = x;
    const long double log_prefix = la * std::log(lx) - lx - std::lgamma(la);
    if (x < a + 1.0) {
        long double term = 1.0L / la;
        long double sum = term;
        for (int n = 1; n < 100000; ++n) {
            term *= lx / (la + n);
            sum += term;
            if (term < sum * 1e-19L) break;
        }
        return static_cast<double>(1.0L - sum * std::exp(log_prefix));
    }
    const long double tiny = 1e-300L;
    long double b = lx + 1.0L - la;
    long double c = 1.0L / tiny;
    long double d = 1.0L / b;
    long double h = d;
    for (int i = 1; i < 100000; ++i) {
        const long double an = -i * (i - la);
        b += 2.0L;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0L / d;
        const long double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0L) < 1e-19L) break;
    }
    return static_cast<double>(std::exp(log_prefix) * h);
}

double log_sum_exp(const std::vector<double>& v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    long double s = 0.0L;
    for (double x : v) s += std::exp(static_cast<long double>(x - mx));
    return mx + static_cast<double>(std::log(s));
}

double grid_tv(const std::function<double(double)>& log_a, const std::function<double(double)>& log_b, double lo,
               double hi, int n) {
    std::vector<double> la(static_cast<std::size_t>(n));
    std::vector<double> lb(static_cast<std::size_t>(n));
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * h;
        la[static_cast<std::size_t>(i)] = log_a(x);
        lb[static_cast<std::size_t>(i)] = log_b(x);
    }
    const double za = log_sum_exp(la);
    const double zb = log_sum_exp(lb);
    double tv = 0.0;
    for (int i = 0; i < n; ++i) {
        tv += std::abs(std::exp(la[static_cast<std::size_t>(i)] - za) - std::exp(lb[static_cast<std::size_t>(i)] - zb));
    }
    return 0.5 * tv;
}

double grid_tv_2d(const std::function<double(double, double)>& log_a,
                  const std::function<double(double, double)>& log_b, double lo0, double hi0, double lo1, double hi1,
                  int n) {
    std::vector<double> la;
    std::vector<double> lb;
    la.reserve(static_cast<std::size_t>(n) * n);
    lb.reserve(static_cast<std::size_t>(n) * n);
    const double h0 = (hi0 - lo0) / (n - 1);
    const double h1 = (hi1 - lo1) / (n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            la.push_back(log_a(lo0 + i * h0, lo1 + j * h1));
            lb.push_back(log_b(lo0 + i * h0, lo1 + j * h1));
        }
    }
    const double za = log_sum_exp(la);
    const double zb = log_sum_exp(lb);
    double tv = 0.0;
    for (std::size_t i = 0; i < la.size(); ++i) tv += std::abs(std::exp(la[i] - za) - std::exp(lb[i] - zb));
    return 0.5 * tv;
}

namespace {

void recurse(const std::vector<double>& y, const TinyHsmm& m, int t, int prev, double acc, std::vector<int>& labels,
             std::vector<Labeled>& out) {
    const int t_len = static_cast<int>(y.size());
    const int k = static_cast<int>(m.means.size());
    for (int s = 0; s < k; ++s) {
        if (s == prev) continue;
        double base = acc;
        if (prev < 0) {
            base += -std::log(static_cast<double>(k));
        } else {
            base += std::log(m.pi_bar[static_cast<std::size_t>(prev)][static_cast<std::size_t>(s)]);
        }
        double emit = 0.0;
        for (int d = 1; t + d <= t_len; ++d) {
            emit += normal_logpdf(y[static_cast<std::size_t>(t + d - 1)], m.means[static_cast<std::size_t>(s)],
                                  m.variances[static_cast<std::size_t>(s)]);
            labels.push_back(s);
            const double rate = m.rates[static_cast<std::size_t>(s)];
            if (t + d == t_len) {
                out.push_back({labels, base + emit + shifted_poisson_log_tail(d, rate)});
            } else {
                recurse(y, m, t + d, s, base + emit + poisson_logpmf(d - 1, rate), labels, out);
            }
        }
        labels.resize(static_cast<std::size_t>(t));
    }
}

}  // namespace

std::vector<Labeled> enumerate_paths(const std::vector<double>& y, const TinyHsmm& model) {
    std::vector<Labeled> out;
    std::vector<int> labels;
    recurse(y, model, 0, -1, 0.0, labels, out);
    return out;
}

EnumSummary enumerate(const std::vector<double>& y, const TinyHsmm& model) {
    const auto paths = enumerate_paths(y, model);
    const std::size_t k = model.means.size();
    std::vector<double> all;
    std::vector<std::vector<double>> by_first(k);
    for (const auto& p : paths) {
        all.push_back(p.log_joint);
        by_first[static_cast<std::size_t>(p.labels.front())].push_back(p.log_joint);
    }
    EnumSummary s;
    s.log_likelihood = log_sum_exp(all);
    for (std::size_t i = 0; i < k; ++i) s.x1_marginal.push_back(std::exp(log_sum_exp(by_first[i]) - s.log_likelihood));
    return s;
}

}  // namespace oracle
