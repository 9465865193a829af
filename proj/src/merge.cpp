#include "rhsmm/merge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rhsmm {

double divergence(const GaussianParamsMV& a, const GaussianParamsMV& b, DivergenceParams params) {
    if (a.dim() != b.dim()) throw std::invalid_argument("divergence: dimension mismatch");
    double s = (a.mean - b.mean).squaredNorm();
    if (params == DivergenceParams::MeansAndStdDevs) {
        const Eigen::VectorXd sa = a.covariance.diagonal().cwiseSqrt();
        const Eigen::VectorXd sb = b.covariance.diagonal().cwiseSqrt();
        s += (sa - sb).squaredNorm();
    }
    return std::sqrt(s);
}

std::vector<double> merge_group_weights(std::span<const int> candidates, std::span<const int> complement,
                                        const Eigen::MatrixXd& pi) {
    if (candidates.empty()) throw std::invalid_argument("merge_group_weights: empty candidate set");
    std::vector<double> w(candidates.size(), 0.0);
    double total = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        for (int i : complement) w[c] += pi(i, candidates[c]);
        total += w[c];
    }
    if (!(total > 0.0)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(w.size()));
        return w;
    }
    for (double& v : w) v /= total;
    return w;
}

MergeOutcome merge_redundant_states(std::span<const int> labels, const Eigen::VectorXd& beta, const Eigen::MatrixXd& pi,
                                    std::span<const GaussianParamsMV> theta, const MergeOptions& options, Rng& rng) {
    if (!(options.tau >= 0.0)) throw std::invalid_argument("merge: tau must be >= 0");
    const int k = static_cast<int>(beta.size());
    std::vector<char> present(static_cast<std::size_t>(k), 0);
    for (int x : labels) {
        if (x < 0 || x >= k) throw std::invalid_argument("merge: label out of range");
        present[static_cast<std::size_t>(x)] = 1;
    }
    std::vector<int> order;
    for (int i = 0; i < k; ++i) {
        if (present[static_cast<std::size_t>(i)]) order.push_back(i);
    }
    std::shuffle(order.begin(), order.end(), rng);

    MergeOutcome out;
    out.labels_tilde.assign(labels.begin(), labels.end());
    out.beta_damped = beta;
    std::vector<char> processed(static_cast<std::size_t>(k), 0);
    std::vector<int> relabel(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) relabel[static_cast<std::size_t>(i)] = i;
    bool damped = false;

    for (int anchor : order) {
        if (processed[static_cast<std::size_t>(anchor)]) continue;
        const auto& th = theta[static_cast<std::size_t>(anchor)];
        std::vector<int> group{anchor};
        std::vector<int> complement;
        for (int j = 0; j < k; ++j) {
            if (j == anchor || !present[static_cast<std::size_t>(j)]) continue;
            const double dv = divergence(th, theta[static_cast<std::size_t>(j)], options.params);
            if (dv > options.tau) {
                complement.push_back(j);
            } else if (!processed[static_cast<std::size_t>(j)]) {
                group.push_back(j);
            }
        }

        int survivor = anchor;
        if (group.size() > 1) {
            const auto w = merge_group_weights(group, complement, pi);
            const double u = std::generate_canonical<double, 53>(rng);
            double acc = 0.0;
            survivor = group.back();
            for (std::size_t c = 0; c < group.size(); ++c) {
                acc += w[c];
                if (u < acc) {
                    survivor = group[c];
                    break;
                }
            }
        }
        for (int j : group) {
            processed[static_cast<std::size_t>(j)] = 1;
            if (j == survivor) continue;
            out.beta_damped(j) = options.damping * beta(j);
            present[static_cast<std::size_t>(j)] = 0;
            relabel[static_cast<std::size_t>(j)] = survivor;
            damped = true;
        }
        std::sort(group.begin(), group.end());
        out.groups.push_back({anchor, std::move(group), survivor});
    }

    for (int& x : out.labels_tilde) x = relabel[static_cast<std::size_t>(x)];
    out.beta_tilde = damped ? Eigen::VectorXd(out.beta_damped / out.beta_damped.sum()) : out.beta_damped;
    return out;
}

}  // namespace rhsmm
