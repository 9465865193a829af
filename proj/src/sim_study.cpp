#include "rhsmm/sim_study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace rhsmm {

GroundTruth GroundTruth::three_state_reference(int n_segments) {
    GroundTruth g;
    g.n_segments = n_segments;
    g.states = {
        {{4.0, 1.0}, 6.0, {0.0, 0.3, 0.7}},
        {{0.0, 1.0}, 6.0, {0.8, 0.0, 0.2}},
        {{-4.0, 1.0}, 6.0, {0.4, 0.6, 0.0}},
    };
    return g;
}

void GroundTruth::validate() const {
    if (states.empty()) throw std::invalid_argument("ground truth has no states");
    if (n_segments < 1) throw std::invalid_argument("n_segments must be >= 1");
    for (std::size_t i = 0; i < states.size(); ++i) {
        const auto& s = states[i];
        if (s.transition.size() != states.size()) throw std::invalid_argument("transition row has wrong length");
        if (s.transition[i] != 0.0) throw std::invalid_argument("ground truth transition rows need a zero diagonal");
        double sum = 0.0;
        for (double v : s.transition) {
            if (v < 0.0) throw std::invalid_argument("negative transition probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9 && states.size() > 1) throw std::invalid_argument("transition row not on simplex");
        if (!(s.emission.variance > 0.0) || !(s.duration_rate > 0.0)) throw std::invalid_argument("bad state parameters");
    }
}

GeneratedSequence generate_sequence(const GroundTruth& truth, Rng& rng) {
    truth.validate();
    const int k = static_cast<int>(truth.states.size());
    std::uniform_int_distribution<int> first(0, k - 1);
    int state = first(rng);
    SegmentSequence seg;
    std::vector<double> values;
    for (int s = 0; s < truth.n_segments; ++s) {
        const auto& st = truth.states[static_cast<std::size_t>(state)];
        std::poisson_distribution<int> pois(st.duration_rate);
        int d = 0;
        while (d == 0) d = pois(rng);
        std::normal_distribution<double> emit(st.emission.mean, std::sqrt(st.emission.variance));
        for (int u = 0; u < d; ++u) values.push_back(emit(rng));
        seg.push_back({state, d});
        if (s + 1 < truth.n_segments) {
            std::discrete_distribution<int> next(st.transition.begin(), st.transition.end());
            state = next(rng);
        }
    }
    Eigen::MatrixXd y = Eigen::Map<const Eigen::MatrixXd>(values.data(), static_cast<Eigen::Index>(values.size()), 1);
    return {ObservationSequence(std::move(y)), std::move(seg)};
}

std::vector<int> change_point_set(const SegmentSequence& seg) {
    std::vector<int> cps;
    int t = 0;
    for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
        t += seg[s].duration;
        if (seg[s].label != seg[s + 1].label) cps.push_back(t);
    }
    return cps;
}

CpMetrics cp_metrics(std::span<const int> true_cps, std::span<const int> est_cps, int window) {
    if (window < 0) throw std::invalid_argument("cp window must be >= 0");
    std::vector<int> truth(true_cps.begin(), true_cps.end());
    std::vector<int> est(est_cps.begin(), est_cps.end());
    std::sort(truth.begin(), truth.end());
    std::sort(est.begin(), est.end());
    std::vector<char> used(truth.size(), 0);
    CpMetrics m;
    for (int e : est) {
        bool hit = false;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (!used[i] && std::abs(truth[i] - e) <= window) {
                used[i] = 1;
                hit = true;
                break;
            }
        }
        if (hit) {
            ++m.matched;
        } else {
            ++m.extra;
        }
    }
    m.missed = static_cast<int>(truth.size()) - m.matched;
    return m;
}

int count_states(std::span<const int> labels) {
    return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

std::uint64_t replication_seed(std::uint64_t master, int rep, int stream) {
    // splitmix64 finalizer
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(rep) * 2 + 1 +
                                                         (static_cast<std::uint64_t>(stream) << 32));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ReplicationRecord score_replication(int rep, const std::string& model_name, const GeneratedSequence& data,
                                    const Hyperparams& hyper, std::uint64_t fit_seed, int cp_window) {
    ReplicationRecord rec;
    rec.rep = rep;
    rec.model = model_name;
    try {
        SamplerRng rng(fit_seed);
        const auto result = run_chain(data.y, hyper, rng);
        rec.converged = result.chain.converged;
        rec.iterations = result.chain.iterations_run;
        rec.n_states = result.estimate.num_states;
        const auto cm = cp_metrics(change_point_set(data.truth),
                                   change_point_set(from_label_vector(result.estimate.labels)), cp_window);
        rec.missed_cp = cm.missed;
        rec.extra_cp = cm.extra;
        std::vector<std::pair<double, double>> ms;
        for (std::size_t i = 0; i < result.estimate.theta_hat.size(); ++i) {
            ms.emplace_back(result.estimate.theta_hat[i].mean(0), result.estimate.omega_hat[i].rate);
        }
        std::sort(ms.begin(), ms.end());
        for (const auto& [m, r] : ms) {
            rec.means.push_back(m);
            rec.rates.push_back(r);
        }
    } catch (const std::exception& e) {
        rec.converged = false;
        rec.error = e.what();
    }
    return rec;
}

ModelSummary summarize(const std::vector<ReplicationRecord>& records, const std::string& model) {
    ModelSummary s;
    s.model = model;
    for (const auto& r : records) {
        if (r.model != model) continue;
        ++s.n_runs;
        if (!r.converged) continue;
        ++s.n_converged;
        s.mean_iterations += r.iterations;
        s.mean_missed_cp += r.missed_cp;
        s.mean_extra_cp += r.extra_cp;
        ++s.state_histogram[r.n_states];
    }
    if (s.n_converged > 0) {
        s.mean_iterations /= s.n_converged;
        s.mean_missed_cp /= s.n_converged;
        s.mean_extra_cp /= s.n_converged;
    }
    return s;
}

ReplicationSummary run_replication_study(const Hyperparams& baseline, const Hyperparams& robust,
                                         const GroundTruth& truth, int n_reps, std::uint64_t master_seed,
                                         const StudyOptions& options) {
    if (n_reps < 1) throw std::invalid_argument("n_reps must be >= 1");
    truth.validate();
    baseline.validate();
    robust.validate();

    // Each job is one (replication, model) fit; results land in fixed slots.
    const int jobs = 2 * n_reps;
    std::vector<ReplicationRecord> slots(static_cast<std::size_t>(jobs));
    std::vector<GeneratedSequence> datasets;
    datasets.reserve(static_cast<std::size_t>(n_reps));
    for (int rep = 0; rep < n_reps; ++rep) {
        Rng data_rng(replication_seed(master_seed, rep, 0));
        datasets.push_back(generate_sequence(truth, data_rng));
    }

    std::atomic<int> next{0};
    std::mutex report_mutex;
    auto worker = [&] {
        for (int job = next++; job < jobs; job = next++) {
            const int rep = job / 2;
            const bool is_robust = job % 2 == 1;
            const std::uint64_t fit_seed = replication_seed(master_seed, rep, 1);
            auto rec = score_replication(rep, is_robust ? "robust" : "baseline", datasets[static_cast<std::size_t>(rep)],
                                         is_robust ? robust : baseline, fit_seed, options.cp_window);
            if (options.on_record) {
                std::lock_guard lock(report_mutex);
                options.on_record(rec);
            }
            slots[static_cast<std::size_t>(job)] = std::move(rec);
        }
    };
    unsigned n_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(jobs));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    }

    ReplicationSummary summary;
    summary.records = std::move(slots);
    summary.baseline = summarize(summary.records, "baseline");
    summary.robust = summarize(summary.records, "robust");
    return summary;
}

void write_replication_csv(std::ostream& out, const std::vector<ReplicationRecord>& records) {
    out << "rep,model,converged,iterations,n_states,missed_cp,extra_cp\n";
    for (const auto& r : records) {
        out << r.rep << ',' << r.model << ',' << (r.converged ? 1 : 0) << ',' << r.iterations << ',' << r.n_states << ','
            << r.missed_cp << ',' << r.extra_cp << '\n';
    }
}

namespace {

std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

void write_summary_csv(std::ostream& out, const ReplicationSummary& summary) {
    out << "model,n_runs,n_converged,mean_iterations,mean_missed_cp,mean_extra_cp,state_histogram\n";
    for (const auto* s : {&summary.baseline, &summary.robust}) {
        std::string hist;
        for (const auto& [k, c] : s->state_histogram) {
            if (!hist.empty()) hist += ';';
            hist += std::to_string(k) + ':' + std::to_string(c);
        }
        out << s->model << ',' << s->n_runs << ',' << s->n_converged << ',' << fmt9(s->mean_iterations) << ','
            << fmt9(s->mean_missed_cp) << ',' << fmt9(s->mean_extra_cp) << ',' << hist << '\n';
    }
}

std::string format_summary_table(const ReplicationSummary& summary) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-34s %12s %12s\n", "", "baseline", "robust");
    os << line;
    auto row = [&](const char* name, double a, double b, const char* f) {
        char fa[32];
        char fb[32];
        std::snprintf(fa, sizeof fa, f, a);
        std::snprintf(fb, sizeof fb, f, b);
        std::snprintf(line, sizeof line, "%-34s %12s %12s\n", name, fa, fb);
        os << line;
    };
    const auto& b = summary.baseline;
    const auto& r = summary.robust;
    row("converged runs", b.n_converged, r.n_converged, "%.0f");
    row("mean Gibbs iterations", b.mean_iterations, r.mean_iterations, "%.1f");
    row("mean missed change points", b.mean_missed_cp, r.mean_missed_cp, "%.2f");
    row("mean extra change points", b.mean_extra_cp, r.mean_extra_cp, "%.2f");
    os << "state counts (converged runs):\n";
    std::set<int> keys;
    for (const auto& [k, c] : b.state_histogram) keys.insert(k);
    for (const auto& [k, c] : r.state_histogram) keys.insert(k);
    for (int k : keys) {
        const int cb = b.state_histogram.contains(k) ? b.state_histogram.at(k) : 0;
        const int cr = r.state_histogram.contains(k) ? r.state_histogram.at(k) : 0;
        std::snprintf(line, sizeof line, "  K = %-28d %12d %12d\n", k, cb, cr);
        os << line;
    }
    return os.str();
}

}  // namespace rhsmm
