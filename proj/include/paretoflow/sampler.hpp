#pragma once

// Multi-objective predictor guidance with neighboring evolution: guided
// vector fields per weight vector, stochastic Euler-Maruyama stepping,
// offspring sharing among angularly close distributions, hypercone local
// filtering, the N-slot Pareto-optimal archive, and final candidate
// selection. Operates entirely in normalized design space [0,1]^d against
// predictors of normalized objectives.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "paretoflow/flow.hpp"
#include "paretoflow/moo.hpp"
#include "paretoflow/nn.hpp"
#include "paretoflow/rng.hpp"
#include "paretoflow/weights.hpp"

namespace paretoflow {

// One trained scalar predictor per objective.
struct Predictors {
    std::vector<DenseNetwork> nets;

    int m() const { return static_cast<int>(nets.size()); }

    // Batch prediction, rows x m.
    Matrix predict(const Matrix& X) const {
        Matrix out(X.rows(), m());
        for (int i = 0; i < m(); ++i) out.col(i) = nets[i].forward(X);
        return out;
    }

    Vector predict_one(const Vector& x) const {
        Matrix X = x.transpose();
        return predict(X).row(0).transpose();
    }
};

enum class GradientMode { full_chain, stop_gradient };
enum class AblationVariant { full, equal, first, no_local, no_neighbor, no_ps };

inline AblationVariant variant_from_string(const std::string& s) {
    if (s == "full") return AblationVariant::full;
    if (s == "equal") return AblationVariant::equal;
    if (s == "first") return AblationVariant::first;
    if (s == "no-local") return AblationVariant::no_local;
    if (s == "no-neighbor") return AblationVariant::no_neighbor;
    if (s == "no-ps") return AblationVariant::no_ps;
    throw std::invalid_argument("unknown ablation variant: " + s);
}

inline std::string to_string(AblationVariant v) {
    switch (v) {
        case AblationVariant::full: return "full";
        case AblationVariant::equal: return "equal";
        case AblationVariant::first: return "first";
        case AblationVariant::no_local: return "no-local";
        case AblationVariant::no_neighbor: return "no-neighbor";
        case AblationVariant::no_ps: return "no-ps";
    }
    throw std::logic_error("bad variant enum");
}

struct SamplerConfig {
    int steps = 100;                  // T; dt = 1/T
    double gamma = 2.0;               // guidance scale
    double gamma_threshold = 0.8;     // gamma forced to 0 at t <= threshold
    double noise_g = 0.1;             // SDE noise factor
    int offspring = 5;                // O
    int neighbors_k = 0;              // K; 0 means m+1
    int target_candidates = 256;
    GradientMode gradient_mode = GradientMode::full_chain;
    AblationVariant variant = AblationVariant::full;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const {
        if (steps < 1) throw std::invalid_argument("sampler: steps must be >= 1");
        if (gamma < 0.0) throw std::invalid_argument("sampler: gamma must be >= 0");
        if (offspring < 1) throw std::invalid_argument("sampler: offspring must be >= 1");
        if (gamma_threshold < 0.0 || gamma_threshold > 1.0)
            throw std::invalid_argument("sampler: gamma_threshold must be in [0,1]");
        if (target_candidates < 1)
            throw std::invalid_argument("sampler: target_candidates must be >= 1");
    }
};

// Negative omega-weighted sum of predicted objectives; higher is better.
inline double weighted_score(const Vector& predictions, const Vector& omega) {
    if (predictions.size() != omega.size())
        throw std::invalid_argument("weighted_score: dimension mismatch");
    return -predictions.dot(omega);
}

// Guided field for a whole batch, one weight row per sample row.
// gamma_effective = 0 must reproduce the plain field bitwise, so the
// gradient machinery is skipped entirely in that case.
inline Matrix guided_field_batch(const FlowModel& flow, const Predictors& predictors,
                                 const Matrix& omegas, const Matrix& Xt, double t,
                                 double gamma_effective, GradientMode mode) {
    if (gamma_effective == 0.0) return flow.velocity(Xt, t);
    if (t <= 0.0 || t >= 1.0)
        throw std::invalid_argument("guided_field: t must be in (0,1) when guidance is active");
    const Eigen::Index n = Xt.rows();
    const Eigen::Index d = Xt.cols();
    DenseNetwork::ForwardCache fcache;
    Matrix V = flow.velocity(Xt, t, fcache);
    Matrix X1 = Xt + (1.0 - t) * V;

    // Gradient of the weighted score w.r.t. x1_hat, per row.
    Matrix G1 = Matrix::Zero(n, d);
    for (int i = 0; i < predictors.m(); ++i) {
        DenseNetwork::ForwardCache pcache;
        predictors.nets[i].forward(X1, &pcache);
        Matrix dY = -omegas.col(i);
        G1 += predictors.nets[i].backward_input(pcache, dY);
    }

    Matrix G = G1;
    if (mode == GradientMode::full_chain) {
        // Chain through x1_hat = x_t + (1-t) v(x_t, t): add (1-t) J_v^T G1.
        Matrix Gflow = flow.net.backward_input(fcache, G1);
        G += (1.0 - t) * Gflow.leftCols(d);
    }
    return V + (gamma_effective * (1.0 - t) / t) * G;
}

// Single-sample surface mirroring the batch path.
inline Vector guided_field(const FlowModel& flow, const Predictors& predictors,
                           const Vector& omega, const Vector& xt, double t,
                           double gamma_effective,
                           GradientMode mode = GradientMode::full_chain) {
    Matrix X = xt.transpose();
    Matrix W = omega.transpose();
    return guided_field_batch(flow, predictors, W, X, t, gamma_effective, mode)
        .row(0)
        .transpose();
}

inline double effective_gamma(const SamplerConfig& cfg, double t) {
    return t > cfg.gamma_threshold ? cfg.gamma : 0.0;
}

// One Euler-Maruyama step with a caller-supplied noise vector.
inline Vector em_step(const Vector& xt, const Vector& velocity, double dt, double g,
                      const Vector& eps) {
    if (dt <= 0.0) throw std::invalid_argument("em_step: dt must be positive");
    return xt + velocity * dt + g * std::sqrt(dt) * eps;
}

inline Vector em_step(const Vector& xt, const Vector& velocity, double dt, double g, Rng& rng) {
    Vector eps(xt.size());
    for (Eigen::Index j = 0; j < eps.size(); ++j) eps(j) = normal_draw(rng);
    return em_step(xt, velocity, dt, g, eps);
}

// Hypercone test: keep candidates whose prediction direction (after the
// ideal-point shift) is within half the apex angle of omega. Returns indices
// into `candidate_rows`; falls back to the single min-angle candidate when
// everything is filtered.
inline std::vector<int> local_filter(const Matrix& shifted_predictions,
                                     const std::vector<int>& candidate_rows, const Vector& omega,
                                     double apex_angle) {
    if (candidate_rows.empty()) throw std::invalid_argument("local_filter: empty candidate set");
    std::vector<int> kept;
    int best = -1;
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidate_rows.size(); ++c) {
        const Vector p = shifted_predictions.row(candidate_rows[c]).transpose();
        // A zero shifted prediction sits at the ideal point; treat as aligned.
        const double alpha = p.norm() == 0.0 ? 0.0 : angular_distance(p, omega);
        if (alpha < best_angle) {
            best_angle = alpha;
            best = static_cast<int>(c);
        }
        if (alpha <= apex_angle / 2.0) kept.push_back(static_cast<int>(c));
    }
    if (kept.empty()) kept.push_back(best);
    return kept;
}

struct ArchiveSlot {
    Vector design;       // decoded x1_hat, clipped into [0,1]^d
    Vector predictions;  // predicted normalized objectives
    double score = -std::numeric_limits<double>::infinity();
    bool from_offline = true;
};

struct ParetoArchive {
    std::vector<ArchiveSlot> slots;

    Matrix designs() const {
        Matrix out(static_cast<Eigen::Index>(slots.size()), slots.front().design.size());
        for (std::size_t i = 0; i < slots.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = slots[i].design.transpose();
        return out;
    }

    Matrix predictions() const {
        Matrix out(static_cast<Eigen::Index>(slots.size()), slots.front().predictions.size());
        for (std::size_t i = 0; i < slots.size(); ++i)
            out.row(static_cast<Eigen::Index>(i)) = slots[i].predictions.transpose();
        return out;
    }
};

struct StepTrace {
    int step = 0;
    double t = 0.0;
    double mean_weighted_score = 0.0;
    double filter_pass_rate = 0.0;
    double neighbor_win_fraction = 0.0;
    int archive_updates = 0;
    double archive_hv = 0.0;  // predicted-objective HV against a fixed normalized ref
};

struct SamplerOutput {
    ParetoArchive archive;
    Matrix final_designs;      // target_candidates x d, normalized and clipped
    Matrix final_predictions;  // target_candidates x m
    std::vector<StepTrace> trace;
    double neighbor_win_fraction = 0.0;  // over all steps and slots
};

namespace detail {

inline Vector clip_unit(const Vector& x) {
    return x.cwiseMax(0.0).cwiseMin(1.0);
}

// Applies the weight-side ablations; neighbor/archive variants are handled
// in the main loop.
inline WeightLattice variant_lattice(const WeightLattice& base, AblationVariant v) {
    if (v != AblationVariant::equal && v != AblationVariant::first) return base;
    WeightLattice lat = base;
    const int m = lat.m();
    for (int i = 0; i < lat.size(); ++i) {
        for (int j = 0; j < m; ++j)
            lat.weights(i, j) = v == AblationVariant::equal ? 1.0 / m : (j == 0 ? 1.0 : 0.0);
    }
    // Duplicate rows give zero apex angles; the filter then degenerates to
    // its min-angle fallback, which is the literal reading of the variant.
    lat.apex_angles.setZero();
    return lat;
}

template <typename Fn>
inline void parallel_for(int n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int nt = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (int w = 0; w < nt; ++w) {
        pool.emplace_back([&, w] {
            for (int i = w; i < n; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Initializes the archive from the offline non-dominated samples: slot i
// holds the non-dominated offline design with the best predicted weighted
// score under omega^i.
inline ParetoArchive init_archive(const Matrix& offline_designs_norm, const Matrix& offline_labels,
                                  const Predictors& predictors, const WeightLattice& lattice) {
    FrontPartition part = non_dominated_sort(offline_labels);
    const auto& nd = part.fronts[0];
    Matrix nd_designs(static_cast<Eigen::Index>(nd.size()), offline_designs_norm.cols());
    for (std::size_t i = 0; i < nd.size(); ++i)
        nd_designs.row(static_cast<Eigen::Index>(i)) = offline_designs_norm.row(nd[i]);
    Matrix nd_pred = predictors.predict(nd_designs);

    ParetoArchive archive;
    archive.slots.resize(lattice.size());
    for (int i = 0; i < lattice.size(); ++i) {
        const Vector w = lattice.weights.row(i).transpose();
        int best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < nd_pred.rows(); ++c) {
            const double s = weighted_score(nd_pred.row(c).transpose(), w);
            if (s > best_score) {
                best_score = s;
                best = static_cast<int>(c);
            }
        }
        archive.slots[i].design = detail::clip_unit(nd_designs.row(best).transpose());
        archive.slots[i].predictions = nd_pred.row(best).transpose();
        archive.slots[i].score = best_score;
        archive.slots[i].from_offline = true;
    }
    return archive;
}

// Full Algorithm: guided sampling with neighboring evolution and archive
// maintenance, then non-dominated selection of the final candidates.
inline SamplerOutput run_sampler(const FlowModel& flow, const Predictors& predictors,
                                 const WeightLattice& base_lattice,
                                 const Matrix& offline_designs_norm, const Matrix& offline_labels,
                                 const SamplerConfig& config) {
    config.validate();
    const WeightLattice lattice = detail::variant_lattice(base_lattice, config.variant);
    const int N = lattice.size();
    const int m = lattice.m();
    const int d = flow.data_dim;
    const int O = config.offspring;
    const int T = config.steps;
    const double dt = 1.0 / T;
    if (config.target_candidates > N)
        throw std::invalid_argument("target_candidates exceeds the number of weight vectors");

    SamplerOutput out;
    out.archive = init_archive(offline_designs_norm, offline_labels, predictors, lattice);

    // N initial noise points.
    Matrix X(N, d);
    {
        Rng rng(mix_seed(config.seed, 0x696e6974ULL));
        std::normal_distribution<double> g(0.0, 1.0);
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < d; ++j) X(i, j) = g(rng);
    }

    const Vector ref_norm = Vector::Constant(m, 1.1);  // for the diagnostics HV curve
    std::int64_t neighbor_wins = 0, total_selections = 0;

    for (int step = 0; step < T; ++step) {
        const double t = static_cast<double>(step) / T;
        const double s = static_cast<double>(step + 1) / T;
        const double gamma_eff = effective_gamma(config, t);

        Matrix V = guided_field_batch(flow, predictors, lattice.weights, X, t, gamma_eff,
                                      config.gradient_mode);

        // O offspring per distribution; noise streams are split per
        // (step, distribution, offspring) so results are schedule-invariant.
        Matrix Xs(static_cast<Eigen::Index>(N) * O, d);
        const double noise_scale = config.noise_g * std::sqrt(dt);
        for (int i = 0; i < N; ++i) {
            for (int o = 0; o < O; ++o) {
                Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(step),
                                 static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(o)));
                std::normal_distribution<double> gauss(0.0, 1.0);
                Eigen::Index row = static_cast<Eigen::Index>(i) * O + o;
                for (int j = 0; j < d; ++j)
                    Xs(row, j) = X(i, j) + V(i, j) * dt + noise_scale * gauss(rng);
            }
        }

        Matrix X1hat = estimate_x1(flow, Xs, s);
        Matrix P = predictors.predict(X1hat);
        const Vector ideal = P.colwise().minCoeff().transpose();
        Matrix Pshift = P.rowwise() - ideal.transpose();

        Matrix Xnext(N, d);
        std::vector<int> winners(N);
        std::vector<double> winner_scores(N);
        std::vector<char> updated(N, 0);
        std::vector<double> pass_rates(N);

        detail::parallel_for(N, config.threads, [&](int i) {
            const Vector w = lattice.weights.row(i).transpose();
            std::vector<int> pool;
            if (config.variant == AblationVariant::no_neighbor) {
                pool.reserve(O);
                for (int o = 0; o < O; ++o) pool.push_back(i * O + o);
            } else {
                pool.reserve(lattice.neighbors[i].size() * O);
                for (int j : lattice.neighbors[i])
                    for (int o = 0; o < O; ++o) pool.push_back(j * O + o);
            }
            std::vector<int> survivors;
            if (config.variant == AblationVariant::no_local) {
                survivors.resize(pool.size());
                std::iota(survivors.begin(), survivors.end(), 0);
            } else {
                survivors = local_filter(Pshift, pool, w, lattice.apex_angles(i));
            }
            pass_rates[i] = static_cast<double>(survivors.size()) / pool.size();

            int best = survivors.front();
            double best_score = -std::numeric_limits<double>::infinity();
            for (int c : survivors) {
                const double sc = weighted_score(P.row(pool[c]).transpose(), w);
                if (sc > best_score) {  // ties keep the earliest candidate
                    best_score = sc;
                    best = c;
                }
            }
            const int winner_row = pool[best];
            winners[i] = winner_row;
            winner_scores[i] = best_score;
            Xnext.row(i) = Xs.row(winner_row);

            ArchiveSlot& slot = out.archive.slots[i];
            if (config.variant != AblationVariant::no_ps && best_score > slot.score) {
                slot.design = detail::clip_unit(X1hat.row(winner_row).transpose());
                slot.predictions = P.row(winner_row).transpose();
                slot.score = best_score;
                slot.from_offline = false;
                updated[i] = 1;
            }
        });

        X = std::move(Xnext);

        StepTrace tr;
        tr.step = step;
        tr.t = s;
        double score_sum = 0.0, pass_sum = 0.0;
        int wins = 0, updates = 0;
        for (int i = 0; i < N; ++i) {
            score_sum += winner_scores[i];
            pass_sum += pass_rates[i];
            if (winners[i] / O != i) ++wins;
            if (updated[i]) ++updates;
        }
        neighbor_wins += wins;
        total_selections += N;
        tr.mean_weighted_score = score_sum / N;
        tr.filter_pass_rate = pass_sum / N;
        tr.neighbor_win_fraction = static_cast<double>(wins) / N;
        tr.archive_updates = updates;
        {
            Matrix ap = out.archive.predictions();
            tr.archive_hv = hypervolume_auto(ap, ref_norm);
        }
        out.trace.push_back(tr);
    }

    out.neighbor_win_fraction =
        total_selections ? static_cast<double>(neighbor_wins) / total_selections : 0.0;

    // Final pool: the archive, or the decoded terminal samples for no-ps.
    Matrix pool_designs, pool_pred;
    if (config.variant == AblationVariant::no_ps) {
        pool_designs.resize(N, d);
        for (int i = 0; i < N; ++i)
            pool_designs.row(i) = detail::clip_unit(X.row(i).transpose()).transpose();
        pool_pred = predictors.predict(pool_designs);
    } else {
        pool_designs = out.archive.designs();
        pool_pred = out.archive.predictions();
    }

    std::vector<int> order = rank_order(pool_pred);
    const int take = config.target_candidates;
    out.final_designs.resize(take, d);
    out.final_predictions.resize(take, m);
    for (int i = 0; i < take; ++i) {
        out.final_designs.row(i) = pool_designs.row(order[i]);
        out.final_predictions.row(i) = pool_pred.row(order[i]);
    }
    return out;
}

}  // namespace paretoflow
