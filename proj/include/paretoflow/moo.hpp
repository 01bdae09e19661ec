#pragma once

// Pareto dominance, fast non-dominated sorting, crowding distance,
// hypervolume (exact 2d/3d sweeps plus Monte-Carlo), percentile HV and the
// pairwise diversity metric. All objectives are minimized.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "paretoflow/rng.hpp"

namespace paretoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// a dominates b: a <= b component-wise with at least one strict inequality.
inline bool dominates(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominates: length mismatch");
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) > b(i)) return false;
        if (a(i) < b(i)) strict = true;
    }
    return strict;
}

struct FrontPartition {
    std::vector<std::vector<int>> fronts;  // fronts[0] is non-dominated
    std::vector<int> ranks;                // per-point front index
};

// Fast non-dominated sort (Deb et al.), O(m N^2). Rows of `points` are
// objective vectors.
inline FrontPartition non_dominated_sort(const Matrix& points) {
    const int n = static_cast<int>(points.rows());
    if (n == 0) throw std::invalid_argument("non_dominated_sort: empty set");
    std::vector<std::vector<int>> dominated(n);
    std::vector<int> dom_count(n, 0);
    FrontPartition part;
    part.ranks.assign(n, -1);
    std::vector<int> current;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(points.row(i).transpose(), points.row(j).transpose()))
                dominated[i].push_back(j);
            else if (dominates(points.row(j).transpose(), points.row(i).transpose()))
                ++dom_count[i];
        }
        if (dom_count[i] == 0) {
            part.ranks[i] = 0;
            current.push_back(i);
        }
    }
    int rank = 0;
    while (!current.empty()) {
        part.fronts.push_back(current);
        std::vector<int> next;
        for (int i : current) {
            for (int j : dominated[i]) {
                if (--dom_count[j] == 0) {
                    part.ranks[j] = rank + 1;
                    next.push_back(j);
                }
            }
        }
        std::sort(next.begin(), next.end());
        current = std::move(next);
        ++rank;
    }
    return part;
}

// NSGA-II crowding distance within one front. Boundary points get +inf;
// degenerate objective ranges contribute 0.
inline std::vector<double> crowding_distance(const Matrix& front) {
    const int n = static_cast<int>(front.rows());
    const int m = static_cast<int>(front.cols());
    std::vector<double> dist(n, 0.0);
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        return dist;
    }
    std::vector<int> idx(n);
    for (int k = 0; k < m; ++k) {
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return front(a, k) < front(b, k); });
        const double range = front(idx.back(), k) - front(idx.front(), k);
        dist[idx.front()] = std::numeric_limits<double>::infinity();
        dist[idx.back()] = std::numeric_limits<double>::infinity();
        if (range == 0.0) continue;
        for (int i = 1; i + 1 < n; ++i)
            dist[idx[i]] += (front(idx[i + 1], k) - front(idx[i - 1], k)) / range;
    }
    return dist;
}

namespace detail {

// Drop points not strictly inside the box bounded by ref (they contribute
// nothing to the union of boxes [p, ref]).
inline Matrix clip_to_reference(const Matrix& points, const Vector& ref) {
    std::vector<int> keep;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        bool ok = true;
        for (Eigen::Index j = 0; j < points.cols(); ++j)
            if (points(i, j) >= ref(j)) { ok = false; break; }
        if (ok) keep.push_back(static_cast<int>(i));
    }
    Matrix out(static_cast<Eigen::Index>(keep.size()), points.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points.row(keep[i]);
    return out;
}

inline double hv_exact_2d(const Matrix& pts, const Vector& ref) {
    const int n = static_cast<int>(pts.rows());
    if (n == 0) return 0.0;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (pts(a, 0) != pts(b, 0)) return pts(a, 0) < pts(b, 0);
        return pts(a, 1) < pts(b, 1);
    });
    // Sweep in ascending f1; each non-dominated point adds the horizontal
    // slab between its f2 and the best f2 seen so far.
    double hv = 0.0;
    double best_f2 = ref(1);
    for (int k = 0; k < n; ++k) {
        const int i = idx[k];
        if (pts(i, 1) >= best_f2) continue;  // dominated by an earlier point
        hv += (ref(0) - pts(i, 0)) * (best_f2 - pts(i, 1));
        best_f2 = pts(i, 1);
    }
    return hv;
}

// Dimension sweep over the third objective: the volume is the integral of the
// 2d hypervolume of the points already "active" below each z level.
inline double hv_exact_3d(const Matrix& pts, const Vector& ref) {
    const int n = static_cast<int>(pts.rows());
    if (n == 0) return 0.0;
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return pts(a, 2) < pts(b, 2); });
    Vector ref2(2);
    ref2 << ref(0), ref(1);
    double hv = 0.0;
    for (int k = 0; k < n; ++k) {
        // slab from z_k to the next distinct z (or ref z)
        double z0 = pts(idx[k], 2);
        double z1 = ref(2);
        int next = k + 1;
        while (next < n && pts(idx[next], 2) == z0) ++next;
        if (next < n) z1 = pts(idx[next], 2);
        if (z1 <= z0) { continue; }
        Matrix active(next, 2);
        for (int l = 0; l < next; ++l) {
            active(l, 0) = pts(idx[l], 0);
            active(l, 1) = pts(idx[l], 1);
        }
        hv += (z1 - z0) * hv_exact_2d(active, ref2);
        k = next - 1;
    }
    return hv;
}

}  // namespace detail

struct MonteCarloHv {
    std::int64_t nsamples = 1000000;
    std::uint64_t seed = 0;
};

// Unbiased estimate: uniform samples in the bounding box [min(points), ref],
// fraction dominated by some point, times box volume. Samples are drawn in
// fixed-size chunks each seeded from (seed, chunk) so the estimate does not
// depend on how work is scheduled.
inline double hypervolume_montecarlo(const Matrix& points, const Vector& ref,
                                     const MonteCarloHv& mc) {
    Matrix pts = detail::clip_to_reference(points, ref);
    if (pts.rows() == 0) return 0.0;
    const Eigen::Index m = pts.cols();
    Vector lo = pts.colwise().minCoeff().transpose();
    double box = 1.0;
    for (Eigen::Index j = 0; j < m; ++j) box *= ref(j) - lo(j);
    if (box <= 0.0) return 0.0;

    constexpr std::int64_t kChunk = 65536;
    std::int64_t hits = 0;
    std::int64_t remaining = mc.nsamples;
    std::uint64_t chunk_index = 0;
    Vector sample(m);
    while (remaining > 0) {
        const std::int64_t count = std::min(kChunk, remaining);
        Rng rng(mix_seed(mc.seed, 0x48564d43ULL, chunk_index));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::int64_t s = 0; s < count; ++s) {
            for (Eigen::Index j = 0; j < m; ++j) sample(j) = lo(j) + u(rng) * (ref(j) - lo(j));
            for (Eigen::Index i = 0; i < pts.rows(); ++i) {
                bool dom = true;
                for (Eigen::Index j = 0; j < m; ++j)
                    if (pts(i, j) > sample(j)) { dom = false; break; }
                if (dom) { ++hits; break; }
            }
        }
        remaining -= count;
        ++chunk_index;
    }
    return box * static_cast<double>(hits) / static_cast<double>(mc.nsamples);
}

enum class HvMethod { exact2d, exact3d, montecarlo };

inline double hypervolume(const Matrix& points, const Vector& ref,
                          HvMethod method = HvMethod::exact2d,
                          const MonteCarloHv& mc = MonteCarloHv{}) {
    if (points.cols() != ref.size()) throw std::invalid_argument("hypervolume: m mismatch");
    switch (method) {
        case HvMethod::exact2d:
            if (points.cols() != 2)
                throw std::invalid_argument("exact2d requires m=2");
            return detail::hv_exact_2d(detail::clip_to_reference(points, ref), ref);
        case HvMethod::exact3d:
            if (points.cols() != 3)
                throw std::invalid_argument("exact3d requires m=3");
            return detail::hv_exact_3d(detail::clip_to_reference(points, ref), ref);
        case HvMethod::montecarlo:
            return hypervolume_montecarlo(points, ref, mc);
    }
    throw std::logic_error("bad hv method");
}

inline double hypervolume_auto(const Matrix& points, const Vector& ref,
                               const MonteCarloHv& mc = MonteCarloHv{}) {
    if (points.cols() == 2) return hypervolume(points, ref, HvMethod::exact2d);
    if (points.cols() == 3) return hypervolume(points, ref, HvMethod::exact3d);
    return hypervolume(points, ref, HvMethod::montecarlo, mc);
}

// Order point indices best-first: by non-dominated rank, ties within a front
// broken by descending crowding distance, then by index.
inline std::vector<int> rank_order(const Matrix& points) {
    FrontPartition part = non_dominated_sort(points);
    std::vector<int> order;
    order.reserve(points.rows());
    for (const auto& front : part.fronts) {
        Matrix fp(static_cast<Eigen::Index>(front.size()), points.cols());
        for (std::size_t i = 0; i < front.size(); ++i)
            fp.row(static_cast<Eigen::Index>(i)) = points.row(front[i]);
        std::vector<double> cd = crowding_distance(fp);
        std::vector<int> local(front.size());
        std::iota(local.begin(), local.end(), 0);
        std::stable_sort(local.begin(), local.end(), [&](int a, int b) {
            if (cd[a] != cd[b]) return cd[a] > cd[b];
            return front[a] < front[b];
        });
        for (int l : local) order.push_back(front[l]);
    }
    return order;
}

// P in {100, 50}: remove the best-ranked (1 - P/100) fraction (count rounded
// down) and report HV of the remainder.
inline double percentile_hv(const Matrix& points, const Vector& ref, int percentile,
                            const MonteCarloHv& mc = MonteCarloHv{}) {
    if (points.rows() == 0) throw std::invalid_argument("percentile_hv: empty set");
    const int n = static_cast<int>(points.rows());
    const int remove = static_cast<int>(std::floor(n * (1.0 - percentile / 100.0)));
    if (remove >= n) throw std::invalid_argument("percentile_hv: removal empties the set");
    if (remove == 0) return hypervolume_auto(points, ref, mc);
    std::vector<int> order = rank_order(points);
    Matrix rest(n - remove, points.cols());
    for (int i = remove; i < n; ++i) rest.row(i - remove) = points.row(order[i]);
    return hypervolume_auto(rest, ref, mc);
}

// Mean Euclidean distance over unordered pairs (equals the 1/(N(N-1))
// double sum over ordered pairs).
inline double pairwise_diversity(const Matrix& points) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw std::invalid_argument("pairwise_diversity: need at least 2 points");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            sum += (points.row(i) - points.row(j)).norm();
    return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

}  // namespace paretoflow
