#pragma once

// Das-Dennis uniform weight vectors on the probability simplex, angular
// K-nearest-neighbor structure over them, and per-weight hypercone apex
// angles used by the local filtering scheme.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace paretoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// arccos of the normalized inner product, clamped into [0, pi].
inline double angular_distance(const Vector& u, const Vector& v) {
    const double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0)
        throw std::invalid_argument("angular_distance: zero vector");
    double c = u.dot(v) / (nu * nv);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c);
}

struct WeightLattice {
    Matrix weights;                          // N x m, rows sum to 1
    int partitions = 0;                      // Das-Dennis H
    std::vector<std::vector<int>> neighbors; // K entries per row, self included
    Vector apex_angles;                      // per-row hypercone angle Phi_i

    int size() const { return static_cast<int>(weights.rows()); }
    int m() const { return static_cast<int>(weights.cols()); }
};

namespace detail {
inline void das_dennis_rec(int m, int H, int level, int remaining, std::vector<int>& parts,
                           std::vector<std::vector<int>>& out) {
    if (level == m - 1) {
        parts[level] = remaining;
        out.push_back(parts);
        return;
    }
    for (int v = 0; v <= remaining; ++v) {
        parts[level] = v;
        das_dennis_rec(m, H, level + 1, remaining - v, parts, out);
    }
}
}  // namespace detail

// All compositions of H into m non-negative parts, divided by H, in
// lexicographic order of the first components.
inline WeightLattice das_dennis(int m, int H) {
    if (m < 2) throw std::invalid_argument("das_dennis: need m >= 2");
    if (H < 1) throw std::invalid_argument("das_dennis: need H >= 1");
    std::vector<std::vector<int>> parts;
    std::vector<int> buf(m);
    detail::das_dennis_rec(m, H, 0, H, buf, parts);
    WeightLattice lat;
    lat.partitions = H;
    lat.weights.resize(static_cast<Eigen::Index>(parts.size()), m);
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (int j = 0; j < m; ++j)
            lat.weights(static_cast<Eigen::Index>(i), j) =
                static_cast<double>(parts[i][j]) / static_cast<double>(H);
    return lat;
}

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// Smallest H whose lattice size C(H+m-1, m-1) reaches target_count.
inline int choose_partitions(int m, std::int64_t target_count) {
    for (int H = 1;; ++H) {
        if (binomial(H + m - 1, m - 1) >= target_count) return H;
    }
}

// Per row, the K angularly closest rows (self is always at distance 0);
// ties broken by ascending index. Lists come out angle-sorted.
inline void build_neighbors(WeightLattice& lat, int K) {
    const int n = lat.size();
    if (K > n) throw std::invalid_argument("build_neighbors: K exceeds lattice size");
    if (K < 1) throw std::invalid_argument("build_neighbors: K must be positive");
    lat.neighbors.assign(n, {});
    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        const Vector wi = lat.weights.row(i).transpose();
        // Self keys below zero so duplicate rows can never displace it.
        for (int j = 0; j < n; ++j)
            dist[j] = {i == j ? -1.0 : angular_distance(wi, lat.weights.row(j).transpose()), j};
        std::sort(dist.begin(), dist.end());
        lat.neighbors[i].reserve(K);
        for (int k = 0; k < K; ++k) lat.neighbors[i].push_back(dist[k].second);
    }
}

// Phi_i = 2 * mean angle to the m closest weights, excluding the row itself.
inline void compute_apex_angles(WeightLattice& lat) {
    const int n = lat.size();
    const int m = lat.m();
    if (n <= m) throw std::invalid_argument("apex_angles: need more weights than objectives");
    lat.apex_angles.resize(n);
    std::vector<double> angles(n - 1);
    for (int i = 0; i < n; ++i) {
        const Vector wi = lat.weights.row(i).transpose();
        int c = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            angles[c++] = angular_distance(wi, lat.weights.row(j).transpose());
        }
        std::nth_element(angles.begin(), angles.begin() + m - 1, angles.end());
        double sum = 0.0;
        for (int k = 0; k < m; ++k) sum += angles[k];
        lat.apex_angles(i) = 2.0 * sum / m;
    }
}

inline WeightLattice make_weight_lattice(int m, std::int64_t target_count, int K) {
    const int H = choose_partitions(m, target_count);
    WeightLattice lat = das_dennis(m, H);
    build_neighbors(lat, K);
    compute_apex_angles(lat);
    return lat;
}

// Debug dump: weights, neighbor indices, apex angle per row.
inline void dump_lattice_csv(const WeightLattice& lat, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write lattice dump: " + path);
    for (int j = 0; j < lat.m(); ++j) out << (j ? "," : "") << "w" << j;
    out << ",neighbors,apex_angle\n";
    for (int i = 0; i < lat.size(); ++i) {
        for (int j = 0; j < lat.m(); ++j) out << (j ? "," : "") << lat.weights(i, j);
        out << ",\"";
        for (std::size_t k = 0; k < lat.neighbors[i].size(); ++k)
            out << (k ? " " : "") << lat.neighbors[i][k];
        out << "\"," << (lat.apex_angles.size() > i ? lat.apex_angles(i) : 0.0) << "\n";
    }
}

}  // namespace paretoflow
