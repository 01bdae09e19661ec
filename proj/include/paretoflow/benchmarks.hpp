#pragma once

// Analytic multi-objective test problems (canonical literature definitions,
// all minimization), offline dataset generation, and min-max normalization.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paretoflow/rng.hpp"

namespace paretoflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Json = nlohmann::json;

struct ProblemSpec {
    std::string name;
    int d = 0;  // design dimension
    int m = 0;  // objective count
    Vector lower, upper;
    std::function<Vector(const Vector&)> evaluate;
    // Closed-form front descriptor for test use; f2 as a function of f1.
    std::function<double(double)> pareto_front_hint;

    Vector eval_checked(const Vector& x) const {
        if (x.size() != d) throw std::invalid_argument("evaluate: design dimension mismatch");
        return evaluate(x);
    }
};

namespace problems {

inline double sq(double v) { return v * v; }

inline Vector zdt_g_common(const Vector& x) { return x; }

inline ProblemSpec zdt1() {
    ProblemSpec p;
    p.name = "zdt1";
    p.d = 30;
    p.m = 2;
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [d = p.d](const Vector& x) {
        const double f1 = x(0);
        const double g = 1.0 + 9.0 * x.tail(d - 1).sum() / (d - 1);
        Vector f(2);
        f << f1, g * (1.0 - std::sqrt(f1 / g));
        return f;
    };
    p.pareto_front_hint = [](double f1) { return 1.0 - std::sqrt(f1); };
    return p;
}

inline ProblemSpec zdt2() {
    ProblemSpec p;
    p.name = "zdt2";
    p.d = 30;
    p.m = 2;
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [d = p.d](const Vector& x) {
        const double f1 = x(0);
        const double g = 1.0 + 9.0 * x.tail(d - 1).sum() / (d - 1);
        Vector f(2);
        f << f1, g * (1.0 - sq(f1 / g));
        return f;
    };
    p.pareto_front_hint = [](double f1) { return 1.0 - f1 * f1; };
    return p;
}

inline ProblemSpec zdt3() {
    ProblemSpec p;
    p.name = "zdt3";
    p.d = 30;
    p.m = 2;
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [d = p.d](const Vector& x) {
        const double f1 = x(0);
        const double g = 1.0 + 9.0 * x.tail(d - 1).sum() / (d - 1);
        Vector f(2);
        f << f1, g * (1.0 - std::sqrt(f1 / g) - (f1 / g) * std::sin(10.0 * M_PI * f1));
        return f;
    };
    return p;
}

inline ProblemSpec zdt4() {
    ProblemSpec p;
    p.name = "zdt4";
    p.d = 10;
    p.m = 2;
    p.lower = Vector::Constant(p.d, -5.0);
    p.upper = Vector::Constant(p.d, 5.0);
    p.lower(0) = 0.0;
    p.upper(0) = 1.0;
    p.evaluate = [d = p.d](const Vector& x) {
        const double f1 = x(0);
        double g = 1.0 + 10.0 * (d - 1);
        for (int i = 1; i < d; ++i) g += sq(x(i)) - 10.0 * std::cos(4.0 * M_PI * x(i));
        Vector f(2);
        f << f1, g * (1.0 - std::sqrt(f1 / g));
        return f;
    };
    return p;
}

inline ProblemSpec zdt6() {
    ProblemSpec p;
    p.name = "zdt6";
    p.d = 10;
    p.m = 2;
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [d = p.d](const Vector& x) {
        const double f1 =
            1.0 - std::exp(-4.0 * x(0)) * std::pow(std::sin(6.0 * M_PI * x(0)), 6.0);
        const double g = 1.0 + 9.0 * std::pow(x.tail(d - 1).sum() / (d - 1), 0.25);
        Vector f(2);
        f << f1, g * (1.0 - sq(f1 / g));
        return f;
    };
    return p;
}

inline ProblemSpec dtlz1() {
    ProblemSpec p;
    p.name = "dtlz1";
    p.m = 3;
    const int k = 5;
    p.d = p.m + k - 1;  // 7
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [m = p.m, d = p.d, k](const Vector& x) {
        double g = 0.0;
        for (int i = m - 1; i < d; ++i)
            g += sq(x(i) - 0.5) - std::cos(20.0 * M_PI * (x(i) - 0.5));
        g = 100.0 * (k + g);
        Vector f(m);
        for (int i = 0; i < m; ++i) {
            double v = 0.5 * (1.0 + g);
            for (int j = 0; j < m - 1 - i; ++j) v *= x(j);
            if (i > 0) v *= 1.0 - x(m - 1 - i);
            f(i) = v;
        }
        return f;
    };
    return p;
}

inline ProblemSpec dtlz7() {
    ProblemSpec p;
    p.name = "dtlz7";
    p.m = 3;
    const int k = 20;
    p.d = p.m + k - 1;  // 22
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Ones(p.d);
    p.evaluate = [m = p.m, d = p.d, k](const Vector& x) {
        double g = 0.0;
        for (int i = m - 1; i < d; ++i) g += x(i);
        g = 1.0 + 9.0 * g / k;
        Vector f(m);
        for (int i = 0; i < m - 1; ++i) f(i) = x(i);
        double h = 0.0;
        for (int i = 0; i < m - 1; ++i)
            h += f(i) / (1.0 + g) * (1.0 + std::sin(3.0 * M_PI * f(i)));
        h = m - h;
        f(m - 1) = (1.0 + g) * h;
        return f;
    };
    return p;
}

// Van Veldhuizen MOP1 (Schaffer); bounds restricted to [-2, 4] around the
// Pareto set [0, 2].
inline ProblemSpec vlmop1() {
    ProblemSpec p;
    p.name = "vlmop1";
    p.d = 1;
    p.m = 2;
    p.lower = Vector::Constant(1, -2.0);
    p.upper = Vector::Constant(1, 4.0);
    p.evaluate = [](const Vector& x) {
        Vector f(2);
        f << sq(x(0)), sq(x(0) - 2.0);
        return f;
    };
    return p;
}

// Fonseca-Fleming style two-sphere objective (Van Veldhuizen MOP2).
inline ProblemSpec vlmop2() {
    ProblemSpec p;
    p.name = "vlmop2";
    p.d = 6;
    p.m = 2;
    p.lower = Vector::Constant(p.d, -2.0);
    p.upper = Vector::Constant(p.d, 2.0);
    p.evaluate = [d = p.d](const Vector& x) {
        const double c = 1.0 / std::sqrt(static_cast<double>(d));
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < d; ++i) {
            s1 += sq(x(i) - c);
            s2 += sq(x(i) + c);
        }
        Vector f(2);
        f << 1.0 - std::exp(-s1), 1.0 - std::exp(-s2);
        return f;
    };
    return p;
}

// Viennet function (Van Veldhuizen MOP3 formulation with 3 objectives).
inline ProblemSpec vlmop3() {
    ProblemSpec p;
    p.name = "vlmop3";
    p.d = 2;
    p.m = 3;
    p.lower = Vector::Constant(p.d, -3.0);
    p.upper = Vector::Constant(p.d, 3.0);
    p.evaluate = [](const Vector& v) {
        const double x = v(0), y = v(1);
        const double r2 = x * x + y * y;
        Vector f(3);
        f << 0.5 * r2 + std::sin(r2),
            sq(3.0 * x - 2.0 * y + 4.0) / 8.0 + sq(x - y + 1.0) / 27.0 + 15.0,
            1.0 / (r2 + 1.0) - 1.1 * std::exp(-r2);
        return f;
    };
    return p;
}

inline ProblemSpec omni_test() {
    ProblemSpec p;
    p.name = "omnitest";
    p.d = 2;
    p.m = 2;
    p.lower = Vector::Zero(p.d);
    p.upper = Vector::Constant(p.d, 6.0);
    p.evaluate = [d = p.d](const Vector& x) {
        double s = 0.0, c = 0.0;
        for (int i = 0; i < d; ++i) {
            s += std::sin(M_PI * x(i));
            c += std::cos(M_PI * x(i));
        }
        Vector f(2);
        f << s, c;
        return f;
    };
    return p;
}

}  // namespace problems

inline std::vector<std::string> problem_names() {
    return {"zdt1",   "zdt2",   "zdt3",   "zdt4",   "zdt6",    "dtlz1",
            "dtlz7",  "vlmop1", "vlmop2", "vlmop3", "omnitest"};
}

inline ProblemSpec make_problem(const std::string& name) {
    using namespace problems;
    if (name == "zdt1") return zdt1();
    if (name == "zdt2") return zdt2();
    if (name == "zdt3") return zdt3();
    if (name == "zdt4") return zdt4();
    if (name == "zdt6") return zdt6();
    if (name == "dtlz1") return dtlz1();
    if (name == "dtlz7") return dtlz7();
    if (name == "vlmop1") return vlmop1();
    if (name == "vlmop2") return vlmop2();
    if (name == "vlmop3") return vlmop3();
    if (name == "omnitest") return omni_test();
    std::string valid;
    for (const auto& n : problem_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown problem '" + name + "'; valid: " + valid);
}

// Per-dimension statistics over a matrix of row vectors.
struct ColumnStats {
    Vector min, max, mean, stddev;

    static ColumnStats compute(const Matrix& rows) {
        if (rows.rows() == 0) throw std::invalid_argument("stats over empty matrix");
        ColumnStats s;
        s.min = rows.colwise().minCoeff().transpose();
        s.max = rows.colwise().maxCoeff().transpose();
        s.mean = rows.colwise().mean().transpose();
        Matrix centered = rows.rowwise() - s.mean.transpose();
        s.stddev = (centered.array().square().colwise().mean()).sqrt().transpose();
        return s;
    }

    // Min-max map to [0,1]; degenerate (max == min) dimensions go to 0.5.
    Matrix normalize(const Matrix& rows) const {
        Matrix out(rows.rows(), rows.cols());
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            const double range = max(c) - min(c);
            if (range == 0.0)
                out.col(c).setConstant(0.5);
            else
                out.col(c) = (rows.col(c).array() - min(c)) / range;
        }
        return out;
    }

    Matrix denormalize(const Matrix& rows) const {
        Matrix out(rows.rows(), rows.cols());
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            const double range = max(c) - min(c);
            if (range == 0.0)
                out.col(c).setConstant(min(c));
            else
                out.col(c) = rows.col(c).array() * range + min(c);
        }
        return out;
    }

    Vector normalize_row(const Vector& v) const {
        Matrix row = v.transpose();
        return normalize(row).row(0).transpose();
    }

    Vector denormalize_row(const Vector& v) const {
        Matrix row = v.transpose();
        return denormalize(row).row(0).transpose();
    }

    Json to_json() const {
        auto vec = [](const Vector& v) {
            return std::vector<double>(v.data(), v.data() + v.size());
        };
        return Json{{"min", vec(min)}, {"max", vec(max)}, {"mean", vec(mean)},
                    {"std", vec(stddev)}};
    }

    static ColumnStats from_json(const Json& j) {
        auto vec = [](const Json& a) {
            auto v = a.get<std::vector<double>>();
            return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
        };
        ColumnStats s;
        s.min = vec(j.at("min"));
        s.max = vec(j.at("max"));
        s.mean = vec(j.at("mean"));
        s.stddev = vec(j.at("std"));
        return s;
    }
};

struct OfflineDataset {
    std::string problem_name;
    Matrix designs;  // n x d
    Matrix labels;   // n x m
    ColumnStats x_stats, y_stats;
    std::uint64_t seed = 0;
    std::string sampler = "uniform";

    Eigen::Index size() const { return designs.rows(); }
    int d() const { return static_cast<int>(designs.cols()); }
    int m() const { return static_cast<int>(labels.cols()); }
};

enum class Sampler { uniform, latin_hypercube };

inline Sampler sampler_from_string(const std::string& s) {
    if (s == "uniform") return Sampler::uniform;
    if (s == "latin-hypercube") return Sampler::latin_hypercube;
    throw std::invalid_argument("unknown sampler: " + s);
}

inline OfflineDataset generate_offline_dataset(const ProblemSpec& spec, Eigen::Index n,
                                               std::uint64_t seed,
                                               Sampler sampler = Sampler::uniform) {
    if (n <= 0) throw std::invalid_argument("dataset size must be positive");
    Matrix X(n, spec.d);
    Rng rng(seed);
    if (sampler == Sampler::uniform) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (Eigen::Index i = 0; i < n; ++i)
            for (int j = 0; j < spec.d; ++j)
                X(i, j) = spec.lower(j) + u(rng) * (spec.upper(j) - spec.lower(j));
    } else {
        // Latin hypercube: one stratum per row per dimension, independently permuted.
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int j = 0; j < spec.d; ++j) {
            std::vector<Eigen::Index> perm(n);
            std::iota(perm.begin(), perm.end(), Eigen::Index{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            for (Eigen::Index i = 0; i < n; ++i) {
                const double frac = (static_cast<double>(perm[i]) + u(rng)) / static_cast<double>(n);
                X(i, j) = spec.lower(j) + frac * (spec.upper(j) - spec.lower(j));
            }
        }
    }
    Matrix Y(n, spec.m);
    for (Eigen::Index i = 0; i < n; ++i) Y.row(i) = spec.eval_checked(X.row(i).transpose()).transpose();

    OfflineDataset ds;
    ds.problem_name = spec.name;
    ds.designs = std::move(X);
    ds.labels = std::move(Y);
    ds.x_stats = ColumnStats::compute(ds.designs);
    ds.y_stats = ColumnStats::compute(ds.labels);
    ds.seed = seed;
    ds.sampler = sampler == Sampler::uniform ? "uniform" : "latin-hypercube";
    return ds;
}

namespace detail {
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
}  // namespace detail

inline void save_dataset(const OfflineDataset& ds, const std::string& csv_path,
                         const std::string& meta_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write dataset: " + csv_path);
    for (int j = 0; j < ds.d(); ++j) out << (j ? "," : "") << "x" << j;
    for (int j = 0; j < ds.m(); ++j) out << ",f" << j;
    out << "\n";
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        for (int j = 0; j < ds.d(); ++j)
            out << (j ? "," : "") << detail::format_double(ds.designs(i, j));
        for (int j = 0; j < ds.m(); ++j) out << "," << detail::format_double(ds.labels(i, j));
        out << "\n";
    }
    Json meta;
    meta["problem"] = ds.problem_name;
    meta["d"] = ds.d();
    meta["m"] = ds.m();
    meta["n"] = ds.size();
    meta["seed"] = ds.seed;
    meta["sampler"] = ds.sampler;
    meta["x_stats"] = ds.x_stats.to_json();
    meta["y_stats"] = ds.y_stats.to_json();
    std::ofstream mout(meta_path);
    if (!mout) throw std::runtime_error("cannot write metadata: " + meta_path);
    mout << meta.dump(2) << "\n";
}

inline OfflineDataset load_dataset(const std::string& csv_path, const std::string& meta_path) {
    std::ifstream min(meta_path);
    if (!min) throw std::runtime_error("cannot open metadata: " + meta_path);
    Json meta = Json::parse(min);
    OfflineDataset ds;
    ds.problem_name = meta.at("problem").get<std::string>();
    const int d = meta.at("d").get<int>();
    const int m = meta.at("m").get<int>();
    const Eigen::Index n = meta.at("n").get<Eigen::Index>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    ds.sampler = meta.at("sampler").get<std::string>();
    ds.x_stats = ColumnStats::from_json(meta.at("x_stats"));
    ds.y_stats = ColumnStats::from_json(meta.at("y_stats"));

    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error("cannot open dataset: " + csv_path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + csv_path);
    {
        Eigen::Index cols = static_cast<Eigen::Index>(std::count(line.begin(), line.end(), ',')) + 1;
        if (cols != d + m)
            throw std::runtime_error("dataset column count does not match metadata d/m");
    }
    ds.designs.resize(n, d);
    ds.labels.resize(n, m);
    Eigen::Index row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (row >= n) throw std::runtime_error("dataset has more rows than metadata n");
        std::stringstream ss(line);
        std::string cell;
        for (int j = 0; j < d + m; ++j) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("short dataset row " + std::to_string(row));
            const double v = std::stod(cell);
            if (j < d)
                ds.designs(row, j) = v;
            else
                ds.labels(row, j - d) = v;
        }
        ++row;
    }
    if (row != n) throw std::runtime_error("dataset has fewer rows than metadata n");
    return ds;
}

}  // namespace paretoflow
