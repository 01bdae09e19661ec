#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "paretoflow/weights.hpp"
#include "paretoflow/rng.hpp"

#include <filesystem>
#include <set>

using namespace paretoflow;

namespace {

// Independent 2d oracle: angle between vectors via atan2 of each direction.
double angle2d(const Vector& u, const Vector& v) {
    double d = std::abs(std::atan2(u(1), u(0)) - std::atan2(v(1), v(0)));
    if (d > M_PI) d = 2 * M_PI - d;
    return d;
}

}  // namespace

TEST_CASE("angular distance basics") {
    Vector e1(2), e2(2), diag(2);
    e1 << 1, 0;
    e2 << 0, 1;
    diag << 1, 1;
    CHECK(angular_distance(e1, e2) == doctest::Approx(M_PI / 2).epsilon(1e-12));
    CHECK(angular_distance(e1, diag) == doctest::Approx(M_PI / 4).epsilon(1e-12));
    CHECK(angular_distance(e1, Vector(3.0 * e1)) == doctest::Approx(0.0));
    CHECK(angular_distance(e1, Vector(-e1)) == doctest::Approx(M_PI).epsilon(1e-12));
    CHECK_THROWS_AS(angular_distance(e1, Vector(Vector::Zero(2))), std::invalid_argument);
}

TEST_CASE("angular distance matches the 2d atan2 oracle") {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        Vector u(2), v(2);
        u << normal_draw(rng), normal_draw(rng);
        v << normal_draw(rng), normal_draw(rng);
        if (u.norm() < 1e-8 || v.norm() < 1e-8) continue;
        CHECK(angular_distance(u, v) == doctest::Approx(angle2d(u, v)).epsilon(1e-9));
    }
}

TEST_CASE("das-dennis m=2 H=4 enumerates the expected rows in order") {
    WeightLattice lat = das_dennis(2, 4);
    REQUIRE(lat.size() == 5);
    Matrix expect(5, 2);
    expect << 0.00, 1.00,
              0.25, 0.75,
              0.50, 0.50,
              0.75, 0.25,
              1.00, 0.00;
    CHECK((lat.weights - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("das-dennis m=3 H=1 gives the unit vectors") {
    WeightLattice lat = das_dennis(3, 1);
    REQUIRE(lat.size() == 3);
    Matrix expect(3, 3);
    expect << 0, 0, 1,
              0, 1, 0,
              1, 0, 0;
    CHECK((lat.weights - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("das-dennis simplex invariants and count") {
    for (auto [m, H] : std::vector<std::pair<int, int>>{{2, 7}, {3, 14}, {4, 6}}) {
        WeightLattice lat = das_dennis(m, H);
        CHECK(lat.size() == static_cast<int>(binomial(H + m - 1, m - 1)));
        std::set<std::vector<double>> seen;
        for (int i = 0; i < lat.size(); ++i) {
            CHECK(lat.weights.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(lat.weights.row(i).minCoeff() >= 0.0);
            CHECK(lat.weights.row(i).maxCoeff() <= 1.0);
            std::vector<double> row(m);
            for (int j = 0; j < m; ++j) row[j] = lat.weights(i, j);
            CHECK(seen.insert(row).second);  // all rows distinct
        }
    }
    CHECK_THROWS_AS(das_dennis(1, 3), std::invalid_argument);
    CHECK_THROWS_AS(das_dennis(3, 0), std::invalid_argument);
}

TEST_CASE("choose_partitions hits the target counts") {
    CHECK(choose_partitions(2, 256) == 255);
    CHECK(das_dennis(2, 255).size() == 256);
    CHECK(choose_partitions(3, 256) == 22);
    CHECK(das_dennis(3, 22).size() == 276);
    CHECK(binomial(16, 2) == 120);
    CHECK(choose_partitions(3, 120) == 14);  // C(16,2) = 120 exactly
}

TEST_CASE("neighbor lists: self first, angle sorted, index tie-break") {
    WeightLattice lat = das_dennis(2, 4);
    build_neighbors(lat, 3);
    for (int i = 0; i < lat.size(); ++i) {
        REQUIRE(lat.neighbors[i].size() == 3);
        CHECK(lat.neighbors[i][0] == i);  // self at distance 0 leads
        // remaining entries sorted by angle to row i
        const Vector wi = lat.weights.row(i).transpose();
        double prev = 0.0;
        for (std::size_t k = 1; k < 3; ++k) {
            double a = angular_distance(wi, lat.weights.row(lat.neighbors[i][k]).transpose());
            CHECK(a >= prev);
            prev = a;
        }
    }
    // row 2 = (0.5, 0.5) is equidistant from rows 1 and 3; the tie goes to
    // the lower index
    CHECK(lat.neighbors[2][1] == 1);
    CHECK(lat.neighbors[2][2] == 3);

    CHECK_THROWS_AS(build_neighbors(lat, 6), std::invalid_argument);
    CHECK_THROWS_AS(build_neighbors(lat, 0), std::invalid_argument);
}

TEST_CASE("apex angles: hand computation on the m=2 H=4 lattice") {
    WeightLattice lat = das_dennis(2, 4);
    compute_apex_angles(lat);
    REQUIRE(lat.apex_angles.size() == 5);
    auto ang = [&](int i, int j) {
        return angle2d(lat.weights.row(i).transpose(), lat.weights.row(j).transpose());
    };
    // interior row (0.5,0.5): the two closest are rows 1 and 3, symmetric
    CHECK(lat.apex_angles(2) == doctest::Approx(2.0 * ang(2, 1)).epsilon(1e-12));
    // boundary row (0,1): closest two are rows 1 and 2
    CHECK(lat.apex_angles(0) ==
          doctest::Approx(2.0 * (ang(0, 1) + ang(0, 2)) / 2.0).epsilon(1e-12));
    // mirror symmetry of the lattice
    CHECK(lat.apex_angles(0) == doctest::Approx(lat.apex_angles(4)).epsilon(1e-12));
    CHECK(lat.apex_angles(1) == doctest::Approx(lat.apex_angles(3)).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) {
        CHECK(lat.apex_angles(i) > 0.0);
        CHECK(lat.apex_angles(i) < M_PI);
    }

    WeightLattice tiny = das_dennis(3, 1);  // n == m
    CHECK_THROWS_AS(compute_apex_angles(tiny), std::invalid_argument);
}

TEST_CASE("apex angles are invariant under objective permutation") {
    WeightLattice lat = das_dennis(3, 5);
    compute_apex_angles(lat);
    WeightLattice perm = lat;
    perm.weights.col(0).swap(perm.weights.col(2));
    compute_apex_angles(perm);
    std::vector<double> a(lat.apex_angles.data(), lat.apex_angles.data() + lat.size());
    std::vector<double> b(perm.apex_angles.data(), perm.apex_angles.data() + perm.size());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("make_weight_lattice assembles the full structure") {
    WeightLattice lat = make_weight_lattice(3, 256, 4);
    CHECK(lat.size() == 276);
    CHECK(lat.partitions == 22);
    CHECK(lat.apex_angles.size() == 276);
    for (int i = 0; i < lat.size(); ++i) {
        REQUIRE(lat.neighbors[i].size() == 4);
        CHECK(lat.neighbors[i][0] == i);
    }

    WeightLattice lat2 = make_weight_lattice(2, 256, 3);
    CHECK(lat2.size() == 256);
    CHECK(lat2.partitions == 255);
}

TEST_CASE("lattice csv dump writes one line per weight") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "pf_lattice.csv").string();
    WeightLattice lat = make_weight_lattice(2, 16, 2);
    dump_lattice_csv(lat, path);
    std::ifstream in(path);
    int lines = 0;
    std::string l;
    while (std::getline(in, l)) ++lines;
    CHECK(lines == lat.size() + 1);
    fs::remove(path);
}
