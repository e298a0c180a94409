#include "support.hpp"

#include "wpsc/dataset.hpp"
#include "wpsc/error.hpp"
#include "wpsc/metrics.hpp"
#include "wpsc/subspace.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wpsc;

namespace {

Matrix orthonormal(int rows, int cols, std::uint64_t seed) {
    Eigen::HouseholderQR<Matrix> qr(testsupport::random_matrix(rows, cols, seed));
    return qr.householderQ() * Matrix::Identity(rows, cols);
}

ClusterModel model_of(std::vector<Matrix> bases, const Matrix& means) {
    ClusterModel m;
    m.means = means;
    m.requested_dim = static_cast<int>(bases.front().cols());
    m.bases = std::move(bases);
    return m;
}

Vector unit(int n, int i) {
    Vector v = Vector::Zero(n);
    v(i) = 1.0;
    return v;
}

}  // namespace

TEST_CASE("plane with offset is recovered") {
    const Matrix u = orthonormal(6, 2, 1);
    Vector mean(6);
    mean << 1, -2, 0.5, 3, 0, 1;
    const Matrix coeffs = testsupport::random_matrix(2, 10, 2);
    Matrix plane = u * coeffs;
    plane.colwise() += mean;
    Matrix x(6, 14);
    x << plane, testsupport::random_matrix(6, 4, 3);
    Labels labels(14, 0);
    for (int j = 10; j < 14; ++j) labels[static_cast<std::size_t>(j)] = 1;
    const ClusterModel m = estimate_bases(x, labels, 2);
    CHECK(m.clusters() == 2);
    CHECK((m.bases[0].transpose() * m.bases[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((m.means.col(0) - plane.rowwise().mean()).norm() <= 1e-12);
    for (int j = 0; j < 10; ++j) CHECK(subspace_distances(x.col(j), m)(0) <= 1e-10);
    CHECK(m.warnings.empty());
}

TEST_CASE("repeated point cluster degrades with a warning") {
    Matrix x(3, 6);
    for (int j = 0; j < 3; ++j) x.col(j) << 1, 2, 3;
    x.block(0, 3, 3, 3) = testsupport::random_matrix(3, 3, 7);
    const ClusterModel m = estimate_bases(x, Labels{0, 0, 0, 1, 1, 1}, 2);
    CHECK(m.bases[0].cols() == 0);
    CHECK(m.bases[1].cols() == 2);
    CHECK_FALSE(m.warnings.empty());
    CHECK(subspace_distances(Vector(Eigen::Vector3d(1, 2, 3)), m)(0) <= 1e-12);
}

TEST_CASE("planted union of subspaces") {
    const Dataset ds = generate_uos(UosSpec{4, 3, 20, 15, 0.0, 21});
    const ClusterModel m = estimate_bases(ds.data(), ds.labels(), 3);
    for (int j = 0; j < ds.size(); ++j) {
        const Vector dist = subspace_distances(ds.data().col(j), m);
        CHECK(dist(ds.labels()[static_cast<std::size_t>(j)]) < 1e-8);
    }
}

TEST_CASE("assign_oos exact membership and ties") {
    const Matrix u1 = orthonormal(5, 2, 3), u2 = orthonormal(5, 2, 4);
    Matrix means = Matrix::Zero(5, 2);
    means.col(1) = Vector::Constant(5, 0.3);
    const ClusterModel m = model_of({u1, u2}, means);
    const Vector x = means.col(1) + u2 * Eigen::Vector2d(0.7, -1.1);
    const Assignment a = assign_oos(x, m);
    CHECK(a.label == 1);
    CHECK(a.distance <= 1e-12);

    // symmetric construction: two lines through 0 at equal angles to x
    const ClusterModel sym = model_of({Matrix(unit(3, 0)), Matrix(unit(3, 1))}, Matrix::Zero(3, 2));
    const Vector mid = Vector(Eigen::Vector3d(1, 1, 0.5));
    CHECK(assign_oos(mid, sym).label == 0);
}

TEST_CASE("noiseless 80/20 out-of-sample") {
    const Dataset ds = generate_uos(UosSpec{3, 2, 30, 20, 0.0, 33});
    const SplitResult s = split(ds, SplitSpec{0.8, 5});
    const ClusterModel m = estimate_bases(s.in_sample.data(), s.in_sample.labels(), 2);
    const Labels got = assign_oos(s.out_sample.data(), m);
    CHECK(clustering_accuracy(s.out_sample.labels(), got) == 1.0);
}

TEST_CASE("assignment depends on span only") {
    const Dataset ds = generate_uos(UosSpec{3, 3, 12, 10, 0.2, 8});
    const ClusterModel m = estimate_bases(ds.data(), ds.labels(), 3);
    ClusterModel rotated = m;
    for (std::size_t c = 0; c < rotated.bases.size(); ++c)
        rotated.bases[c] = rotated.bases[c] * orthonormal(3, 3, 50 + c);
    const Matrix probes = testsupport::random_matrix(12, 40, 9);
    CHECK(assign_oos(probes, m) == assign_oos(probes, rotated));
}

TEST_CASE("multiview assignment") {
    const Matrix e = Matrix::Identity(4, 4);
    // cluster c is the line through e_c
    const ClusterModel lines = model_of({Matrix(e.col(0)), Matrix(e.col(1)), Matrix(e.col(2)), Matrix(e.col(3))},
                                        Matrix::Zero(4, 4));
    const Vector on2 = 2.0 * e.col(2);
    CHECK(assign_oos_multiview(std::vector<Vector>(5, on2), std::vector<ClusterModel>(5, lines)).label == 2);

    // view O: nearest c=1 at 0.1, view A: nearest c=3 at 0.05, others far
    Vector o = e.col(1) + 0.1 * e.col(0);
    Vector a = e.col(3) + 0.05 * e.col(2);
    Vector far = Vector::Constant(4, 1.0);
    const Assignment r = assign_oos_multiview(std::vector<Vector>{o, a, far, far, far},
                                              std::vector<ClusterModel>(5, lines));
    CHECK(r.label == 3);
    CHECK(r.view == 1);
    CHECK(r.distance == doctest::Approx(0.05));

    // equal distances: the earlier view wins
    const Vector b = e.col(0) + 0.05 * e.col(1);
    const Assignment tie = assign_oos_multiview(std::vector<Vector>{far, b, a}, std::vector<ClusterModel>(3, lines));
    CHECK(tie.view == 1);
    CHECK(tie.label == 0);

    CHECK_THROWS_AS(assign_oos_multiview(std::vector<Vector>{o, a}, std::vector<ClusterModel>(3, lines)), Error);
}

TEST_CASE("subspace affinity") {
    const Matrix u = orthonormal(6, 3, 11);
    CHECK(subspace_affinity(u, u) == doctest::Approx(1.0).epsilon(1e-12));
    const Matrix e = Matrix::Identity(6, 6);
    CHECK(std::abs(subspace_affinity(e.leftCols(2), e.rightCols(3))) <= 1e-12);

    Matrix u1(3, 2), u2(3, 2);
    u1 << 1, 0, 0, 1, 0, 0;
    const double r = 1.0 / std::sqrt(2.0);
    u2 << 1, 0, 0, r, 0, r;
    CHECK(std::abs(subspace_affinity(u1, u2) - std::sqrt(0.75)) <= 1e-12);
    CHECK(std::abs(subspace_affinity(u1, u2) - 0.866025) <= 1e-6);

    const Matrix v = orthonormal(6, 2, 12);
    CHECK(subspace_affinity(u, v) == doctest::Approx(subspace_affinity(v, u)).epsilon(1e-12));
    CHECK(subspace_affinity(u * orthonormal(3, 3, 13), v * orthonormal(2, 2, 14)) ==
          doctest::Approx(subspace_affinity(u, v)).epsilon(1e-12));

    CHECK_THROWS_AS(subspace_affinity(2.0 * u, v), Error);
}

TEST_CASE("average affinity") {
    const Matrix e = Matrix::Identity(6, 6);
    Matrix u1(3, 2), u2(3, 2);
    u1 << 1, 0, 0, 1, 0, 0;
    const double r = 1.0 / std::sqrt(2.0);
    u2 << 1, 0, 0, r, 0, r;
    CHECK(average_affinity(model_of({u1, u2}, Matrix::Zero(3, 2))) == doctest::Approx(subspace_affinity(u1, u2)));
    const Matrix u = e.leftCols(2);
    CHECK(average_affinity(model_of({u, u, u}, Matrix::Zero(6, 3))) == doctest::Approx(1.0));
    CHECK(std::abs(average_affinity(model_of({e.leftCols(2), e.middleCols(2, 2), e.rightCols(2)}, Matrix::Zero(6, 3)))) <=
          1e-12);
}

TEST_CASE("mean principal angle") {
    CHECK(mean_principal_angle(1.0).degrees == doctest::Approx(0.0));
    CHECK(mean_principal_angle(0.0).degrees == doctest::Approx(90.0));
    const double c49 = std::cos(49.0 * std::numbers::pi / 180.0);
    CHECK(std::abs(c49 - 0.65606) <= 1e-5);
    CHECK(std::abs(mean_principal_angle(c49).degrees - 49.0) <= 1e-9);
    const AngleResult clamped = mean_principal_angle(1.0 + 5e-10);
    CHECK(clamped.clamped);
    CHECK(clamped.degrees == 0.0);
    CHECK_FALSE(mean_principal_angle(0.5).clamped);
    CHECK_THROWS_AS(mean_principal_angle(1.0 + 1e-6), Error);
    CHECK_THROWS_AS(mean_principal_angle(-0.01), Error);
}
