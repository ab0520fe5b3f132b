#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <thread>
#include <vector>

#include "diagest/linop.hpp"
#include "diagest/matrix_market.hpp"
#include "diagest/probes.hpp"
#include "oracles.hpp"

using namespace diagest;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace {
Mat k3_adjacency() {
  Mat a = Mat::Ones(3, 3);
  a.diagonal().setZero();
  return a;
}
}  // namespace

TEST_CASE("identity and null-space applies") {
  DiagonalOperatorD id(Vec::Ones(3));
  Vec v(3);
  v << 1, 2, 3;
  CHECK(id.apply(v) == v);

  Mat ones = Mat::Ones(2, 2);
  DenseOperatorD op(ones);
  Vec w(2);
  w << 1, -1;
  CHECK(op.apply(w).norm() == 0.0);
}

TEST_CASE("power operator reproduces the dense cube column") {
  DenseOperatorD a(k3_adjacency());
  PowerOperatorD cube(a, 3);
  Vec e1 = Vec::Zero(3);
  e1[0] = 1;
  Vec col = cube.apply(e1);
  CHECK(col[0] == doctest::Approx(2));
  CHECK(col[1] == doctest::Approx(3));
  CHECK(col[2] == doctest::Approx(3));
  CHECK(cube.matvec_count() == 1);
  CHECK(a.matvec_count() == 3);
}

TEST_CASE("power operator columns match triple dense multiply up to n=50") {
  for (Index n : {5L, 20L, 50L}) {
    Mat m = oracle::random_dense(n, unsigned(n));
    DenseOperatorD op(m);
    PowerOperatorD cube(op, 3);
    Vec oracle_diag = oracle::dense_cube_diagonal(m);
    Mat cube_m = m * m * m;
    for (Index i = 0; i < n; i += std::max<Index>(1, n / 7)) {
      Vec e = Vec::Zero(n);
      e[i] = 1;
      Vec c = cube.apply(e);
      CHECK((c - cube_m.col(i)).norm() <= 1e-12 * (1.0 + cube_m.col(i).norm()));
    }
    CHECK(std::abs(cube_m(0, 0) - oracle_diag[0]) < 1e-12);
  }
}

TEST_CASE("dense apply agrees entrywise with the dense product") {
  Mat m = oracle::random_dense(23, 99);
  DenseOperatorD op(m);
  ProbeStreamD s(4, ProbeDistribution::gaussian, 23);
  for (int t = 0; t < 5; ++t) {
    Vec v = s.next();
    Vec ref = m * v;
    Vec got = op.apply(v);
    for (Index i = 0; i < 23; ++i)
      CHECK(std::abs(got[i] - ref[i]) <= 1e-12 * (1.0 + std::abs(ref[i])));
  }
}

TEST_CASE("apply is linear to floating-point tolerance") {
  Mat m = oracle::random_dense(16, 3);
  DenseOperatorD op(m);
  ProbeStreamD s(8, ProbeDistribution::gaussian, 16);
  Vec u = s.next(), v = s.next();
  const double al = 0.7, be = -1.3;
  Vec lhs = op.apply(al * u + be * v);
  Vec rhs = al * op.apply(u) + be * op.apply(v);
  CHECK((lhs - rhs).norm() <= 1e-10 * (u.norm() + v.norm()) * m.norm());
}

TEST_CASE("deflected apply") {
  const Index n = 6;
  Mat m = oracle::random_dense(n, 17);
  DenseOperatorD op(m);
  OrthonormalBasisD basis(n);

  SUBCASE("empty basis is a plain apply") {
    Vec v = Vec::LinSpaced(n, 1, 6);
    CHECK(deflected_apply(op, basis, v) == op.apply(v));
  }

  SUBCASE("vector in span(Q) maps to ~zero") {
    Vec e1 = Vec::Zero(n);
    e1[0] = 1;
    basis.append_column(e1, op.apply(e1));
    CHECK(deflected_apply(op, basis, e1).norm() <= 1e-10 * m.norm());
  }

  SUBCASE("random k=2 deflation matches the dense oracle") {
    ProbeStreamD s(21, ProbeDistribution::gaussian, n);
    for (int j = 0; j < 2; ++j) {
      Vec q;
      REQUIRE(basis.orthonormalize(s.next(), q));
      basis.append_column(q, op.apply(q));
    }
    Mat qq = basis.q();
    Mat proj = Mat::Identity(n, n) - qq * qq.transpose();
    Vec v = s.next();
    Vec ref = m * (proj * v);
    Vec got = deflected_apply(op, basis, v);
    CHECK((got - ref).norm() <= 1e-12 * (1.0 + ref.norm()));
  }
}

TEST_CASE("DeflatedOperator counts its own applies and the base's") {
  const Index n = 8;
  Mat m = oracle::random_dense(n, 5);
  DenseOperatorD op(m);
  OrthonormalBasisD basis(n);
  DeflatedOperatorD defl(op, basis);
  ProbeStreamD s(2, ProbeDistribution::gaussian, n);
  defl.apply(s.next());
  defl.apply(s.next());
  CHECK(defl.matvec_count() == 2);
  CHECK(op.matvec_count() == 2);
}

TEST_CASE("matvec counting increments by exactly one per apply") {
  DenseOperatorD op(Mat::Identity(4, 4));
  Vec v = Vec::Ones(4);
  CHECK(op.matvec_count() == 0);
  op.apply(v);
  CHECK(op.matvec_count() == 1);
  op.apply(v);
  op.apply(v);
  CHECK(op.matvec_count() == 3);
  op.reset_matvec_count();
  CHECK(op.matvec_count() == 0);
}

TEST_CASE("concurrent applies keep an exact tally") {
  DenseOperatorD op(Mat::Identity(32, 32));
  const int workers = 4, per_worker = 250;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&op] {
      Vec v = Vec::Ones(32);
      for (int i = 0; i < per_worker; ++i) op.apply(v);
    });
  for (auto& t : pool) t.join();
  CHECK(op.matvec_count() == workers * per_worker);
}

TEST_CASE("errors: dimension mismatch, non-finite input, non-finite output") {
  DenseOperatorD op(Mat::Identity(3, 3));
  Vec bad(2);
  bad << 1, 2;
  CHECK_THROWS_AS(op.apply(bad), invalid_input);
  Vec nan3 = Vec::Constant(3, std::nan(""));
  CHECK_THROWS_AS(op.apply(nan3), invalid_input);

  Mat infecting = Mat::Identity(2, 2) * 1e308;
  DenseOperatorD big(infecting, "huge");
  Vec v2 = Vec::Constant(2, 10.0);
  CHECK_THROWS_WITH_AS(big.apply(v2), doctest::Contains("huge"), numerical_error);

  Mat with_nan = Mat::Identity(2, 2);
  with_nan(0, 1) = std::nan("");
  CHECK_THROWS_AS(DenseOperatorD{with_nan}, invalid_input);
}

TEST_CASE("transpose applies and symmetry detection") {
  Mat m = oracle::random_dense(7, 31);
  DenseOperatorD op(m);
  CHECK(!op.is_symmetric());
  CHECK(op.has_transpose());
  Vec v = Vec::LinSpaced(7, -1, 1);
  CHECK((op.apply_transpose(v) - m.transpose() * v).norm() == 0.0);
  CHECK(op.matvec_count() == 1);  // transpose applies are counted

  DenseOperatorD sym(oracle::random_symmetric(7, 2));
  CHECK(sym.is_symmetric());
}

TEST_CASE("sparse operator matches dense on the same matrix") {
  Mat m = k3_adjacency();
  std::vector<Eigen::Triplet<double>> trip;
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 3; ++j)
      if (m(i, j) != 0) trip.emplace_back(i, j, m(i, j));
  Eigen::SparseMatrix<double, Eigen::RowMajor> sp(3, 3);
  sp.setFromTriplets(trip.begin(), trip.end());
  SparseOperatorD op(sp, true);
  CHECK(op.is_symmetric());
  CHECK(op.stored_entries() == 6);
  Vec v(3);
  v << 1, -2, 0.5;
  CHECK((op.apply(v) - m * v).norm() == 0.0);
  CHECK(op.frobenius_norm_sq() == doctest::Approx(6.0));
}

TEST_CASE("matrix market round trips") {
  const std::string dpath = "mm_dense_test.mtx";
  const std::string spath = "mm_sparse_test.mtx";

  Mat d = oracle::random_dense(5, 77);
  write_matrix_market(dpath, d);
  auto rd = read_matrix_market<double>(dpath);
  REQUIRE(std::holds_alternative<Mat>(rd));
  CHECK((std::get<Mat>(rd) - d).norm() == 0.0);

  Eigen::SparseMatrix<double, Eigen::RowMajor> sp(4, 4);
  std::vector<Eigen::Triplet<double>> trip{
      {0, 1, 2.5}, {1, 0, 2.5}, {2, 3, -1}, {3, 2, -1}, {3, 3, 7}};
  sp.setFromTriplets(trip.begin(), trip.end());
  write_matrix_market(spath, sp);
  auto rs = read_matrix_market<double>(spath);
  REQUIRE(std::holds_alternative<Eigen::SparseMatrix<double, Eigen::RowMajor>>(rs));
  Mat back = Mat(std::get<Eigen::SparseMatrix<double, Eigen::RowMajor>>(rs));
  CHECK((back - Mat(sp)).norm() == 0.0);

  // symmetric coordinate output stores the lower triangle only
  write_matrix_market(spath, sp, /*symmetric=*/true);
  auto rsym = read_matrix_market<double>(spath);
  Mat back2 = Mat(std::get<Eigen::SparseMatrix<double, Eigen::RowMajor>>(rsym));
  CHECK((back2 - Mat(sp)).norm() == 0.0);

  std::remove(dpath.c_str());
  std::remove(spath.c_str());
}

TEST_CASE("matrix market rejects garbage") {
  const std::string path = "mm_bad_test.mtx";
  {
    std::ofstream out(path);
    out << "not a matrix market file\n";
  }
  CHECK_THROWS_AS(read_matrix_market<double>(path), invalid_input);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_matrix_market<double>("does_not_exist.mtx"), invalid_input);
}
