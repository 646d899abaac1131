#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"
#include "umc/seed.hpp"

using namespace umc::clusterkit;
using testing::random_matrix;

TEST_SUITE("clusterkit") {

TEST_CASE("cosine examples and conventions") {
  const std::vector<double> a{1, 0}, b{0, 1}, c{2, 2}, d{1, 1}, e{1, 2}, f{2, 1}, z{0, 0};
  CHECK(cosine(a, b) == 0.0);
  CHECK(cosine(c, d) == doctest::Approx(1.0));
  CHECK(cosine(e, f) == doctest::Approx(0.8));
  CHECK(cosine(z, a) == 0.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const Matrix m = random_matrix(rng, 2, 5);
    std::vector<double> u(m.row(0).begin(), m.row(0).end()), v(m.row(1).begin(), m.row(1).end());
    std::vector<double> su(u), sv(v);
    for (auto& x : su) x *= 3.5;
    for (auto& x : sv) x *= 0.01;
    CHECK(cosine(u, v) == doctest::Approx(cosine(v, u)).epsilon(1e-15));
    CHECK(cosine(su, sv) == doctest::Approx(cosine(u, v)).epsilon(1e-12));
    CHECK(std::abs(cosine(u, v)) <= 1.0);
  }
}

TEST_CASE("kmeans with k = rows has zero inertia") {
  std::mt19937_64 rng(2);
  const Matrix z = random_matrix(rng, 6, 3);
  const auto r = kmeans(z, 6, 1);
  CHECK(r.assignment.inertia == 0.0);
  std::vector<int> l = r.assignment.labels;
  std::sort(l.begin(), l.end());
  CHECK(l == std::vector<int>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS_AS(kmeans(z, 7, 1), umc::DataError);
}

TEST_CASE("kmeans on two separated pairs matches the 2-partition oracle") {
  Matrix z(4, 2);
  z << 0, 0, 0.1, 0, 10, 10, 10, 10.2;
  const auto r = kmeans(z, 2, 5);
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels;
  for (int mask = 1; mask < 15; ++mask) {
    std::vector<int> lab(4);
    for (int i = 0; i < 4; ++i) lab[static_cast<std::size_t>(i)] = (mask >> i) & 1;
    double inertia = 0.0;
    for (int c = 0; c < 2; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
      int n = 0;
      for (int i = 0; i < 4; ++i)
        if (lab[static_cast<std::size_t>(i)] == c) mean += z.row(i), ++n;
      mean /= n;
      for (int i = 0; i < 4; ++i)
        if (lab[static_cast<std::size_t>(i)] == c) inertia += (z.row(i) - mean).squaredNorm();
    }
    if (inertia < best) best = inertia, best_labels = lab;
  }
  CHECK(r.assignment.inertia == doctest::Approx(best));
  CHECK(r.assignment.labels[0] == r.assignment.labels[1]);
  CHECK(r.assignment.labels[2] == r.assignment.labels[3]);
  CHECK(r.assignment.labels[0] != r.assignment.labels[2]);
}

TEST_CASE("kmeans inertia never increases and is seed deterministic") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(s);
    const Matrix z = random_matrix(rng, 60, 4);
    const auto r = kmeans(z, 5, s);
    for (std::size_t i = 1; i < r.inertia_trace.size(); ++i) {
      CHECK(r.inertia_trace[i] <= r.inertia_trace[i - 1] * (1 + 1e-12));
    }
    const auto again = kmeans(z, 5, s);
    CHECK(again.assignment.labels == r.assignment.labels);
    CHECK(again.centroids == r.centroids);
    for (int l : r.assignment.labels) CHECK((l >= 0 && l < 5));
  }
}

TEST_CASE("kmeans repairs empty clusters") {
  Matrix z(5, 1);
  z << 0, 0, 0, 0, 1;
  Matrix init(3, 1);
  init << 0, 100, 200;
  const auto r = kmeans_from(z, init);
  std::vector<int> counts(3, 0);
  for (int l : r.assignment.labels) counts[static_cast<std::size_t>(l)]++;
  for (int c : counts) CHECK(c > 0);
}

TEST_CASE("best of restarts never loses to its first restart") {
  std::mt19937_64 rng(4);
  const Matrix z = random_matrix(rng, 80, 3);
  const auto best = kmeans_best_of(z, 6, 9, 5);
  CHECK(best.assignment.inertia <= kmeans(z, 6, umc::derive_seed(9, {0})).assignment.inertia);
}

TEST_CASE("silhouette examples") {
  Matrix z(6, 2);
  z << 0, 0, 0.01, 0, 0, 0.01, 100, 100, 100.01, 100, 100, 100.01;
  const Assignment two{{0, 0, 0, 1, 1, 1}, 2, 0.0};
  CHECK(silhouette_view(z, two) >= 0.99);
  const Matrix same = Matrix::Ones(4, 3);
  CHECK(silhouette_view(same, Assignment{{0, 0, 1, 1}, 2, 0.0}) == 0.0);
  CHECK_THROWS_AS(silhouette_view(z, Assignment{{0, 0, 0, 0, 0, 0}, 1, 0.0}), umc::DataError);
}

TEST_CASE("silhouette matches the direct formula on a random 12-point instance") {
  std::mt19937_64 rng(12);
  const Matrix z = random_matrix(rng, 12, 3);
  const auto labels = testing::random_labels(rng, 12, 3);
  const double got = silhouette_view(z, Assignment{labels, 3, 0.0});
  CHECK(std::abs(got - oracle::silhouette(z, labels)) <= 1e-12);
  CHECK(got >= -1.0);
  CHECK(got <= 1.0);
}

TEST_CASE("hungarian examples") {
  Matrix d(3, 3);
  d << 5, 1, 1, 1, 5, 1, 1, 1, 5;
  CHECK(hungarian_max(d).row_to_col == std::vector<int>{0, 1, 2});
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const auto m = hungarian_max(a);
  CHECK(m.row_to_col == std::vector<int>{1, 0});
  CHECK(m.total(a) == 2.0);
  Matrix h(2, 2);
  h << 0.9, 0.1, 0.2, 0.8;
  CHECK(hungarian_max(h).row_to_col == std::vector<int>{0, 1});
  CHECK(hungarian_max(h).total(h) == doctest::Approx(1.7));
  CHECK_THROWS_AS(hungarian_max(Matrix::Zero(2, 3)), umc::ShapeError);
}

TEST_CASE("hungarian breaks ties lexicographically") {
  CHECK(hungarian_max(Matrix::Ones(4, 4)).row_to_col == std::vector<int>{0, 1, 2, 3});
  Matrix w(3, 3);
  w << 1, 1, 0, 1, 1, 0, 0, 0, 1;
  CHECK(hungarian_max(w).row_to_col == std::vector<int>{0, 1, 2});
}

TEST_CASE("hungarian matches exhaustive search on random 6x6") {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 50; ++t) {
    const Matrix w = random_matrix(rng, 6, 6);
    const auto m = hungarian_max(w);
    CHECK(m.total(w) == oracle::best_permutation(w));
    const Matrix a = m.dense();
    CHECK((a * a.transpose()).isIdentity(0.0));
    CHECK((a.rowwise().sum().array() == 1.0).all());
    CHECK((a.colwise().sum().array() == 1.0).all());
  }
}

TEST_CASE("hungarian beats random permutations for large k") {
  std::mt19937_64 rng(50);
  const Matrix w = random_matrix(rng, 50, 50);
  const auto m = hungarian_max(w);
  const double best = m.total(w);
  std::vector<int> p(50);
  std::iota(p.begin(), p.end(), 0);
  for (int t = 0; t < 10000; ++t) {
    std::shuffle(p.begin(), p.end(), rng);
    double s = 0.0;
    for (int i = 0; i < 50; ++i) s += w(i, p[static_cast<std::size_t>(i)]);
    CHECK(best >= s);
  }
}

TEST_CASE("cosine matrix is row pairwise") {
  std::mt19937_64 rng(8);
  const Matrix a = random_matrix(rng, 3, 4), b = random_matrix(rng, 5, 4);
  const Matrix c = cosine_matrix(a, b);
  CHECK(c.rows() == 3);
  CHECK(c.cols() == 5);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 5; ++j)
      CHECK(c(i, j) == doctest::Approx(a.row(i).dot(b.row(j)) / a.row(i).norm() / b.row(j).norm()));
}

}  // TEST_SUITE
