#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include <sstream>
#include "umc/error.hpp"
#include "umc/evalkit/evalkit.hpp"

using namespace umc::evalkit;
using testing::random_labels;

TEST_SUITE("evalkit") {

TEST_CASE("metric examples") {
  const std::vector<int> t{0, 1, 2, 0, 1, 2};
  const std::vector<int> relabeled{2, 0, 1, 2, 0, 1};
  CHECK(nmi(t, t) == doctest::Approx(1.0));
  CHECK(nmi(relabeled, t) == doctest::Approx(1.0));
  CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0));
  CHECK(nmi({0, 0, 0}, {5, 5, 5}) == 1.0);
  CHECK(nmi({0, 0, 0, 0}, {0, 0, 1, 1}) == 0.0);
  CHECK(acc(t, t) == 1.0);
  CHECK(acc(relabeled, t) == 1.0);
  CHECK(acc({0, 0, 0, 1}, {0, 0, 1, 1}) == doctest::Approx(0.75));
  CHECK(pairwise_f1(t, t) == 1.0);
  CHECK(pairwise_f1({0, 1, 2, 3}, {0, 0, 1, 1}) == 0.0);
  CHECK(pairwise_f1({0, 0, 1, 1}, {0, 0, 0, 1}) == doctest::Approx(0.4));
  CHECK_THROWS_AS(nmi({0, 1}, {0}), umc::DataError);
  CHECK_THROWS_AS(acc({0, 1}, {0}), umc::DataError);
  CHECK_THROWS_AS(pairwise_f1({0, 1}, {0}), umc::DataError);
}

TEST_CASE("metrics match brute-force oracles and are relabeling invariant") {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng() % 29;
    const int kp = 1 + static_cast<int>(rng() % 5), kt = 1 + static_cast<int>(rng() % 5);
    const auto p = random_labels(rng, n, kp);
    const auto q = random_labels(rng, n, kt);
    CHECK(std::abs(nmi(p, q) - oracle::nmi(p, q)) <= 1e-10 * std::max(1.0, oracle::nmi(p, q)));
    CHECK(std::abs(acc(p, q) - oracle::acc(p, q)) <= 1e-10);
    CHECK(std::abs(pairwise_f1(p, q) - oracle::pairwise_f1(p, q)) <= 1e-10);
    std::vector<int> perm{4, 2, 0, 3, 1};
    std::vector<int> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = perm[static_cast<std::size_t>(p[i])];
    CHECK(nmi(r, q) == doctest::Approx(nmi(p, q)).epsilon(1e-12));
    CHECK(acc(r, q) == acc(p, q));
    CHECK(pairwise_f1(r, q) == pairwise_f1(p, q));
    CHECK(acc(p, q) >= 1.0 / std::max(kp, kt) - 1e-12);
  }
}

namespace {

umc::dataio::MultiViewDataset toy() {
  umc::dataio::MultiViewDataset d;
  d.name = "toy";
  d.num_clusters = 2;
  std::int64_t id = 0;
  for (int v = 0; v < 2; ++v) {
    umc::dataio::View view;
    view.id = v;
    view.features = Matrix::Zero(6, 1);
    for (int i = 0; i < 6; ++i) {
      view.ids.push_back(id++);
      view.labels.push_back(i % 2);
    }
    d.views.push_back(view);
  }
  return d;
}

}  // namespace

TEST_CASE("report on exact latent clusters scores 100 everywhere") {
  const auto d = toy();
  std::vector<Matrix> latents;
  std::vector<int> all;
  for (const auto& v : d.views) {
    Matrix z(6, 2);
    for (int i = 0; i < 6; ++i) z.row(i) << (v.labels[static_cast<std::size_t>(i)] ? 5.0 : -5.0), 1.0;
    latents.push_back(z);
    for (int l : v.labels) all.push_back(1 - l);
  }
  const auto r = report(latents, all, d, ReportOptions{});
  CHECK(r.scopes.size() == 3);
  for (const auto& s : r.scopes) {
    CHECK(s.nmi >= 99.0);
    CHECK(s.acc == 100.0);
    CHECK(s.f1 == 100.0);
  }
  CHECK(r.scope("all").samples == 12);
  const auto back = MetricsReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());
  CHECK(r.to_csv().rfind("scope,samples,nmi,acc,f1\n", 0) == 0);
}

TEST_CASE("embedding export rows, columns and exact floats") {
  const auto d = toy();
  std::mt19937_64 rng(3);
  std::vector<Matrix> latents{testing::random_matrix(rng, 6, 3), testing::random_matrix(rng, 6, 3)};
  std::vector<int> pred(12, 1);
  const auto path = std::filesystem::temp_directory_path() / "umc_embed_test.csv";
  export_embeddings(path, d, latents, pred);
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    CHECK(cells.size() == 4 + 3);
    const std::size_t v = rows / 6, i = rows % 6;
    for (int c = 0; c < 3; ++c) CHECK(std::stod(cells[4 + static_cast<std::size_t>(c)]) == latents[v](static_cast<umc::diffnet::Index>(i), c));
    ++rows;
  }
  CHECK(rows == 12);
  std::filesystem::remove(path);
}

}  // TEST_SUITE
