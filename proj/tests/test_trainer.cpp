#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "umc/dataio/transform.hpp"
#include "umc/error.hpp"
#include "umc/trainer/trainer.hpp"

namespace fs = std::filesystem;
using namespace umc;
using namespace umc::trainer;

namespace {

dataio::MultiViewDataset tiny_data(std::uint64_t seed = 3) {
  dataio::SyntheticSpec spec;
  spec.num_clusters = 3;
  spec.num_views = 2;
  spec.dims = {4, 5};
  spec.samples_per_cluster = 10;
  spec.separation = 6.0;
  return dataio::synthesize(spec, seed);
}

TrainConfig tiny_config(int epochs = 8) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 8;
  c.hidden_dims = {8};
  c.latent_dim = 4;
  c.final_restarts = 2;
  c.seeds = Seeds::from(5);
  return c;
}

fs::path temp_path(const std::string& name) {
  return fs::temp_directory_path() / ("umc_trainer_" + std::to_string(::getpid()) + "_" + name);
}

void check_same_curve(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].epoch == b[i].epoch);
    CHECK(a[i].loss.total == b[i].loss.total);
    CHECK(a[i].loss.autoencoder == b[i].loss.autoencoder);
    CHECK(a[i].silhouettes == b[i].silhouettes);
  }
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("seeds and config validation") {
  CHECK(Seeds::from(1) == Seeds::from(1));
  CHECK(!(Seeds::from(1) == Seeds::from(2)));
  const Seeds s = Seeds::from(9);
  CHECK(s.init != s.shuffle);
  CHECK(s.shuffle != s.kmeans);
  TrainConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  c.epochs = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.batch_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = tiny_config();
  c.weights.temperature = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("reliability coefficient schedule") {
  const TrainConfig c;
  for (int t = 1; t <= 200; ++t) CHECK(c.reliability_coeff(t) == std::max(1.0, 1.5 * std::pow(0.99, t)));
  CHECK(c.reliability_coeff(1) == doctest::Approx(1.485));
  CHECK(c.reliability_coeff(200) == 1.0);
}

TEST_CASE("config hash tracks the trajectory inputs") {
  const auto d = tiny_data();
  const TrainConfig c = tiny_config();
  CHECK(config_hash(c, d) == config_hash(tiny_config(), d));
  TrainConfig c2 = c;
  c2.weights.lambda4 = 2;
  CHECK(config_hash(c2, d) != config_hash(c, d));
  c2 = c;
  c2.seeds = Seeds::from(6);
  CHECK(config_hash(c2, d) != config_hash(c, d));
  CHECK(hash_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("level state with one active level") {
  const auto d = tiny_data();
  std::vector<Matrix> z;
  for (const auto& v : d.views) z.push_back(v.features.leftCols(3));
  WarmStarts warm;
  const auto st = refresh_level_state(z, {2}, 3, 1, 1, warm);
  CHECK(st.levels == std::vector<int>{2});
  REQUIRE(st.views.size() == 2);
  CHECK(st.views[0].size() == 1);
  CHECK(st.common.size() == 1);
  CHECK(st.common[0].assignment.labels.size() == d.total_samples());
  CHECK(st.matchings[1][0].size() == 2);
  CHECK(st.silhouettes.size() == 2);
  CHECK(st.common_centroids.rows() == 3);
  CHECK(warm.count({2, 3}) == 1);  // Z* at K
  CHECK(warm.count({0, 2}) == 1);
  WarmStarts warm2;
  const auto again = refresh_level_state(z, {2}, 3, 1, 1, warm2);
  CHECK(again.common[0].assignment.labels == st.common[0].assignment.labels);
  CHECK(again.silhouettes == st.silhouettes);
}

TEST_CASE("active levels follow the quarter boundaries") {
  for (int epochs : {4, 8}) {
    const auto d = tiny_data();
    std::vector<int> got;
    RunControl rc;
    rc.on_epoch = [&](const EpochRecord& r) { got.push_back(r.active_levels); };
    const auto art = train(tiny_config(epochs), d, rc);
    std::vector<int> want;
    for (int t = 1; t <= epochs; ++t) want.push_back(4 * t <= epochs ? 1 : (2 * t <= epochs ? 2 : 2));
    // K = 3 gives levels {2, 3}, so the prefix saturates at 2.
    CHECK(got == want);
    CHECK(art.completed);
    for (const auto& r : art.curve) CHECK(r.reliability_coeff == std::max(1.0, 1.5 * std::pow(0.99, r.epoch)));
  }
}

TEST_CASE("training produces a report and is deterministic") {
  const auto d = tiny_data();
  const auto a = train(tiny_config(), d);
  const auto b = train(tiny_config(), d);
  CHECK(a.completed);
  CHECK(a.curve.size() == 8);
  CHECK(a.final_assignment.labels.size() == d.total_samples());
  CHECK(a.metrics.to_json() == b.metrics.to_json());
  check_same_curve(a.curve, b.curve);
  CHECK(a.metrics.scopes.size() == 3);
  for (const auto& r : a.curve) CHECK(std::isfinite(r.loss.total));
  const std::string csv = loss_curve_csv(a.curve, d);
  CHECK(csv.rfind("epoch,l_AE,l_in,l_co,l_cr,total,reliability_coeff,silhouette_view0,silhouette_view1\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  CHECK(format_epoch(a.curve[0]).rfind("epoch=1 total=", 0) == 0);
}

TEST_CASE("resume reproduces an uninterrupted run") {
  const auto d = tiny_data();
  const auto full = train(tiny_config(), d);
  const fs::path ck = temp_path("resume.ckpt");
  RunControl first;
  first.checkpoint_path = ck;
  first.stop_after_epoch = 3;
  const auto part = train(tiny_config(), d, first);
  CHECK(!part.completed);
  CHECK(part.curve.size() == 3);
  RunControl second;
  second.checkpoint_path = ck;
  second.resume_from = ck;
  const auto rest = train(tiny_config(), d, second);
  check_same_curve(rest.curve, full.curve);
  CHECK(rest.metrics.to_json() == full.metrics.to_json());
  for (std::size_t v = 0; v < full.latents.size(); ++v) CHECK(rest.latents[v] == full.latents[v]);
  const auto ev = evaluate(tiny_config(), d, ck);
  CHECK(ev.metrics.to_json() == full.metrics.to_json());

  TrainConfig other = tiny_config();
  other.weights.lambda2 = 0.5;
  RunControl bad;
  bad.resume_from = ck;
  CHECK_THROWS_AS(train(other, d, bad), CheckpointError);

  {
    std::fstream f(ck, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(fs::file_size(ck) / 2));
    f.put('\x5a');
    f.put('\xa5');
  }
  CHECK_THROWS_AS(train(tiny_config(), d, bad), CheckpointError);
  fs::remove(ck);
}

TEST_CASE("evaluate refuses an unfinished checkpoint") {
  const auto d = tiny_data();
  const fs::path ck = temp_path("partial.ckpt");
  RunControl rc;
  rc.checkpoint_path = ck;
  rc.stop_after_epoch = 2;
  (void)train(tiny_config(), d, rc);
  CHECK_THROWS_AS(evaluate(tiny_config(), d, ck), CheckpointError);
  fs::remove(ck);
}

TEST_CASE("with the guidance terms off, cluster state does not steer the weights") {
  const auto d = tiny_data();
  TrainConfig a = tiny_config();
  a.weights.lambda2 = a.weights.lambda3 = a.weights.lambda4 = 0.0;
  TrainConfig b = a;
  b.seeds.kmeans = a.seeds.kmeans + 1;
  const auto ra = train(a, d);
  const auto rb = train(b, d);
  REQUIRE(ra.curve.size() == rb.curve.size());
  for (std::size_t i = 0; i < ra.curve.size(); ++i) {
    CHECK(ra.curve[i].loss.autoencoder == rb.curve[i].loss.autoencoder);
    CHECK(ra.curve[i].loss.total == ra.curve[i].loss.autoencoder);
  }
  for (std::size_t v = 0; v < ra.latents.size(); ++v) CHECK(ra.latents[v] == rb.latents[v]);
}

TEST_CASE("non-finite values stop training with context") {
  auto d = tiny_data();
  d.views[0].features(0, 0) = 1e308;
  d.views[0].features(1, 0) = -1e308;
  try {
    (void)train(tiny_config(), d);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("epoch ") != std::string::npos);
  }
}

TEST_CASE("training rejects views smaller than K") {
  auto d = tiny_data();
  d.views[1].features.conservativeResize(2, Eigen::NoChange);
  d.views[1].ids.resize(2);
  d.views[1].labels.resize(2);
  CHECK_THROWS_AS(train(tiny_config(), d), DataError);
}

}
