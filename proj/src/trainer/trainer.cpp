#include "umc/trainer/trainer.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "umc/dataio/batching.hpp"
#include "umc/diffnet/checkpoint.hpp"
#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::trainer {

namespace {

constexpr std::uint64_t kFinalStream = 0x66696e616c;  // "final"
constexpr std::uint64_t kReportStream = 0x7265706f7274;

std::string num(double x) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

Matrix rows_of(const Matrix& x, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = x.row(static_cast<Index>(idx[i]));
  return out;
}

Matrix stack(const std::vector<Matrix>& parts) {
  Index rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, parts.front().cols());
  Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

Matrix labels_to_matrix(const std::vector<int>& labels) {
  Matrix m(static_cast<Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Index>(i), 0) = labels[i];
  return m;
}

std::vector<int> matrix_to_labels(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = static_cast<int>(m(i, 0));
  return out;
}

// ---- checkpoint helpers

void store_clustering(diffnet::Archive& ar, const std::string& key, const Clustering& c) {
  ar.put(key + "/labels", labels_to_matrix(c.assignment.labels));
  ar.put(key + "/centroids", c.centroids);
  ar.put_int(key + "/k", c.assignment.k);
  Matrix inertia(1, 1);
  inertia(0, 0) = c.assignment.inertia;
  ar.put(key + "/inertia", inertia);
}

Clustering restore_clustering(const diffnet::Archive& ar, const std::string& key) {
  Clustering c;
  c.assignment.labels = matrix_to_labels(ar.matrix(key + "/labels"));
  c.assignment.k = static_cast<int>(ar.integer(key + "/k"));
  c.assignment.inertia = ar.matrix(key + "/inertia")(0, 0);
  c.centroids = ar.matrix(key + "/centroids");
  return c;
}

void store_state(diffnet::Archive& ar, const LevelState& s) {
  ar.put("state/levels", labels_to_matrix(s.levels));
  ar.put_int("state/views", static_cast<std::int64_t>(s.views.size()));
  for (std::size_t v = 0; v < s.views.size(); ++v) {
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
      const std::string key = "state/" + std::to_string(v) + "/" + std::to_string(l);
      store_clustering(ar, key, s.views[v][l]);
      ar.put(key + "/match", labels_to_matrix(s.matchings[v][l].row_to_col));
    }
  }
  for (std::size_t l = 0; l < s.levels.size(); ++l) store_clustering(ar, "state/common/" + std::to_string(l), s.common[l]);
  Matrix sils(1, static_cast<Index>(s.silhouettes.size()));
  for (std::size_t v = 0; v < s.silhouettes.size(); ++v) sils(0, static_cast<Index>(v)) = s.silhouettes[v];
  ar.put("state/silhouettes", sils);
  ar.put("state/common_centroids", s.common_centroids);
}

LevelState restore_state(const diffnet::Archive& ar) {
  LevelState s;
  s.levels = matrix_to_labels(ar.matrix("state/levels"));
  const auto V = static_cast<std::size_t>(ar.integer("state/views"));
  s.views.resize(V);
  s.matchings.resize(V);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t l = 0; l < s.levels.size(); ++l) {
      const std::string key = "state/" + std::to_string(v) + "/" + std::to_string(l);
      s.views[v].push_back(restore_clustering(ar, key));
      s.matchings[v].push_back({matrix_to_labels(ar.matrix(key + "/match"))});
    }
  }
  for (std::size_t l = 0; l < s.levels.size(); ++l) s.common.push_back(restore_clustering(ar, "state/common/" + std::to_string(l)));
  const Matrix& sils = ar.matrix("state/silhouettes");
  for (Index v = 0; v < sils.cols(); ++v) s.silhouettes.push_back(sils(0, v));
  s.common_centroids = ar.matrix("state/common_centroids");
  return s;
}

constexpr Index kCurveFixed = 8;  // epoch, levels, five loss values, coeff

Matrix curve_to_matrix(const std::vector<EpochRecord>& curve, std::size_t views) {
  Matrix m(static_cast<Index>(curve.size()), kCurveFixed + static_cast<Index>(views));
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& r = curve[i];
    const auto row = static_cast<Index>(i);
    m(row, 0) = r.epoch;
    m(row, 1) = r.active_levels;
    m(row, 2) = r.loss.autoencoder;
    m(row, 3) = r.loss.inner;
    m(row, 4) = r.loss.common;
    m(row, 5) = r.loss.cross;
    m(row, 6) = r.loss.total;
    m(row, 7) = r.reliability_coeff;
    for (std::size_t v = 0; v < views; ++v) m(row, kCurveFixed + static_cast<Index>(v)) = r.silhouettes[v];
  }
  return m;
}

std::vector<EpochRecord> matrix_to_curve(const Matrix& m) {
  std::vector<EpochRecord> curve;
  for (Index row = 0; row < m.rows(); ++row) {
    EpochRecord r;
    r.epoch = static_cast<int>(m(row, 0));
    r.active_levels = static_cast<int>(m(row, 1));
    r.loss = {m(row, 2), m(row, 3), m(row, 4), m(row, 5), m(row, 6)};
    r.reliability_coeff = m(row, 7);
    for (Index c = kCurveFixed; c < m.cols(); ++c) r.silhouettes.push_back(m(row, c));
    curve.push_back(std::move(r));
  }
  return curve;
}

void save_checkpoint(const std::filesystem::path& path, std::uint64_t hash, int epoch,
                     const diffnet::AutoencoderBundle& bundle, const diffnet::OptimizerState& opt,
                     const WarmStarts& warm, const LevelState* state, const std::vector<EpochRecord>& curve,
                     std::size_t views) {
  diffnet::Archive ar;
  ar.config_hash = hash;
  ar.put_int("train/epoch", epoch);
  diffnet::store(ar, bundle);
  diffnet::store(ar, opt);
  ar.put_int("warm/count", static_cast<std::int64_t>(warm.size()));
  std::size_t i = 0;
  for (const auto& [key, c] : warm) {
    const std::string base = "warm/" + std::to_string(i++);
    ar.put_int(base + "/view", key.first);
    ar.put_int(base + "/k", key.second);
    ar.put(base + "/centroids", c);
  }
  ar.put_int("state/present", state ? 1 : 0);
  if (state) store_state(ar, *state);
  ar.put("train/curve", curve_to_matrix(curve, views));
  ar.save(path);
}

}  // namespace

Seeds Seeds::from(std::uint64_t base) {
  return {derive_seed(base, {1}), derive_seed(base, {2}), derive_seed(base, {3})};
}

void TrainConfig::validate() const {
  if (epochs < 4) throw ConfigError("epochs must be at least 4, got " + std::to_string(epochs));
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  weights.validate();
  if (!(reliability_start > 0.0) || !(reliability_decay > 0.0) || !(reliability_floor > 0.0)) {
    throw ConfigError("reliability coefficient settings must be positive");
  }
  if (latent_dim < 1) throw ConfigError("latent_dim must be positive");
  for (Index h : hidden_dims) {
    if (h < 1) throw ConfigError("hidden layer widths must be positive");
  }
  if (refresh_every < 1) throw ConfigError("refresh_every must be at least 1");
  if (final_restarts < 1) throw ConfigError("final_restarts must be at least 1");
  if (kmeans.max_iter < 1 || !(kmeans.tol >= 0.0)) throw ConfigError("invalid K-means options");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(norm.eps > 0.0) || norm.momentum < 0.0 || norm.momentum >= 1.0) throw ConfigError("invalid batch-norm settings");
}

std::vector<diffnet::MlpSpec> TrainConfig::encoder_specs(const dataio::MultiViewDataset& data) const {
  std::vector<diffnet::MlpSpec> specs;
  for (const auto& v : data.views) specs.push_back({v.features.cols(), hidden_dims, latent_dim, batchnorm});
  return specs;
}

double TrainConfig::reliability_coeff(int epoch) const {
  return std::max(reliability_floor, reliability_start * std::pow(reliability_decay, epoch));
}

std::uint64_t config_hash(const TrainConfig& c, const dataio::MultiViewDataset& data) {
  std::ostringstream s;
  s << "epochs=" << c.epochs << ";batch=" << c.batch_size << ";l1=" << num(c.weights.lambda1)
    << ";l2=" << num(c.weights.lambda2) << ";l3=" << num(c.weights.lambda3) << ";l4=" << num(c.weights.lambda4)
    << ";temp=" << num(c.weights.temperature) << ";rel=" << num(c.reliability_start) << ','
    << num(c.reliability_decay) << ',' << num(c.reliability_floor) << ";seeds=" << c.seeds.init << ','
    << c.seeds.shuffle << ',' << c.seeds.kmeans << ";hidden=";
  for (Index h : c.hidden_dims) s << h << ',';
  s << ";latent=" << c.latent_dim << ";bn=" << c.batchnorm << ";norm=" << num(c.norm.eps) << ','
    << num(c.norm.momentum) << ";adam=" << num(c.adam.learning_rate) << ',' << num(c.adam.beta1) << ','
    << num(c.adam.beta2) << ',' << num(c.adam.eps) << ";refresh=" << c.refresh_every << ";kmeans="
    << c.kmeans.max_iter << ',' << num(c.kmeans.tol) << ";restarts=" << c.final_restarts << ";K="
    << data.num_clusters << ";views=";
  for (const auto& v : data.views) s << v.id << ':' << v.features.cols() << ':' << v.features.rows() << ',';
  return fnv1a64(s.str());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Matrix> encode_all(diffnet::AutoencoderBundle& bundle, const dataio::MultiViewDataset& data) {
  std::vector<Matrix> out;
  for (std::size_t v = 0; v < data.views.size(); ++v) {
    out.push_back(diffnet::encode(bundle, v, data.views[v].features, diffnet::Mode::Eval));
  }
  return out;
}

LevelState refresh_level_state(const std::vector<Matrix>& latents, const std::vector<int>& active, int num_clusters,
                               std::uint64_t seed, int epoch, WarmStarts& warm,
                               const clusterkit::KMeansOptions& opts) {
  if (latents.empty()) throw DataError("refresh_level_state: no views");
  if (active.empty()) throw DataError("refresh_level_state: no active level");
  const int V = static_cast<int>(latents.size());
  for (int v = 0; v < V; ++v) {
    if (latents[static_cast<std::size_t>(v)].rows() < num_clusters) {
      throw DataError("view " + std::to_string(v) + " has fewer samples than K=" + std::to_string(num_clusters));
    }
  }
  auto cluster = [&](int view, const Matrix& z, int k) {
    const auto key = std::make_pair(view, k);
    auto it = warm.find(key);
    clusterkit::KMeansResult r =
        it != warm.end() && it->second.rows() == k && it->second.cols() == z.cols()
            ? clusterkit::kmeans_from(z, it->second, opts)
            : clusterkit::kmeans(z, k, derive_seed(seed, {static_cast<std::uint64_t>(epoch),
                                                          static_cast<std::uint64_t>(view),
                                                          static_cast<std::uint64_t>(k)}),
                                 opts);
    warm[key] = r.centroids;
    return Clustering{std::move(r.assignment), std::move(r.centroids)};
  };

  LevelState s;
  s.levels = active;
  const bool k_active = active.back() == num_clusters;
  const Matrix zstar = stack(latents);
  for (int k : active) s.common.push_back(cluster(V, zstar, k));
  s.common_centroids = k_active ? s.common.back().centroids : cluster(V, zstar, num_clusters).centroids;

  s.views.resize(static_cast<std::size_t>(V));
  s.matchings.resize(static_cast<std::size_t>(V));
  for (int v = 0; v < V; ++v) {
    const Matrix& z = latents[static_cast<std::size_t>(v)];
    auto& levels = s.views[static_cast<std::size_t>(v)];
    for (std::size_t l = 0; l < active.size(); ++l) {
      levels.push_back(cluster(v, z, active[l]));
      s.matchings[static_cast<std::size_t>(v)].push_back(losses::match_common(s.common[l].centroids, levels.back().centroids));
    }
    const clusterkit::Assignment finest = k_active ? levels.back().assignment : cluster(v, z, num_clusters).assignment;
    s.silhouettes.push_back(clusterkit::silhouette_view(z, finest));
  }
  return s;
}

RunArtifacts train(const TrainConfig& cfg, const dataio::MultiViewDataset& data, const RunControl& control) {
  cfg.validate();
  data.validate();
  const int K = data.num_clusters;
  const std::size_t V = data.view_count();
  if (V < 1) throw DataError("dataset has no views");
  for (const auto& view : data.views) {
    if (view.features.rows() < K) {
      throw DataError("view " + std::to_string(view.id) + " has fewer samples than K=" + std::to_string(K));
    }
  }
  const std::uint64_t hash = config_hash(cfg, data);
  const losses::ClusterSet cs = losses::ClusterSet::standard(K);

  diffnet::AutoencoderBundle bundle(cfg.encoder_specs(data), cfg.norm, cfg.seeds.init);
  diffnet::OptimizerState opt(cfg.adam, bundle);
  WarmStarts warm;
  std::optional<LevelState> state;
  RunArtifacts art;
  int start = 1;

  if (control.resume_from) {
    const auto ar = diffnet::Archive::load(*control.resume_from, hash);
    diffnet::restore(ar, bundle);
    diffnet::restore(ar, opt);
    for (std::int64_t i = 0; i < ar.integer("warm/count"); ++i) {
      const std::string base = "warm/" + std::to_string(i);
      warm[{static_cast<int>(ar.integer(base + "/view")), static_cast<int>(ar.integer(base + "/k"))}] =
          ar.matrix(base + "/centroids");
    }
    if (ar.integer("state/present") != 0) state = restore_state(ar);
    art.curve = matrix_to_curve(ar.matrix("train/curve"));
    start = static_cast<int>(ar.integer("train/epoch")) + 1;
  }

  std::vector<std::size_t> sizes;
  std::vector<std::size_t> full_offset{0};
  for (const auto& view : data.views) {
    sizes.push_back(static_cast<std::size_t>(view.features.rows()));
    full_offset.push_back(full_offset.back() + sizes.back());
  }
  const dataio::BatchPlan plan{cfg.batch_size, cfg.seeds.shuffle};
  auto checkpoint = [&](int epoch) {
    if (!control.checkpoint_path) return;
    save_checkpoint(*control.checkpoint_path, hash, epoch, bundle, opt, warm, state ? &*state : nullptr, art.curve, V);
    art.checkpoint_path = control.checkpoint_path;
  };

  for (int t = start; t <= cfg.epochs; ++t) {
    const auto active = cs.active(losses::ClusterSet::active_prefix(t, cfg.epochs));
    const bool refresh = !state || state->levels != active || (t - 1) % cfg.refresh_every == 0;
    if (refresh) {
      try {
        state = refresh_level_state(encode_all(bundle, data), active, K, cfg.seeds.kmeans, t, warm, cfg.kmeans);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(t) + " refresh: " + e.what());
      }
    }
    const LevelState& ls = *state;
    const double coeff = cfg.reliability_coeff(t);
    const auto reliable = losses::select_reliable(ls.silhouettes, coeff);

    const auto steps = plan.epoch(sizes, static_cast<std::uint64_t>(t));
    losses::LossValues sum;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const auto& batch = steps[s];
      try {
        std::vector<Matrix> x;
        for (std::size_t v = 0; v < V; ++v) x.push_back(rows_of(data.views[v].features, batch[v]));
        diffnet::Graph g;
        losses::AutoencoderTerm ae = losses::recon_orth_loss(g, bundle, x, cfg.weights.lambda1);

        std::vector<std::vector<losses::AnchorPairs>> pairs;
        for (std::size_t v = 0; v < V; ++v) {
          std::vector<std::vector<int>> level_labels;
          for (const auto& c : ls.views[v]) level_labels.push_back(c.assignment.labels);
          pairs.push_back(losses::build_inner_pairs(level_labels, batch[v]));
        }
        Var inner = losses::inner_contrastive_loss(ae.latents, pairs, cfg.weights.temperature);

        std::vector<losses::CommonLevelBatch> levels;
        for (std::size_t l = 0; l < ls.levels.size(); ++l) {
          losses::CommonLevelBatch lb;
          for (std::size_t v = 0; v < V; ++v) {
            std::vector<int> vl;
            for (std::size_t r : batch[v]) {
              lb.anchor_common_labels.push_back(ls.common[l].assignment.labels[full_offset[v] + r]);
              vl.push_back(ls.views[v][l].assignment.labels[r]);
            }
            lb.view_labels.push_back(std::move(vl));
            lb.matchings.push_back(ls.matchings[v][l]);
          }
          levels.push_back(std::move(lb));
        }
        Var common = losses::common_contrastive_loss(ae.latents, levels, cfg.weights.temperature);

        std::vector<Var> dist;
        for (std::size_t v = 0; v < V; ++v) {
          dist.push_back(losses::view_distribution(ae.latents[v], ls.common_centroids, cfg.weights.temperature));
        }
        Var cross = losses::cross_view_kl(dist, reliable);

        const losses::LossTerms terms{ae.loss, inner, common, cross};
        Var total = losses::total_loss(terms, cfg.weights);
        const losses::LossValues lv = losses::values(terms, total);
        if (!std::isfinite(lv.total)) throw NumericError("non-finite loss");
        diffnet::GradientSet grads = diffnet::backward(bundle, g, total);
        diffnet::step(opt, bundle, grads);
        sum.autoencoder += lv.autoencoder;
        sum.inner += lv.inner;
        sum.common += lv.common;
        sum.cross += lv.cross;
        sum.total += lv.total;
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(t) + " step " + std::to_string(s + 1) + ": " + e.what());
      }
    }
    const double n = static_cast<double>(steps.size());
    EpochRecord rec{t, static_cast<int>(active.size()),
                    {sum.autoencoder / n, sum.inner / n, sum.common / n, sum.cross / n, sum.total / n},
                    coeff, ls.silhouettes};
    art.curve.push_back(rec);
    if (control.on_epoch) control.on_epoch(rec);

    const bool stop = control.stop_after_epoch > 0 && t >= control.stop_after_epoch && t < cfg.epochs;
    if (t == cfg.epochs || stop || (control.checkpoint_every > 0 && t % control.checkpoint_every == 0)) checkpoint(t);
    if (stop) return art;
  }
  if (start > cfg.epochs) art.checkpoint_path = control.resume_from;

  finalize(cfg, data, bundle, art);
  return art;
}

void finalize(const TrainConfig& cfg, const dataio::MultiViewDataset& data, diffnet::AutoencoderBundle& bundle,
              RunArtifacts& art) {
  art.latents = encode_all(bundle, data);
  const auto final_km = clusterkit::kmeans_best_of(stack(art.latents), data.num_clusters,
                                                   derive_seed(cfg.seeds.kmeans, {kFinalStream}), cfg.final_restarts,
                                                   cfg.kmeans);
  art.final_assignment = final_km.assignment;
  evalkit::ReportOptions ro;
  ro.kmeans_seed = derive_seed(cfg.seeds.kmeans, {kReportStream});
  ro.restarts = cfg.final_restarts;
  ro.max_iter = cfg.kmeans.max_iter;
  ro.tol = cfg.kmeans.tol;
  art.metrics = evalkit::report(art.latents, art.final_assignment.labels, data, ro);
  art.metrics.config_hash = hash_hex(config_hash(cfg, data));
  art.completed = true;
}

RunArtifacts evaluate(const TrainConfig& cfg, const dataio::MultiViewDataset& data,
                      const std::filesystem::path& checkpoint) {
  cfg.validate();
  data.validate();
  const auto ar = diffnet::Archive::load(checkpoint, config_hash(cfg, data));
  if (ar.integer("train/epoch") != cfg.epochs) {
    throw CheckpointError("checkpoint stops at epoch " + std::to_string(ar.integer("train/epoch")) + " of " +
                          std::to_string(cfg.epochs));
  }
  diffnet::AutoencoderBundle bundle(cfg.encoder_specs(data), cfg.norm, cfg.seeds.init);
  diffnet::restore(ar, bundle);
  RunArtifacts art;
  art.checkpoint_path = checkpoint;
  art.curve = matrix_to_curve(ar.matrix("train/curve"));
  finalize(cfg, data, bundle, art);
  return art;
}

std::string loss_curve_csv(const std::vector<EpochRecord>& curve, const dataio::MultiViewDataset& data) {
  std::ostringstream out;
  out << "epoch,l_AE,l_in,l_co,l_cr,total,reliability_coeff";
  for (const auto& v : data.views) out << ",silhouette_view" << v.id;
  out << '\n';
  for (const auto& r : curve) {
    out << r.epoch << ',' << num(r.loss.autoencoder) << ',' << num(r.loss.inner) << ',' << num(r.loss.common) << ','
        << num(r.loss.cross) << ',' << num(r.loss.total) << ',' << num(r.reliability_coeff);
    for (double s : r.silhouettes) out << ',' << num(s);
    out << '\n';
  }
  return out.str();
}

std::string format_epoch(const EpochRecord& r) {
  std::ostringstream out;
  out << "epoch=" << r.epoch << " total=" << num(r.loss.total) << " l_AE=" << num(r.loss.autoencoder)
      << " l_in=" << num(r.loss.inner) << " l_co=" << num(r.loss.common) << " l_cr=" << num(r.loss.cross)
      << " levels=" << r.active_levels << " coeff=" << num(r.reliability_coeff);
  return out.str();
}

}  // namespace umc::trainer
