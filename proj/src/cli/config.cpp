#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "umc/cli/cli.hpp"
#include "umc/dataio/manifest.hpp"
#include "umc/error.hpp"

namespace umc::cli {

using nlohmann::json;

namespace {

const char* const kAxes[] = {"lambda1", "lambda2", "lambda3", "lambda4"};

// Reads one JSON object, remembering which keys were consumed so that
// anything left over can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + path_ + "' must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <typename T>
  T get(const std::string& key, T fallback) {
    if (!j_.contains(key)) return fallback;
    return require<T>(key);
  }

  template <typename T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError("config: missing key '" + name(key) + "'");
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) throw ConfigError("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config: key '" + name(key) + "' has the wrong type");
    }
  }

  Section sub(const std::string& key) {
    seen_.insert(key);
    return Section(j_.at(key), name(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("config: unknown key '" + name(key) + "'");
    }
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <typename T>
std::vector<T> list_of(Section& s, const std::string& key) {
  const json& v = s.raw(key);
  if (!v.is_array()) throw ConfigError("config: key '" + s.name(key) + "' must be a list");
  std::vector<T> out;
  for (const auto& e : v) {
    if (!e.is_number() || (std::is_integral_v<T> && !e.is_number_integer())) {
      throw ConfigError("config: key '" + s.name(key) + "' has a wrongly typed entry");
    }
    out.push_back(e.get<T>());
  }
  return out;
}

void parse_train(Section s, Config& c) {
  trainer::TrainConfig& t = c.train;
  t.epochs = s.get("epochs", t.epochs);
  t.batch_size = s.get("batch_size", t.batch_size);
  t.weights.lambda1 = s.get("lambda1", t.weights.lambda1);
  t.weights.lambda2 = s.get("lambda2", t.weights.lambda2);
  t.weights.lambda3 = s.get("lambda3", t.weights.lambda3);
  t.weights.lambda4 = s.get("lambda4", t.weights.lambda4);
  t.weights.temperature = s.get("temperature", t.weights.temperature);
  t.reliability_start = s.get("reliability_start", t.reliability_start);
  t.reliability_decay = s.get("reliability_decay", t.reliability_decay);
  t.reliability_floor = s.get("reliability_floor", t.reliability_floor);
  c.set_seed(s.get("seed", c.seed));
  if (s.has("hidden_dims")) t.hidden_dims = list_of<diffnet::Index>(s, "hidden_dims");
  t.latent_dim = s.get("latent_dim", t.latent_dim);
  t.batchnorm = s.get("batchnorm", t.batchnorm);
  t.norm.eps = s.get("bn_eps", t.norm.eps);
  t.norm.momentum = s.get("bn_momentum", t.norm.momentum);
  t.adam.learning_rate = s.get("learning_rate", t.adam.learning_rate);
  t.adam.beta1 = s.get("beta1", t.adam.beta1);
  t.adam.beta2 = s.get("beta2", t.adam.beta2);
  t.adam.eps = s.get("adam_eps", t.adam.eps);
  t.refresh_every = s.get("refresh_every", t.refresh_every);
  t.kmeans.max_iter = s.get("kmeans_max_iter", t.kmeans.max_iter);
  t.kmeans.tol = s.get("kmeans_tol", t.kmeans.tol);
  t.final_restarts = s.get("final_restarts", t.final_restarts);
  s.finish();
  t.validate();
}

}  // namespace

void Config::set_seed(std::uint64_t s) {
  seed = s;
  train.seeds = trainer::Seeds::from(s);
}

Config parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  Section s(root, "");
  Config c;
  c.set_seed(0);
  if (s.has("data")) {
    Section d = s.sub("data");
    DataSection ds;
    ds.manifest = std::filesystem::absolute(base_dir / d.require<std::string>("manifest")).lexically_normal();
    ds.scale = dataio::parse_scale_method(d.get<std::string>("scale", dataio::to_string(ds.scale)));
    ds.unpair_seed = d.get("unpair_seed", ds.unpair_seed);
    ds.unpair_strategy = dataio::parse_unpair_strategy(d.get<std::string>("unpair_strategy", dataio::to_string(ds.unpair_strategy)));
    d.finish();
    c.data = ds;
  }
  if (s.has("synthetic")) {
    Section d = s.sub("synthetic");
    SyntheticSection ss;
    auto& sp = ss.spec;
    sp.num_clusters = d.get("num_clusters", sp.num_clusters);
    sp.num_views = d.get("num_views", sp.num_views);
    if (d.has("dims")) sp.dims = list_of<long>(d, "dims");
    sp.samples_per_cluster = d.get("samples_per_cluster", sp.samples_per_cluster);
    sp.separation = d.get("separation", sp.separation);
    sp.noise_std = d.get("noise_std", sp.noise_std);
    sp.distortion_seed = d.get("distortion_seed", sp.distortion_seed);
    ss.seed = d.get("seed", ss.seed);
    d.finish();
    if (sp.dims.empty()) sp.dims.assign(static_cast<std::size_t>(std::max(sp.num_views, 0)), 2L * sp.num_clusters);
    sp.validate();
    c.synthetic = ss;
  }
  if (s.has("train")) parse_train(s.sub("train"), c);
  if (s.has("run")) {
    Section r = s.sub("run");
    c.run.checkpoint_every = r.get("checkpoint_every", c.run.checkpoint_every);
    r.finish();
    if (c.run.checkpoint_every < 0) throw ConfigError("config: run.checkpoint_every must be >= 0");
  }
  if (s.has("sweep")) {
    Section w = s.sub("sweep");
    for (const char* axis : kAxes) {
      if (!w.has(axis)) continue;
      auto values = list_of<double>(w, axis);
      for (double v : values) {
        if (!(v >= 0.0)) throw ConfigError(std::string("config: sweep.") + axis + " values must be non-negative");
      }
      c.sweep.axes[axis] = std::move(values);
    }
    w.finish();
  }
  s.finish();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::string to_json(const Config& c) {
  json root;
  if (c.data) {
    root["data"] = {{"manifest", c.data->manifest.string()},
                    {"scale", dataio::to_string(c.data->scale)},
                    {"unpair_seed", c.data->unpair_seed},
                    {"unpair_strategy", dataio::to_string(c.data->unpair_strategy)}};
  }
  if (c.synthetic) {
    const auto& sp = c.synthetic->spec;
    root["synthetic"] = {{"num_clusters", sp.num_clusters}, {"num_views", sp.num_views},
                         {"dims", sp.dims},                 {"samples_per_cluster", sp.samples_per_cluster},
                         {"separation", sp.separation},     {"noise_std", sp.noise_std},
                         {"distortion_seed", sp.distortion_seed}, {"seed", c.synthetic->seed}};
  }
  const auto& t = c.train;
  root["train"] = {{"epochs", t.epochs},
                   {"batch_size", t.batch_size},
                   {"lambda1", t.weights.lambda1},
                   {"lambda2", t.weights.lambda2},
                   {"lambda3", t.weights.lambda3},
                   {"lambda4", t.weights.lambda4},
                   {"temperature", t.weights.temperature},
                   {"reliability_start", t.reliability_start},
                   {"reliability_decay", t.reliability_decay},
                   {"reliability_floor", t.reliability_floor},
                   {"seed", c.seed},
                   {"hidden_dims", t.hidden_dims},
                   {"latent_dim", t.latent_dim},
                   {"batchnorm", t.batchnorm},
                   {"bn_eps", t.norm.eps},
                   {"bn_momentum", t.norm.momentum},
                   {"learning_rate", t.adam.learning_rate},
                   {"beta1", t.adam.beta1},
                   {"beta2", t.adam.beta2},
                   {"adam_eps", t.adam.eps},
                   {"refresh_every", t.refresh_every},
                   {"kmeans_max_iter", t.kmeans.max_iter},
                   {"kmeans_tol", t.kmeans.tol},
                   {"final_restarts", t.final_restarts}};
  root["run"] = {{"checkpoint_every", c.run.checkpoint_every}};
  if (!c.sweep.axes.empty()) {
    json w = json::object();
    for (const auto& [k, v] : c.sweep.axes) w[k] = v;
    root["sweep"] = w;
  }
  return root.dump(2) + "\n";
}

dataio::MultiViewDataset load_data(const Config& c) {
  dataio::MultiViewDataset data;
  dataio::ScaleMethod method = dataio::ScaleMethod::None;
  if (c.data) {
    const auto m = dataio::read_manifest(c.data->manifest);
    if (m.paired) {
      data = dataio::unpair(dataio::load_paired(c.data->manifest),
                            {c.data->unpair_seed, c.data->unpair_strategy, c.data->manifest.string()});
    } else {
      data = dataio::load(c.data->manifest);
    }
    method = c.data->scale;
  } else if (c.synthetic) {
    data = dataio::synthesize(c.synthetic->spec, c.synthetic->seed);
  } else {
    throw ConfigError("config: missing key 'data' (or 'synthetic')");
  }
  return dataio::scale(std::move(data), method);
}

std::vector<losses::LossWeights> sweep_grid(const Config& c) {
  std::vector<losses::LossWeights> grid{c.train.weights};
  for (const char* axis : kAxes) {
    auto it = c.sweep.axes.find(axis);
    if (it == c.sweep.axes.end() || it->second.empty()) continue;
    std::vector<losses::LossWeights> next;
    for (const auto& w : grid) {
      for (double v : it->second) {
        losses::LossWeights x = w;
        if (std::string(axis) == "lambda1") x.lambda1 = v;
        else if (std::string(axis) == "lambda2") x.lambda2 = v;
        else if (std::string(axis) == "lambda3") x.lambda3 = v;
        else x.lambda4 = v;
        next.push_back(x);
      }
    }
    grid = std::move(next);
  }
  return grid;
}

}  // namespace umc::cli
