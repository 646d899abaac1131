#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "umc/clusterkit/clusterkit.hpp"
#include "umc/error.hpp"
#include "umc/evalkit/evalkit.hpp"
#include "umc/seed.hpp"

namespace umc::evalkit {

using nlohmann::json;

namespace {

double percent(double v) { return std::round(v * 10000.0) / 100.0; }

ScopeMetrics score(const std::string& name, const std::vector<int>& pred, const std::vector<int>& truth) {
  ScopeMetrics s;
  s.scope = name;
  s.samples = truth.size();
  s.nmi = percent(nmi(pred, truth));
  s.acc = percent(acc(pred, truth));
  s.f1 = percent(pairwise_f1(pred, truth));
  return s;
}

}  // namespace

const ScopeMetrics& MetricsReport::scope(const std::string& name) const {
  for (const ScopeMetrics& s : scopes) {
    if (s.scope == name) return s;
  }
  throw Error("metrics report has no scope '" + name + "'");
}

std::string MetricsReport::to_json() const {
  json j;
  j["config_hash"] = config_hash;
  j["scopes"] = json::array();
  for (const ScopeMetrics& s : scopes) {
    j["scopes"].push_back({{"scope", s.scope}, {"samples", s.samples}, {"nmi", s.nmi}, {"acc", s.acc}, {"f1", s.f1}});
  }
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "scope,samples,nmi,acc,f1\n";
  out.setf(std::ios::fixed);
  out.precision(2);
  for (const ScopeMetrics& s : scopes) out << s.scope << ',' << s.samples << ',' << s.nmi << ',' << s.acc << ',' << s.f1 << '\n';
  return out.str();
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  MetricsReport r;
  try {
    const json j = json::parse(text);
    r.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& s : j.at("scopes")) {
      r.scopes.push_back({s.at("scope").get<std::string>(), s.at("samples").get<std::size_t>(), s.at("nmi").get<double>(),
                          s.at("acc").get<double>(), s.at("f1").get<double>()});
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

MetricsReport report(const std::vector<Matrix>& latents, const std::vector<int>& all_view_labels,
                     const dataio::MultiViewDataset& dataset, const ReportOptions& opts) {
  if (latents.size() != dataset.views.size()) throw DataError("report: missing representations for some views");
  const std::vector<int> truth = dataset.stacked_labels();
  if (all_view_labels.size() != truth.size()) throw DataError("report: all-view assignment has the wrong length");
  MetricsReport r;
  r.scopes.push_back(score("all", all_view_labels, truth));
  const clusterkit::KMeansOptions km{opts.max_iter, opts.tol};
  for (std::size_t v = 0; v < dataset.views.size(); ++v) {
    const auto& view = dataset.views[v];
    if (latents[v].rows() != view.features.rows()) throw DataError("report: representation rows differ from view rows");
    const int k = std::min<int>(dataset.num_clusters, static_cast<int>(latents[v].rows()));
    const auto res = clusterkit::kmeans_best_of(latents[v], k, derive_seed(opts.kmeans_seed, {0x76696577, v}), opts.restarts, km);
    r.scopes.push_back(score("view" + std::to_string(view.id), res.assignment.labels, view.labels));
  }
  return r;
}

void export_embeddings(const std::filesystem::path& path, const dataio::MultiViewDataset& dataset,
                       const std::vector<Matrix>& latents, const std::vector<int>& predicted) {
  if (latents.size() != dataset.views.size()) throw DataError("export: missing representations");
  if (predicted.size() != dataset.total_samples()) throw DataError("export: prediction count differs from N");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  std::size_t at = 0;
  char buf[64];
  for (std::size_t v = 0; v < dataset.views.size(); ++v) {
    const auto& view = dataset.views[v];
    for (Eigen::Index i = 0; i < latents[v].rows(); ++i, ++at) {
      std::string line = std::to_string(view.ids[static_cast<std::size_t>(i)]) + ',' + std::to_string(view.id) + ',' +
                         std::to_string(view.labels[static_cast<std::size_t>(i)]) + ',' + std::to_string(predicted[at]);
      for (Eigen::Index j = 0; j < latents[v].cols(); ++j) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), latents[v](i, j));
        line += ',';
        line.append(buf, ptr);
      }
      line += '\n';
      out << line;
    }
  }
  if (!out) throw DataError("write failure on " + path.string());
}

}  // namespace umc::evalkit
