#include "umc/dataio/manifest.hpp"

#include <charconv>
#include <fstream>
#include "json.hpp"
#include <sstream>
#include <unordered_map>

#include "umc/error.hpp"

namespace umc::dataio {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CsvTable {
  std::vector<std::int64_t> ids;
  std::vector<std::vector<double>> rows;
};

double parse_double(std::string_view tok, const fs::path& file, std::size_t line) {
  double v = 0.0;
  // from_chars rejects a leading '+', which some exporters emit.
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

std::int64_t parse_id(std::string_view tok, const fs::path& file, std::size_t line) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw DataError(file.string() + ":" + std::to_string(line) + ": bad id '" + std::string(tok) + "'");
  }
  return v;
}

CsvTable read_csv(const fs::path& file, long expected_cols) {
  std::ifstream in(file);
  if (!in) throw DataError("missing file " + file.string());
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::string_view rest(line);
    std::size_t field = 0;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view tok = rest.substr(0, comma);
      if (field == 0) {
        t.ids.push_back(parse_id(tok, file, lineno));
      } else {
        vals.push_back(parse_double(tok, file, lineno));
      }
      ++field;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (static_cast<long>(vals.size()) != expected_cols) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(expected_cols) +
                      " values after the id, found " + std::to_string(vals.size()) + " (dim mismatch vs manifest)");
    }
    t.rows.push_back(std::move(vals));
  }
  return t;
}

Matrix to_matrix(const CsvTable& t, long cols) {
  Matrix m(static_cast<Eigen::Index>(t.rows.size()), cols);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (long j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = t.rows[i][static_cast<std::size_t>(j)];
  }
  return m;
}

std::unordered_map<std::int64_t, int> read_labels(const Manifest& mf) {
  const fs::path file = mf.base_dir / mf.labels;
  CsvTable t = read_csv(file, 1);
  std::unordered_map<std::int64_t, int> out;
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    const double y = t.rows[i][0];
    if (y != static_cast<double>(static_cast<int>(y)) || y < 0 || y >= mf.num_clusters) {
      throw DataError(file.string() + ": label " + std::to_string(y) + " of id " + std::to_string(t.ids[i]) +
                      " out of range [0," + std::to_string(mf.num_clusters) + ")");
    }
    if (!out.emplace(t.ids[i], static_cast<int>(y)).second) {
      throw DataError(file.string() + ": duplicate id " + std::to_string(t.ids[i]));
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  Manifest mf;
  mf.base_dir = path.parent_path();
  try {
    for (const auto& [key, _] : j.items()) {
      if (key != "name" && key != "K" && key != "paired" && key != "labels" && key != "views") {
        throw DataError(path.string() + ": unknown manifest key '" + key + "'");
      }
    }
    mf.name = j.at("name").get<std::string>();
    mf.num_clusters = j.at("K").get<int>();
    mf.paired = j.value("paired", false);
    mf.labels = j.at("labels").get<std::string>();
    for (const auto& v : j.at("views")) {
      ManifestView mv;
      mv.id = v.at("id").get<int>();
      mv.features = v.at("features").get<std::string>();
      mv.dim = v.at("dim").get<long>();
      if (mv.dim < 1) throw DataError(path.string() + ": view dim must be >= 1");
      mf.views.push_back(std::move(mv));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (mf.num_clusters < 1) throw DataError(path.string() + ": K must be >= 1");
  if (mf.views.empty()) throw DataError(path.string() + ": no views");
  return mf;
}

MultiViewDataset load(const fs::path& manifest_path) {
  const Manifest mf = read_manifest(manifest_path);
  if (mf.paired) {
    throw DataError(manifest_path.string() + " describes paired data; unpair it first (umc unpair)");
  }
  const auto labels = read_labels(mf);
  MultiViewDataset ds;
  ds.name = mf.name;
  ds.num_clusters = mf.num_clusters;
  for (const ManifestView& mv : mf.views) {
    const fs::path file = mf.base_dir / mv.features;
    CsvTable t = read_csv(file, mv.dim);
    View v;
    v.id = mv.id;
    v.features = to_matrix(t, mv.dim);
    v.ids = t.ids;
    for (std::int64_t id : t.ids) {
      auto it = labels.find(id);
      if (it == labels.end()) throw DataError(file.string() + ": id " + std::to_string(id) + " has no label");
      v.labels.push_back(it->second);
    }
    ds.views.push_back(std::move(v));
  }
  ds.validate();
  return ds;
}

PairedDataset load_paired(const fs::path& manifest_path) {
  const Manifest mf = read_manifest(manifest_path);
  if (!mf.paired) throw DataError(manifest_path.string() + " is not a paired manifest");
  const auto labels = read_labels(mf);
  PairedDataset ds;
  ds.name = mf.name;
  ds.num_clusters = mf.num_clusters;
  for (const ManifestView& mv : mf.views) {
    const fs::path file = mf.base_dir / mv.features;
    CsvTable t = read_csv(file, mv.dim);
    if (ds.ids.empty()) {
      ds.ids = t.ids;
      for (std::int64_t id : t.ids) {
        auto it = labels.find(id);
        if (it == labels.end()) throw DataError(file.string() + ": id " + std::to_string(id) + " has no label");
        ds.labels.push_back(it->second);
      }
    } else if (t.ids != ds.ids) {
      throw DataError(file.string() + ": paired views must list identical ids in identical order");
    }
    ds.view_ids.push_back(mv.id);
    ds.views.push_back(to_matrix(t, mv.dim));
  }
  ds.validate();
  return ds;
}

void save(const MultiViewDataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir);
  json manifest;
  manifest["name"] = dataset.name;
  manifest["K"] = dataset.num_clusters;
  manifest["paired"] = false;
  manifest["labels"] = "labels.csv";
  manifest["views"] = json::array();

  std::ofstream labels(dir / "labels.csv", std::ios::binary | std::ios::trunc);
  if (!labels) throw DataError("cannot write " + (dir / "labels.csv").string());
  for (const View& v : dataset.views) {
    const std::string fname = "view" + std::to_string(v.id) + ".csv";
    std::ofstream out(dir / fname, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + (dir / fname).string());
    for (Eigen::Index i = 0; i < v.features.rows(); ++i) {
      std::string line = std::to_string(v.ids[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < v.features.cols(); ++j) {
        line += ',';
        line += format_double(v.features(i, j));
      }
      line += '\n';
      out << line;
      labels << v.ids[static_cast<std::size_t>(i)] << ',' << v.labels[static_cast<std::size_t>(i)] << '\n';
    }
    manifest["views"].push_back({{"id", v.id}, {"features", fname}, {"dim", v.features.cols()}});
  }
  std::ofstream mf(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  mf << manifest.dump(2) << '\n';
  if (!mf || !labels) throw DataError("write failure in " + dir.string());
}

}  // namespace umc::dataio
