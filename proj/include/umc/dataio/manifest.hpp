#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "umc/dataio/dataset.hpp"

namespace umc::dataio {

// Manifest (JSON):
//   { "name": str, "K": int, "paired": bool (default false),
//     "labels": path, "views": [ { "id": int, "features": path, "dim": int }, ... ] }
// Paths are relative to the manifest's directory. Feature files are
// headerless CSV rows "global_id,x1,...,xd"; the labels file holds
// "global_id,class" rows.
struct ManifestView {
  int id = 0;
  std::string features;
  long dim = 0;
};

struct Manifest {
  std::string name;
  int num_clusters = 0;
  bool paired = false;
  std::string labels;
  std::vector<ManifestView> views;
  std::filesystem::path base_dir;
};

Manifest read_manifest(const std::filesystem::path& path);

/// Loads an unpaired dataset. Rejects paired manifests and any id seen in two views.
MultiViewDataset load(const std::filesystem::path& manifest_path);
/// Loads a paired dataset; every view must list the same ids in the same order.
PairedDataset load_paired(const std::filesystem::path& manifest_path);

/// Writes manifest.json, labels.csv and one view<id>.csv per view into `dir`.
/// Floats use shortest round-trip formatting, so load(save(d)) == d exactly.
void save(const MultiViewDataset& dataset, const std::filesystem::path& dir);

}  // namespace umc::dataio
