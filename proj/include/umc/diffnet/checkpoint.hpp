#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "umc/diffnet/autoencoder.hpp"
#include "umc/diffnet/optimizer.hpp"

namespace umc::diffnet {

// Self-describing binary container of named records (matrices, integers,
// strings). Layout:
//   "UMCCKPT1" | u32 version | u64 config hash | u64 payload bytes | payload | u64 FNV-1a(payload)
// Each payload record is: u8 tag ('M','I','S') | u32 key length | key | body,
// where a matrix body is u64 rows | u64 cols | rows*cols raw doubles (row-major).
// Doubles are stored bit-for-bit, so loading reproduces values exactly.
class Archive {
 public:
  using Value = std::variant<Matrix, std::int64_t, std::string>;

  void put(const std::string& key, Matrix m) { records_[key] = std::move(m); }
  void put_int(const std::string& key, std::int64_t v) { records_[key] = v; }
  void put_string(const std::string& key, std::string s) { records_[key] = std::move(s); }

  bool contains(const std::string& key) const { return records_.count(key) != 0; }
  const Matrix& matrix(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  const std::string& text(const std::string& key) const;

  std::uint64_t config_hash = 0;

  void save(const std::filesystem::path& path) const;
  /// Reads and verifies the whole file before returning. Throws
  /// CheckpointError on I/O failure, corruption, or (when given) a config
  /// hash mismatch.
  static Archive load(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash = std::nullopt);

 private:
  std::map<std::string, Value> records_;
};

void store(Archive& ar, const AutoencoderBundle& bundle);
/// Loads parameters and batch-norm statistics. Every record is checked
/// against the bundle's shapes before anything is written.
void restore(const Archive& ar, AutoencoderBundle& bundle);
void store(Archive& ar, const OptimizerState& opt);
void restore(const Archive& ar, OptimizerState& opt);

}  // namespace umc::diffnet
