#include "umc/diffnet/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "umc/error.hpp"
#include "umc/seed.hpp"

namespace umc::diffnet {

namespace {

constexpr char kMagic[8] = {'U', 'M', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_raw(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view buf) : buf_(buf) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw CheckpointError("checkpoint truncated");
  }
  std::string_view buf_;
  std::size_t pos_ = 0;
};

}  // namespace

const Matrix& Archive::matrix(const std::string& key) const {
  auto it = records_.find(key);
  if (it == records_.end() || !std::holds_alternative<Matrix>(it->second)) {
    throw CheckpointError("checkpoint lacks matrix record '" + key + "'");
  }
  return std::get<Matrix>(it->second);
}

std::int64_t Archive::integer(const std::string& key) const {
  auto it = records_.find(key);
  if (it == records_.end() || !std::holds_alternative<std::int64_t>(it->second)) {
    throw CheckpointError("checkpoint lacks integer record '" + key + "'");
  }
  return std::get<std::int64_t>(it->second);
}

const std::string& Archive::text(const std::string& key) const {
  auto it = records_.find(key);
  if (it == records_.end() || !std::holds_alternative<std::string>(it->second)) {
    throw CheckpointError("checkpoint lacks string record '" + key + "'");
  }
  return std::get<std::string>(it->second);
}

void Archive::save(const std::filesystem::path& path) const {
  std::string payload;
  for (const auto& [key, value] : records_) {
    const char tag = std::holds_alternative<Matrix>(value) ? 'M' : std::holds_alternative<std::int64_t>(value) ? 'I' : 'S';
    payload.push_back(tag);
    put_raw(payload, static_cast<std::uint32_t>(key.size()));
    payload += key;
    if (const auto* m = std::get_if<Matrix>(&value)) {
      put_raw(payload, static_cast<std::uint64_t>(m->rows()));
      put_raw(payload, static_cast<std::uint64_t>(m->cols()));
      payload.append(reinterpret_cast<const char*>(m->data()), sizeof(double) * static_cast<std::size_t>(m->size()));
    } else if (const auto* i = std::get_if<std::int64_t>(&value)) {
      put_raw(payload, *i);
    } else {
      const auto& s = std::get<std::string>(value);
      put_raw(payload, static_cast<std::uint64_t>(s.size()));
      payload += s;
    }
  }

  std::string file(kMagic, sizeof(kMagic));
  put_raw(file, kVersion);
  put_raw(file, config_hash);
  put_raw(file, static_cast<std::uint64_t>(payload.size()));
  file += payload;
  put_raw(file, fnv1a64(payload));

  // Write to a sibling temp file and rename so readers never see a partial file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw CheckpointError("cannot move checkpoint into place: " + ec.message());
}

Archive Archive::load(const std::filesystem::path& path, std::optional<std::uint64_t> expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader header(buf);
  if (header.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = header.get<std::uint32_t>();
  if (version != kVersion) throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  Archive ar;
  ar.config_hash = header.get<std::uint64_t>();
  const auto payload_size = header.get<std::uint64_t>();
  const std::size_t header_size = sizeof(kMagic) + sizeof(std::uint32_t) + 2 * sizeof(std::uint64_t);
  if (buf.size() != header_size + payload_size + sizeof(std::uint64_t)) {
    throw CheckpointError("checkpoint size does not match its header");
  }
  const std::string_view payload(buf.data() + header_size, payload_size);
  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, buf.data() + header_size + payload_size, sizeof(stored_sum));
  if (stored_sum != fnv1a64(payload)) throw CheckpointError("checkpoint checksum mismatch (corrupted file)");
  if (expected_hash && *expected_hash != ar.config_hash) {
    throw CheckpointError("checkpoint was written under a different configuration");
  }

  Reader r(payload);
  while (!r.done()) {
    const char tag = r.get<char>();
    const auto klen = r.get<std::uint32_t>();
    std::string key = r.bytes(klen);
    if (tag == 'M') {
      const auto rows = r.get<std::uint64_t>();
      const auto cols = r.get<std::uint64_t>();
      if (cols != 0 && rows > payload.size() / sizeof(double) / cols) throw CheckpointError("matrix record too large");
      Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
      const std::string raw = r.bytes(sizeof(double) * rows * cols);
      std::memcpy(m.data(), raw.data(), raw.size());
      ar.records_[key] = std::move(m);
    } else if (tag == 'I') {
      ar.records_[key] = r.get<std::int64_t>();
    } else if (tag == 'S') {
      const auto n = r.get<std::uint64_t>();
      ar.records_[key] = r.bytes(n);
    } else {
      throw CheckpointError("unknown record tag in checkpoint");
    }
  }
  return ar;
}

void store(Archive& ar, const AutoencoderBundle& bundle) {
  const auto names = bundle.parameter_names();
  const auto params = bundle.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ar.put("param/" + names[i], *params[i]);
  const auto stats = bundle.norm_stats();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    ar.put("bn/" + std::to_string(i) + "/mean", stats[i]->mean);
    ar.put("bn/" + std::to_string(i) + "/var", stats[i]->var);
  }
}

namespace {

void record_shape(const Matrix& m, Index rows, Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw CheckpointError(what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

void restore(const Archive& ar, AutoencoderBundle& bundle) {
  const auto names = bundle.parameter_names();
  auto params = bundle.parameters();
  auto stats = bundle.norm_stats();
  for (std::size_t i = 0; i < params.size(); ++i) {
    record_shape(ar.matrix("param/" + names[i]), params[i]->rows(), params[i]->cols(), "checkpoint " + names[i]);
  }
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const std::string base = "bn/" + std::to_string(i);
    record_shape(ar.matrix(base + "/mean"), 1, stats[i]->mean.cols(), "checkpoint " + base);
    record_shape(ar.matrix(base + "/var"), 1, stats[i]->var.cols(), "checkpoint " + base);
  }
  for (std::size_t i = 0; i < params.size(); ++i) *params[i] = ar.matrix("param/" + names[i]);
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const std::string base = "bn/" + std::to_string(i);
    stats[i]->mean = ar.matrix(base + "/mean");
    stats[i]->var = ar.matrix(base + "/var");
  }
}

void store(Archive& ar, const OptimizerState& opt) {
  ar.put_int("opt/step", static_cast<std::int64_t>(opt.step));
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    ar.put("opt/m/" + std::to_string(i), opt.first_moment[i]);
    ar.put("opt/v/" + std::to_string(i), opt.second_moment[i]);
  }
}

void restore(const Archive& ar, OptimizerState& opt) {
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    const Matrix& m = opt.first_moment[i];
    record_shape(ar.matrix("opt/m/" + std::to_string(i)), m.rows(), m.cols(), "checkpoint optimizer moment");
    record_shape(ar.matrix("opt/v/" + std::to_string(i)), m.rows(), m.cols(), "checkpoint optimizer moment");
  }
  const std::int64_t step = ar.integer("opt/step");
  if (step < 0) throw CheckpointError("negative optimizer step in checkpoint");
  for (std::size_t i = 0; i < opt.first_moment.size(); ++i) {
    opt.first_moment[i] = ar.matrix("opt/m/" + std::to_string(i));
    opt.second_moment[i] = ar.matrix("opt/v/" + std::to_string(i));
  }
  opt.step = static_cast<std::uint64_t>(step);
}

}  // namespace umc::diffnet
