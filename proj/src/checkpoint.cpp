#include "pixcolor/checkpoint.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace pixcolor {

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void bytes(const std::string& s) { raw(s.data(), s.size()); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  std::vector<std::uint8_t> out;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}
  std::uint32_t u32() { return read<std::uint32_t>(); }
  std::int64_t i64() { return read<std::int64_t>(); }
  float f32() { return read<float>(); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == size_; }

 private:
  template <class T>
  T read() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(std::size_t n) const {
    if (size_ - pos_ < n) throw CheckpointError("checkpoint truncated");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

void write_record(Writer& w, const TensorRecord& r) {
  if (r.values.size() != shape_numel(r.shape)) {
    throw CheckpointError("record " + r.name + " has inconsistent shape");
  }
  w.u32(static_cast<std::uint32_t>(r.name.size()));
  w.bytes(r.name);
  w.u32(static_cast<std::uint32_t>(r.shape.size()));
  for (auto e : r.shape) w.u32(static_cast<std::uint32_t>(e));
  for (float v : r.values) w.f32(v);
}

TensorRecord read_record(Reader& r) {
  TensorRecord rec;
  rec.name = r.bytes(r.u32());
  const std::uint32_t rank = r.u32();
  if (rank > 8) throw CheckpointError("record " + rec.name + " has implausible rank");
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    rec.shape.push_back(r.u32());
    count *= rec.shape.back();
  }
  if (count > (std::size_t{1} << 32)) throw CheckpointError("record " + rec.name + " too large");
  rec.values.resize(count);
  for (auto& v : rec.values) v = r.f32();
  return rec;
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  return static_cast<std::uint32_t>(crc32(crc, data, static_cast<uInt>(n)));
}

TensorRecord record_of(const std::string& name, const Shape& shape, std::vector<double>& values) {
  TensorRecord rec{name, shape, {}};
  rec.values.reserve(values.size());
  for (double& v : values) {
    const auto f = static_cast<float>(v);
    rec.values.push_back(f);
    v = f;
  }
  return rec;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ModelCheckpoint& ckpt) {
  Writer w;
  w.bytes("PXCL");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& r : ckpt.params) write_record(w, r);
  w.i64(ckpt.adam_step);
  w.u32(static_cast<std::uint32_t>(ckpt.moments.size()));
  for (const auto& r : ckpt.moments) write_record(w, r);
  w.u32(static_cast<std::uint32_t>(ckpt.config.size()));
  w.bytes(ckpt.config);
  w.u32(crc_of(w.out.data(), w.out.size()));
  return std::move(w.out);
}

ModelCheckpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "PXCL", 4) != 0) {
    throw CheckpointError("not a checkpoint (bad magic)");
  }
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + bytes.size() - 4, 4);
  Reader r(bytes.data() + 4, bytes.size() - 8);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) + " unsupported (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (crc_of(bytes.data(), bytes.size() - 4) != stored_crc) {
    throw CheckpointError("checkpoint checksum mismatch");
  }
  ModelCheckpoint ckpt;
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) ckpt.params.push_back(read_record(r));
  ckpt.adam_step = r.i64();
  const std::uint32_t m = r.u32();
  for (std::uint32_t i = 0; i < m; ++i) ckpt.moments.push_back(read_record(r));
  ckpt.config = r.bytes(r.u32());
  if (!r.done()) throw CheckpointError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

ModelCheckpoint snapshot_checkpoint(ParameterSet& params, AdamState* adam, const std::string& config) {
  ModelCheckpoint ckpt;
  ckpt.config = config;
  const auto& entries = params.entries();
  for (const auto& [name, tensor] : entries) {
    Tensor t = tensor;
    auto data = t.data();
    std::vector<double> values(data.begin(), data.end());
    ckpt.params.push_back(record_of(name, t.shape(), values));
    std::copy(values.begin(), values.end(), data.begin());
  }
  if (adam) {
    ckpt.adam_step = adam->step;
    if (!adam->first_moment.empty()) {
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& [name, tensor] = entries[i];
        ckpt.moments.push_back(record_of("adam.m/" + name, tensor.shape(), adam->first_moment[i]));
        ckpt.moments.push_back(record_of("adam.v/" + name, tensor.shape(), adam->second_moment[i]));
      }
    }
  }
  return ckpt;
}

void restore_checkpoint(const ModelCheckpoint& ckpt, ParameterSet& params, AdamState* adam) {
  std::set<std::string> expected, found;
  for (const auto& name : params.names()) expected.insert(name);
  for (const auto& rec : ckpt.params) {
    if (!found.insert(rec.name).second) throw CheckpointError("duplicate parameter " + rec.name);
  }
  if (found != expected) {
    std::string missing, unexpected;
    for (const auto& n : expected) {
      if (!found.contains(n)) missing += " " + n;
    }
    for (const auto& n : found) {
      if (!expected.contains(n)) unexpected += " " + n;
    }
    std::string msg = "checkpoint parameter names do not match the model;";
    if (!missing.empty()) msg += " missing:" + missing.substr(0, 200) + ";";
    if (!unexpected.empty()) msg += " unexpected:" + unexpected.substr(0, 200);
    throw CheckpointError(msg);
  }
  for (const auto& rec : ckpt.params) {
    Tensor t = params.get(rec.name);
    if (t.shape() != rec.shape) {
      throw CheckpointError("parameter " + rec.name + " has shape " + shape_str(rec.shape) +
                            ", model expects " + shape_str(t.shape()));
    }
    std::copy(rec.values.begin(), rec.values.end(), t.data().begin());
  }
  if (!adam) return;
  adam->step = ckpt.adam_step;
  adam->first_moment.clear();
  adam->second_moment.clear();
  if (ckpt.moments.empty()) return;
  const auto names = params.names();
  if (ckpt.moments.size() != 2 * names.size()) throw CheckpointError("optimizer state incomplete");
  for (std::size_t i = 0; i < names.size(); ++i) {
    const auto& m = ckpt.moments[2 * i];
    const auto& v = ckpt.moments[2 * i + 1];
    if (m.name != "adam.m/" + names[i] || v.name != "adam.v/" + names[i]) {
      throw CheckpointError("optimizer state does not match parameter " + names[i]);
    }
    adam->first_moment.emplace_back(m.values.begin(), m.values.end());
    adam->second_moment.emplace_back(v.values.begin(), v.values.end());
  }
}

}  // namespace pixcolor
