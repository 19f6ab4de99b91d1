#include "uechecker/autograd/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace uechecker::ag {

namespace {

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& s) : s_(s) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  std::string str() {
    const auto n = u32();
    return std::string(take(n), n);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  bool done() const { return pos_ == s_.size(); }
  std::size_t remaining() const { return s_.size() - pos_; }

 private:
  const char* take(std::size_t n) {
    if (s_.size() - pos_ < n) throw CheckpointError("truncated checkpoint");
    const char* p = s_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::uint64_t le(int bytes) {
    const char* p = take(bytes);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  const std::string& s_;
  std::size_t pos_ = 0;
};

std::uint64_t count(const std::vector<std::uint64_t>& shape) {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

const TensorRecord* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Checkpoint::add_f32(const std::string& name, std::vector<std::uint64_t> shape, std::vector<float> data) {
  if (count(shape) != data.size()) throw CheckpointError("tensor '" + name + "': shape/data size mismatch");
  TensorRecord r;
  r.name = name;
  r.shape = std::move(shape);
  r.f32_data = std::move(data);
  tensors.push_back(std::move(r));
}

void Checkpoint::add_f64(const std::string& name, std::vector<std::uint64_t> shape, std::vector<double> data) {
  if (count(shape) != data.size()) throw CheckpointError("tensor '" + name + "': shape/data size mismatch");
  TensorRecord r;
  r.name = name;
  r.shape = std::move(shape);
  r.f64 = true;
  r.f64_data = std::move(data);
  tensors.push_back(std::move(r));
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw("UECK", 4);
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [k, v] : ckpt.entries) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    w.str(t.name);
    w.u8(t.f64 ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) w.u64(d);
    if (t.f64) {
      for (double d : t.f64_data) w.f64(d);
    } else {
      for (float f : t.f32_data) w.f32(f);
    }
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), "UECK", 4) != 0) throw CheckpointError("not a checkpoint file");
  Reader r(bytes);
  r.u32();
  const auto version = r.u32();
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  const auto entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    auto k = r.str();
    c.entries[k] = r.str();
  }
  const auto tensors = r.u32();
  for (std::uint32_t i = 0; i < tensors; ++i) {
    TensorRecord t;
    t.name = r.str();
    const auto dtype = r.u8();
    if (dtype > 1) throw CheckpointError("tensor '" + t.name + "': unknown dtype");
    t.f64 = dtype == 1;
    const auto rank = r.u32();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.u64());
    const auto n = count(t.shape);
    if (n > r.remaining() / (t.f64 ? 8 : 4)) throw CheckpointError("truncated checkpoint");
    if (t.f64) {
      t.f64_data.resize(n);
      for (auto& d : t.f64_data) d = r.f64();
    } else {
      t.f32_data.resize(n);
      for (auto& f : t.f32_data) f = r.f32();
    }
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  const auto bytes = encode_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace uechecker::ag
