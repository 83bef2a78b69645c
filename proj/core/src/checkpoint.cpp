#include "camctl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "camctl/config.hpp"
#include "camctl/hash.hpp"

namespace camctl {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'M', 'C', 'T', 'L', 'C', 'K'};

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    T out = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) out = static_cast<T>((out << 8) | ((v >> (8 * i)) & 0xff));
    return out;
  }
  return v;
}

class Writer {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void u32(std::uint32_t v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }
  void u64(std::uint64_t v) {
    v = to_little(v);
    bytes(&v, sizeof v);
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Parser {
 public:
  explicit Parser(const std::string& data) : data_(data) {}
  void bytes(void* dst, std::size_t n) {
    if (pos_ + n > data_.size()) throw InvalidArgument("checkpoint is truncated");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return to_little(v);
  }
  std::uint64_t u64() {
    std::uint64_t v;
    bytes(&v, sizeof v);
    return to_little(v);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t limit) {
    const std::uint32_t n = u32();
    if (n > limit) throw InvalidArgument("checkpoint string field too long");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& data_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(Checkpoint::kFormatVersion);
  w.u32(static_cast<std::uint32_t>(checkpoint.round));
  w.str(network_config_to_json(checkpoint.config));
  w.u32(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& t : checkpoint.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    std::size_t count = 1;
    for (int d : t.shape) {
      w.u32(static_cast<std::uint32_t>(d));
      count *= static_cast<std::size_t>(d);
    }
    if (count != t.values.size()) throw InvalidArgument("tensor '" + t.name + "' shape does not match its values");
    for (float v : t.values) w.f32(v);
  }
  Fnv1a hash;
  hash.update(w.buffer());
  w.u64(hash.digest());
  out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
  if (!out) throw std::runtime_error("failed to write checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  Parser p(data);
  char magic[8];
  p.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw InvalidArgument("not a camctl checkpoint (bad magic)");
  const std::uint32_t version = p.u32();
  if (version != Checkpoint::kFormatVersion) {
    throw InvalidArgument("unsupported checkpoint version " + std::to_string(version));
  }
  if (data.size() < sizeof(std::uint64_t)) throw InvalidArgument("checkpoint is truncated");
  Fnv1a hash;
  hash.update(data.data(), data.size() - sizeof(std::uint64_t));
  Checkpoint ck;
  ck.round = static_cast<int>(p.u32());
  ck.config = network_config_from_json(p.str(1 << 20));
  const std::uint32_t count = p.u32();
  if (count > 4096) throw InvalidArgument("checkpoint tensor count is implausible");
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = p.str(256);
    const std::uint32_t rank = p.u32();
    if (rank > 8) throw InvalidArgument("checkpoint tensor rank is implausible");
    std::size_t n = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      t.shape.push_back(static_cast<int>(p.u32()));
      n *= static_cast<std::size_t>(t.shape.back());
    }
    if (n * sizeof(float) > data.size()) throw InvalidArgument("checkpoint is truncated");
    t.values.resize(n);
    for (auto& v : t.values) v = p.f32();
    ck.tensors.push_back(std::move(t));
  }
  if (p.u64() != hash.digest() || p.pos() != data.size()) throw InvalidArgument("checkpoint checksum mismatch");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

}  // namespace camctl
