#include "lisce/cnn/weights_io.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "lisce/errors.hpp"

namespace lisce::cnn {

namespace {

// The on-disk format is little-endian; the raw memcpy writers below assume a
// little-endian host (the only kind we build for).

class Writer {
 public:
  template <typename T>
  void put(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.insert(buf_.end(), b, b + sizeof(T));
  }
  void put_f32(const std::vector<float>& v) {
    const auto* p = reinterpret_cast<const unsigned char*>(v.data());
    buf_.insert(buf_.end(), p, p + v.size() * sizeof(float));
  }
  void put_bytes(const char* p, std::size_t n) {
    buf_.insert(buf_.end(), p, p + n);
  }
  std::vector<unsigned char>& buf() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), end_(p + n) {}
  template <typename T>
  T get() {
    if (static_cast<std::size_t>(end_ - p_) < sizeof(T))
      throw TruncatedFile("file ends inside a field");
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  void get_f32(std::vector<float>& v, std::size_t n) {
    if (static_cast<std::size_t>(end_ - p_) < n * sizeof(float))
      throw TruncatedFile("file ends inside tensor data");
    v.resize(n);
    std::memcpy(v.data(), p_, n * sizeof(float));
    p_ += n * sizeof(float);
  }
  bool done() const { return p_ == end_; }

 private:
  const unsigned char* p_;
  const unsigned char* end_;
};

void write_file(const std::string& path, Writer& w) {
  const auto crc = static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(w.buf().data()), static_cast<uInt>(w.buf().size())));
  w.put(crc);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(w.buf().data()),
          static_cast<std::streamsize>(w.buf().size()));
  if (!f) throw IoError("short write: " + path);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open for reading: " + path);
  const std::streamsize n = f.tellg();
  f.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(n));
  f.read(reinterpret_cast<char*>(buf.data()), n);
  if (!f) throw IoError("short read: " + path);
  return buf;
}

void check_magic_version(Reader& r, const char* magic) {
  char got[4];
  for (int i = 0; i < 4; ++i) got[i] = static_cast<char>(r.get<unsigned char>());
  if (std::memcmp(got, magic, 4) != 0) throw BadMagic("unexpected magic bytes");
  const auto version = r.get<std::uint32_t>();
  if (version != 1)
    throw VersionMismatch("unsupported format version " + std::to_string(version));
}

// Last four bytes hold crc32 of everything before them.
void verify_crc(const std::vector<unsigned char>& buf) {
  if (buf.size() < 4) throw TruncatedFile("file shorter than its checksum");
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + buf.size() - 4, 4);
  const auto computed = static_cast<std::uint32_t>(::crc32(
      0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size() - 4)));
  if (stored != computed) throw ChecksumMismatch("payload checksum does not match");
}

std::size_t layer_bytes(int c_in, int c_out, bool bn) {
  return 1 + 2 + 2 +
         sizeof(float) * (9u * static_cast<std::size_t>(c_in) * c_out + c_out +
                          (bn ? 4u * static_cast<std::size_t>(c_out) : 0u));
}

constexpr std::size_t kWeightHeaderBytes = 4 + 4 + 1 + 5 * 2;
constexpr std::size_t kDatasetHeaderBytes = 4 + 4 + 2 + 2 + 4;

}  // namespace

void save_weights(const Network<float>& net, const std::string& path) {
  Writer w;
  w.put_bytes("LISW", 4);
  w.put<std::uint32_t>(1);
  w.put<std::uint8_t>(static_cast<std::uint8_t>(net.arch));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(net.depth));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(net.n_f));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(net.m));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(net.k));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.put<std::uint8_t>(l.has_bn ? 1 : 0);
    w.put<std::uint16_t>(static_cast<std::uint16_t>(l.c_in));
    w.put<std::uint16_t>(static_cast<std::uint16_t>(l.c_out));
    w.put_f32(l.kernel);
    w.put_f32(l.bias);
    if (l.has_bn) {
      w.put_f32(l.gamma);
      w.put_f32(l.beta);
      w.put_f32(l.run_mean);
      w.put_f32(l.run_var);
    }
  }
  write_file(path, w);
}

Network<float> load_weights(const std::string& path) {
  const std::vector<unsigned char> buf = read_file(path);
  Reader r(buf.data(), buf.size());
  check_magic_version(r, "LISW");
  const auto arch_b = r.get<std::uint8_t>();
  if (arch_b > 1) throw SchemaMismatch("unknown architecture tag");
  const Arch arch = static_cast<Arch>(arch_b);
  const int depth = r.get<std::uint16_t>();
  const int n_f = r.get<std::uint16_t>();
  const int m = r.get<std::uint16_t>();
  const int k = r.get<std::uint16_t>();
  const int layer_count = r.get<std::uint16_t>();
  if (layer_count != depth)
    throw SchemaMismatch("layer count inconsistent with depth field");
  if (depth < 2 || n_f < 1 || m < 1 || k < 1)
    throw SchemaMismatch("degenerate header dimensions");

  // With (arch, depth, n_f) fixed the full file size is known up front, which
  // separates a cut-off file from a bit-flipped one before the crc runs.
  std::size_t expected = kWeightHeaderBytes;
  for (int l = 0; l < depth; ++l) {
    const int ci = (l == 0) ? input_channels(arch) : n_f;
    const int co = (l == depth - 1) ? output_channels(arch) : n_f;
    expected += layer_bytes(ci, co, l > 0 && l < depth - 1);
  }
  expected += 4;
  if (buf.size() < expected) throw TruncatedFile("weight file is missing tensor data");
  if (buf.size() > expected) throw SchemaMismatch("trailing bytes after checksum");
  verify_crc(buf);

  Network<float> net = make_network<float>(arch, depth, n_f, m, k);
  for (auto& layer : net.layers) {
    const auto kind = r.get<std::uint8_t>();
    if ((kind == 1) != layer.has_bn) throw SchemaMismatch("layer kind mismatch");
    const int ci = r.get<std::uint16_t>();
    const int co = r.get<std::uint16_t>();
    if (ci != layer.c_in || co != layer.c_out)
      throw SchemaMismatch("layer channel counts inconsistent with header");
    r.get_f32(layer.kernel, static_cast<std::size_t>(9) * ci * co);
    r.get_f32(layer.bias, static_cast<std::size_t>(co));
    if (layer.has_bn) {
      r.get_f32(layer.gamma, co);
      r.get_f32(layer.beta, co);
      r.get_f32(layer.run_mean, co);
      r.get_f32(layer.run_var, co);
    }
  }
  return net;
}

void save_dataset(const Dataset<float>& ds, const std::string& path) {
  Writer w;
  w.put_bytes("LISD", 4);
  w.put<std::uint32_t>(1);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.M));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(ds.K));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ds.count()));
  if (ds.snr_db.size() != static_cast<std::size_t>(ds.count()) ||
      ds.sigma.size() != static_cast<std::size_t>(ds.count()))
    throw SchemaMismatch("dataset side arrays not per-sample");
  for (double s : ds.snr_db) w.put<float>(static_cast<float>(s));
  w.put_f32(ds.inputs.v);
  w.put_f32(ds.targets.v);
  w.put_f32(ds.sigma);
  write_file(path, w);
}

Dataset<float> load_dataset(const std::string& path) {
  const std::vector<unsigned char> buf = read_file(path);
  Reader r(buf.data(), buf.size());
  check_magic_version(r, "LISD");
  Dataset<float> ds;
  ds.M = r.get<std::uint16_t>();
  ds.K = r.get<std::uint16_t>();
  const auto n = r.get<std::uint32_t>();
  if (ds.M < 1 || ds.K < 1) throw SchemaMismatch("degenerate header dimensions");

  const std::size_t img = static_cast<std::size_t>(ds.M) * (ds.K + 1) * 2;
  const std::size_t expected =
      kDatasetHeaderBytes + sizeof(float) * (n * (2 * img + 2)) + 4;
  if (buf.size() < expected) throw TruncatedFile("dataset file is missing tensor data");
  if (buf.size() > expected) throw SchemaMismatch("trailing bytes after checksum");
  verify_crc(buf);

  ds.snr_db.resize(n);
  for (auto& s : ds.snr_db) s = r.get<float>();
  ds.inputs = Tensor4<float>(static_cast<int>(n), ds.M, ds.K + 1, 2);
  ds.targets = Tensor4<float>(static_cast<int>(n), ds.M, ds.K + 1, 2);
  r.get_f32(ds.inputs.v, static_cast<std::size_t>(n) * img);
  r.get_f32(ds.targets.v, static_cast<std::size_t>(n) * img);
  r.get_f32(ds.sigma, n);
  return ds;
}

}  // namespace lisce::cnn
