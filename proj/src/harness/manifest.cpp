#include "lisce/harness/manifest.hpp"

#include <zlib.h>

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lisce/errors.hpp"

namespace lisce::harness {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint32_t file_crc32(const std::string& path, std::uint64_t& bytes) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  char buf[1 << 16];
  uLong crc = ::crc32(0L, nullptr, 0);
  bytes = 0;
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf), static_cast<uInt>(f.gcount()));
    bytes += static_cast<std::uint64_t>(f.gcount());
  }
  return static_cast<std::uint32_t>(crc);
}

void write_manifest(const std::string& path, const RunManifest& m) {
  std::ostringstream o;
  o << "version = " << m.version << "\n";
  o << "experiment = " << m.experiment << "\n";
  o << "seed = " << m.seed << "\n";
  o << "started = " << m.started << "\n";
  o << "finished = " << m.finished << "\n";
  for (const auto& f : m.files) {
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", f.crc32);
    o << "file = " << f.name << " crc32=" << crc << " bytes=" << f.bytes << "\n";
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f << o.str();
    if (!f) throw IoError("short write: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move manifest into place: " + ec.message());
}

RunManifest read_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open for reading: " + path);
  RunManifest m;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw SchemaMismatch("manifest line without ' = '");
    const std::string key = line.substr(0, eq);
    const std::string val = line.substr(eq + 3);
    if (key == "version") m.version = val;
    else if (key == "experiment") m.experiment = val;
    else if (key == "seed") m.seed = std::stoull(val);
    else if (key == "started") m.started = val;
    else if (key == "finished") m.finished = val;
    else if (key == "file") {
      ManifestFile mf;
      std::stringstream ss(val);
      std::string crc_tok, bytes_tok;
      ss >> mf.name >> crc_tok >> bytes_tok;
      if (crc_tok.rfind("crc32=", 0) != 0 || bytes_tok.rfind("bytes=", 0) != 0)
        throw SchemaMismatch("malformed manifest file entry");
      mf.crc32 = static_cast<std::uint32_t>(std::stoul(crc_tok.substr(6), nullptr, 16));
      mf.bytes = std::stoull(bytes_tok.substr(6));
      m.files.push_back(mf);
    } else {
      throw SchemaMismatch("unknown manifest key '" + key + "'");
    }
  }
  return m;
}

}  // namespace lisce::harness
