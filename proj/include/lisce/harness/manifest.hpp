#pragma once

// Run provenance record. Written atomically (temp file + rename) as the last
// act of a successful run; a crashed run leaves no manifest behind.

#include <cstdint>
#include <string>
#include <vector>

namespace lisce::harness {

struct ManifestFile {
  std::string name;  // relative to the out directory
  std::uint32_t crc32 = 0;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string version;
  std::string experiment;
  std::uint64_t seed = 0;
  std::string started;   // ISO-8601 UTC; excluded from determinism checks
  std::string finished;
  std::vector<ManifestFile> files;
};

std::string utc_timestamp();

// crc32 of the file contents; byte count through the out parameter.
std::uint32_t file_crc32(const std::string& path, std::uint64_t& bytes);

void write_manifest(const std::string& path, const RunManifest& m);
RunManifest read_manifest(const std::string& path);

}  // namespace lisce::harness
