#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace veritas {

// Byte-stable zip writer: entries stored uncompressed, sorted by path,
// per-entry timestamps zeroed. Building the same entry set twice yields
// identical archive bytes.
class ZipWriter {
public:
  explicit ZipWriter(std::filesystem::path path) : path_(std::move(path)) {}

  void add_entry(const std::string& name, std::string_view bytes);
  void add_file(const std::string& name, const std::filesystem::path& source);

  // Sorts and writes the archive. No further adds allowed.
  void finish();

private:
  std::filesystem::path path_;
  std::map<std::string, std::string> entries_;  // name -> bytes, sorted
  bool finished_ = false;
};

class ZipReader {
public:
  explicit ZipReader(const std::filesystem::path& path);

  std::vector<std::string> entry_names() const;  // archive order
  bool contains(const std::string& name) const;
  std::string read(const std::string& name) const;

private:
  struct Entry {
    std::uint32_t header_offset;
    std::uint32_t size;
  };
  std::filesystem::path path_;
  std::vector<std::pair<std::string, Entry>> entries_;
};

std::uint32_t crc32_ieee(std::string_view bytes);

}  // namespace veritas
