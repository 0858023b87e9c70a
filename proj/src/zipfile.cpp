#include "veritas/zipfile.hpp"

#include <array>
#include <fstream>

#include "veritas/errors.hpp"

namespace veritas {

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;
constexpr std::uint32_t kMax32 = 0xfffffffeu;

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint16_t get16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t n = 0; n < 256; ++n) {
      std::uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[n] = c;
    }
    return t;
  }();
  return table;
}

}  // namespace

std::uint32_t crc32_ieee(std::string_view bytes) {
  const auto& t = crc_table();
  std::uint32_t c = 0xffffffffu;
  for (unsigned char b : std::string_view(bytes)) {
    c = t[(c ^ b) & 0xff] ^ (c >> 8);
  }
  return c ^ 0xffffffffu;
}

void ZipWriter::add_entry(const std::string& name, std::string_view bytes) {
  if (finished_) fail(Errc::io_error, "zip writer already finished");
  if (name.empty() || name.front() == '/' || name.find('\\') != std::string::npos) {
    fail(Errc::bad_path, "bad zip entry name: " + name);
  }
  if (bytes.size() > kMax32) fail(Errc::io_error, "zip entry too large: " + name);
  entries_[name] = std::string(bytes);
}

void ZipWriter::add_file(const std::string& name, const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot read " + source.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::io_error, "read error on " + source.string());
  add_entry(name, bytes);
}

void ZipWriter::finish() {
  if (finished_) fail(Errc::io_error, "zip writer already finished");
  finished_ = true;

  std::string out;
  struct Central {
    std::string name;
    std::uint32_t crc;
    std::uint32_t size;
    std::uint32_t offset;
  };
  std::vector<Central> centrals;
  centrals.reserve(entries_.size());

  for (const auto& [name, bytes] : entries_) {
    if (out.size() > kMax32) fail(Errc::io_error, "zip archive too large");
    Central c;
    c.name = name;
    c.crc = crc32_ieee(bytes);
    c.size = static_cast<std::uint32_t>(bytes.size());
    c.offset = static_cast<std::uint32_t>(out.size());
    put32(out, kLocalSig);
    put16(out, 20);      // version needed
    put16(out, 0);       // flags
    put16(out, 0);       // method: store
    put16(out, 0);       // mod time (zeroed)
    put16(out, 0);       // mod date (zeroed)
    put32(out, c.crc);
    put32(out, c.size);  // compressed
    put32(out, c.size);  // uncompressed
    put16(out, static_cast<std::uint16_t>(name.size()));
    put16(out, 0);       // extra len
    out += name;
    out += bytes;
    centrals.push_back(std::move(c));
  }

  const std::uint32_t central_start = static_cast<std::uint32_t>(out.size());
  for (const auto& c : centrals) {
    put32(out, kCentralSig);
    put16(out, 20);  // version made by
    put16(out, 20);  // version needed
    put16(out, 0);   // flags
    put16(out, 0);   // method
    put16(out, 0);   // time
    put16(out, 0);   // date
    put32(out, c.crc);
    put32(out, c.size);
    put32(out, c.size);
    put16(out, static_cast<std::uint16_t>(c.name.size()));
    put16(out, 0);  // extra
    put16(out, 0);  // comment
    put16(out, 0);  // disk number
    put16(out, 0);  // internal attrs
    put32(out, 0);  // external attrs
    put32(out, c.offset);
    out += c.name;
  }
  const std::uint32_t central_size = static_cast<std::uint32_t>(out.size()) - central_start;
  put32(out, kEocdSig);
  put16(out, 0);  // disk
  put16(out, 0);  // central dir disk
  put16(out, static_cast<std::uint16_t>(centrals.size()));
  put16(out, static_cast<std::uint16_t>(centrals.size()));
  put32(out, central_size);
  put32(out, central_start);
  put16(out, 0);  // comment len

  std::ofstream f(path_, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::io_error, "cannot write " + path_.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  f.flush();
  if (!f) fail(Errc::io_error, "write error on " + path_.string());
}

ZipReader::ZipReader(const std::filesystem::path& path) : path_(path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::unreadable_bundle, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(Errc::unreadable_bundle, "read error on " + path.string());
  if (data.size() < 22) fail(Errc::unreadable_bundle, "too small to be an archive");

  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
  // Find the end-of-central-directory record (scan back over a comment).
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = data.size() >= 22 + 65535 ? data.size() - 22 - 65535 : 0;
  for (std::size_t i = data.size() - 22; ; --i) {
    if (get32(bytes + i) == kEocdSig) {
      eocd = i;
      break;
    }
    if (i == lowest) break;
  }
  if (eocd == std::string::npos) fail(Errc::unreadable_bundle, "no end-of-central-directory");

  const std::uint16_t count = get16(bytes + eocd + 10);
  const std::uint32_t central_size = get32(bytes + eocd + 12);
  const std::uint32_t central_start = get32(bytes + eocd + 16);
  if (central_start + central_size > data.size()) {
    fail(Errc::unreadable_bundle, "central directory out of range");
  }

  std::size_t pos = central_start;
  for (std::uint16_t i = 0; i < count; ++i) {
    if (pos + 46 > data.size() || get32(bytes + pos) != kCentralSig) {
      fail(Errc::unreadable_bundle, "bad central directory entry");
    }
    const std::uint16_t method = get16(bytes + pos + 10);
    const std::uint32_t size = get32(bytes + pos + 24);
    const std::uint16_t name_len = get16(bytes + pos + 28);
    const std::uint16_t extra_len = get16(bytes + pos + 30);
    const std::uint16_t comment_len = get16(bytes + pos + 32);
    const std::uint32_t offset = get32(bytes + pos + 42);
    if (pos + 46 + name_len > data.size()) fail(Errc::unreadable_bundle, "truncated entry name");
    if (method != 0) fail(Errc::unreadable_bundle, "unsupported compression method");
    std::string name = data.substr(pos + 46, name_len);
    // A crafted archive must not be able to show a verifier one payload and
    // an extraction tool another.
    if (contains(name)) fail(Errc::unreadable_bundle, "duplicate entry name: " + name);
    if (name.empty() || name.front() == '/' || name.find("..") != std::string::npos ||
        name.find('\\') != std::string::npos) {
      fail(Errc::unreadable_bundle, "unsafe entry name: " + name);
    }
    entries_.emplace_back(std::move(name), Entry{offset, size});
    pos += 46u + name_len + extra_len + comment_len;
  }
}

std::vector<std::string> ZipReader::entry_names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) names.push_back(name);
  return names;
}

bool ZipReader::contains(const std::string& name) const {
  for (const auto& [n, e] : entries_) {
    if (n == name) return true;
  }
  return false;
}

std::string ZipReader::read(const std::string& name) const {
  const Entry* found = nullptr;
  for (const auto& [n, e] : entries_) {
    if (n == name) {
      found = &e;
      break;
    }
  }
  if (!found) fail(Errc::unreadable_bundle, "no such entry: " + name);

  std::ifstream in(path_, std::ios::binary);
  if (!in) fail(Errc::unreadable_bundle, "cannot open " + path_.string());
  std::array<unsigned char, 30> hdr;
  in.seekg(found->header_offset);
  in.read(reinterpret_cast<char*>(hdr.data()), 30);
  if (!in || get32(hdr.data()) != kLocalSig) {
    fail(Errc::unreadable_bundle, "bad local header for " + name);
  }
  const std::uint16_t name_len = get16(hdr.data() + 26);
  const std::uint16_t extra_len = get16(hdr.data() + 28);
  in.seekg(found->header_offset + 30 + name_len + extra_len);
  std::string out(found->size, '\0');
  in.read(out.data(), static_cast<std::streamsize>(out.size()));
  if (!in) fail(Errc::unreadable_bundle, "truncated data for " + name);
  // CRC deliberately not re-checked here; every consumer above this layer
  // re-hashes entry bytes with SHA-256.
  return out;
}

}  // namespace veritas
