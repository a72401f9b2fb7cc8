#include "lus/weights.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace lus {

namespace {

constexpr std::array<char, 4> kMagic = {'L', 'S', 'W', '1'};
constexpr std::uint8_t kDtypeF32 = 0;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

class Cursor {
 public:
  Cursor(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

  std::size_t remaining() const { return len_ - pos_; }

  const std::uint8_t* take(std::size_t n) {
    if (remaining() < n) {
      throw ArchiveError(ArchiveError::Kind::Truncated,
                         "LSW1: truncated file (needed " + std::to_string(n) + " bytes, " +
                             std::to_string(remaining()) + " left)");
    }
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }

  std::uint8_t u8() { return *take(1); }
  std::uint16_t u16() {
    const std::uint8_t* p = take(2);
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    const std::uint8_t* p = take(4);
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }

 private:
  const std::uint8_t* data_;
  std::size_t len_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xffu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void WeightArchive::add(std::string name, std::vector<std::uint32_t> dims,
                        std::vector<float> values) {
  if (name.empty()) throw ArchiveError(ArchiveError::Kind::Malformed, "entry name must not be empty");
  if (name.size() > 65535) {
    throw ArchiveError(ArchiveError::Kind::Malformed, "entry name longer than 65535 bytes");
  }
  if (index_.count(name)) {
    throw ArchiveError(ArchiveError::Kind::DuplicateName, "duplicate entry name: " + name);
  }
  WeightEntry entry{std::move(dims), std::move(values)};
  if (entry.count() != entry.values.size()) {
    throw ArchiveError(ArchiveError::Kind::Malformed,
                       "entry '" + name + "': value count " + std::to_string(entry.values.size()) +
                           " != product of dims " + std::to_string(entry.count()));
  }
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(entry));
}

const WeightEntry& WeightArchive::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ModelError("missing weight entry: " + name);
  return entries_[it->second].second;
}

bool WeightArchive::operator==(const WeightArchive& o) const {
  if (entries_.size() != o.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [name_a, a] = entries_[i];
    const auto& [name_b, b] = o.entries_[i];
    if (name_a != name_b || a.dims != b.dims || a.values.size() != b.values.size()) return false;
    // Bit-level comparison: +0.0f == -0.0f must not compare equal here.
    if (!a.values.empty() &&
        std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(float)) != 0) {
      return false;
    }
  }
  return true;
}

std::vector<std::uint8_t> serialize(const WeightArchive& archive) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_u32(out, static_cast<std::uint32_t>(archive.size()));
  for (const auto& [name, entry] : archive.entries()) {
    put_u16(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    out.push_back(kDtypeF32);
    out.push_back(static_cast<std::uint8_t>(entry.dims.size()));
    for (auto d : entry.dims) put_u32(out, d);
    for (float v : entry.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  put_u32(out, crc32_ieee(out.data(), out.size()));
  return out;
}

WeightArchive deserialize(const std::vector<std::uint8_t>& bytes) {
  Cursor cur(bytes.data(), bytes.size());
  const std::uint8_t* magic = cur.take(4);
  if (std::memcmp(magic, kMagic.data(), 4) != 0) {
    throw ArchiveError(ArchiveError::Kind::BadMagic, "LSW1: bad magic");
  }
  const std::uint32_t count = cur.u32();

  WeightArchive archive;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t name_len = cur.u16();
    const std::uint8_t* name_bytes = cur.take(name_len);
    std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    const std::uint8_t dtype = cur.u8();
    if (dtype != kDtypeF32) {
      throw ArchiveError(ArchiveError::Kind::Malformed,
                         "LSW1: unsupported dtype " + std::to_string(dtype) + " for '" + name + "'");
    }
    const std::uint8_t ndim = cur.u8();
    std::vector<std::uint32_t> dims(ndim);
    std::uint64_t product = 1;
    for (auto& d : dims) {
      d = cur.u32();
      product *= d;
    }
    if (product * sizeof(float) > cur.remaining()) {
      throw ArchiveError(ArchiveError::Kind::Truncated,
                         "LSW1: truncated payload for '" + name + "'");
    }
    std::vector<float> values(static_cast<std::size_t>(product));
    for (auto& v : values) v = std::bit_cast<float>(cur.u32());
    if (name.empty()) throw ArchiveError(ArchiveError::Kind::Malformed, "LSW1: empty entry name");
    if (archive.contains(name)) {
      throw ArchiveError(ArchiveError::Kind::DuplicateName, "LSW1: duplicate entry name: " + name);
    }
    archive.add(std::move(name), std::move(dims), std::move(values));
  }

  if (cur.remaining() < 4) {
    throw ArchiveError(ArchiveError::Kind::Truncated, "LSW1: missing trailing CRC32");
  }
  if (cur.remaining() > 4) {
    throw ArchiveError(ArchiveError::Kind::Malformed, "LSW1: trailing bytes after entries");
  }
  const std::uint32_t stored = cur.u32();
  const std::uint32_t computed = crc32_ieee(bytes.data(), bytes.size() - 4);
  if (stored != computed) {
    throw ArchiveError(ArchiveError::Kind::CrcMismatch, "LSW1: CRC32 mismatch");
  }
  return archive;
}

void save(const WeightArchive& archive, const std::filesystem::path& path) {
  const auto bytes = serialize(archive);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError(ArchiveError::Kind::Io, "cannot open for write: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ArchiveError(ArchiveError::Kind::Io, "write failed: " + path.string());
}

WeightArchive load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError(ArchiveError::Kind::Io, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw ArchiveError(ArchiveError::Kind::Io, "read failed: " + path.string());
  return deserialize(bytes);
}

WeightArchive import_map(const WeightArchive& archive,
                         const std::map<std::string, std::string>& renames) {
  for (const auto& [from, to] : renames) {
    (void)to;
    if (!archive.contains(from)) throw ModelError("import_map: no entry named '" + from + "'");
  }
  WeightArchive out;
  for (const auto& [name, entry] : archive.entries()) {
    auto it = renames.find(name);
    const std::string& final_name = (it != renames.end()) ? it->second : name;
    if (out.contains(final_name)) {
      throw ArchiveError(ArchiveError::Kind::DuplicateName,
                         "import_map: rename collision on '" + final_name + "'");
    }
    out.add(final_name, entry.dims, entry.values);
  }
  return out;
}

}  // namespace lus
