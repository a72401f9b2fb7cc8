#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "lus/error.hpp"

namespace lus {

/// LSW1 archive layout, byte exact:
///   magic "LSW1"
///   u32-LE tensor count
///   per tensor: u16-LE name length, UTF-8 name, u8 dtype (0 = f32),
///               u8 ndim, ndim x u32-LE dims, product(dims) x f32-LE payload
///   trailing u32-LE CRC32 (IEEE/zlib polynomial) of all preceding bytes.
/// Little-endian throughout. dtype values other than 0 are reserved.

class ArchiveError : public ModelError {
 public:
  enum class Kind { BadMagic, CrcMismatch, Truncated, DuplicateName, Malformed, Io };

  ArchiveError(Kind kind, const std::string& msg) : ModelError(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct WeightEntry {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t count() const {
    std::size_t p = 1;
    for (auto d : dims) p *= d;
    return p;
  }
};

/// Ordered named-tensor container mirroring the on-disk format. Immutable
/// by convention once loaded; entries keep insertion order.
class WeightArchive {
 public:
  static constexpr int kFormatVersion = 1;  // the "1" in the LSW1 magic

  void add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> values);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  const WeightEntry& at(const std::string& name) const;
  const std::vector<std::pair<std::string, WeightEntry>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const WeightArchive& o) const;

 private:
  std::vector<std::pair<std::string, WeightEntry>> entries_;
  std::map<std::string, std::size_t> index_;
};

void save(const WeightArchive& archive, const std::filesystem::path& path);
WeightArchive load(const std::filesystem::path& path);

/// Renames entries (old name -> new name); unmapped entries pass through
/// unchanged. Used to import externally pretrained backbones onto this
/// project's parameter-slot names.
WeightArchive import_map(const WeightArchive& archive,
                         const std::map<std::string, std::string>& renames);

/// In-memory serialization (the exact bytes save() writes).
std::vector<std::uint8_t> serialize(const WeightArchive& archive);
WeightArchive deserialize(const std::vector<std::uint8_t>& bytes);

/// CRC32, IEEE 802.3 / zlib polynomial (reflected 0xEDB88320).
std::uint32_t crc32_ieee(const std::uint8_t* data, std::size_t len);

}  // namespace lus
