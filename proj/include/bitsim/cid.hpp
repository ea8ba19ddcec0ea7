#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitsim {

// Content identifier: a fixed-length digest of the block bytes.
// FNV-1a/64 is collision-free at simulation scale and keeps the
// artifact dependency-free.
struct Cid {
  std::uint64_t digest = 0;

  auto operator<=>(const Cid&) const = default;

  std::string to_hex() const {
    static const char* k = "0123456789abcdef";
    std::string s(16, '0');
    std::uint64_t d = digest;
    for (int i = 15; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = k[d & 0xf];
      d >>= 4;
    }
    return s;
  }

  // Short prefix for trace dumps.
  std::string prefix() const { return to_hex().substr(0, 8); }
};

inline Cid cid_of(const std::string& data) {
  if (data.empty()) {
    throw std::invalid_argument("cid_of: empty data");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return Cid{h};
}

// Block data is shared so messages and blockstores copy cheaply.
struct Block {
  Cid cid;
  std::shared_ptr<const std::string> data;

  std::size_t size() const { return data ? data->size() : 0; }
};

inline Block make_block(std::string data) {
  Block b;
  b.cid = cid_of(data);
  b.data = std::make_shared<const std::string>(std::move(data));
  return b;
}

// Splits content into fixed-size blocks; the last block may be short.
inline std::vector<Block> chunk_content(const std::string& data,
                                        std::size_t block_size) {
  if (block_size < 1) {
    throw std::invalid_argument("chunk_content: block_size must be >= 1");
  }
  std::vector<Block> out;
  for (std::size_t off = 0; off < data.size(); off += block_size) {
    out.push_back(make_block(data.substr(off, block_size)));
  }
  return out;
}

}  // namespace bitsim
