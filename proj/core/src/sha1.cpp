#include "phn/sha1.hpp"

#include <array>
#include <cstdint>
#include <cstring>

namespace phn {

namespace {

uint32_t rotl(uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

}  // namespace

std::string sha1_hex(std::string_view data) {
  std::array<uint32_t, 5> h = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                               0xC3D2E1F0u};

  const uint64_t total_bits = static_cast<uint64_t>(data.size()) * 8;
  std::string padded(data);
  padded.push_back(static_cast<char>(0x80));
  while (padded.size() % 64 != 56) padded.push_back('\0');
  for (int i = 7; i >= 0; --i) {
    padded.push_back(static_cast<char>((total_bits >> (8 * i)) & 0xff));
  }

  std::array<uint32_t, 80> w{};
  for (size_t chunk = 0; chunk < padded.size(); chunk += 64) {
    const auto* p = reinterpret_cast<const unsigned char*>(padded.data() + chunk);
    for (int t = 0; t < 16; ++t) {
      w[static_cast<size_t>(t)] = (static_cast<uint32_t>(p[4 * t]) << 24) |
                                  (static_cast<uint32_t>(p[4 * t + 1]) << 16) |
                                  (static_cast<uint32_t>(p[4 * t + 2]) << 8) |
                                  static_cast<uint32_t>(p[4 * t + 3]);
    }
    for (size_t t = 16; t < 80; ++t) {
      w[t] = rotl(w[t - 3] ^ w[t - 8] ^ w[t - 14] ^ w[t - 16], 1);
    }
    uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (size_t t = 0; t < 80; ++t) {
      uint32_t f, k;
      if (t < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (t < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (t < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const uint32_t tmp = rotl(a, 5) + f + e + k + w[t];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(40);
  for (uint32_t word : h) {
    for (int i = 7; i >= 0; --i) out.push_back(hex[(word >> (4 * i)) & 0xf]);
  }
  return out;
}

std::string git_blob_hash(std::string_view content) {
  std::string prefixed = "blob " + std::to_string(content.size());
  prefixed.push_back('\0');
  prefixed.append(content);
  return sha1_hex(prefixed);
}

}  // namespace phn
