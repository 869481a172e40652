#ifndef NPMD_RANDOM_HPP
#define NPMD_RANDOM_HPP

#include <cstdint>
#include <string_view>

namespace npmd {

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// xoshiro256** stream. A stream is identified by (key, index); distinct
/// indices give statistically independent substreams, so per-replication
/// streams do not depend on how replications are scheduled.
class Stream {
 public:
  explicit Stream(std::uint64_t key, std::uint64_t index = 0) noexcept {
    std::uint64_t sm = key ^ (0xD1B54A32D192ED03ULL * (index + 1));
    // Mix the index a second time so nearby (key, index) pairs decorrelate.
    sm = splitmix64(sm) ^ index;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on the open interval (0,1).
  double uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

/// Seed material from a string: decimal integers are used verbatim, anything
/// else is hashed (FNV-1a).
std::uint64_t parse_stream_key(std::string_view text);

}  // namespace npmd

#endif  // NPMD_RANDOM_HPP
