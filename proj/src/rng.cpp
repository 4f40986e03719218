#include "islimits/rng.hpp"

namespace islimits {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> Stream::philox(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

void Stream::refill() {
  const std::array<std::uint32_t, 2> key0 = {static_cast<std::uint32_t>(seed_),
                                             static_cast<std::uint32_t>(seed_ >> 32)};
  std::array<std::array<std::uint32_t, 4>, kLanes> ctr;
  for (int l = 0; l < kLanes; ++l) {
    const std::uint64_t b = block_ + static_cast<std::uint64_t>(l);
    ctr[l] = {static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
              static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  }
  std::array<std::uint32_t, 2> key = key0;
  for (int round = 0; round < 10; ++round) {
    for (auto& c : ctr) {
      std::uint32_t hi0, lo0, hi1, lo1;
      mulhilo(kPhiloxM0, c[0], hi0, lo0);
      mulhilo(kPhiloxM1, c[2], hi1, lo1);
      c = {hi1 ^ c[1] ^ key[0], lo1, hi0 ^ c[3] ^ key[1], lo0};
    }
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  for (int l = 0; l < kLanes; ++l) {
    buffer_[2 * l] = (static_cast<std::uint64_t>(ctr[l][1]) << 32) | ctr[l][0];
    buffer_[2 * l + 1] = (static_cast<std::uint64_t>(ctr[l][3]) << 32) | ctr[l][2];
  }
  next_ = 0;
  block_ += kLanes;
}

Stream Stream::split(std::uint64_t child) const {
  return Stream(seed_, mix64(stream_id_ ^ mix64(child + 0x632BE59BD9B4E019ull)));
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t replicate_stream_id(std::uint64_t cell, std::uint64_t replicate) {
  return mix64(mix64(cell) ^ (replicate * 0xD1B54A32D192ED03ull + 1));
}

double uniform01(Stream& s) {
  return static_cast<double>(s() >> 11) * 0x1.0p-53;
}

}  // namespace islimits
