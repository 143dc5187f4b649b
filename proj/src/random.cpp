#include "probmax/random.hpp"

#include <cmath>
#include <numbers>

namespace probmax {

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

// Two 64-bit words of block `block` under `key`.
inline std::array<std::uint64_t, 2> block_words(std::uint64_t key, std::uint64_t block) {
  const auto r = philox4x32({static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0u, 0u},
                            {static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)});
  return {static_cast<std::uint64_t>(r[0]) | (static_cast<std::uint64_t>(r[1]) << 32),
          static_cast<std::uint64_t>(r[2]) | (static_cast<std::uint64_t>(r[3]) << 32)};
}

inline double to_open_unit(std::uint64_t w) {
  return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

inline std::array<double, 2> box_muller(std::uint64_t key, std::uint64_t block) {
  const auto w = block_words(key, block);
  const double r = std::sqrt(-2.0 * std::log(to_open_unit(w[0])));
  const double theta = 2.0 * std::numbers::pi * to_open_unit(w[1]);
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> c, std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, c[0], hi0, lo0);
    mulhilo(kPhiloxM1, c[2], hi1, lo1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kPhiloxW0;
    k[1] += kPhiloxW1;
  }
  return c;
}

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

RandomStream::RandomStream(std::uint64_t seed) : key_(mix64(seed)) {}

RandomStream::RandomStream(std::uint64_t key, bool) : key_(key) {}

RandomStream RandomStream::derive(std::uint64_t index) const {
  return RandomStream(mix64(key_ ^ mix64(index + 0x632BE59BD9B4E019ull)), true);
}

RandomStream RandomStream::split() {
  RandomStream child(mix64(mix64(key_) ^ mix64(~position_)), true);
  ++position_;
  return child;
}

std::uint64_t RandomStream::next_u64() {
  const std::uint64_t p = position_++;
  return block_words(key_, p >> 1)[p & 1u];
}

double RandomStream::uniform() { return to_open_unit(next_u64()); }

void RandomStream::align_even() { position_ += (position_ & 1u); }

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  align_even();
  const auto pair = box_muller(key_, position_ >> 1);
  position_ += 2;
  spare_ = pair[1];
  has_spare_ = true;
  return pair[0];
}

void RandomStream::fill_normal(std::span<double> out) {
  for (double& v : out) v = normal();
}

RandomStream::NormalBlock RandomStream::reserve_normals(std::uint64_t count) {
  has_spare_ = false;
  align_even();
  NormalBlock block;
  block.key_ = key_;
  block.start_ = position_;
  block.count_ = count;
  position_ += 2 * ((count + 1) / 2);
  return block;
}

double RandomStream::NormalBlock::operator[](std::uint64_t k) const {
  return box_muller(key_, (start_ >> 1) + (k >> 1))[k & 1u];
}

void RandomStream::NormalBlock::fill(std::uint64_t first, std::span<double> out) const {
  std::size_t i = 0;
  std::uint64_t k = first;
  if ((k & 1u) && i < out.size()) {
    out[i++] = (*this)[k++];
  }
  for (; i + 1 < out.size(); i += 2, k += 2) {
    const auto pair = box_muller(key_, (start_ >> 1) + (k >> 1));
    out[i] = pair[0];
    out[i + 1] = pair[1];
  }
  if (i < out.size()) out[i] = (*this)[k];
}

RandomStream replication_stream(std::uint64_t base_seed, std::uint64_t schedule, std::uint64_t replication) {
  return RandomStream(base_seed).derive(schedule).derive(replication);
}

}  // namespace probmax
