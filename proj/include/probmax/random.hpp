#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace probmax {

/// Philox4x32-10 block function: maps (counter, key) to four 32-bit words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream.
///
/// The stream is a sequence of 64-bit words; word `p` is a pure function of
/// (key, p), so any position can be produced without generating the ones
/// before it. Normals come in Box-Muller pairs built from two consecutive
/// words starting at an even position. Copying a stream copies its position:
/// two copies produce identical draws (used for common random numbers).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0);

  /// Independent child stream keyed by (this key, index); starts at position 0.
  /// Does not advance this stream.
  [[nodiscard]] RandomStream derive(std::uint64_t index) const;

  /// Child stream keyed by the current position, then advances this stream,
  /// so successive splits give distinct children.
  RandomStream split();

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out);

  /// Random-access view over `count` normals. Equivalent to `count` calls of
  /// normal() on a copy of this stream with no cached spare.
  class NormalBlock {
   public:
    double operator[](std::uint64_t k) const;
    void fill(std::uint64_t first, std::span<double> out) const;
    [[nodiscard]] std::uint64_t size() const { return count_; }

   private:
    friend class RandomStream;
    std::uint64_t key_ = 0;
    std::uint64_t start_ = 0;  // even word position
    std::uint64_t count_ = 0;
  };

  /// Reserves a block of normals and advances past it. Drops any cached spare.
  NormalBlock reserve_normals(std::uint64_t count);

  [[nodiscard]] std::uint64_t key() const { return key_; }
  [[nodiscard]] std::uint64_t position() const { return position_; }

 private:
  RandomStream(std::uint64_t key, bool);
  void align_even();

  std::uint64_t key_;
  std::uint64_t position_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer; used to derive keys from (seed, index) paths.
std::uint64_t mix64(std::uint64_t z);

/// Stream for replication `replication` of schedule `schedule` under `base_seed`.
RandomStream replication_stream(std::uint64_t base_seed, std::uint64_t schedule,
                                std::uint64_t replication);

}  // namespace probmax
