#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ndactor::wah {

struct WahError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Word layout: bit 31 clear = literal, bits 0..30 carry 31 rows (bit i of
// chunk c is row c*31 + i). Bit 31 set = fill: bit 30 is the fill value,
// bits 0..29 the run length in chunks, at least 1.
inline constexpr std::uint32_t kChunkBits = 31;
inline constexpr std::uint32_t kFillFlag = 0x80000000u;
inline constexpr std::uint32_t kOnesFlag = 0x40000000u;
inline constexpr std::uint32_t kLenMask = 0x3fffffffu;
inline constexpr std::uint32_t kLiteralMask = 0x7fffffffu;

constexpr bool is_fill(std::uint32_t w) { return (w & kFillFlag) != 0; }
constexpr bool is_ones_fill(std::uint32_t w) {
  return is_fill(w) && (w & kOnesFlag) != 0;
}
constexpr std::uint32_t fill_len(std::uint32_t w) { return w & kLenMask; }
constexpr std::uint32_t make_fill(bool ones, std::uint32_t len) {
  return kFillFlag | (ones ? kOnesFlag : 0u) | len;
}

/// Emits canonical words from a chunk stream: uniform chunks always
/// become fills, adjacent fills of the same value merge, literals are
/// reserved for mixed chunks.
class CanonicalWriter {
public:
  void chunk(std::uint32_t bits) {
    if (bits == 0)
      uniform(false, 1);
    else if (bits == kLiteralMask)
      uniform(true, 1);
    else {
      flush();
      words_.push_back(bits);
    }
  }

  void uniform(bool ones, std::uint64_t count) {
    if (count == 0) return;
    if (run_len_ > 0 && run_ones_ != ones) flush();
    run_ones_ = ones;
    run_len_ += count;
  }

  std::vector<std::uint32_t> take() {
    flush();
    return std::move(words_);
  }

private:
  void flush() {
    while (run_len_ > 0) {
      std::uint32_t l =
          run_len_ > kLenMask ? kLenMask : std::uint32_t(run_len_);
      words_.push_back(make_fill(run_ones_, l));
      run_len_ -= l;
    }
  }

  std::vector<std::uint32_t> words_;
  bool run_ones_ = false;
  std::uint64_t run_len_ = 0;
};

/// Compresses a bitmap; the words cover the bits rounded up to whole
/// chunks, padding with zeros.
std::vector<std::uint32_t> encode(const std::vector<bool>& bits);

/// Expands all covered bits.
std::vector<bool> decode(std::span<const std::uint32_t> words);

/// Expands exactly `n` bits, checking the words cover them with less
/// than one chunk of slack and that no padding bit is set.
std::vector<bool> decode_exact(std::span<const std::uint32_t> words,
                               std::size_t n);

struct IndexEntry {
  std::uint32_t value = 0;
  std::uint32_t offset = 0;
  std::uint32_t length = 0;
};

/// Per-value bitmaps over a row stream: entries are sorted by value and
/// each points into the shared word array. A value's bitmap ends at its
/// last occurrence; the trailing zero run is not stored.
struct WahIndex {
  std::uint32_t row_count = 0;
  std::vector<IndexEntry> entries;
  std::vector<std::uint32_t> words;

  std::span<const std::uint32_t> bitmap(const IndexEntry& e) const {
    return {words.data() + e.offset, e.length};
  }
};

/// Single-threaded index construction, the ground truth the device
/// pipeline is checked against.
WahIndex reference_index(std::span<const std::uint32_t> values);

/// Rows holding `value`, decoded from the index; empty when absent.
std::vector<std::uint32_t> rows_for(const WahIndex& idx, std::uint32_t value);

bool operator==(const WahIndex& a, const WahIndex& b);

}  // namespace ndactor::wah
