#include "ndactor/wah.hpp"

#include <algorithm>
#include <numeric>

namespace ndactor::wah {

std::vector<std::uint32_t> encode(const std::vector<bool>& bits) {
  CanonicalWriter w;
  std::size_t n = bits.size();
  for (std::size_t base = 0; base < n; base += kChunkBits) {
    std::uint32_t chunk = 0;
    std::size_t top = std::min(n, base + kChunkBits);
    for (std::size_t i = base; i < top; ++i)
      if (bits[i]) chunk |= 1u << (i - base);
    w.chunk(chunk);
  }
  return w.take();
}

std::vector<bool> decode(std::span<const std::uint32_t> words) {
  std::vector<bool> bits;
  for (std::uint32_t word : words) {
    if (is_fill(word)) {
      std::uint32_t len = fill_len(word);
      if (len == 0) throw WahError("fill word with zero length");
      bits.resize(bits.size() + std::size_t(len) * kChunkBits,
                  is_ones_fill(word));
    } else {
      for (std::uint32_t i = 0; i < kChunkBits; ++i)
        bits.push_back((word >> i) & 1u);
    }
  }
  return bits;
}

std::vector<bool> decode_exact(std::span<const std::uint32_t> words,
                               std::size_t n) {
  std::vector<bool> bits = decode(words);
  if (bits.size() < n) throw WahError("words cover fewer bits than expected");
  if (bits.size() >= n + kChunkBits)
    throw WahError("words cover a whole chunk beyond the expected bits");
  for (std::size_t i = n; i < bits.size(); ++i)
    if (bits[i]) throw WahError("padding bit is set");
  bits.resize(n);
  return bits;
}

WahIndex reference_index(std::span<const std::uint32_t> values) {
  WahIndex idx;
  idx.row_count = std::uint32_t(values.size());

  // Rows per value, in row order: a stable sort of (value, row) pairs
  // keeps each value's rows ascending.
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return values[a] < values[b];
                   });

  std::size_t i = 0;
  while (i < order.size()) {
    std::uint32_t value = values[order[i]];
    CanonicalWriter w;
    std::uint32_t chunk = 0;
    std::uint32_t chunk_idx = 0;
    bool open = false;
    for (; i < order.size() && values[order[i]] == value; ++i) {
      std::uint32_t row = order[i];
      std::uint32_t c = row / kChunkBits;
      if (open && c != chunk_idx) {
        w.chunk(chunk);
        w.uniform(false, c - chunk_idx - 1);
        chunk = 0;
      } else if (!open) {
        w.uniform(false, c);
      }
      chunk |= 1u << (row % kChunkBits);
      chunk_idx = c;
      open = true;
    }
    w.chunk(chunk);

    std::vector<std::uint32_t> words = w.take();
    idx.entries.push_back({value, std::uint32_t(idx.words.size()),
                           std::uint32_t(words.size())});
    idx.words.insert(idx.words.end(), words.begin(), words.end());
  }
  return idx;
}

std::vector<std::uint32_t> rows_for(const WahIndex& idx, std::uint32_t value) {
  auto it = std::lower_bound(
      idx.entries.begin(), idx.entries.end(), value,
      [](const IndexEntry& e, std::uint32_t v) { return e.value < v; });
  std::vector<std::uint32_t> rows;
  if (it == idx.entries.end() || it->value != value) return rows;
  std::vector<bool> bits = decode(idx.bitmap(*it));
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) rows.push_back(std::uint32_t(i));
  return rows;
}

bool operator==(const WahIndex& a, const WahIndex& b) {
  if (a.row_count != b.row_count || a.words != b.words ||
      a.entries.size() != b.entries.size())
    return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    const IndexEntry& x = a.entries[i];
    const IndexEntry& y = b.entries[i];
    if (x.value != y.value || x.offset != y.offset || x.length != y.length)
      return false;
  }
  return true;
}

}  // namespace ndactor::wah
