#include "ndactor/wah_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace ndactor::wah {

namespace {

constexpr char kMagic[4] = {'W', 'A', 'H', '1'};

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(std::byte((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::span<const std::byte> bytes, std::size_t& pos) {
  if (bytes.size() - pos < 4) throw WahError("index data is truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= std::uint32_t(std::to_integer<unsigned>(bytes[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

std::vector<std::byte> serialize_index(const WahIndex& idx) {
  std::vector<std::byte> out;
  out.reserve(16 + 12 * idx.entries.size() + 4 * idx.words.size());
  for (char c : kMagic) out.push_back(std::byte(c));
  put_u32(out, idx.row_count);
  put_u32(out, std::uint32_t(idx.entries.size()));
  put_u32(out, std::uint32_t(idx.words.size()));
  for (const IndexEntry& e : idx.entries) {
    put_u32(out, e.value);
    put_u32(out, e.offset);
    put_u32(out, e.length);
  }
  for (std::uint32_t w : idx.words) put_u32(out, w);
  return out;
}

WahIndex parse_index(std::span<const std::byte> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw WahError("not a WAH index file");
  std::size_t pos = 4;
  WahIndex idx;
  idx.row_count = get_u32(bytes, pos);
  std::uint32_t distinct = get_u32(bytes, pos);
  std::uint32_t total_words = get_u32(bytes, pos);
  idx.entries.reserve(distinct);
  for (std::uint32_t i = 0; i < distinct; ++i) {
    IndexEntry e;
    e.value = get_u32(bytes, pos);
    e.offset = get_u32(bytes, pos);
    e.length = get_u32(bytes, pos);
    if (std::uint64_t(e.offset) + e.length > total_words)
      throw WahError("index entry points past the word array");
    idx.entries.push_back(e);
  }
  idx.words.reserve(total_words);
  for (std::uint32_t i = 0; i < total_words; ++i)
    idx.words.push_back(get_u32(bytes, pos));
  if (pos != bytes.size()) throw WahError("trailing bytes after index data");
  return idx;
}

void write_index_file(const std::filesystem::path& path, const WahIndex& idx) {
  std::vector<std::byte> bytes = serialize_index(idx);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw WahError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            std::streamsize(bytes.size()));
  if (!out) throw WahError("write to " + path.string() + " failed");
}

WahIndex read_index_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WahError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  return parse_index(
      std::span(reinterpret_cast<const std::byte*>(raw.data()), raw.size()));
}

std::vector<std::uint32_t> read_values_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WahError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
  if (raw.size() % 4 != 0)
    throw WahError(path.string() + " is not a whole number of u32 values");
  std::vector<std::uint32_t> values(raw.size() / 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b)
      v |= std::uint32_t(static_cast<unsigned char>(raw[4 * i + b]))
           << (8 * b);
    values[i] = v;
  }
  return values;
}

std::vector<std::uint32_t> read_values_text(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WahError("cannot open " + path.string());
  std::vector<std::uint32_t> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::uint64_t v;
    if (!(ls >> v)) {
      std::string rest;
      if (ls.clear(), ls >> rest)
        throw WahError(path.string() + ":" + std::to_string(lineno) +
                       ": expected an unsigned integer");
      continue;  // blank line
    }
    std::string rest;
    if (ls >> rest || v > 0xffffffffull)
      throw WahError(path.string() + ":" + std::to_string(lineno) +
                     ": expected one u32 per line");
    values.push_back(std::uint32_t(v));
  }
  return values;
}

}  // namespace ndactor::wah
