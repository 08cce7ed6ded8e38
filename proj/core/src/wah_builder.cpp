#include <algorithm>

#include "ndactor/wah_device.hpp"

namespace ndactor::wah {

namespace {

NdRange padded_linear(std::size_t n, std::size_t group) {
  std::size_t groups = (std::max<std::size_t>(n, 1) + group - 1) / group;
  return NdRange::linear(groups * group, group);
}

/// Last element of an exclusive scan plus the last input element; the
/// usual way to get a scan's grand total with one tiny read.
std::uint32_t read_total(Device& dev, const Buffer& flags,
                         const Buffer& sums, std::size_t n, Event dep) {
  Buffer one = dev.create_buffer(ElemType::u32, 1);
  KernelDef last{"reduce_last", [](ItemCtx& it) {
                   auto f = it.buf<std::uint32_t>(0);
                   auto s = it.buf<std::uint32_t>(1);
                   auto o = it.buf<std::uint32_t>(2);
                   std::uint32_t n = it.scalar<std::uint32_t>(3);
                   o[0] = f[n - 1] + s[n - 1];
                 }};
  Event ev = dev.enqueue_kernel(
      last, NdRange::linear(1),
      {KernelArg::global(flags), KernelArg::global(sums),
       KernelArg::global(one), KernelArg::scalar(Scalar(std::uint32_t(n)))},
      {std::move(dep)});
  std::uint32_t total = dev.read<std::uint32_t>(one, {ev})[0];
  dev.free_buffer(one);
  return total;
}

}  // namespace

WahIndex build_index(ActorSystem& sys, Device& dev,
                     std::span<const std::uint32_t> values,
                     unsigned digit_bits) {
  WahIndex idx;
  idx.row_count = std::uint32_t(values.size());
  std::size_t n = values.size();
  if (n == 0) return idx;

  std::size_t group = std::min<std::size_t>(256, dev.config().max_group_size);
  CompactionStages stages = spawn_compaction(sys, dev);

  Buffer vals = dev.create_buffer(ElemType::u32, std::int64_t(n));
  Buffer rows = dev.create_buffer(ElemType::u32, std::int64_t(n));
  Event wrote = dev.enqueue_write(
      vals, std::vector<std::uint32_t>(values.begin(), values.end()));

  KernelDef iota{"row_iota", [](ItemCtx& it) {
                   auto r = it.buf<std::uint32_t>(0);
                   std::size_t i = it.global_id(0);
                   if (i < r.size()) r[i] = std::uint32_t(i);
                 }};
  Event numbered = dev.enqueue_kernel(iota, padded_linear(n, group),
                                      {KernelArg::global(rows)});

  Event sorted =
      sort_pairs(dev, vals, rows, n, digit_bits, {wrote, numbered});

  // A run is a maximal span of pairs sharing (value, chunk); each run
  // folds into one literal word.
  Buffer head = dev.create_buffer(ElemType::u32, std::int64_t(n));
  KernelDef run_head{"run_head", [](ItemCtx& it) {
                       auto v = it.buf<std::uint32_t>(0);
                       auto r = it.buf<std::uint32_t>(1);
                       auto h = it.buf<std::uint32_t>(2);
                       std::size_t i = it.global_id(0);
                       if (i >= v.size()) return;
                       h[i] = i == 0 || v[i] != v[i - 1] ||
                              r[i] / kChunkBits != r[i - 1] / kChunkBits;
                     }};
  Event headed = dev.enqueue_kernel(
      run_head, padded_linear(n, group),
      {KernelArg::global(vals), KernelArg::global(rows),
       KernelArg::global(head)},
      {sorted});

  ScanResult run_idx = scan_exclusive(dev, head, n, {headed});
  std::uint32_t run_count =
      read_total(dev, head, run_idx.sums, n, run_idx.done);

  Buffer starts = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  KernelDef mark_start{"run_start", [](ItemCtx& it) {
                         auto h = it.buf<std::uint32_t>(0);
                         auto pos = it.buf<std::uint32_t>(1);
                         auto s = it.buf<std::uint32_t>(2);
                         std::size_t i = it.global_id(0);
                         if (i < h.size() && h[i])
                           s[pos[i]] = std::uint32_t(i);
                       }};
  Event started = dev.enqueue_kernel(
      mark_start, padded_linear(n, group),
      {KernelArg::global(head), KernelArg::global(run_idx.sums),
       KernelArg::global(starts)},
      {run_idx.done});
  dev.free_buffer(head);
  dev.free_buffer(run_idx.sums);

  // Fold each run into its literal word and note its value and chunk.
  Buffer rword = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  Buffer rvalue = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  Buffer rchunk = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  KernelDef fold{"run_fold", [](ItemCtx& it) {
                   auto v = it.buf<std::uint32_t>(0);
                   auto r = it.buf<std::uint32_t>(1);
                   auto s = it.buf<std::uint32_t>(2);
                   auto rw = it.buf<std::uint32_t>(3);
                   auto rv = it.buf<std::uint32_t>(4);
                   auto rc = it.buf<std::uint32_t>(5);
                   std::uint32_t n = it.scalar<std::uint32_t>(6);
                   std::size_t j = it.global_id(0);
                   if (j >= s.size()) return;
                   std::size_t lo = s[j];
                   std::size_t hi = j + 1 < s.size() ? s[j + 1] : n;
                   std::uint32_t w = 0;
                   for (std::size_t i = lo; i < hi; ++i)
                     w |= 1u << (r[i] % kChunkBits);
                   rw[j] = w;
                   rv[j] = v[lo];
                   rc[j] = r[lo] / kChunkBits;
                 }};
  Event folded = dev.enqueue_kernel(
      fold, padded_linear(run_count, group),
      {KernelArg::global(vals), KernelArg::global(rows),
       KernelArg::global(starts), KernelArg::global(rword),
       KernelArg::global(rvalue), KernelArg::global(rchunk),
       KernelArg::scalar(Scalar(std::uint32_t(n)))},
      {started});
  dev.free_buffer(starts);

  // Group the runs by value the same way rows were grouped into runs.
  Buffer vhead = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  KernelDef value_head{"value_head", [](ItemCtx& it) {
                         auto rv = it.buf<std::uint32_t>(0);
                         auto h = it.buf<std::uint32_t>(1);
                         std::size_t j = it.global_id(0);
                         if (j >= rv.size()) return;
                         h[j] = j == 0 || rv[j] != rv[j - 1];
                       }};
  Event vheaded = dev.enqueue_kernel(
      value_head, padded_linear(run_count, group),
      {KernelArg::global(rvalue), KernelArg::global(vhead)}, {folded});

  ScanResult value_idx = scan_exclusive(dev, vhead, run_count, {vheaded});
  std::uint32_t distinct =
      read_total(dev, vhead, value_idx.sums, run_count, value_idx.done);

  Buffer vstarts =
      dev.create_buffer(ElemType::u32, std::int64_t(distinct) + 1);
  KernelDef mark_vstart{"value_start", [](ItemCtx& it) {
                          auto h = it.buf<std::uint32_t>(0);
                          auto pos = it.buf<std::uint32_t>(1);
                          auto s = it.buf<std::uint32_t>(2);
                          std::uint32_t runs = it.scalar<std::uint32_t>(3);
                          std::uint32_t d = it.scalar<std::uint32_t>(4);
                          std::size_t j = it.global_id(0);
                          if (j == 0) s[d] = runs;
                          if (j < h.size() && h[j])
                            s[pos[j]] = std::uint32_t(j);
                        }};
  Event vstarted = dev.enqueue_kernel(
      mark_vstart, padded_linear(run_count, group),
      {KernelArg::global(vhead), KernelArg::global(value_idx.sums),
       KernelArg::global(vstarts), KernelArg::scalar(Scalar(run_count)),
       KernelArg::scalar(Scalar(distinct))},
      {value_idx.done});
  dev.free_buffer(vhead);
  dev.free_buffer(value_idx.sums);

  // Each run emits up to two words: the zero fill covering the gap to
  // its left and its own body. The body of an all-ones run is a ones
  // fill written by the first run of the contiguous stretch; the runs
  // it swallows emit nothing. Unused slots stay zero and are squeezed
  // out by the compaction stages below.
  Buffer fills = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  Buffer body = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  KernelDef emit{"emit_words", [](ItemCtx& it) {
                   auto rw = it.buf<std::uint32_t>(0);
                   auto rv = it.buf<std::uint32_t>(1);
                   auto rc = it.buf<std::uint32_t>(2);
                   auto fill = it.buf<std::uint32_t>(3);
                   auto out = it.buf<std::uint32_t>(4);
                   std::size_t j = it.global_id(0);
                   if (j >= rw.size()) return;
                   bool follows = j > 0 && rv[j - 1] == rv[j];
                   std::uint32_t gap =
                       follows ? rc[j] - rc[j - 1] - 1 : rc[j];
                   if (rw[j] == kLiteralMask) {
                     if (follows && gap == 0 && rw[j - 1] == kLiteralMask)
                       return;  // swallowed by the stretch's first run
                     std::uint32_t len = 1;
                     while (j + len < rw.size() &&
                            rv[j + len] == rv[j] &&
                            rc[j + len] == rc[j] + len &&
                            rw[j + len] == kLiteralMask)
                       ++len;
                     out[j] = make_fill(true, len);
                   } else {
                     out[j] = rw[j];
                   }
                   if (gap > 0) fill[j] = make_fill(false, gap);
                 }};
  Event emitted = dev.enqueue_kernel(
      emit, padded_linear(run_count, group),
      {KernelArg::global(rword), KernelArg::global(rvalue),
       KernelArg::global(rchunk), KernelArg::global(fills),
       KernelArg::global(body)},
      {folded});

  // Word offsets per run, for the per-value table.
  Buffer wcount = dev.create_buffer(ElemType::u32, std::int64_t(run_count));
  KernelDef count_words{"count_words", [](ItemCtx& it) {
                          auto fill = it.buf<std::uint32_t>(0);
                          auto out = it.buf<std::uint32_t>(1);
                          auto wc = it.buf<std::uint32_t>(2);
                          std::size_t j = it.global_id(0);
                          if (j >= wc.size()) return;
                          wc[j] = (fill[j] != 0) + (out[j] != 0);
                        }};
  Event counted = dev.enqueue_kernel(
      count_words, padded_linear(run_count, group),
      {KernelArg::global(fills), KernelArg::global(body),
       KernelArg::global(wcount)},
      {emitted});
  ScanResult word_off = scan_exclusive(dev, wcount, run_count, {counted});

  Buffer out_values =
      dev.create_buffer(ElemType::u32, std::int64_t(distinct));
  Buffer out_offsets =
      dev.create_buffer(ElemType::u32, std::int64_t(distinct));
  Buffer out_lengths =
      dev.create_buffer(ElemType::u32, std::int64_t(distinct));
  KernelDef table{"value_table", [](ItemCtx& it) {
                    auto vs = it.buf<std::uint32_t>(0);
                    auto woff = it.buf<std::uint32_t>(1);
                    auto wc = it.buf<std::uint32_t>(2);
                    auto rv = it.buf<std::uint32_t>(3);
                    auto ov = it.buf<std::uint32_t>(4);
                    auto oo = it.buf<std::uint32_t>(5);
                    auto ol = it.buf<std::uint32_t>(6);
                    std::uint32_t runs = it.scalar<std::uint32_t>(7);
                    std::size_t d = it.global_id(0);
                    if (d >= ov.size()) return;
                    std::uint32_t lo = vs[d];
                    std::uint32_t hi = vs[d + 1];
                    std::uint32_t end = hi < runs
                                            ? woff[hi]
                                            : woff[runs - 1] + wc[runs - 1];
                    ov[d] = rv[lo];
                    oo[d] = woff[lo];
                    ol[d] = end - woff[lo];
                  }};
  Event tabled = dev.enqueue_kernel(
      table, padded_linear(distinct, group),
      {KernelArg::global(vstarts), KernelArg::global(word_off.sums),
       KernelArg::global(wcount), KernelArg::global(rvalue),
       KernelArg::global(out_values), KernelArg::global(out_offsets),
       KernelArg::global(out_lengths), KernelArg::scalar(Scalar(run_count))},
      {vstarted, word_off.done});

  // Squeeze the empty slots out of the interleaved (fill, body) stream
  // through the fused stages; the words arrive compacted and in order.
  Buffer cfg = dev.create_buffer(ElemType::u32, 2);
  Event cfg_wrote = dev.enqueue_write(
      cfg, std::vector<std::uint32_t>{run_count, 0});
  Reply r = sys.request(stages.fused,
                        Message::of(MemRef(cfg, cfg_wrote),
                                    MemRef(fills, emitted),
                                    MemRef(body, emitted)))
                .await();
  if (is_error(r))
    throw WahError("word compaction failed: " + get_error(r).what);
  MemRef cfg_back = get_message(r).at(0).as_ref();
  MemRef packed = get_message(r).at(1).as_ref();
  std::uint32_t total_words = retrieve_u32(cfg_back)[1];
  std::vector<std::uint32_t> words = retrieve_u32(packed);
  release(cfg_back);
  release(packed);
  words.resize(total_words);
  idx.words = std::move(words);

  std::vector<std::uint32_t> out_v =
      dev.read<std::uint32_t>(out_values, {tabled});
  std::vector<std::uint32_t> out_o =
      dev.read<std::uint32_t>(out_offsets, {tabled});
  std::vector<std::uint32_t> out_l =
      dev.read<std::uint32_t>(out_lengths, {tabled});
  if (out_o.back() + out_l.back() != total_words)
    throw WahError("pipeline produced inconsistent word offsets");
  idx.entries.reserve(distinct);
  for (std::uint32_t d = 0; d < distinct; ++d)
    idx.entries.push_back({out_v[d], out_o[d], out_l[d]});

  for (const Buffer& b : {vals, rows, rword, rvalue, rchunk, vstarts,
                          wcount, word_off.sums, out_values, out_offsets,
                          out_lengths})
    dev.free_buffer(b);
  for (const ActorHandle& a :
       {stages.fused, stages.move, stages.count, stages.prepare})
    sys.terminate(a);
  return idx;
}

}  // namespace ndactor::wah
