#include "ndactor/bench.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ndactor::bench {

namespace {

std::string format_double(double v) {
  std::array<char, 32> buf;
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace

void write_csv(std::ostream& os, std::span<const BenchRecord> records) {
  os << "benchmark,kind,param,run,seconds\n";
  for (const BenchRecord& r : records)
    os << r.benchmark << ',' << r.kind << ',' << r.param << ',' << r.run
       << ',' << format_double(r.seconds) << '\n';
}

void save_csv(const std::filesystem::path& path,
              std::span<const BenchRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() +
                             " for writing");
  write_csv(out, records);
}

double t_quantile_975(std::size_t df) {
  static constexpr double table[] = {
      12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
      2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
      2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
      2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (df == 0) return std::numeric_limits<double>::infinity();
  if (df <= std::size(table)) return table[df - 1];
  // Cornish-Fisher expansion around the normal quantile.
  constexpr double z = 1.9599639845400545;
  double d = double(df);
  return z + (z * z * z + z) / (4 * d) +
         (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96 * d * d);
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("line fit needs at least three points");
  std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= double(n);
  my /= double(n);

  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("all x values are equal");

  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;

  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = y[i] - (f.intercept + f.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  f.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;

  double se = std::sqrt(ss_res / double(n - 2) / sxx);
  double t = t_quantile_975(n - 2);
  f.slope_low = f.slope - t * se;
  f.slope_high = f.slope + t * se;
  return f;
}

void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, std::span<const std::uint8_t> gray) {
  if (gray.size() != width * height)
    throw std::invalid_argument("pixel count does not match dimensions");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw std::runtime_error("cannot open " + path.string() +
                             " for writing");
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(gray.data()),
            std::streamsize(gray.size()));
}

std::vector<std::uint8_t> counts_to_gray(std::span<const std::uint32_t> counts,
                                         std::uint32_t max_iters) {
  std::vector<std::uint8_t> gray(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    gray[i] = std::uint8_t(counts[i] * 255u / max_iters);
  return gray;
}

KernelDef matmul_kernel() {
  return {"matmul", [](ItemCtx& it) {
            auto m1 = it.buf<float>(0);
            auto m2 = it.buf<float>(1);
            auto out = it.buf<float>(2);
            std::size_t x = it.global_id(0);
            std::size_t y = it.global_id(1);
            std::size_t size = it.global_size(0);
            float result = 0;
            for (std::size_t idx = 0; idx < size; ++idx)
              result += m1[idx + y * size] * m2[x + idx * size];
            out[x + y * size] = result;
          }};
}

std::vector<float> random_matrix(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> digit(0, 9);
  std::vector<float> m(n * n);
  for (float& v : m) v = float(digit(rng));
  return m;
}

std::vector<float> matmul_oracle(std::span<const float> m1,
                                 std::span<const float> m2, std::size_t n) {
  std::vector<float> out(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) {
      float result = 0;
      for (std::size_t idx = 0; idx < n; ++idx)
        result += m1[idx + y * n] * m2[x + idx * n];
      out[x + y * n] = result;
    }
  return out;
}

ActorHandle spawn_matmul(ActorSystem& sys, Device& dev) {
  ComputeActorSpec spec;
  spec.kernel = matmul_kernel();
  spec.args = {ArgSpec::in(ElemType::f32), ArgSpec::in(ElemType::f32),
               ArgSpec::out(ElemType::f32)};
  spec.range_fn = [](const Message& m) {
    std::size_t n = 1;
    if (!m.empty() && m.at(0).is_array())
      n = std::size_t(std::sqrt(double(m.at(0).array_length())));
    return NdRange::grid2(n, n);
  };
  return spawn_compute(sys, dev, std::move(spec));
}

std::vector<float> request_matmul(ActorSystem& sys, const ActorHandle& actor,
                                  std::vector<float> m1,
                                  std::vector<float> m2, std::size_t n) {
  Reply r =
      sys.request(actor, Message::of(std::move(m1), std::move(m2))).await();
  if (is_error(r))
    throw std::runtime_error("matmul request failed: " + get_error(r).what);
  std::vector<float> out = get_message(r).at(0).as_f32s();
  if (out.size() != n * n)
    throw std::runtime_error("matmul reply has the wrong shape");
  return out;
}

std::vector<float> enqueue_matmul(Device& dev, const std::vector<float>& m1,
                                  const std::vector<float>& m2,
                                  std::size_t n) {
  Buffer b1 = dev.create_buffer(ElemType::f32, std::int64_t(n * n));
  Buffer b2 = dev.create_buffer(ElemType::f32, std::int64_t(n * n));
  Buffer bo = dev.create_buffer(ElemType::f32, std::int64_t(n * n));
  Event w1 = dev.enqueue_write(b1, m1);
  Event w2 = dev.enqueue_write(b2, m2);
  Event run = dev.enqueue_kernel(
      matmul_kernel(), NdRange::grid2(n, n),
      {KernelArg::global(b1), KernelArg::global(b2), KernelArg::global(bo)},
      {w1, w2});
  std::vector<float> out = dev.read<float>(bo, {run});
  dev.free_buffer(b1);
  dev.free_buffer(b2);
  dev.free_buffer(bo);
  return out;
}

std::vector<std::uint32_t> render_mandel(ActorSystem& sys, Device& dev,
                                         std::size_t width,
                                         std::size_t height,
                                         std::uint32_t max_iters,
                                         double device_fraction,
                                         MandelRegion region) {
  double step_re = (region.re_max - region.re_min) / double(width);
  double step_im = (region.im_max - region.im_min) / double(height);
  std::size_t device_rows =
      std::size_t(std::llround(device_fraction * double(height)));
  device_rows = std::min(device_rows, height);

  std::vector<std::uint32_t> counts(width * height);

  if (device_rows > 0) {
    ComputeActorSpec spec;
    spec.kernel =
        KernelDef{"mandel", [](ItemCtx& it) {
                    auto p = it.buf<double>(0);
                    auto out = it.buf<std::uint32_t>(1);
                    std::uint32_t iters = it.scalar<std::uint32_t>(2);
                    double re = p[0] + double(it.global_id(0)) * p[2];
                    double im = p[1] + double(it.global_id(1)) * p[3];
                    out[it.linear_global_id()] =
                        mandel_escape(re, im, iters);
                  }};
    spec.args = {ArgSpec::in(ElemType::f64), ArgSpec::out(ElemType::u32),
                 ArgSpec::priv(Scalar(max_iters))};
    spec.range = NdRange::grid2(width, device_rows);
    ActorHandle actor = spawn_compute(sys, dev, std::move(spec));

    Reply r = sys.request(
                     actor, Message::of(std::vector<double>{
                                region.re_min, region.im_min, step_re,
                                step_im}))
                  .await();
    sys.terminate(actor);
    if (is_error(r))
      throw std::runtime_error("mandel request failed: " +
                               get_error(r).what);
    const std::vector<std::uint32_t>& slice = get_message(r).at(0).as_u32s();
    if (slice.size() != width * device_rows)
      throw std::runtime_error("mandel reply has the wrong shape");
    std::copy(slice.begin(), slice.end(), counts.begin());
  }

  for (std::size_t y = device_rows; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      counts[y * width + x] =
          mandel_escape(region.re_min + double(x) * step_re,
                        region.im_min + double(y) * step_im, max_iters);
  return counts;
}

double time_spawn_ping(std::size_t count) {
  auto t0 = Clock::now();
  {
    ActorSystem sys;
    std::vector<ActorHandle> actors;
    actors.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      actors.push_back(sys.spawn(Behavior{}.on(
          {ValueKind::i64}, [](Context&, Message m) {
            return HandlerResult::reply(
                Message::of(m.at(0).as_i64() + 1));
          })));

    std::vector<ResponseHandle> pending;
    pending.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
      pending.push_back(
          sys.request(actors[i], Message::of(std::int64_t(i))));
    for (std::size_t i = 0; i < count; ++i) {
      Reply r = pending[i].await();
      if (is_error(r) ||
          get_message(r).at(0).as_i64() != std::int64_t(i) + 1)
        throw std::runtime_error("spawned actor answered incorrectly");
    }
    sys.shutdown();
  }
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace ndactor::bench
