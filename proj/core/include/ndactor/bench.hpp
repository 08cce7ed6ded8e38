#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ndactor/compute_actor.hpp"

namespace ndactor::bench {

/// One timed run of one benchmark configuration.
struct BenchRecord {
  std::string benchmark;
  std::string kind;
  std::uint64_t param = 0;
  unsigned run = 0;
  double seconds = 0;
};

void write_csv(std::ostream& os, std::span<const BenchRecord> records);
void save_csv(const std::filesystem::path& path,
              std::span<const BenchRecord> records);

/// Ordinary least squares over (x, y) with a 95% confidence interval
/// for the slope. Needs at least three points.
struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_low = 0;
  double slope_high = 0;
};

LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Two-sided 95% Student-t critical value.
double t_quantile_975(std::size_t df);

/// 8-bit binary PGM.
void write_pgm(const std::filesystem::path& path, std::size_t width,
               std::size_t height, std::span<const std::uint8_t> gray);

/// Iteration counts to gray: count * 255 / max_iters.
std::vector<std::uint8_t> counts_to_gray(std::span<const std::uint32_t> counts,
                                         std::uint32_t max_iters);

// --- square matrix multiply ------------------------------------------

/// out[x + y*n] = sum over idx of m1[idx + y*n] * m2[x + idx*n],
/// one item per output element over an n x n index space.
KernelDef matmul_kernel();

/// Entries are small integers, so host and device products are exact
/// in f32 and results compare bit for bit.
std::vector<float> random_matrix(std::mt19937& rng, std::size_t n);

std::vector<float> matmul_oracle(std::span<const float> m1,
                                 std::span<const float> m2, std::size_t n);

/// Compute actor answering (m1, m2) with the product; the dimension
/// comes from the operand length.
ActorHandle spawn_matmul(ActorSystem& sys, Device& dev);

std::vector<float> request_matmul(ActorSystem& sys, const ActorHandle& actor,
                                  std::vector<float> m1,
                                  std::vector<float> m2, std::size_t n);

/// The same multiply driven through raw device commands, no actors.
std::vector<float> enqueue_matmul(Device& dev, const std::vector<float>& m1,
                                  const std::vector<float>& m2,
                                  std::size_t n);

// --- mandelbrot ------------------------------------------------------

struct MandelRegion {
  double re_min = -0.5;
  double im_min = -0.7375;
  double re_max = 0.1;
  double im_max = -0.1375;
};

/// z starts at 0; each round z = z^2 + c, answering the round on which
/// |z| left the circle of radius 2, or max_iters if it never did.
/// Shared verbatim by the host loop and the device kernel so a pixel's
/// count is identical no matter where it was computed.
inline std::uint32_t mandel_escape(double c_re, double c_im,
                                   std::uint32_t max_iters) {
  double zr = 0, zi = 0;
  for (std::uint32_t round = 1; round <= max_iters; ++round) {
    double r = zr * zr - zi * zi + c_re;
    double i = 2 * zr * zi + c_im;
    zr = r;
    zi = i;
    if (zr * zr + zi * zi > 4.0) return round;
  }
  return max_iters;
}

/// Renders width x height iteration counts for the region, computing
/// the top `device_fraction` of the rows on a freshly spawned compute
/// actor and the rest on the host. The split is invisible in the
/// output; every fraction produces the same image.
std::vector<std::uint32_t> render_mandel(ActorSystem& sys, Device& dev,
                                         std::size_t width,
                                         std::size_t height,
                                         std::uint32_t max_iters,
                                         double device_fraction,
                                         MandelRegion region = {});

// --- actor spawn throughput ------------------------------------------

/// Builds a fresh system, spawns `count` actors, pings each once, and
/// tears everything down; returns the elapsed seconds. Throws if any
/// reply is wrong.
double time_spawn_ping(std::size_t count);

}  // namespace ndactor::bench
