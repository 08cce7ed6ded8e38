#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ndactor/bench.hpp"
#include "ndactor/wah_device.hpp"
#include "ndactor/wah_io.hpp"

using namespace ndactor;

namespace {

/// Result data disagreed with the oracle; maps to exit code 1.
struct VerifyFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  unsigned device_cus = 4;
  std::size_t max_group = 256;
  unsigned runs = 5;
  std::uint64_t seed = 1;
  std::string output;
  std::string csv;

  std::vector<std::size_t> counts{1000, 10000};
  std::vector<std::size_t> sizes{64, 128, 256};
  std::size_t width = 480;
  std::size_t height = 270;
  std::uint32_t iters = 100;

  std::string input;
  std::uint64_t rows = 100000;
  std::uint32_t cardinality = 100;
  unsigned digit_bits = 16;
  bool verify = false;
};

DeviceConfig device_config(const Options& opt) {
  DeviceConfig cfg;
  cfg.compute_units = opt.device_cus;
  cfg.max_group_size = opt.max_group;
  return cfg;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void finish(const Options& opt, const std::vector<bench::BenchRecord>& recs) {
  if (!opt.csv.empty()) {
    bench::save_csv(opt.csv, recs);
    std::printf("wrote %zu records to %s\n", recs.size(), opt.csv.c_str());
  }
}

int run_spawn(const Options& opt) {
  std::vector<bench::BenchRecord> recs;
  for (std::size_t count : opt.counts)
    for (unsigned run = 0; run < opt.runs; ++run) {
      double s = bench::time_spawn_ping(count);
      recs.push_back({"spawn", "actors", count, run, s});
      std::printf("spawn count=%zu run=%u: %.6f s\n", count, run, s);
    }
  finish(opt, recs);
  return 0;
}

int run_matmul(const Options& opt, bool through_actors) {
  Device dev(device_config(opt));
  ActorSystem sys;
  ActorHandle actor;
  if (through_actors) actor = bench::spawn_matmul(sys, dev);
  const char* name = through_actors ? "matmul" : "baseline";
  const char* kind = through_actors ? "actor" : "device";

  std::mt19937 rng(std::uint32_t(opt.seed));
  std::vector<bench::BenchRecord> recs;
  for (std::size_t n : opt.sizes) {
    std::vector<float> m1 = bench::random_matrix(rng, n);
    std::vector<float> m2 = bench::random_matrix(rng, n);
    std::vector<float> want = bench::matmul_oracle(m1, m2, n);
    for (unsigned run = 0; run < opt.runs; ++run) {
      auto t0 = Clock::now();
      std::vector<float> got =
          through_actors ? bench::request_matmul(sys, actor, m1, m2, n)
                         : bench::enqueue_matmul(dev, m1, m2, n);
      double s = seconds_since(t0);
      if (got != want)
        throw VerifyFailure(std::string(name) + " result off the oracle at size " +
                            std::to_string(n));
      recs.push_back({name, kind, n, run, s});
      std::printf("%s size=%zu run=%u: %.6f s\n", name, n, run, s);
    }
  }
  finish(opt, recs);
  sys.shutdown();
  return 0;
}

int run_mandel(const Options& opt) {
  Device dev(device_config(opt));
  ActorSystem sys;

  std::vector<std::uint32_t> want = bench::render_mandel(
      sys, dev, opt.width, opt.height, opt.iters, 0.0);
  std::vector<bench::BenchRecord> recs;
  for (int tenth = 0; tenth <= 10; ++tenth) {
    double fraction = tenth / 10.0;
    for (unsigned run = 0; run < opt.runs; ++run) {
      auto t0 = Clock::now();
      std::vector<std::uint32_t> got = bench::render_mandel(
          sys, dev, opt.width, opt.height, opt.iters, fraction);
      double s = seconds_since(t0);
      if (got != want)
        throw VerifyFailure("image changed with device fraction " +
                            std::to_string(fraction));
      recs.push_back(
          {"mandel", "fraction", std::uint64_t(tenth * 10), run, s});
      std::printf("mandel fraction=%.1f run=%u: %.6f s\n", fraction, run, s);
    }
  }
  if (!opt.output.empty()) {
    bench::write_pgm(opt.output, opt.width, opt.height,
                     bench::counts_to_gray(want, opt.iters));
    std::printf("wrote image to %s\n", opt.output.c_str());
  }
  finish(opt, recs);
  sys.shutdown();
  return 0;
}

int run_index_build(const Options& opt) {
  std::vector<std::uint32_t> values;
  if (!opt.input.empty()) {
    std::filesystem::path in(opt.input);
    values = in.extension() == ".txt" ? wah::read_values_text(in)
                                      : wah::read_values_raw(in);
  } else {
    std::mt19937 rng(std::uint32_t(opt.seed));
    std::uniform_int_distribution<std::uint32_t> pick(
        0, opt.cardinality ? opt.cardinality - 1 : 0);
    values.resize(opt.rows);
    for (std::uint32_t& v : values) v = pick(rng);
  }

  Device dev(device_config(opt));
  ActorSystem sys;
  wah::WahIndex idx;
  std::vector<bench::BenchRecord> recs;
  for (unsigned run = 0; run < opt.runs; ++run) {
    auto t0 = Clock::now();
    idx = wah::build_index(sys, dev, values, opt.digit_bits);
    double s = seconds_since(t0);
    recs.push_back({"index", "build", values.size(), run, s});
    std::printf("index rows=%zu run=%u: %.6f s\n", values.size(), run, s);
  }

  std::printf("rows=%u distinct=%zu words=%zu (%.2f bits per row)\n",
              idx.row_count, idx.entries.size(), idx.words.size(),
              idx.row_count ? 32.0 * double(idx.words.size()) /
                                  double(idx.row_count)
                            : 0.0);

  if (opt.verify && !(idx == wah::reference_index(values)))
    throw VerifyFailure("device index differs from the reference");
  if (opt.verify) std::printf("verified against the reference builder\n");

  if (!opt.output.empty()) {
    wah::write_index_file(opt.output, idx);
    std::printf("wrote index to %s\n", opt.output.c_str());
  }
  finish(opt, recs);
  sys.shutdown();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"actor-driven compute device benchmarks"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--device-cus", opt.device_cus,
                 "simulated compute units")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-group", opt.max_group,
                 "work group size limit")
      ->check(CLI::PositiveNumber);
  app.add_option("--runs", opt.runs, "timed repetitions per configuration")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", opt.seed, "input generator seed");
  app.add_option("--output", opt.output,
                 "result file (mandel: PGM image, index: index file)");
  app.add_option("--csv", opt.csv, "write timing records here");

  CLI::App* bench_cmd =
      app.add_subcommand("bench", "timed protocol benchmarks");
  bench_cmd->require_subcommand(1);
  bench_cmd->fallthrough();

  CLI::App* spawn_cmd = bench_cmd->add_subcommand(
      "spawn", "spawn a flock of actors and ping each once");
  spawn_cmd->add_option("--count", opt.counts, "actors per run");

  CLI::App* matmul_cmd = bench_cmd->add_subcommand(
      "matmul", "square multiply through a compute actor");
  matmul_cmd->add_option("--size", opt.sizes, "matrix dimensions");

  CLI::App* baseline_cmd = bench_cmd->add_subcommand(
      "baseline", "the same multiply as plain device commands");
  baseline_cmd->add_option("--size", opt.sizes, "matrix dimensions");

  CLI::App* mandel_cmd = bench_cmd->add_subcommand(
      "mandel", "render with a sweep of host/device splits");
  mandel_cmd->add_option("--width", opt.width, "image width")
      ->check(CLI::PositiveNumber);
  mandel_cmd->add_option("--height", opt.height, "image height")
      ->check(CLI::PositiveNumber);
  mandel_cmd->add_option("--iters", opt.iters, "iteration limit")
      ->check(CLI::PositiveNumber);

  CLI::App* index_cmd = app.add_subcommand("index", "bitmap index tools");
  index_cmd->require_subcommand(1);
  index_cmd->fallthrough();

  CLI::App* build_cmd = index_cmd->add_subcommand(
      "build", "build a compressed bitmap index on the device");
  build_cmd->add_option(
      "--input", opt.input,
      "row values, .txt one per line or raw little-endian u32");
  build_cmd->add_option("--rows", opt.rows, "synthetic input length");
  build_cmd->add_option("--cardinality", opt.cardinality,
                        "distinct synthetic values")
      ->check(CLI::PositiveNumber);
  build_cmd->add_option("--digit-bits", opt.digit_bits,
                        "sort digit width")
      ->check(CLI::IsMember({4, 8, 16}));
  build_cmd->add_flag("--verify", opt.verify,
                      "compare against the host reference builder");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (spawn_cmd->parsed()) return run_spawn(opt);
    if (matmul_cmd->parsed()) return run_matmul(opt, true);
    if (baseline_cmd->parsed()) return run_matmul(opt, false);
    if (mandel_cmd->parsed()) return run_mandel(opt);
    if (build_cmd->parsed()) return run_index_build(opt);
  } catch (const VerifyFailure& e) {
    std::fprintf(stderr, "verification failed: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
