#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "ndactor/wah_io.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(NDCLI_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("bench") == 2);
  CHECK(run_cli("bench warp") == 2);
  CHECK(run_cli("bench matmul --size") == 2);
  CHECK(run_cli("index build --digit-bits 7") == 2);
  CHECK(run_cli("index build --input /no/such/file.bin --runs 1") == 2);
  CHECK(run_cli("--help") == 0);
}

TEST_CASE("matmul writes the records it ran") {
  fs::path csv = fs::temp_directory_path() / "cli_matmul.csv";
  CHECK(run_cli("bench matmul --size 24 --runs 2 --csv " + csv.string()) ==
        0);
  std::string data = slurp(csv);
  CHECK(data.rfind("benchmark,kind,param,run,seconds\n", 0) == 0);
  CHECK(data.find("matmul,actor,24,0,") != std::string::npos);
  CHECK(data.find("matmul,actor,24,1,") != std::string::npos);
  fs::remove(csv);
}

TEST_CASE("baseline respects device flags") {
  CHECK(run_cli("--device-cus 2 --max-group 64 bench baseline --size 33 "
                "--runs 1") == 0);
}

TEST_CASE("index file round-trips through the cli") {
  fs::path out = fs::temp_directory_path() / "cli_index.wah";
  CHECK(run_cli("--seed 5 index build --rows 3000 --cardinality 7 "
                "--verify --runs 1 --output " +
                out.string()) == 0);

  // Same generator as the tool: the file must be the reference index,
  // byte for byte.
  std::mt19937 rng(5);
  std::uniform_int_distribution<std::uint32_t> pick(0, 6);
  std::vector<std::uint32_t> values(3000);
  for (std::uint32_t& v : values) v = pick(rng);

  using namespace ndactor::wah;
  std::vector<std::byte> want = serialize_index(reference_index(values));
  std::string got = slurp(out);
  REQUIRE(got.size() == want.size());
  CHECK(std::memcmp(got.data(), want.data(), want.size()) == 0);
  fs::remove(out);
}

TEST_CASE("mandel image lands as a pgm") {
  fs::path img = fs::temp_directory_path() / "cli_mandel.pgm";
  CHECK(run_cli("bench mandel --width 32 --height 18 --iters 20 --runs 1 "
                "--output " +
                img.string()) == 0);
  std::string data = slurp(img);
  std::string header = "P5\n32 18\n255\n";
  REQUIRE(data.size() == header.size() + 32 * 18);
  CHECK(data.rfind(header, 0) == 0);
  fs::remove(img);
}

TEST_CASE("spawn runs clean") {
  CHECK(run_cli("bench spawn --count 300 --runs 1") == 0);
}
