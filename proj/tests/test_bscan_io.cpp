#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "wsa/bscan_io.hpp"

using namespace wsa;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "wsa_bscan_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

TargetAnnotation one_target() {
  TargetAnnotation t;
  t.x0_m = 1.0;
  t.depth_m = 0.4;
  t.eps_r = 6.0;
  t.amplitude = 0.8;
  t.beta_np_per_m = 0.2;
  t.label = "void";
  return t;
}

}  // namespace

TEST_CASE("write -> read round trip is bit-identical in 32-bit precision") {
  BScan b(4, 3, 0.25, 0.05, 1.5);
  SplitMix64 rng(3);
  for (double& v : b.samples) v = rng.next_uniform(-2.0, 2.0);

  const auto path = (temp_dir() / "roundtrip.bsc").string();
  const TargetAnnotation tgt = one_target();
  bscan_write(b, std::span<const TargetAnnotation>(&tgt, 1), path);

  auto [back, annotations] = bscan_read(path);
  CHECK(back.t_samples == 4);
  CHECK(back.x_traces == 3);
  CHECK(back.dt_ns == 0.25);
  CHECK(back.dx_m == 0.05);
  CHECK(back.t0_ns == 1.5);
  for (std::size_t i = 0; i < b.samples.size(); ++i) {
    CHECK(back.samples[i] == static_cast<double>(static_cast<float>(b.samples[i])));
  }
  REQUIRE(annotations.size() == 1);
  CHECK(annotations[0].x0_m == 1.0);
  CHECK(annotations[0].label == "void");

  // A second write of the loaded scan reproduces the file byte for byte.
  const auto path2 = (temp_dir() / "roundtrip2.bsc").string();
  bscan_write(back, annotations, path2);
  CHECK(slurp(path) == slurp(path2));
  CHECK(slurp(path + ".json") == slurp(path2 + ".json"));
}

TEST_CASE("2x3 grid file is header plus 24 payload bytes") {
  BScan b(2, 3, 0.5, 0.1, 0.0);
  const auto path = (temp_dir() / "tiny.bsc").string();
  bscan_write(b, {}, path);
  const std::string bytes = slurp(path);
  const std::string header = "BSCN1 2 3 0.5 0.1 0\n";
  CHECK(bytes.size() == header.size() + 24);
  CHECK(bytes.substr(0, header.size()) == header);
}

TEST_CASE("NaN samples are refused at write time") {
  BScan b(2, 2, 0.5, 0.1, 0.0);
  b.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
  const auto path = (temp_dir() / "nan.bsc").string();
  CHECK_THROWS_AS(bscan_write(b, {}, path), ValidationError);
}

TEST_CASE("wrong magic is rejected with the magic named") {
  const auto path = (temp_dir() / "magic.bsc").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "XSCN1 2 2 0.5 0.1 0\n";
    out << std::string(16, '\0');
  }
  try {
    bscan_read(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("XSCN1") != std::string::npos);
    CHECK(msg.find("BSCN1") != std::string::npos);
  }
}

TEST_CASE("truncated payload reports expected vs actual byte counts") {
  BScan b(4, 4, 0.5, 0.1, 0.0);
  const auto path = (temp_dir() / "trunc.bsc").string();
  bscan_write(b, {}, path);
  // Chop 8 bytes off the end.
  std::string bytes = slurp(path);
  bytes.resize(bytes.size() - 8);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
  }
  try {
    bscan_read(path);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("64") != std::string::npos);  // expected
    CHECK(msg.find("56") != std::string::npos);  // actual
  }
}

TEST_CASE("malformed sidecar JSON is rejected") {
  BScan b(2, 2, 0.5, 0.1, 0.0);
  const auto path = (temp_dir() / "sidecar.bsc").string();
  bscan_write(b, {}, path);
  {
    std::ofstream out(path + ".json", std::ios::trunc);
    out << "{\"targets\": [nonsense";
  }
  CHECK_THROWS_AS(bscan_read(path), IoError);

  // Unknown labels are rejected too.
  {
    std::ofstream out(path + ".json", std::ios::trunc);
    out << R"({"targets":[{"x0_m":0,"depth_m":1,"eps_r":4,"amplitude":1,)"
        << R"("beta_np_per_m":0,"label":"mystery"}]})";
  }
  CHECK_THROWS_AS(bscan_read(path), ValidationError);
}

TEST_CASE("missing file is an IoError; missing sidecar means no annotations") {
  CHECK_THROWS_AS(bscan_read((temp_dir() / "nope.bsc").string()), IoError);

  BScan b(2, 2, 0.5, 0.1, 0.0);
  const auto path = (temp_dir() / "bare.bsc").string();
  bscan_write(b, {}, path);
  std::filesystem::remove(path + ".json");
  auto [back, annotations] = bscan_read(path);
  CHECK(annotations.empty());
}

TEST_CASE("report JSON carries flags and the infinity sentinel") {
  WeakSignalReport r;
  r.scr_db = std::numeric_limits<double>::infinity();
  r.low_contrast = true;
  r.is_weak = true;
  const std::string json = report_to_json(std::span<const WeakSignalReport>(&r, 1));
  CHECK(json.find("low_contrast") != std::string::npos);
  CHECK(json.find("+inf") != std::string::npos);
}
