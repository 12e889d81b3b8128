#include <doctest.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "pnpunmix/io.hpp"

using namespace pnpunmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pnpunmix_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

HsiCube randomCube(Index b, Index r, Index c, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  HsiCube cube(b, r, c);
  for (Index i = 0; i < cube.size(); ++i) cube.data()[i] = u(gen);
  return cube;
}

}  // namespace

TEST_CASE("cube round-trips bitwise at single precision") {
  TempDir tmp;
  HsiCube cube = randomCube(3, 5, 7, 1);
  io::writeCube(tmp.path / "c.hdr", cube);
  CHECK(fs::file_size(tmp.path / "c.raw") == 3 * 5 * 7 * 4);
  HsiCube back = io::readCube(tmp.path / "c.hdr");
  CHECK(back.sameShape(cube));
  CHECK(back == cube.cast<float>().cast<double>());
  CHECK(io::readCubeFloat(tmp.path / "c") == cube.cast<float>());

  // Payload is little-endian float32 in memory order.
  std::string raw = slurp(tmp.path / "c.raw");
  float second;
  std::memcpy(&second, raw.data() + 4, 4);
  CHECK(second == static_cast<float>(cube.data()[1]));
}

TEST_CASE("cube header carries the layout keys") {
  TempDir tmp;
  io::writeCube(tmp.path / "c.hdr", randomCube(2, 3, 4, 2));
  io::KeyValues h = io::readKeyValues(tmp.path / "c.hdr");
  CHECK(h.at("channels") == "2");
  CHECK(h.at("rows") == "3");
  CHECK(h.at("cols") == "4");
  CHECK(h.at("dtype") == "float32");
  CHECK(h.at("byte_order") == "little");
  CHECK(h.at("data_file") == "c.raw");
}

TEST_CASE("truncated payload is a parse error") {
  TempDir tmp;
  io::writeCube(tmp.path / "c.hdr", randomCube(2, 3, 4, 3));
  fs::resize_file(tmp.path / "c.raw", 2 * 3 * 4 * 4 - 4);
  CHECK_THROWS_AS(io::readCube(tmp.path / "c.hdr"), ParseError);
  CHECK_THROWS_AS(io::readCube(tmp.path / "missing.hdr"), IoError);
}

TEST_CASE("non-finite payload is a parse error") {
  TempDir tmp;
  io::writeCube(tmp.path / "c.hdr", randomCube(1, 2, 2, 4));
  std::fstream f(tmp.path / "c.raw", std::ios::in | std::ios::out | std::ios::binary);
  const float bad = std::numeric_limits<float>::quiet_NaN();
  f.write(reinterpret_cast<const char*>(&bad), 4);
  f.close();
  CHECK_THROWS_AS(io::readCube(tmp.path / "c.hdr"), ParseError);
}

TEST_CASE("abundances round-trip") {
  TempDir tmp;
  Eigen::MatrixXd a(3, 4);
  a << 0.2, 1, 0, 0.3,
       0.5, 0, 0, 0.3,
       0.3, 0, 1, 0.4;
  AbundanceMatrix am(a, 2, 2);
  io::writeAbundances(tmp.path / "a.hdr", am);
  AbundanceMatrix back = io::readAbundances(tmp.path / "a.hdr");
  CHECK(back.endmembers() == 3);
  CHECK(back.spatialRows == 2);
  CHECK(back.values == a.cast<float>().cast<double>());
}

TEST_CASE("endmember CSV round-trips within 1e-6") {
  TempDir tmp;
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd s(10, 3);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = u(gen);
  EndmemberMatrix M(s, {"soil", "water", "grass"});
  io::writeEndmembersCsv(tmp.path / "m.csv", M);
  EndmemberMatrix back = io::readEndmembersCsv(tmp.path / "m.csv");
  CHECK(back.names() == M.names());
  CHECK((back.matrix() - s).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(slurp(tmp.path / "m.csv").rfind("soil,water,grass\n", 0) == 0);
}

TEST_CASE("malformed CSV") {
  TempDir tmp;
  std::ofstream(tmp.path / "bad.csv") << "a,b\n0.1,0.2\n0.3\n";
  CHECK_THROWS_AS(io::readEndmembersCsv(tmp.path / "bad.csv"), ParseError);
  std::ofstream(tmp.path / "text.csv") << "a,b\n0.1,abc\n";
  CHECK_THROWS_AS(io::readEndmembersCsv(tmp.path / "text.csv"), ParseError);
}

TEST_CASE("quantization rule") {
  CHECK(io::quantize(0.0) == 0);
  CHECK(io::quantize(1.0) == 255);
  CHECK(io::quantize(0.5) == 128);
  CHECK(io::quantize(-0.3) == 0);
  CHECK(io::quantize(1.7) == 255);
  CHECK(io::quantize(100.0 / 255.0) == 100);
}

TEST_CASE("graymap format") {
  TempDir tmp;
  SUBCASE("3x2 plane") {
    Eigen::MatrixXd plane(3, 2);
    plane << 0.0, 1.0,
             0.5, 0.25,
             1.0, 0.0;
    io::writeGraymap(tmp.path / "m.pgm", plane);
    std::string bytes = slurp(tmp.path / "m.pgm");
    CHECK(bytes.rfind("P5\n2 3\n255\n", 0) == 0);
    std::string payload = bytes.substr(std::strlen("P5\n2 3\n255\n"));
    CHECK(payload.size() == 6);
    // Row by row.
    const unsigned char expected[] = {0, 255, 128, 64, 255, 0};
    for (int i = 0; i < 6; ++i)
      CHECK(static_cast<unsigned char>(payload[i]) == expected[i]);
    io::GrayImage back = io::readGraymap(tmp.path / "m.pgm");
    CHECK(back.rows() == 3);
    CHECK(back.cols() == 2);
    CHECK(back(1, 0) == 128);
  }
  SUBCASE("all zeros is black") {
    io::writeGraymap(tmp.path / "z.pgm", Eigen::MatrixXd::Zero(4, 5));
    CHECK((io::readGraymap(tmp.path / "z.pgm").array() == 0).all());
  }
}

TEST_CASE("key-value files") {
  TempDir tmp;
  std::ofstream(tmp.path / "kv.cfg") << "# comment\nrows = 32\nname = \"scene a\"\n\nsnr=inf\n";
  io::KeyValues kv = io::readKeyValues(tmp.path / "kv.cfg");
  CHECK(kv.size() == 3);
  CHECK(kv.at("rows") == "32");
  CHECK(kv.at("name") == "scene a");
  CHECK(kv.at("snr") == "inf");
  io::writeKeyValues(tmp.path / "out.cfg", kv, "resolved");
  CHECK(io::readKeyValues(tmp.path / "out.cfg") == kv);
  std::ofstream(tmp.path / "bad.cfg") << "no separator here\n";
  CHECK_THROWS_AS(io::readKeyValues(tmp.path / "bad.cfg"), ParseError);
}

TEST_CASE("shortest round-trip decimal") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456.789}) {
    CHECK(std::stod(io::formatDouble(v)) == v);
  }
  CHECK(io::formatDouble(0.1) == "0.1");
  CHECK(io::formatDouble(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("path helpers") {
  CHECK(io::headerPathFor("dir/cube") == fs::path("dir/cube.hdr"));
  CHECK(io::headerPathFor("dir/cube.hdr") == fs::path("dir/cube.hdr"));
  CHECK(io::payloadPathFor("dir/cube.hdr") == fs::path("dir/cube.raw"));
}
