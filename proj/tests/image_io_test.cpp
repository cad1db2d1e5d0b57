#include "fidlens/image_io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace fidlens {
namespace {

using testing::TempDir;
using namespace std::string_literals;

void WriteRaw(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

TEST(Ppm, RoundTripsEightBitValues) {
  TempDir dir;
  RgbImage img(3, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<float>(i * 17 % 256) / 255.f;
  }
  WritePpm(dir / "a.ppm", img);
  const RgbImage back = ReadPpm(dir / "a.ppm");
  ASSERT_EQ(back.height, 3);
  ASSERT_EQ(back.width, 5);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    EXPECT_EQ(back.pixels[i], img.pixels[i]) << i;
  }
}

TEST(Ppm, ClipsOnWrite) {
  TempDir dir;
  RgbImage img(1, 1);
  img.pixels = {-0.5f, 1.5f, 0.5f};
  WritePpm(dir / "c.ppm", img);
  const RgbImage back = ReadPpm(dir / "c.ppm");
  EXPECT_EQ(back.pixels[0], 0.f);
  EXPECT_EQ(back.pixels[1], 1.f);
  EXPECT_EQ(back.pixels[2], 128.f / 255.f);
}

TEST(Ppm, HeaderCommentsAndErrors) {
  TempDir dir;
  WriteRaw(dir / "c.ppm", "P6\n# made by hand\n1 1\n255\n\xff\x00\x80"s);
  const RgbImage img = ReadPpm(dir / "c.ppm");
  EXPECT_EQ(img.pixels[0], 1.f);
  EXPECT_EQ(img.pixels[1], 0.f);

  WriteRaw(dir / "t.ppm", "P6\n2 2\n255\n\x01\x02"s);
  EXPECT_FIDLENS_ERROR(ReadPpm(dir / "t.ppm"), ErrorKind::kFormat);
  WriteRaw(dir / "p3.ppm", "P3\n1 1\n255\n1 2 3\n");
  EXPECT_FIDLENS_ERROR(ReadPpm(dir / "p3.ppm"), ErrorKind::kFormat);
  WriteRaw(dir / "16.ppm", "P6\n1 1\n65535\n\x00\x00\x00\x00\x00\x00"s);
  EXPECT_FIDLENS_ERROR(ReadPpm(dir / "16.ppm"), ErrorKind::kUnsupported);
  EXPECT_FIDLENS_ERROR(ReadPpm(dir / "missing.ppm"), ErrorKind::kIo);
}

TEST(Pfm, RoundTripsFloat32AndOrientation) {
  TempDir dir;
  Grid g(2, 3);
  g << 1.0, -2.5, 0.125,
       3.0, 4.0, -1e-3;
  WritePfm(dir / "g.pfm", g);
  const Grid back = ReadPfm(dir / "g.pfm");
  ASSERT_EQ(back.rows(), 2);
  ASSERT_EQ(back.cols(), 3);
  EXPECT_EQ(back.cast<float>(), g.cast<float>());

  // Bottom row first on disk.
  std::ifstream in(dir / "g.pfm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  const std::string header = "Pf\n3 2\n-1.0\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  float first = 0.f;
  std::memcpy(&first, bytes.data() + header.size(), 4);
  EXPECT_EQ(first, 3.0f);
}

TEST(Pfm, Errors) {
  TempDir dir;
  WriteRaw(dir / "be.pfm", "Pf\n1 1\n1.0\n\x00\x00\x80\x3f"s);
  EXPECT_FIDLENS_ERROR(ReadPfm(dir / "be.pfm"), ErrorKind::kUnsupported);
  WriteRaw(dir / "t.pfm", "Pf\n2 2\n-1.0\n\x00\x00"s);
  EXPECT_FIDLENS_ERROR(ReadPfm(dir / "t.pfm"), ErrorKind::kFormat);
  WriteRaw(dir / "rgb.pfm", "PF\n1 1\n-1.0\n");
  EXPECT_FIDLENS_ERROR(ReadPfm(dir / "rgb.pfm"), ErrorKind::kFormat);
}

}  // namespace
}  // namespace fidlens
