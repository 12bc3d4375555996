#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <vector>

#include "stcho/fft.hpp"
#include "stcho/stack_io.hpp"
#include "stcho/stacks.hpp"

using namespace stcho;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("stcho_test_stacks_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double code_variance(const ImageStack& s) {
  double mean = 0.0;
  for (auto c : s.codes.values()) mean += c;
  mean /= static_cast<double>(s.codes.size());
  double ss = 0.0;
  for (auto c : s.codes.values()) ss += (c - mean) * (c - mean);
  return ss / static_cast<double>(s.codes.size() - 1);
}

// Least-squares slope of log power against log radial frequency, using a
// radially averaged periodogram over f in [lo, hi] cycles/voxel.
double spectral_slope(const ImageStack& s, double lo, double hi) {
  const std::size_t w = s.codes.width(), h = s.codes.height(), k = s.codes.depth();
  std::vector<std::complex<double>> buf(s.codes.size());
  double mean = 0.0;
  for (auto c : s.codes.values()) mean += c;
  mean /= static_cast<double>(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = s.codes.values()[i] - mean;
  Fft3d(w, h, k).forward(buf);
  std::map<long, std::pair<double, double>> bins;  // shell -> (power sum, count)
  const double width = 0.01;
  for (std::size_t z = 0; z < k; ++z) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double f = std::sqrt(std::pow(frequency_of_index(x, w, 1.0), 2) +
                                   std::pow(frequency_of_index(y, h, 1.0), 2) +
                                   std::pow(frequency_of_index(z, k, 1.0), 2));
        if (f < lo || f > hi) continue;
        auto& b = bins[std::lround(f / width)];
        b.first += std::norm(buf[(z * h + y) * w + x]);
        b.second += 1.0;
      }
    }
  }
  std::vector<double> lx, ly;
  for (const auto& [shell, b] : bins) {
    lx.push_back(std::log(shell * width));
    ly.push_back(std::log(b.first / b.second));
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace

TEST(Geometry, Presets) {
  const auto a = StackGeometry::dataset_a();
  EXPECT_EQ(a.width, 64u);
  EXPECT_EQ(a.height, 64u);
  EXPECT_EQ(a.n_slices, 41u);
  EXPECT_EQ(a.bit_depth, 10);
  EXPECT_EQ(a.slice_sep_mm, 1.0);
  const auto b = StackGeometry::dataset_b();
  EXPECT_EQ(b.n_slices, 32u);
  EXPECT_EQ(b.slice_sep_mm, 0.2);
  EXPECT_EQ(b.max_code(), 1023u);
}

TEST(Background, DeterministicPerSeed) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto a = generate_background(g, {}, 42, "a");
  const auto b = generate_background(g, {}, 42, "a");
  const auto c = generate_background(g, {}, 43, "a");
  EXPECT_TRUE(a.codes == b.codes);
  EXPECT_FALSE(a.codes == c.codes);
  EXPECT_EQ(a.label, Label::healthy);
  EXPECT_TRUE(a.lesion_slices.empty());
}

TEST(Background, CodesWithinRangeAndCentred) {
  const auto s = generate_background(StackGeometry::dataset_b(), {}, 7, "x");
  double mean = 0.0;
  for (auto c : s.codes.values()) {
    ASSERT_LE(c, 1023);
    mean += c;
  }
  mean /= static_cast<double>(s.codes.size());
  EXPECT_NEAR(mean, 511.5, 60.0);
}

TEST(Background, FlatSpectrumVarianceMatchesWhiteNoise) {
  // One standard deviation maps to 102.4 codes.
  const double predicted = 102.4 * 102.4;
  for (TextureKind kind : {TextureKind::power_law, TextureKind::white}) {
    const auto s = generate_background(StackGeometry::dataset_b(), {kind, 0.0}, 5, "w");
    EXPECT_NEAR(code_variance(s), predicted, 0.1 * predicted);
  }
}

TEST(Background, PowerLawSlope) {
  double sum = 0.0;
  const int n = 4;
  for (int seed = 1; seed <= n; ++seed) {
    const auto s = generate_background(StackGeometry::dataset_b(), {TextureKind::power_law, 3.0}, seed, "p");
    sum += spectral_slope(s, 0.05, 0.3);
  }
  EXPECT_NEAR(sum / n, -3.0, 0.3);
}

TEST(Background, RejectsNegativeBeta) {
  EXPECT_THROW(generate_background(StackGeometry::dataset_b(), {TextureKind::power_law, -1.0}, 1), InputError);
}

TEST(Lesion, DepthProfileAndAffectedSlices) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto spec = LesionSpec::microcalc();
  const auto p = depth_profile(spec, g);
  EXPECT_EQ(p[16], 1.0);
  for (std::size_t z = 0; z < p.size(); ++z) EXPECT_LE(p[z], 1.0);
  const auto slices = affected_slices(spec, g);
  EXPECT_EQ(slices, (std::vector<int>{15, 16, 17}));
  const auto mass = affected_slices(LesionSpec::mass(), g);
  EXPECT_EQ(mass.size(), 19u);
  EXPECT_EQ(mass.front(), 7);
  EXPECT_EQ(mass.back(), 25);
}

TEST(Lesion, InPlaneProfilePeaksAtCentre) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto p = in_plane_profile(LesionSpec::microcalc(), g);
  const std::size_t centre = 32 * 64 + 32;
  EXPECT_EQ(p[centre], 1.0);
  EXPECT_EQ(*std::max_element(p.begin(), p.end()), 1.0);
  EXPECT_NEAR(p[32 * 64 + 31], p[32 * 64 + 33], 1e-15);
  EXPECT_LT(p[32 * 64 + 40], 0.05);
  EXPECT_LT(p[0], 1e-12);
}

TEST(Lesion, EnergyIsProductOfProfileSums) {
  const StackGeometry g = StackGeometry::dataset_b();
  for (const auto& spec : {LesionSpec::microcalc(), LesionSpec::mass()}) {
    const auto inc = lesion_increment(spec, g);
    const auto plane = in_plane_profile(spec, g);
    const auto depth = depth_profile(spec, g);
    long double total = 0.0;
    for (double v : inc.values()) total += v;
    const double want = spec.amplitude * std::accumulate(plane.begin(), plane.end(), 0.0) *
                        std::accumulate(depth.begin(), depth.end(), 0.0);
    EXPECT_NEAR(static_cast<double>(total), want, 1e-10 * want);
  }
}

TEST(Lesion, AdditiveNonNegativeAndCentred) {
  const StackGeometry g = StackGeometry::dataset_b();
  for (int seed = 1; seed <= 5; ++seed) {
    const auto h = generate_background(g, {}, seed, "h");
    for (const auto& spec : {LesionSpec::microcalc(), LesionSpec::mass()}) {
      const auto l = insert_lesion(h, spec, "l");
      int best = -1;
      for (std::size_t i = 0; i < h.codes.size(); ++i) {
        const int d = int(l.codes.values()[i]) - int(h.codes.values()[i]);
        ASSERT_GE(d, 0);
        best = std::max(best, d);
      }
      EXPECT_EQ(int(l.codes(32, 32, 16)) - int(h.codes(32, 32, 16)), best);
      EXPECT_EQ(l.label, Label::lesion);
      EXPECT_EQ(l.source_id, "h");
      EXPECT_EQ(l.lesion_slices, affected_slices(spec, g));
    }
  }
}

TEST(Lesion, ZeroAmplitudeIsIdentity) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto h = generate_background(g, {}, 3, "h");
  LesionSpec spec = LesionSpec::microcalc();
  spec.amplitude = 0.0;
  const auto l = insert_lesion(h, spec);
  EXPECT_TRUE(l.codes == h.codes);
  EXPECT_EQ(l.lesion_slices, affected_slices(spec, g));
  EXPECT_EQ(l.stack_id, "h-lesion");
}

TEST(Lesion, ClippingIsReported) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto h = generate_background(g, {}, 3, "h");
  LesionSpec spec = LesionSpec::microcalc();
  spec.amplitude = 900.0;
  EXPECT_THROW(insert_lesion(h, spec), ClippingError);
}

TEST(Lesion, Validation) {
  const StackGeometry g = StackGeometry::dataset_b();
  const auto h = generate_background(g, {}, 3, "h");
  EXPECT_THROW(insert_lesion(h, {LesionKind::mass, 80.0, 10.0, 3.0}), InputError);
  EXPECT_THROW(insert_lesion(h, {LesionKind::mass, 40.0, -1.0, 3.0}), InputError);
  auto lesion = insert_lesion(h, LesionSpec::microcalc());
  EXPECT_THROW(insert_lesion(lesion, LesionSpec::microcalc()), InputError);
}

TEST(Dataset, GenerationIsIndependentOfThreadCount) {
  GeneratorConfig cfg;
  cfg.n_pairs = 6;
  cfg.seed = 9;
  const auto a = generate_dataset(cfg, 1);
  const auto b = generate_dataset(cfg, 4);
  ASSERT_EQ(a.stacks.size(), 12u);
  EXPECT_TRUE(a.stacks == b.stacks);
  const auto pairs = a.pairs();
  ASSERT_EQ(pairs.size(), 6u);
  for (const auto& [hi, li] : pairs) {
    EXPECT_EQ(a.stacks[li].source_id, a.stacks[hi].stack_id);
    EXPECT_EQ(a.stacks[hi].seed, derive_seed(9, hi / 2));
  }
}

TEST(Dataset, PairingValidation) {
  GeneratorConfig cfg;
  cfg.n_pairs = 2;
  auto ds = generate_dataset(cfg, 1);
  ds.stacks[1].source_id = "missing";
  EXPECT_THROW(ds.pairs(), InputError);
  ds = generate_dataset(cfg, 1);
  ds.stacks[2].stack_id = ds.stacks[0].stack_id;
  EXPECT_THROW(ds.pairs(), InputError);
}

TEST(StackIo, RoundTrip) {
  const fs::path dir = scratch("roundtrip");
  const auto h = generate_background(StackGeometry::dataset_a(), {}, 11, "h00001");
  const auto l = insert_lesion(h, LesionSpec::mass(), "l00001");
  write_stack(l, dir / "l00001");
  const auto back = read_stack(dir / "l00001");
  EXPECT_TRUE(back == l);
  EXPECT_EQ(fs::file_size(dir / "l00001.raw"), 64u * 64u * 41u * 2u);
}

TEST(StackIo, LittleEndianPayload) {
  const fs::path dir = scratch("endian");
  ImageStack s;
  s.geometry = {11, 11, 1, 10, 1.0};
  s.codes = Volume<std::uint16_t>(11, 11, 1);
  s.codes.values()[0] = 0x0302;
  s.stack_id = "e";
  write_stack(s, dir / "e");
  std::ifstream in(dir / "e.raw", std::ios::binary);
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  EXPECT_EQ(b[0], 0x02);
  EXPECT_EQ(b[1], 0x03);
}

TEST(StackIo, TruncatedPayload) {
  const fs::path dir = scratch("trunc");
  const auto h = generate_background(StackGeometry::dataset_b(), {}, 1, "t");
  write_stack(h, dir / "t");
  fs::resize_file(dir / "t.raw", 64u * 64u * 32u * 2u - 1u);
  try {
    read_stack(dir / "t");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("262143"), std::string::npos);
    EXPECT_NE(msg.find("262144"), std::string::npos);
  }
}

TEST(StackIo, CodeAboveBitDepth) {
  const fs::path dir = scratch("overflow");
  auto h = generate_background(StackGeometry::dataset_b(), {}, 1, "o");
  write_stack(h, dir / "o");
  {
    std::fstream f(dir / "o.raw", std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(200);
    const unsigned char v[2] = {0x00, 0x04};  // 1024
    f.write(reinterpret_cast<const char*>(v), 2);
  }
  try {
    read_stack(dir / "o");
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 200u);
  }
}

TEST(StackIo, MalformedHeader) {
  const fs::path dir = scratch("header");
  const auto h = generate_background(StackGeometry::dataset_b(), {}, 1, "m");
  write_stack(h, dir / "m");
  {
    std::ofstream f(dir / "m.json", std::ios::trunc);
    f << "{\"format\": \"stcho-stack\", \"width\": 64,";
  }
  EXPECT_THROW(read_stack(dir / "m"), FormatError);
  {
    std::ofstream f(dir / "m.json", std::ios::trunc);
    f << "{\"format\": \"stcho-stack\", \"width\": 64}";
  }
  EXPECT_THROW(read_stack(dir / "m"), FormatError);
  EXPECT_THROW(read_stack(dir / "absent"), IoError);
}

TEST(StackIo, DatasetManifestRoundTrip) {
  const fs::path dir = scratch("dataset");
  GeneratorConfig cfg;
  cfg.n_pairs = 3;
  const auto ds = generate_dataset(cfg, 1);
  const fs::path manifest = write_dataset(ds, dir, {{"seed", 1}});
  const auto back = read_dataset(manifest);
  EXPECT_TRUE(back.stacks == ds.stacks);
}
