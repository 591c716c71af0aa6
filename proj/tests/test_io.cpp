#include <gtest/gtest.h>

#include <filesystem>

#include "png_reader.hpp"
#include "sparsesph/image.hpp"
#include "sparsesph/io.hpp"
#include "sparsesph/model.hpp"
#include "sparsesph/reconstruct.hpp"

using namespace sparsesph;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sparsesph_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(SparseFieldFile, RoundTripIsBitExact) {
  RandomStream rng(1);
  auto f = gen_iid_weights(whittle_matern(1.01, 40), 7, WeightDistribution::gaussian, rng);
  f.provenance().spectrum_model = "whittle-matern";
  f.provenance().parameters["beta"] = 1.01;
  f.provenance().seed = 18446744073709551615ull;
  const auto text = encode_sparse_field(f);
  EXPECT_EQ(decode_sparse_field(text), f);
  EXPECT_EQ(encode_sparse_field(decode_sparse_field(text)), text);

  const auto path = scratch("field.json");
  write_sparse_field(path, f);
  EXPECT_EQ(read_sparse_field(path), f);
  for (const auto& e : fs::directory_iterator(path.parent_path()))
    EXPECT_EQ(e.path().filename().string().find(".tmp."), std::string::npos);

  const auto g = gen_fnl_weights(whittle_matern(1.5, 10), 0.3, rng);
  EXPECT_EQ(decode_sparse_field(encode_sparse_field(g)), g);
}

TEST(SparseFieldFile, RaggedRoundTrip) {
  RandomStream rng(2);
  std::vector<std::vector<UnitVector>> dirs(4);
  std::vector<std::vector<double>> w(4);
  for (int l = 0; l <= 3; ++l)
    for (int k = 0; k <= l; ++k) {
      dirs[l].push_back(sample_uniform(rng));
      w[l].push_back(rng.normal());
    }
  const auto f = SparseField::ragged(dirs, w);
  const auto j = to_json(f);
  EXPECT_EQ(j["K_per_ell"], Json::array({1, 2, 3, 4}));
  EXPECT_EQ(decode_sparse_field(encode_sparse_field(f)), f);
}

TEST(SparseFieldFile, CanonicalKeyOrder) {
  RandomStream rng(3);
  const auto j = to_json(gen_iid_weights(whittle_matern(1.5, 2), 2, WeightDistribution::rademacher, rng));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"format_version", "lmax", "shared_directions", "K", "directions", "weights",
                                            "generator", "spectrum_model", "parameters", "seed"}));
}

TEST(SparseFieldFile, RejectsCorruptDocuments) {
  RandomStream rng(4);
  const auto good = to_json(gen_iid_weights(whittle_matern(1.5, 2), 2, WeightDistribution::gaussian, rng));
  const auto expect_io = [](const Json& j) { EXPECT_THROW(sparse_field_from_json(j), IoError) << j.dump(); };
  EXPECT_THROW(decode_sparse_field("{not json"), IoError);
  EXPECT_THROW(decode_sparse_field("[1, 2]"), IoError);
  for (const char* key : {"format_version", "lmax", "weights", "directions", "K", "seed", "generator"}) {
    Json j = good;
    j.erase(key);
    expect_io(j);
  }
  Json j = good;
  j["format_version"] = 2;
  expect_io(j);
  j = good;
  j["lmax"] = 5;
  expect_io(j);
  j = good;
  j["K"] = 3;
  expect_io(j);
  j = good;
  j["directions"][0] = Json::array({1.0, 1.0, 0.0});
  expect_io(j);
  j = good;
  j["directions"][0] = Json::array({1.0, 0.0});
  expect_io(j);
  j = good;
  j["weights"][1] = Json::array({1.0});
  expect_io(j);
  j = good;
  j["weights"][1][0] = "x";
  expect_io(j);
  EXPECT_THROW(read_sparse_field(scratch("missing.json")), IoError);
}

TEST(GridFile, RoundTripIsBitExact) {
  RandomStream rng(5);
  const auto f = gen_iid_weights(whittle_matern(1.5, 12), 3, WeightDistribution::gaussian, rng);
  for (std::size_t nphi : {std::size_t{0}, std::size_t{40}}) {
    const auto g = synthesize_grid(f, SphereGrid(12, nphi));
    const auto bytes = encode_grid(g);
    EXPECT_EQ(bytes.substr(0, 4), "SGF1");
    const auto back = decode_grid(bytes);
    EXPECT_EQ(back.values, g.values);
    EXPECT_EQ(back.grid.nphi(), g.grid.nphi());
    EXPECT_EQ(back.grid.lgrid(), 12);
    const auto path = scratch("grid.sgf");
    write_grid(path, g);
    EXPECT_EQ(read_grid(path).values, g.values);
  }
}

TEST(GridFile, RejectsCorruptFiles) {
  const auto g = synthesize_grid(SparseField::shared({UnitVector(0, 0, 1)}, {{1.0}, {2.0}}), SphereGrid(1));
  const auto good = encode_grid(g);
  EXPECT_THROW(decode_grid(""), IoError);
  EXPECT_THROW(decode_grid("SGF2" + good.substr(4)), IoError);
  EXPECT_THROW(decode_grid(good.substr(0, good.size() - 1)), IoError);
  EXPECT_THROW(decode_grid(good + "x"), IoError);
  std::string huge = good;
  huge[7] = '\x7f';
  EXPECT_THROW(decode_grid(huge), IoError);
  std::string header = good;
  const auto pos = header.find("\"nphi\":3");
  ASSERT_NE(pos, std::string::npos);
  header[pos + 7] = '2';
  EXPECT_THROW(decode_grid(header), IoError);
  std::string garbled = good;
  garbled[8] = '[';
  EXPECT_THROW(decode_grid(garbled), IoError);
}

TEST(CoefficientFile, RoundTripAndValidation) {
  RandomStream rng(6);
  const auto c = random_gaussian_coeffs(whittle_matern(1.0, 9), rng);
  const auto text = encode_coefficients(c);
  EXPECT_EQ(decode_coefficients(text).data(), c.data());
  EXPECT_EQ(detect_file_kind(text), FileKind::coefficients);
  EXPECT_THROW(decode_coefficients(R"({"format_version":1,"lmax":1,"coefficients":[[2,0,1,0]]})"), IoError);
  EXPECT_THROW(decode_coefficients(R"({"format_version":1,"lmax":1,"coefficients":[[1,-2,1,0]]})"), IoError);
  EXPECT_THROW(decode_coefficients(R"({"format_version":1,"lmax":1,"coefficients":[[1,0,1]]})"), IoError);
  EXPECT_THROW(decode_coefficients(R"({"format_version":1,"lmax":-1,"coefficients":[]})"), IoError);
  EXPECT_THROW(decode_coefficients(R"({"lmax":1,"coefficients":[]})"), IoError);
}

TEST(FileKind, Detection) {
  RandomStream rng(7);
  const auto f = gen_iid_weights(whittle_matern(1.5, 3), 1, WeightDistribution::gaussian, rng);
  EXPECT_EQ(detect_file_kind(encode_sparse_field(f)), FileKind::sparse_field);
  EXPECT_EQ(detect_file_kind(encode_grid(synthesize_grid(f, SphereGrid(3)))), FileKind::grid);
  EXPECT_THROW(detect_file_kind("{\"a\": 1}"), IoError);
  EXPECT_THROW(detect_file_kind("\x89PNG"), IoError);
}

TEST(TraceFile, MonoAndPolyRecords) {
  RandomStream rng(8);
  const auto a = random_gaussian_ell(3, 1.0, rng);
  const auto mono = to_json(greedy_mono(a, 7));
  EXPECT_EQ(mono["kind"], "mono");
  EXPECT_EQ(mono["steps"].size(), 7u);
  EXPECT_EQ(mono["steps"][0]["step"], 1);
  for (const char* key : {"direction", "coefficient", "residual_norm", "defect", "lattice_index"})
    EXPECT_TRUE(mono["steps"][0].contains(key)) << key;

  const auto T = random_gaussian_coeffs(whittle_matern(1.0, 4), rng);
  const auto r = greedy_poly(T, 0.2, 3);
  const auto poly = to_json(r);
  EXPECT_EQ(poly["kind"], "poly");
  EXPECT_EQ(poly["termination"], r.trace.termination);
  EXPECT_EQ(poly["steps"].size(), r.trace.steps.size());
  EXPECT_EQ(coefficients_from_json(poly["steps"][0]["component"], 4).data(), r.trace.steps[0].component.data());
  EXPECT_EQ(poly["steps"][0]["index"].get<double>(), r.trace.steps[0].index);
}

TEST(Quantize, LevelsAndDegenerateRanges) {
  EXPECT_EQ(quantize({0.0, 0.5, 1.0}, false), (std::vector<std::uint8_t>{0, 128, 255}));
  EXPECT_EQ(quantize({-1.0, 0.0, 0.5}, true), (std::vector<std::uint8_t>{0, 128, 191}));
  for (bool sym : {false, true}) {
    EXPECT_EQ(quantize({2.0, 2.0, 2.0}, sym), (std::vector<std::uint8_t>(3, 128)));
    EXPECT_EQ(quantize({-3.0, -3.0 * (1 + 1e-15)}, sym), (std::vector<std::uint8_t>(2, 128)));
    EXPECT_EQ(quantize({0.0, 0.0}, sym), (std::vector<std::uint8_t>(2, 128)));
  }
}

TEST(Png, EncodeDecode) {
  std::vector<std::uint8_t> levels(6 * 3);
  for (std::size_t i = 0; i < levels.size(); ++i) levels[i] = static_cast<std::uint8_t>(i * 14);
  const auto gray = testkit::decode_png(encode_png(levels, 6, 3, false));
  EXPECT_EQ(gray.width, 6);
  EXPECT_EQ(gray.height, 3);
  EXPECT_FALSE(gray.palette);
  EXPECT_EQ(gray.gray, levels);
  const auto indexed = testkit::decode_png(encode_png(levels, 6, 3, true));
  EXPECT_TRUE(indexed.palette);
  EXPECT_EQ(indexed.gray, levels);
  EXPECT_EQ(encode_png(levels, 6, 3, true), encode_png(levels, 6, 3, true));
  EXPECT_THROW(encode_png(levels, 5, 3, false), InvalidArgument);
  const auto& pal = diverging_palette();
  EXPECT_EQ(pal[0], (std::array<std::uint8_t, 3>{33, 102, 172}));
  EXPECT_EQ(pal[255], (std::array<std::uint8_t, 3>{178, 24, 43}));
}

TEST(Render, DipoleIsBrighterInTheNorth) {
  HarmonicCoefficients c(1);
  c(1, 0) = 1.0;
  const auto r = render_values(c, 16, 8);
  for (int row = 0; row < 8; ++row) {
    const double theta = (row + 0.5) * std::numbers::pi / 8;
    for (int col = 0; col < 16; ++col)
      EXPECT_NEAR(r.values[row * 16 + col], std::sqrt(3.0 / kFourPi) * std::cos(theta), 1e-14);
  }
  const auto png = testkit::decode_png(render_png(synthesize(c, SphereGrid(1)), RenderOptions{32, false, false}));
  EXPECT_EQ(png.width, 32);
  EXPECT_EQ(png.height, 16);
  for (int row = 1; row < 16; ++row) EXPECT_LT(png.gray[row * 32], png.gray[(row - 1) * 32]);
  EXPECT_THROW(render_png(synthesize(c, SphereGrid(1)), RenderOptions{31, false, false}), InvalidArgument);
}
