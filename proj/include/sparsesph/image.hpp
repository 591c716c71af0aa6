#pragma once
/// \file image.hpp
/// Equirectangular rendering of band-limited fields to 8-bit PNG.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include <png.h>

#include "sparsesph/detail/parallel.hpp"
#include "sparsesph/error.hpp"
#include "sparsesph/harmonic.hpp"
#include "sparsesph/io.hpp"
#include "sparsesph/specfun.hpp"

namespace sparsesph {

/// Row-major raster of field values; row 0 is the north pole side.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<double> values;
};

/// Evaluates a real band-limited field at pixel centres
/// theta = (r + 1/2) pi / H, phi = (c + 1/2) 2 pi / W. Legendre columns are
/// computed once per row, so the cost is O(H L^2 + H W L).
inline Raster render_values(const HarmonicCoefficients& a, int width, int height) {
  if (width < 1 || height < 1) throw InvalidArgument("render: image dimensions must be positive");
  const int L = a.lmax();
  Raster r{width, height, std::vector<double>(static_cast<std::size_t>(width) * height)};
  std::vector<std::complex<double>> base(static_cast<std::size_t>(width));
  for (int c = 0; c < width; ++c) {
    const double phi = (c + 0.5) * 2.0 * std::numbers::pi / width;
    base[c] = std::polar(1.0, phi);
  }
  detail::parallel_chunks(static_cast<std::size_t>(height), [&](std::size_t begin, std::size_t end) {
    std::vector<double> col(static_cast<std::size_t>(L) + 1);
    std::vector<cplx> fm(static_cast<std::size_t>(L) + 1);
    for (std::size_t row = begin; row < end; ++row) {
      const double theta = (static_cast<double>(row) + 0.5) * std::numbers::pi / height;
      const double ct = std::cos(theta), st = std::sin(theta);
      for (int m = 0; m <= L; ++m) {
        normalized_legendre_column(L, m, ct, st, col);
        cplx s(0.0, 0.0);
        for (int l = m; l <= L; ++l) s += a(l, m) * col[l - m];
        fm[m] = s;
      }
      for (int c = 0; c < width; ++c) {
        // T = Re f_0 + 2 Re sum_{m>0} f_m e^{i m phi} for a real field
        cplx e(1.0, 0.0);
        double v = fm[0].real();
        for (int m = 1; m <= L; ++m) {
          e *= base[c];
          v += 2.0 * (fm[m] * e).real();
        }
        r.values[row * static_cast<std::size_t>(width) + c] = v;
      }
    }
  });
  return r;
}

struct RenderOptions {
  int width = 1024;         ///< height is width / 2
  bool symmetric = false;   ///< map [-A, A], A = max |v|, instead of [min, max]
  bool palette = false;     ///< diverging colour table instead of grayscale
};

/// Intensity levels 0..255. Data whose spread is below 1e-12 of its magnitude
/// (a constant field) maps every pixel to 128 in either mode.
inline std::vector<std::uint8_t> quantize(const std::vector<double>& v, bool symmetric) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  const double mag = std::max(std::abs(lo), std::abs(hi));
  std::vector<std::uint8_t> out(v.size(), 128);
  if (!(hi - lo > 1e-12 * mag) || mag == 0.0) return out;
  if (symmetric) {
    lo = -mag;
    hi = mag;
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = (v[i] - lo) / (hi - lo);
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(t * 255.0), 0L, 255L));
  }
  return out;
}

/// Blue to white to red, 256 entries.
inline const std::array<std::array<std::uint8_t, 3>, 256>& diverging_palette() {
  static const auto table = [] {
    std::array<std::array<std::uint8_t, 3>, 256> t{};
    constexpr std::array<double, 3> blue{33, 102, 172}, white{247, 247, 247}, red{178, 24, 43};
    for (int i = 0; i < 256; ++i) {
      const double s = i / 255.0;
      const auto& from = s < 0.5 ? blue : white;
      const auto& to = s < 0.5 ? white : red;
      const double u = s < 0.5 ? s * 2.0 : (s - 0.5) * 2.0;
      for (int k = 0; k < 3; ++k) t[i][k] = static_cast<std::uint8_t>(std::lround(from[k] + (to[k] - from[k]) * u));
    }
    return t;
  }();
  return table;
}

/// 8-bit grayscale or 8-bit indexed PNG, encoded in memory.
inline std::string encode_png(const std::vector<std::uint8_t>& levels, int width, int height, bool palette) {
  if (levels.size() != static_cast<std::size_t>(width) * height) throw InvalidArgument("encode_png: size mismatch");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: cannot create info");
  }
  std::string out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               palette ? PNG_COLOR_TYPE_PALETTE : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::array<png_color, 256> colours{};
  if (palette) {
    const auto& t = diverging_palette();
    for (int i = 0; i < 256; ++i) colours[i] = {t[i][0], t[i][1], t[i][2]};
    png_set_PLTE(png, info, colours.data(), 256);
  }
  png_write_info(png, info);
  for (int row = 0; row < height; ++row)
    png_write_row(png, const_cast<png_bytep>(levels.data() + static_cast<std::size_t>(row) * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// Renders a grid field through its harmonic coefficients.
inline std::string render_png(const GridField& f, const RenderOptions& opt) {
  if (opt.width < 2 || opt.width % 2 != 0) throw InvalidArgument("render: width must be a positive even number");
  const Raster r = render_values(analyze(f), opt.width, opt.width / 2);
  return encode_png(quantize(r.values, opt.symmetric), r.width, r.height, opt.palette);
}

inline void write_png(const std::filesystem::path& path, const GridField& f, const RenderOptions& opt) {
  write_file_atomic(path, render_png(f, opt));
}

}  // namespace sparsesph
