#pragma once

// Synthetic polarimetric scenes: per-region coherency matrices rendered to
// per-pixel intensity images (one independent Jones draw per pixel), the
// per-pixel orthogonal-state contrast map, and sliding-window estimation
// maps. Pixel streams are derived from (scene seed, pixel index), so output
// never depends on render scheduling.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

#include "spdop/estimators.hpp"
#include "spdop/parallel.hpp"
#include "spdop/textfmt.hpp"

namespace spdop {

template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;  // row-major

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  T& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct PixelRect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

/// A scene is a background material plus rectangular regions painted over it
/// in list order (later regions overwrite earlier ones on overlap).
struct SceneSpec {
  int width = 0;
  int height = 0;
  CoherencyMatrix background{0.0, Complex(0.0, 0.0), 0.0};
  std::vector<std::pair<PixelRect, CoherencyMatrix>> regions;
  std::uint64_t seed = 0;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

inline void validate(const SceneSpec& scene) {
  if (scene.width < 1 || scene.height < 1)
    throw std::invalid_argument("scene dimensions must be at least 1x1");
  for (const auto& [rect, gamma] : scene.regions) {
    if (rect.width < 1 || rect.height < 1 || rect.x < 0 || rect.y < 0 ||
        rect.x + rect.width > scene.width || rect.y + rect.height > scene.height)
      throw std::invalid_argument("scene region out of bounds");
  }
}

struct ImagePair {
  Grid<double> i1;
  Grid<double> i2;
  bool has_cross = false;
  Grid<Complex> cross;  // empty unless has_cross
};

/// Renders the scene: pixel (x, y) receives one Jones draw from its region's
/// coherency matrix, using stream_id = y*width + x, converted to intensities.
inline ImagePair render_scene(const SceneSpec& scene, bool keep_cross, unsigned workers = 0) {
  validate(scene);
  const int w = scene.width;
  const int h = scene.height;

  // painter's order: background first, regions overwrite in list order
  Grid<std::uint32_t> material(w, h, 0);
  for (std::size_t r = 0; r < scene.regions.size(); ++r) {
    const PixelRect& rect = scene.regions[r].first;
    for (int y = rect.y; y < rect.y + rect.height; ++y)
      for (int x = rect.x; x < rect.x + rect.width; ++x)
        material.at(x, y) = static_cast<std::uint32_t>(r + 1);
  }

  std::vector<CholeskyFactor> factors;
  factors.push_back(cholesky_factor(scene.background));
  for (const auto& [rect, gamma] : scene.regions) factors.push_back(cholesky_factor(gamma));

  ImagePair pair{Grid<double>(w, h), Grid<double>(w, h), keep_cross,
                 keep_cross ? Grid<Complex>(w, h) : Grid<Complex>()};

  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < w; ++x) {
      const std::uint64_t pixel_index = static_cast<std::uint64_t>(y) * w + x;
      rng::CounterStream stream(SamplerConfig{scene.seed, pixel_index});
      const CholeskyFactor& l = factors[material.at(x, y)];
      const Complex z1 = stream.next_circular_gaussian();
      const Complex z2 = stream.next_circular_gaussian();
      const Complex ax = l.l11 * z1;
      const Complex ay = l.l21 * z1 + l.l22 * z2;
      pair.i1.at(x, y) = std::norm(ax);
      pair.i2.at(x, y) = std::norm(ay);
      if (keep_cross) pair.cross.at(x, y) = ax * std::conj(ay);
    }
  });
  return pair;
}

struct OsciMap {
  Grid<double> rho;              // (I1 - I2) / (I1 + I2), in [-1, 1]
  Grid<std::uint8_t> degenerate;  // 1 where I1 + I2 == 0 (rho forced to 0)
};

/// Per-pixel orthogonal-state contrast. Zero-intensity pixels are masked,
/// not fatal.
inline OsciMap osci_map(const ImagePair& pair) {
  const int w = pair.i1.width;
  const int h = pair.i1.height;
  OsciMap map{Grid<double>(w, h), Grid<std::uint8_t>(w, h, 0)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double total = pair.i1.at(x, y) + pair.i2.at(x, y);
      if (total > 0.0) {
        map.rho.at(x, y) = (pair.i1.at(x, y) - pair.i2.at(x, y)) / total;
      } else {
        map.rho.at(x, y) = 0.0;
        map.degenerate.at(x, y) = 1;
      }
    }
  }
  return map;
}

struct EstimateMap {
  Grid<double> p2;
  Grid<std::int32_t> window_n;  // samples actually used per pixel (clipped at borders)
};

/// Sliding-window application of estimate_p2 with N = window^2, window odd
/// and >= 3. Border windows are clipped to the image (smaller N, recorded in
/// the sidecar), never padded. Window pixels are accumulated in row-major
/// order, so a window covering the whole image reproduces the flat
/// estimate_p2 result exactly.
inline EstimateMap estimate_map(const ImagePair& pair, int window, EstimatorKind kind,
                                unsigned workers = 0) {
  const int w = pair.i1.width;
  const int h = pair.i1.height;
  if (window < 3 || window % 2 == 0)
    throw std::invalid_argument("window must be odd and at least 3");
  // 2*max(w,h)-1 already covers the whole image from every center; anything
  // larger cannot change the result and is rejected as a dimension mismatch
  if (window > 2 * std::max(w, h) - 1)
    throw std::domain_error("window larger than the image dimensions support");
  if (kind == EstimatorKind::FourImage && !pair.has_cross)
    throw std::invalid_argument("four-image estimator requires the cross grid");

  const int half = window / 2;
  EstimateMap map{Grid<double>(w, h), Grid<std::int32_t>(w, h)};
  parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t row) {
    const int yc = static_cast<int>(row);
    const int y0 = std::max(0, yc - half);
    const int y1 = std::min(h - 1, yc + half);
    for (int xc = 0; xc < w; ++xc) {
      const int x0 = std::max(0, xc - half);
      const int x1 = std::min(w - 1, xc + half);
      detail::IntensitySums sums;
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          IntensityRecord rec{pair.i1.at(x, y), pair.i2.at(x, y), std::nullopt};
          if (pair.has_cross) rec.cross = pair.cross.at(x, y);
          sums.add(rec);
        }
      }
      map.p2.at(xc, yc) = detail::estimate_from_sums(sums, kind).p2_hat;
      map.window_n.at(xc, yc) = static_cast<std::int32_t>(sums.n);
    }
  });
  return map;
}

// ---------------------------------------------------------------------------
// Float-map I/O: text header "PFMAP <width> <height> <channels>" then
// row-major, channel-interleaved 32-bit little-endian floats.

inline void write_pfmap(std::ostream& os, int width, int height,
                        std::span<const Grid<double>* const> channels) {
  os << "PFMAP " << width << ' ' << height << ' ' << channels.size() << '\n';
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (const Grid<double>* g : channels) {
        float v = static_cast<float>(g->at(x, y));
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        if constexpr (std::endian::native == std::endian::big)
          bits = ((bits & 0xFF) << 24) | ((bits & 0xFF00) << 8) | ((bits >> 8) & 0xFF00) | (bits >> 24);
        char raw[4];
        std::memcpy(raw, &bits, 4);
        os.write(raw, 4);
      }
    }
  }
}

struct FloatMap {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> data;  // row-major, channel-interleaved

  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

inline FloatMap read_pfmap(std::istream& is) {
  std::string magic;
  FloatMap map;
  if (!(is >> magic >> map.width >> map.height >> map.channels) || magic != "PFMAP")
    throw std::runtime_error("not a PFMAP stream");
  is.get();  // newline after the header
  const std::size_t count =
      static_cast<std::size_t>(map.width) * map.height * map.channels;
  map.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    char raw[4];
    if (!is.read(raw, 4)) throw std::runtime_error("PFMAP stream truncated");
    std::uint32_t bits;
    std::memcpy(&bits, raw, 4);
    if constexpr (std::endian::native == std::endian::big)
      bits = ((bits & 0xFF) << 24) | ((bits & 0xFF00) << 8) | ((bits >> 8) & 0xFF00) | (bits >> 24);
    std::memcpy(&map.data[i], &bits, 4);
  }
  return map;
}

/// CSV export for small maps: header "x,y,value" then one row per pixel in
/// row-major order.
inline void write_grid_csv(std::ostream& os, const Grid<double>& grid) {
  os << "x,y,value\n";
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      os << x << ',' << y << ',' << format_sig10(grid.at(x, y)) << '\n';
}

}  // namespace spdop
