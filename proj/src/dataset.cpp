// Copyright 2026 The Artflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "artflow/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "artflow/image_io.hpp"
#include "artflow/rng.hpp"

namespace artflow {
namespace {

constexpr double kPi = 3.14159265358979323846;

double gray01(const StageImage& img, int y, int x) {
  double s = 0.0;
  for (int c = 0; c < img.channels(); ++c) s += img.at(c, y, x);
  return (s / img.channels() + 1.0) * 0.5;
}

double median_of(std::vector<float>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 ? v[n / 2] : 0.5 * (static_cast<double>(v[n / 2 - 1]) + v[n / 2]);
}

double srgb_to_linear(double c) { return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4); }

double lab_f(double t) {
  constexpr double d = 6.0 / 29.0;
  return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
}

// ---------------------------------------------------------------------------
// Synthetic scenes

struct Shape {
  bool ellipse = true;
  double cy = 0, cx = 0, ry = 0, rx = 0, theta = 0;
  std::vector<std::array<double, 2>> poly;  // (y, x), counter-clockwise
  bool contains(double y, double x) const {
    if (ellipse) {
      const double dy = y - cy, dx = x - cx;
      const double u = dx * std::cos(theta) + dy * std::sin(theta);
      const double v = -dx * std::sin(theta) + dy * std::cos(theta);
      return (u * u) / (rx * rx) + (v * v) / (ry * ry) <= 1.0;
    }
    for (std::size_t i = 0; i < poly.size(); ++i) {
      const auto& a = poly[i];
      const auto& b = poly[(i + 1) % poly.size()];
      const double cross = (b[1] - a[1]) * (y - a[0]) - (b[0] - a[0]) * (x - a[1]);
      if (cross < 0) return false;
    }
    return true;
  }
};

Shape random_shape(Rng& rng, int H, int W) {
  Shape s;
  const double m = std::min(H, W);
  s.cy = rng.uniform(0.2, 0.8) * H;
  s.cx = rng.uniform(0.2, 0.8) * W;
  s.ellipse = rng.uniform() < 0.5;
  if (s.ellipse) {
    s.ry = rng.uniform(0.12, 0.3) * m;
    s.rx = rng.uniform(0.12, 0.3) * m;
    s.theta = rng.uniform(0.0, kPi);
  } else {
    const int k = rng.uniform_int(3, 5);
    const double r = rng.uniform(0.18, 0.35) * m;
    const double start = rng.uniform(0.0, 2 * kPi);
    for (int i = 0; i < k; ++i) {
      const double a = start + 2 * kPi * (i + rng.uniform(-0.2, 0.2)) / k;
      const double ri = r * rng.uniform(0.75, 1.0);
      // x = cx + r cos a, y = cy + r sin a traversed with increasing a
      s.poly.push_back({s.cy + ri * std::sin(a), s.cx + ri * std::cos(a)});
    }
  }
  return s;
}

std::array<double, 3> random_color(Rng& rng, const std::vector<double>& taken_gray, double min_gap) {
  std::array<double, 3> c{};
  for (int attempt = 0; attempt < 200; ++attempt) {
    for (auto& v : c) v = rng.uniform(0.05, 0.95);
    const double g = (c[0] + c[1] + c[2]) / 3.0;
    bool ok = true;
    for (double t : taken_gray)
      if (std::abs(t - g) < min_gap) ok = false;
    if (ok) break;
  }
  return c;
}

StageImage from_planes01(int stage, int H, int W, const std::vector<std::array<double, 3>>& rgb) {
  StageImage img(stage, 3, H, W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb[static_cast<std::size_t>(y) * W + x][c], 0.0, 1.0);
        img.at(c, y, x) = static_cast<float>(2.0 * v - 1.0);
      }
  quantize8(img);
  return img;
}

StagedExample synth_example(int index, const WorkflowConfig& cfg, std::uint64_t seed) {
  const int H = cfg.image_size.height, W = cfg.image_size.width;
  Rng rng(Rng::derive(seed, {0x53594eULL, static_cast<std::uint64_t>(index)}));
  const int n_shapes = rng.uniform_int(2, 3);
  std::vector<double> grays;
  std::vector<std::array<double, 3>> palette;
  palette.push_back(random_color(rng, grays, 0.22));
  grays.push_back((palette[0][0] + palette[0][1] + palette[0][2]) / 3.0);
  std::vector<Shape> shapes;
  for (int s = 0; s < n_shapes; ++s) {
    shapes.push_back(random_shape(rng, H, W));
    palette.push_back(random_color(rng, grays, 0.22));
    grays.push_back((palette.back()[0] + palette.back()[1] + palette.back()[2]) / 3.0);
  }
  std::vector<int> label(static_cast<std::size_t>(H) * W, 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int s = 0; s < n_shapes; ++s)
        if (shapes[s].contains(y + 0.5, x + 0.5)) label[static_cast<std::size_t>(y) * W + x] = s + 1;

  // Lighting: a linear gradient plus one soft highlight per shape.
  const double gtheta = rng.uniform(0.0, 2 * kPi);
  const double gstrength = rng.uniform(0.15, 0.3);
  std::vector<std::array<double, 3>> highlight;  // (y, x, sigma)
  for (const auto& s : shapes) {
    highlight.push_back({s.cy + rng.uniform(-0.08, 0.08) * H, s.cx + rng.uniform(-0.08, 0.08) * W,
                         rng.uniform(0.05, 0.1) * std::min(H, W)});
  }
  std::vector<double> facet(static_cast<std::size_t>(n_shapes) + 1, 1.0);
  for (int s = 1; s <= n_shapes; ++s) facet[s] = rng.uniform(0.6, 0.95);

  const std::size_t P = static_cast<std::size_t>(H) * W;
  std::vector<std::array<double, 3>> flat(P), shaded(P), lit(P);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const std::size_t p = static_cast<std::size_t>(y) * W + x;
      const int l = label[p];
      flat[p] = palette[l];
      const double u = ((x + 0.5 - W / 2.0) * std::cos(gtheta) + (y + 0.5 - H / 2.0) * std::sin(gtheta)) / (W / 2.0);
      const double g = 1.0 + gstrength * std::clamp(u, -1.0, 1.0);
      double h = 0.0;
      if (l > 0) {
        const auto& hl = highlight[l - 1];
        const double d2 = (y + 0.5 - hl[0]) * (y + 0.5 - hl[0]) + (x + 0.5 - hl[1]) * (x + 0.5 - hl[1]);
        h = 0.7 * std::exp(-d2 / (2 * hl[2] * hl[2]));
      }
      for (int c = 0; c < 3; ++c) {
        shaded[p][c] = flat[p][c] * facet[l];
        const double base = cfg.num_stages == 4 ? shaded[p][c] : flat[p][c];
        const double v = base * g;
        lit[p][c] = v + h * (1.0 - v);
      }
    }
  }
  StagedExample ex;
  char id[32];
  std::snprintf(id, sizeof id, "%06d", index);
  ex.id = id;
  StageImage flat_img = from_planes01(2, H, W, flat);
  StageImage sketch = stage_sketch(flat_img, cfg.staging.sketch_threshold);
  sketch.stage_index = 1;
  switch (cfg.num_stages) {
    case 2:
      ex.images = {sketch, from_planes01(2, H, W, lit)};
      break;
    case 3:
      ex.images = {sketch, flat_img, from_planes01(3, H, W, lit)};
      break;
    case 4:
      ex.images = {sketch, flat_img, from_planes01(3, H, W, shaded), from_planes01(4, H, W, lit)};
      break;
    default:
      throw dataset_error("synthetic workflows exist for 2, 3 or 4 stages, not " + std::to_string(cfg.num_stages));
  }
  return ex;
}

}  // namespace

int LabelMap::count() const { return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size()); }

StageImage stage_sketch(const StageImage& image, double threshold) {
  const int H = image.height(), W = image.width();
  std::vector<double> g(static_cast<std::size_t>(H) * W);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) g[static_cast<std::size_t>(y) * W + x] = gray01(image, y, x);
  auto at = [&](int y, int x) {
    y = std::clamp(y, 0, H - 1);
    x = std::clamp(x, 0, W - 1);
    return g[static_cast<std::size_t>(y) * W + x];
  };
  StageImage out(image.stage_index, image.channels(), H, W, 1.0f);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      const double gx = (at(y - 1, x + 1) + 2 * at(y, x + 1) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y, x - 1) + at(y + 1, x - 1));
      const double gy = (at(y + 1, x - 1) + 2 * at(y + 1, x) + at(y + 1, x + 1)) -
                        (at(y - 1, x - 1) + 2 * at(y - 1, x) + at(y - 1, x + 1));
      const double mag = std::sqrt(gx * gx + gy * gy) / 4.0;
      if (mag > threshold)
        for (int c = 0; c < image.channels(); ++c) out.at(c, y, x) = -1.0f;
    }
  }
  return out;
}

StageImage stage_flat_color(const StageImage& image, const LabelMap& segments) {
  const int H = image.height(), W = image.width(), C = image.channels();
  if (segments.height != H || segments.width != W ||
      segments.labels.size() != static_cast<std::size_t>(H) * W) {
    throw std::invalid_argument("stage_flat_color: label map does not cover the image");
  }
  const int max_label = *std::max_element(segments.labels.begin(), segments.labels.end());
  if (*std::min_element(segments.labels.begin(), segments.labels.end()) < 0) {
    throw std::invalid_argument("stage_flat_color: negative segment label");
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_label) + 1);
  for (std::size_t p = 0; p < segments.labels.size(); ++p) members[segments.labels[p]].push_back(p);
  StageImage out = image;
  std::vector<float> vals;
  for (const auto& m : members) {
    if (m.empty()) continue;
    for (int c = 0; c < C; ++c) {
      vals.clear();
      for (std::size_t p : m) vals.push_back(image.pixels[static_cast<std::size_t>(c) * H * W + p]);
      const float med = static_cast<float>(median_of(vals));
      for (std::size_t p : m) out.pixels[static_cast<std::size_t>(c) * H * W + p] = med;
    }
  }
  return out;
}

void rgb_to_lab(double r, double g, double b, double& L, double& A, double& B) {
  const double rl = srgb_to_linear((r + 1) * 0.5), gl = srgb_to_linear((g + 1) * 0.5),
               bl = srgb_to_linear((b + 1) * 0.5);
  const double X = (0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl) / 0.95047;
  const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double Z = (0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl) / 1.08883;
  const double fx = lab_f(X), fy = lab_f(Y), fz = lab_f(Z);
  L = 116 * fy - 16;
  A = 500 * (fx - fy);
  B = 200 * (fy - fz);
}

SlicResult slic(const StageImage& image, int num_superpixels, double compactness, int iterations) {
  if (num_superpixels < 1) throw std::invalid_argument("slic: num_superpixels must be >= 1");
  const int H = image.height(), W = image.width();
  const std::size_t P = static_cast<std::size_t>(H) * W;
  std::vector<std::array<double, 3>> lab(P);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      auto& v = lab[static_cast<std::size_t>(y) * W + x];
      if (image.channels() == 3) {
        rgb_to_lab(image.at(0, y, x), image.at(1, y, x), image.at(2, y, x), v[0], v[1], v[2]);
      } else {
        rgb_to_lab(image.at(0, y, x), image.at(0, y, x), image.at(0, y, x), v[0], v[1], v[2]);
      }
    }

  const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(num_superpixels) * W / H))));
  const int ny = std::max(1, static_cast<int>(std::lround(static_cast<double>(num_superpixels) / nx)));
  const double sy = static_cast<double>(H) / ny, sx = static_cast<double>(W) / nx;
  const double S = std::sqrt(sy * sx);
  const int window = static_cast<int>(std::ceil(std::max(sy, sx)));

  auto grad = [&](int y, int x) {
    auto px = [&](int yy, int xx) -> const std::array<double, 3>& {
      return lab[static_cast<std::size_t>(std::clamp(yy, 0, H - 1)) * W + std::clamp(xx, 0, W - 1)];
    };
    double g = 0;
    for (int c = 0; c < 3; ++c) {
      const double dx = px(y, x + 1)[c] - px(y, x - 1)[c];
      const double dy = px(y + 1, x)[c] - px(y - 1, x)[c];
      g += dx * dx + dy * dy;
    }
    return g;
  };

  std::vector<std::array<double, 5>> centers;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      int cy = std::min(H - 1, static_cast<int>((j + 0.5) * sy));
      int cx = std::min(W - 1, static_cast<int>((i + 0.5) * sx));
      // Seed at the lowest-gradient pixel of the 3x3 neighbourhood.
      int by = cy, bx = cx;
      double best = grad(cy, cx);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int yy = cy + dy, xx = cx + dx;
          if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
          const double g = grad(yy, xx);
          if (g < best) best = g, by = yy, bx = xx;
        }
      const auto& c = lab[static_cast<std::size_t>(by) * W + bx];
      centers.push_back({c[0], c[1], c[2], static_cast<double>(by), static_cast<double>(bx)});
    }
  }

  const double m2 = compactness * compactness;
  auto distance = [&](const std::array<double, 5>& c, std::size_t p, int y, int x) {
    const auto& v = lab[p];
    const double dc = (v[0] - c[0]) * (v[0] - c[0]) + (v[1] - c[1]) * (v[1] - c[1]) + (v[2] - c[2]) * (v[2] - c[2]);
    const double ds = (y - c[3]) * (y - c[3]) + (x - c[4]) * (x - c[4]);
    return dc + ds / (S * S) * m2;
  };

  std::vector<int> labels(P, -1);
  std::vector<double> dist(P);
  for (int it = 0; it < std::max(iterations, 1); ++it) {
    std::fill(labels.begin(), labels.end(), -1);
    std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const auto& c = centers[k];
      const int y0 = std::max(0, static_cast<int>(c[3]) - window), y1 = std::min(H - 1, static_cast<int>(c[3]) + window);
      const int x0 = std::max(0, static_cast<int>(c[4]) - window), x1 = std::min(W - 1, static_cast<int>(c[4]) + window);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * W + x;
          const double d = distance(c, p, y, x);
          if (d < dist[p]) dist[p] = d, labels[p] = static_cast<int>(k);
        }
    }
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        if (labels[p] >= 0) continue;
        for (std::size_t k = 0; k < centers.size(); ++k) {
          const double d = distance(centers[k], p, y, x);
          if (d < dist[p]) dist[p] = d, labels[p] = static_cast<int>(k);
        }
      }
    std::vector<std::array<double, 5>> sum(centers.size(), {0, 0, 0, 0, 0});
    std::vector<int> n(centers.size(), 0);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const std::size_t p = static_cast<std::size_t>(y) * W + x;
        auto& s = sum[labels[p]];
        s[0] += lab[p][0], s[1] += lab[p][1], s[2] += lab[p][2], s[3] += y, s[4] += x;
        ++n[labels[p]];
      }
    for (std::size_t k = 0; k < centers.size(); ++k)
      if (n[k] > 0)
        for (int d = 0; d < 5; ++d) centers[k][d] = sum[k][d] / n[k];
  }

  // Compact labels to 0..k-1 in order of first appearance.
  std::vector<int> remap(centers.size(), -1);
  SlicResult r;
  r.grid_step = S;
  r.labels = {H, W, std::vector<int>(P)};
  for (std::size_t p = 0; p < P; ++p) {
    int& m = remap[labels[p]];
    if (m < 0) {
      m = static_cast<int>(r.centers.size());
      r.centers.push_back(centers[labels[p]]);
    }
    r.labels.labels[p] = m;
  }
  return r;
}

StageImage median_filter(const StageImage& image, int kernel) {
  if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("median_filter: kernel must be odd and >= 1");
  const int H = image.height(), W = image.width(), C = image.channels(), r = kernel / 2;
  StageImage out = image;
  std::vector<std::array<float, 4>> win;
  win.reserve(static_cast<std::size_t>(kernel) * kernel);
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      win.clear();
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = std::clamp(y + dy, 0, H - 1), xx = std::clamp(x + dx, 0, W - 1);
          std::array<float, 4> v{};
          for (int c = 0; c < C && c < 4; ++c) v[c] = image.at(c, yy, xx);
          win.push_back(v);
        }
      std::size_t best = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < win.size(); ++i) {
        double cost = 0;
        for (std::size_t j = 0; j < win.size(); ++j)
          for (int c = 0; c < C; ++c) cost += std::abs(static_cast<double>(win[i][c]) - win[j][c]);
        if (cost < best_cost) best_cost = cost, best = i;
      }
      for (int c = 0; c < C; ++c) out.at(c, y, x) = win[best][c];
    }
  }
  return out;
}

StageImage stage_rough_color(const StageImage& image, int num_superpixels, const StagingConfig& staging) {
  const SlicResult seg = slic(image, num_superpixels, staging.slic_compactness, staging.slic_iterations);
  return median_filter(stage_flat_color(image, seg.labels), staging.median_kernel);
}

StagedExample stage_artwork(std::string id, const StageImage& artwork, const WorkflowConfig& cfg,
                            int num_superpixels) {
  if (cfg.num_stages != 2 && cfg.num_stages != 3) throw dataset_error("procedural staging supports N = 2 or 3");
  StageImage art = artwork;
  if (art.height() != cfg.image_size.height || art.width() != cfg.image_size.width) {
    art = resize_bilinear(art, cfg.image_size.height, cfg.image_size.width);
  }
  quantize8(art);
  StagedExample ex{std::move(id), {}};
  ex.images.push_back(stage_sketch(art, cfg.staging.sketch_threshold));
  if (cfg.num_stages == 3) ex.images.push_back(stage_rough_color(art, num_superpixels, cfg.staging));
  ex.images.push_back(art);
  for (int k = 0; k < cfg.num_stages; ++k) {
    ex.images[k].stage_index = k + 1;
    quantize8(ex.images[k]);
  }
  return ex;
}

std::vector<StagedExample> make_synthetic_workflow_dataset(int count, const WorkflowConfig& cfg, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synthetic dataset: count must be >= 1");
  if (cfg.channels != 3) throw dataset_error("synthetic dataset renders RGB images only");
  std::vector<StagedExample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(synth_example(i, cfg, seed));
  return out;
}

void export_dataset(const std::filesystem::path& root, std::span<const StagedExample> examples,
                    const WorkflowConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(root);
  for (const auto& name : cfg.stage_names) fs::create_directories(root / name);
  nlohmann::json ids = nlohmann::json::array();
  for (const auto& ex : examples) {
    if (static_cast<int>(ex.images.size()) != cfg.num_stages) {
      throw dataset_error("example " + ex.id + " has " + std::to_string(ex.images.size()) + " stages");
    }
    for (int s = 0; s < cfg.num_stages; ++s) write_png(root / cfg.stage_names[s] / (ex.id + ".png"), ex.images[s]);
    ids.push_back(ex.id);
  }
  const nlohmann::json manifest = {
      {"format", "artflow-dataset-1"}, {"config", cfg}, {"stages", cfg.stage_names}, {"ids", ids}};
  const auto tmp = root / "manifest.json.tmp";
  {
    std::ofstream out(tmp);
    out << manifest.dump(2) << '\n';
    if (!out) throw dataset_error("cannot write manifest in " + root.string());
  }
  fs::rename(tmp, root / "manifest.json");
}

Corpus load_dataset(const std::filesystem::path& root) {
  const auto manifest_path = root / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw dataset_error("no manifest.json in " + root.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw dataset_error("unreadable manifest " + manifest_path.string() + ": " + e.what());
  }
  Corpus corpus;
  try {
    corpus.config = manifest.at("config").get<WorkflowConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw dataset_error("manifest config invalid: " + std::string(e.what()));
  }
  const auto& cfg = corpus.config;
  const auto stages = manifest.at("stages").get<std::vector<std::string>>();
  for (const auto& s : stages) {
    if (std::find(cfg.stage_names.begin(), cfg.stage_names.end(), s) == cfg.stage_names.end()) {
      throw dataset_error("manifest lists unknown stage '" + s + "'");
    }
  }
  if (stages != cfg.stage_names) throw dataset_error("manifest stages do not match the workflow stage order");
  for (const auto& id_json : manifest.at("ids")) {
    StagedExample ex;
    ex.id = id_json.get<std::string>();
    for (int s = 0; s < cfg.num_stages; ++s) {
      const auto path = root / cfg.stage_names[s] / (ex.id + ".png");
      if (!std::filesystem::exists(path)) {
        throw dataset_error("example '" + ex.id + "' is missing stage '" + cfg.stage_names[s] + "' (" + path.string() +
                            ")");
      }
      StageImage img = read_png(path, s + 1, cfg.channels);
      if (img.height() != cfg.image_size.height || img.width() != cfg.image_size.width) {
        throw dataset_error("example '" + ex.id + "' stage '" + cfg.stage_names[s] + "' is " +
                            std::to_string(img.height()) + "x" + std::to_string(img.width()) + ", expected " +
                            std::to_string(cfg.image_size.height) + "x" + std::to_string(cfg.image_size.width));
      }
      ex.images.push_back(std::move(img));
    }
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

std::pair<std::vector<StagedExample>, std::vector<StagedExample>> split_dataset(std::vector<StagedExample> all,
                                                                               int test_count) {
  if (test_count < 0 || test_count >= static_cast<int>(all.size())) {
    throw std::invalid_argument("split_dataset: test_count must leave at least one training example");
  }
  std::vector<StagedExample> test(std::make_move_iterator(all.end() - test_count), std::make_move_iterator(all.end()));
  all.resize(all.size() - static_cast<std::size_t>(test_count));
  return {std::move(all), std::move(test)};
}

}  // namespace artflow
