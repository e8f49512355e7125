#include "adrf/data/frames.hpp"

#include "adrf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace adrf::data {

Frame quantize8(const Frame& f) {
  return f.unaryExpr([](double v) {
    const double level = std::round((std::clamp(v, -1.0, 1.0) + 1.0) * 127.5);
    return level / 127.5 - 1.0;
  });
}

Frame flip_horizontal(const Frame& f) { return f.rowwise().reverse(); }

FrameScenario mirror(const FrameScenario& s) {
  FrameScenario m = s;
  m.id = s.id + "-mirror";
  for (auto& f : m.frames) f = std::make_shared<const Frame>(flip_horizontal(*f));
  return m;
}

namespace {

struct Episode {
  std::size_t begin, end;
  bool occlusion;
};

double coverage_1d(double lo, double hi, double cell) {
  return std::max(0.0, std::min(cell + 1.0, hi) - std::max(cell, lo));
}

void paint_square(Frame& f, double x0, double y0, double side, double value) {
  const auto rows = static_cast<double>(f.rows()), cols = static_cast<double>(f.cols());
  const int r0 = std::max(0, static_cast<int>(std::floor(y0)));
  const int r1 = std::min(static_cast<int>(rows) - 1, static_cast<int>(std::floor(y0 + side)));
  const int c0 = std::max(0, static_cast<int>(std::floor(x0)));
  const int c1 = std::min(static_cast<int>(cols) - 1, static_cast<int>(std::floor(x0 + side)));
  for (int r = r0; r <= r1; ++r) {
    const double cy = coverage_1d(y0, y0 + side, r);
    for (int c = c0; c <= c1; ++c) {
      const double cov = cy * coverage_1d(x0, x0 + side, c);
      f(r, c) = (1.0 - cov) * f(r, c) + cov * value;
    }
  }
}

std::vector<Episode> place_episodes(std::size_t length, const FrameAnomalySpec& a, std::mt19937_64& rng) {
  std::vector<Episode> eps;
  const std::size_t wanted = static_cast<std::size_t>(a.coverage * static_cast<double>(length));
  std::size_t covered = 0;
  constexpr std::size_t gap = 3, lead = 4;
  std::uniform_int_distribution<std::size_t> len_dist(a.min_episode, a.max_episode);
  std::bernoulli_distribution coin(0.5);
  for (int attempt = 0; attempt < 2000 && covered < wanted; ++attempt) {
    const std::size_t len = len_dist(rng);
    if (lead + len > length) continue;
    std::uniform_int_distribution<std::size_t> start_dist(lead, length - len);
    const std::size_t b = start_dist(rng);
    const Episode cand{b, b + len, coin(rng)};
    const bool clash = std::any_of(eps.begin(), eps.end(), [&](const Episode& o) {
      return cand.begin < o.end + gap && o.begin < cand.end + gap;
    });
    if (clash) continue;
    eps.push_back(cand);
    covered += len;
  }
  return eps;
}

}  // namespace

FrameScenario generate_frame_scenario(const std::string& id, const FrameScenarioSpec& spec, std::uint64_t seed) {
  if (spec.length < 4) throw ContractViolation("generate_frame_scenario: length must be >= 4");
  if (spec.size < 8) throw ContractViolation("generate_frame_scenario: frame size must be >= 8");
  const auto& a = spec.anomaly;
  if (spec.abnormal) {
    if (!(a.displacement_px >= 1.0)) {
      throw ContractViolation("generate_frame_scenario: displacement of " + std::to_string(a.displacement_px) +
                              " px is below the one-pixel noise floor");
    }
    if (!(a.occluder_fraction > 0.0 && a.occluder_fraction < 1.0)) {
      throw ContractViolation("generate_frame_scenario: occluder must be smaller than the frame");
    }
    if (a.min_episode == 0 || a.min_episode > a.max_episode) {
      throw ContractViolation("generate_frame_scenario: invalid episode lengths");
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double n = static_cast<double>(spec.size);
  const double unit = n / 32.0;

  const double phase1 = 2.0 * std::numbers::pi * u(rng), phase2 = 2.0 * std::numbers::pi * u(rng);
  const double pan = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.3 + 0.5 * u(rng)) * unit;
  const double side = n / 5.0;
  const double speed = (0.8 + 0.8 * u(rng)) * unit;
  const double heading = 2.0 * std::numbers::pi * u(rng);
  double vx = speed * std::cos(heading), vy = speed * std::sin(heading);
  double px = u(rng) * (n - side), py = u(rng) * (n - side);
  double offset = 0.0;

  FrameScenario s;
  s.id = id;
  s.abnormal = spec.abnormal;
  s.label.assign(spec.length, 0);
  std::vector<Episode> episodes;
  if (spec.abnormal) episodes = place_episodes(spec.length, a, rng);
  auto episode_at = [&](std::size_t i) -> const Episode* {
    for (const auto& e : episodes) {
      if (i >= e.begin && i < e.end) return &e;
    }
    return nullptr;
  };

  for (std::size_t i = 0; i < spec.length; ++i) {
    const Episode* ep = episode_at(i);
    if (i > 0) {
      if (ep && !ep->occlusion) {
        double nx, ny;
        do {
          nx = u(rng) * (n - side);
          ny = u(rng) * (n - side);
        } while (std::hypot(nx - px, ny - py) < a.displacement_px);
        px = nx;
        py = ny;
        offset += (u(rng) < 0.5 ? -1.0 : 1.0) * (n / 8.0 + u(rng) * n / 8.0);
      } else {
        px += vx;
        py += vy;
        if (px < 0.0 || px > n - side) {
          vx = -vx;
          px = std::clamp(px, 0.0, n - side);
        }
        if (py < 0.0 || py > n - side) {
          vy = -vy;
          py = std::clamp(py, 0.0, n - side);
        }
        offset += pan;
      }
    }
    Frame f(spec.size, spec.size);
    for (std::size_t r = 0; r < spec.size; ++r) {
      for (std::size_t c = 0; c < spec.size; ++c) {
        const double x = (static_cast<double>(c) + offset) / n, y = static_cast<double>(r) / n;
        f(r, c) = -0.3 + 0.25 * std::sin(2.0 * std::numbers::pi * (3.0 * x + 1.5 * y) + phase1) +
                  0.15 * std::sin(2.0 * std::numbers::pi * (-1.2 * x + 3.5 * y) + phase2);
      }
    }
    paint_square(f, px, py, side, 0.8);
    if (ep && ep->occlusion) {
      const double occ = a.occluder_fraction * n;
      const double ox = u(rng) * (n - occ), oy = u(rng) * (n - occ);
      const int cell = std::max(1, static_cast<int>(2.0 * unit));
      const int r0 = static_cast<int>(oy), c0 = static_cast<int>(ox), span = static_cast<int>(occ);
      for (int r = r0; r < std::min(r0 + span, static_cast<int>(spec.size)); ++r) {
        for (int c = c0; c < std::min(c0 + span, static_cast<int>(spec.size)); ++c) {
          f(r, c) = (((r - r0) / cell + (c - c0) / cell) % 2) ? 1.0 : -1.0;
        }
      }
    }
    for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] += spec.noise * gauss(rng);
    s.frames.push_back(std::make_shared<const Frame>(quantize8(f)));
    s.t.push_back(static_cast<double>(i) / spec.rate_hz);
    if (ep) s.label[i] = 1;
  }
  return s;
}

std::vector<FrameSequence> make_sequences(const FrameScenario& s) {
  if (s.label.size() != s.frames.size() || s.t.size() != s.frames.size()) {
    throw ContractViolation("frame scenario '" + s.id + "': labels/timestamps do not cover every frame");
  }
  std::vector<FrameSequence> out;
  for (std::size_t end = 3; end < s.size(); ++end) {
    FrameSequence q;
    for (std::size_t k = 0; k < 4; ++k) q.frames[k] = s.frames[end - 3 + k];
    q.label = s.label[end];
    q.scenario = s.id;
    q.end_index = end;
    q.t = s.t[end];
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<FrameSequence> FrameDatasetSplit::test() const {
  std::vector<FrameSequence> all = test_normal;
  all.insert(all.end(), test_abnormal.begin(), test_abnormal.end());
  return all;
}

FrameDatasetSplit build_frame_dataset(const std::vector<FrameScenario>& normals,
                                      const std::vector<FrameScenario>& abnormals, std::size_t threshold_count,
                                      std::size_t test_count, std::uint64_t seed) {
  if (normals.empty()) throw ContractViolation("build_frame_dataset: need at least one normal scenario");
  std::vector<FrameSequence> pool;
  for (const auto& s : normals) {
    for (auto& q : make_sequences(s)) pool.push_back(std::move(q));
  }
  for (const auto& s : normals) {
    for (auto& q : make_sequences(mirror(s))) pool.push_back(std::move(q));
  }
  if (pool.size() <= threshold_count + test_count) {
    throw ContractViolation("build_frame_dataset: pool of " + std::to_string(pool.size()) +
                            " sequences cannot supply " + std::to_string(threshold_count) + " threshold + " +
                            std::to_string(test_count) + " test sequences and a training set");
  }
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FrameDatasetSplit split;
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& q = pool[order[k]];
    if (k < threshold_count) {
      split.threshold.push_back(q);
    } else if (k < threshold_count + test_count) {
      split.test_normal.push_back(q);
    } else {
      split.train.push_back(q);
    }
  }
  for (const auto& s : abnormals) {
    for (auto& q : make_sequences(s)) split.test_abnormal.push_back(std::move(q));
  }
  return split;
}

double luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return y / 127.5 - 1.0;
}

namespace {

double sample_clamped(const Frame& f, double y, double x) {
  const double ymax = static_cast<double>(f.rows() - 1), xmax = static_cast<double>(f.cols() - 1);
  y = std::clamp(y, 0.0, ymax);
  x = std::clamp(x, 0.0, xmax);
  const auto r0 = static_cast<Eigen::Index>(std::floor(y)), c0 = static_cast<Eigen::Index>(std::floor(x));
  const Eigen::Index r1 = std::min<Eigen::Index>(r0 + 1, f.rows() - 1), c1 = std::min<Eigen::Index>(c0 + 1, f.cols() - 1);
  const double dy = y - static_cast<double>(r0), dx = x - static_cast<double>(c0);
  return (1 - dy) * ((1 - dx) * f(r0, c0) + dx * f(r0, c1)) + dy * ((1 - dx) * f(r1, c0) + dx * f(r1, c1));
}

// Half-sample symmetric reflection of a continuous coordinate into [0, n-1].
double reflect(double v, double n) {
  if (n <= 1.0) return 0.0;
  const double period = 2.0 * n;
  double m = std::fmod(v + 0.5, period);
  if (m < 0.0) m += period;
  if (m >= n) m = period - m;
  return std::clamp(m - 0.5, 0.0, n - 1.0);
}

}  // namespace

Frame resize_bilinear(const Frame& f, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || f.size() == 0) throw ContractViolation("resize_bilinear: empty frame");
  Frame out(rows, cols);
  const double sy = static_cast<double>(f.rows()) / static_cast<double>(rows);
  const double sx = static_cast<double>(f.cols()) / static_cast<double>(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out(r, c) = sample_clamped(f, (r + 0.5) * sy - 0.5, (c + 0.5) * sx - 0.5);
    }
  }
  return out;
}

AugmentParams draw_augment(const AugmentSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  AugmentParams p;
  p.flip = spec.flip && u(rng) > 0.0;
  p.angle_rad = u(rng) * spec.rotate_deg * std::numbers::pi / 180.0;
  p.shift_x = u(rng) * spec.shift;
  p.shift_y = u(rng) * spec.shift;
  p.zoom = spec.zoom_lo + 0.5 * (u(rng) + 1.0) * (spec.zoom_hi - spec.zoom_lo);
  return p;
}

Frame augment(const Frame& f, const AugmentParams& p) {
  if (!(p.zoom > 0.0)) throw ContractViolation("augment: zoom must be > 0");
  const double rows = static_cast<double>(f.rows()), cols = static_cast<double>(f.cols());
  const double cy = 0.5 * (rows - 1.0), cx = 0.5 * (cols - 1.0);
  const double cs = std::cos(p.angle_rad), sn = std::sin(p.angle_rad);
  Frame out(f.rows(), f.cols());
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      const double x = static_cast<double>(c) - cx, y = static_cast<double>(r) - cy;
      const double sx = cx + (cs * x + sn * y) / p.zoom - p.shift_x * cols;
      const double sy = cy + (-sn * x + cs * y) / p.zoom - p.shift_y * rows;
      out(r, c) = sample_clamped(f, reflect(sy, rows), reflect(sx, cols));
    }
  }
  return p.flip ? flip_horizontal(out) : out;
}

}  // namespace adrf::data
