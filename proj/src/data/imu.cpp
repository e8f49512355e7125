#include "adrf/data/imu.hpp"

#include "adrf/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace adrf::data {

void validate(const ImuStream& s) {
  if (s.t.size() != s.x.size()) {
    throw ContractViolation("imu stream '" + s.id + "': " + std::to_string(s.t.size()) + " timestamps for " +
                            std::to_string(s.x.size()) + " samples");
  }
  if (!s.label.empty() && s.label.size() != s.x.size()) {
    throw ContractViolation("imu stream '" + s.id + "': labels do not cover every sample");
  }
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!std::isfinite(s.t[i]) || (i > 0 && !(s.t[i] > s.t[i - 1]))) {
      throw ContractViolation("imu stream '" + s.id + "': timestamps must be finite and strictly increasing (sample " +
                              std::to_string(i) + ")");
    }
    for (double v : s.x[i]) {
      if (!std::isfinite(v)) throw ContractViolation("imu stream '" + s.id + "': non-finite value at sample " + std::to_string(i));
    }
  }
}

ScalerParams fit_scaler(const std::vector<const ImuStream*>& train) {
  ScalerParams p;
  p.min.fill(std::numeric_limits<double>::infinity());
  p.max.fill(-std::numeric_limits<double>::infinity());
  for (const ImuStream* s : train) {
    for (const auto& x : s->x) {
      for (std::size_t d = 0; d < kImuDims; ++d) {
        p.min[d] = std::min(p.min[d], x[d]);
        p.max[d] = std::max(p.max[d], x[d]);
      }
    }
  }
  for (std::size_t d = 0; d < kImuDims; ++d) {
    if (!(p.max[d] > p.min[d])) {
      throw ContractViolation(std::string("fit_scaler: feature ") + kImuChannelNames[d] + " is constant or missing");
    }
  }
  return p;
}

ImuVector apply_scaler(const ScalerParams& p, const ImuVector& x) {
  ImuVector y;
  for (std::size_t d = 0; d < kImuDims; ++d) y[d] = 2.0 * (x[d] - p.min[d]) / (p.max[d] - p.min[d]) - 1.0;
  return y;
}

ImuVector invert_scaler(const ScalerParams& p, const ImuVector& y) {
  ImuVector x;
  for (std::size_t d = 0; d < kImuDims; ++d) x[d] = (y[d] + 1.0) * 0.5 * (p.max[d] - p.min[d]) + p.min[d];
  return x;
}

ImuStream apply_scaler(const ScalerParams& p, const ImuStream& s) {
  ImuStream out = s;
  for (auto& x : out.x) x = apply_scaler(p, x);
  return out;
}

std::size_t window_count(std::size_t samples, WindowMode mode) {
  const std::size_t need = mode == WindowMode::reconstruction ? 3 : 4;
  return samples >= need ? samples - need + 1 : 0;
}

std::vector<ImuWindow> make_windows(const ImuStream& s, WindowMode mode, double max_gap_factor) {
  validate(s);
  const std::size_t span = mode == WindowMode::reconstruction ? 3 : 4;
  if (s.size() < span) {
    throw ContractViolation("make_windows: stream '" + s.id + "' has " + std::to_string(s.size()) +
                            " samples, need at least " + std::to_string(span));
  }
  std::vector<double> periods;
  for (std::size_t i = 1; i < s.size(); ++i) periods.push_back(s.t[i] - s.t[i - 1]);
  std::nth_element(periods.begin(), periods.begin() + periods.size() / 2, periods.end());
  const double max_gap = max_gap_factor * periods[periods.size() / 2];

  std::vector<ImuWindow> out;
  out.reserve(s.size() - span + 1);
  for (std::size_t i = 0; i + span <= s.size(); ++i) {
    bool contiguous = true;
    for (std::size_t k = i + 1; k < i + span; ++k) contiguous = contiguous && s.t[k] - s.t[k - 1] <= max_gap;
    if (!contiguous) continue;
    ImuWindow w;
    for (std::size_t k = 0; k < 3; ++k) {
      w.x[k] = s.x[i + k];
      w.t[k] = s.t[i + k];
    }
    if (mode == WindowMode::forecast) {
      w.target = s.x[i + 3];
      w.target_t = s.t[i + 3];
      w.flag_index = i + 3;
    } else {
      w.flag_index = i + 2;
    }
    out.push_back(w);
  }
  return out;
}

Envelope fit_envelope(const std::vector<const ImuStream*>& reference) {
  Envelope e;
  e.min.fill(std::numeric_limits<double>::infinity());
  e.max.fill(-std::numeric_limits<double>::infinity());
  std::size_t n = 0;
  for (const ImuStream* s : reference) {
    for (const auto& x : s->x) {
      for (std::size_t d = 0; d < kImuDims; ++d) {
        e.min[d] = std::min(e.min[d], x[d]);
        e.max[d] = std::max(e.max[d], x[d]);
      }
      ++n;
    }
  }
  if (n == 0) throw ContractViolation("label_ground_truth: empty normal reference");
  return e;
}

std::vector<std::uint8_t> label_ground_truth(const ImuStream& s, const Envelope& e) {
  std::vector<std::uint8_t> out(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t d = 0; d < kImuDims; ++d) {
      if (s.x[i][d] < e.min[d] || s.x[i][d] > e.max[d]) out[i] = 1;
    }
  }
  return out;
}

std::vector<std::uint8_t> label_ground_truth(const ImuStream& s, const std::vector<const ImuStream*>& reference) {
  return label_ground_truth(s, fit_envelope(reference));
}

ImuProfile make_imu_profile(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImuProfile p;
  for (std::size_t d = 0; d < kImuDims; ++d) {
    const double base = d < 3 ? 0.5 : 2.0;
    p.amplitude[d] = base * (0.6 + 0.8 * u(rng));
    const int components = 2 + static_cast<int>(u(rng) * 3.0);
    double total = 0.0;
    for (int k = 0; k < components; ++k) {
      p.freq_hz[d].push_back(0.05 + 0.45 * u(rng));
      p.weight[d].push_back(0.2 + u(rng));
      total += p.weight[d].back();
    }
    for (double& w : p.weight[d]) w /= total;
  }
  return p;
}

namespace {

struct Segment {
  std::size_t begin, end;
};

std::vector<Segment> place_segments(std::size_t length, const ImuAnomalySpec& a, std::mt19937_64& rng) {
  std::vector<Segment> segs;
  const std::size_t wanted = static_cast<std::size_t>(a.coverage * static_cast<double>(length));
  std::size_t covered = 0;
  std::uniform_int_distribution<std::size_t> len_dist(a.min_event, a.max_event);
  constexpr std::size_t gap = 8;
  for (int attempt = 0; attempt < 2000 && covered < wanted; ++attempt) {
    const std::size_t len = std::min(len_dist(rng), length - 2 * gap);
    std::uniform_int_distribution<std::size_t> start_dist(gap, length - len - gap);
    const Segment s{start_dist(rng), 0};
    const Segment cand{s.begin, s.begin + len};
    const bool clash = std::any_of(segs.begin(), segs.end(), [&](const Segment& o) {
      return cand.begin < o.end + gap && o.begin < cand.end + gap;
    });
    if (clash) continue;
    segs.push_back(cand);
    covered += len;
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.begin < y.begin; });
  return segs;
}

}  // namespace

ImuStream generate_imu_scenario(const std::string& id, const ImuProfile& profile, const ImuScenarioSpec& spec,
                                std::uint64_t seed) {
  if (spec.length < 10) throw ContractViolation("generate_imu_scenario: length must be >= 10");
  if (!(spec.rate_hz > 0.0)) throw ContractViolation("generate_imu_scenario: rate must be > 0");
  if (!(spec.noise >= 0.0)) throw ContractViolation("generate_imu_scenario: noise must be >= 0");
  const auto& a = spec.anomaly;
  if (spec.abnormal) {
    for (double m : {a.spike_magnitude, a.step_magnitude, a.burst_magnitude}) {
      if (!(m > spec.noise)) {
        throw ContractViolation("generate_imu_scenario: anomaly magnitude " + std::to_string(m) +
                                " is not above the noise level " + std::to_string(spec.noise));
      }
    }
    if (!(a.coverage > 0.0 && a.coverage < 0.9) || a.min_event == 0 || a.min_event > a.max_event ||
        a.max_event + 16 > spec.length) {
      throw ContractViolation("generate_imu_scenario: invalid anomaly layout for length " + std::to_string(spec.length));
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  ImuStream s;
  s.id = id;
  s.t.resize(spec.length);
  s.x.resize(spec.length);
  s.label.assign(spec.length, 0);

  std::array<std::vector<double>, kImuDims> freq, phase;
  ImuVector amp;
  for (std::size_t d = 0; d < kImuDims; ++d) {
    amp[d] = profile.amplitude[d] * (0.9 + 0.2 * u(rng));
    for (double f : profile.freq_hz[d]) {
      freq[d].push_back(f * (0.9 + 0.2 * u(rng)));
      phase[d].push_back(2.0 * std::numbers::pi * u(rng));
    }
  }
  for (std::size_t i = 0; i < spec.length; ++i) {
    const double t = static_cast<double>(i) / spec.rate_hz;
    s.t[i] = t;
    for (std::size_t d = 0; d < kImuDims; ++d) {
      double v = 0.0;
      for (std::size_t k = 0; k < freq[d].size(); ++k) {
        v += profile.weight[d][k] * std::sin(2.0 * std::numbers::pi * freq[d][k] * t + phase[d][k]);
      }
      s.x[i][d] = amp[d] * v + spec.noise * profile.amplitude[d] * gauss(rng);
    }
  }
  if (!spec.abnormal) return s;

  for (const Segment& seg : place_segments(spec.length, a, rng)) {
    const auto kind = static_cast<ImuEventKind>(std::min(2, static_cast<int>(u(rng) * 3.0)));
    // Channel group: angular, linear, or both; one to three channels each.
    const int group = std::min(2, static_cast<int>(u(rng) * 3.0));
    std::vector<std::size_t> channels;
    for (std::size_t base : {std::size_t{0}, std::size_t{3}}) {
      if ((group == 0 && base == 3) || (group == 1 && base == 0)) continue;
      std::array<std::size_t, 3> order{base, base + 1, base + 2};
      std::shuffle(order.begin(), order.end(), rng);
      const std::size_t count = 1 + std::min<std::size_t>(2, static_cast<std::size_t>(u(rng) * 3.0));
      channels.insert(channels.end(), order.begin(), order.begin() + static_cast<std::ptrdiff_t>(count));
    }
    const double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    for (std::size_t i = seg.begin; i < seg.end; ++i) {
      for (std::size_t d : channels) {
        const double A = profile.amplitude[d];
        switch (kind) {
          case ImuEventKind::spike: s.x[i][d] += (u(rng) < 0.5 ? -1.0 : 1.0) * a.spike_magnitude * A; break;
          case ImuEventKind::step: s.x[i][d] += sign * a.step_magnitude * A; break;
          case ImuEventKind::burst: s.x[i][d] += ((i - seg.begin) % 2 ? -1.0 : 1.0) * a.burst_magnitude * A; break;
        }
      }
      s.label[i] = 1;
    }
  }
  return s;
}

}  // namespace adrf::data
