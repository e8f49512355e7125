#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace adrf::data {

/// Grayscale image, rows × cols, values in [-1, 1].
using Frame = Eigen::MatrixXd;
using FramePtr = std::shared_ptr<const Frame>;

struct FrameScenario {
  std::string id;
  bool abnormal = false;
  std::vector<double> t;
  std::vector<FramePtr> frames;
  /// Per-frame ground truth (1 = anomalous content in this frame).
  std::vector<std::uint8_t> label;

  std::size_t size() const { return frames.size(); }
};

struct FrameAnomalySpec {
  /// Fraction of frames inside anomalous episodes.
  double coverage = 0.6;
  std::size_t min_episode = 4;
  std::size_t max_episode = 10;
  /// Smallest object jump in pixels for erratic-motion episodes.
  double displacement_px = 8.0;
  /// Occluder side as a fraction of the frame side.
  double occluder_fraction = 0.4;
};

struct FrameScenarioSpec {
  std::size_t size = 32;
  std::size_t length = 60;
  double rate_hz = 10.0;
  double noise = 0.02;
  bool abnormal = false;
  FrameAnomalySpec anomaly;
};

/// Textured panning background with a square moving at constant velocity
/// (bouncing off the borders). Abnormal scenarios add episodes of erratic
/// object/background jumps or a high-contrast occluder appearing at random
/// places. Frames are quantized to 8 bits so they survive a PGM round trip.
FrameScenario generate_frame_scenario(const std::string& id, const FrameScenarioSpec& spec, std::uint64_t seed);

Frame flip_horizontal(const Frame& f);
/// Left-right mirror of every frame; labels are kept.
FrameScenario mirror(const FrameScenario& s);

/// Quantize to the 256 levels of an 8-bit image mapped onto [-1, 1].
Frame quantize8(const Frame& f);

// --- Sequences and splits ----------------------------------------------------

/// Three input frames and the target fourth frame.
struct FrameSequence {
  std::array<FramePtr, 4> frames;
  std::uint8_t label = 0;  // label of the fourth frame
  std::string scenario;
  std::size_t end_index = 0;
  double t = 0.0;
};

std::vector<FrameSequence> make_sequences(const FrameScenario& s);

struct FrameDatasetSplit {
  std::vector<FrameSequence> train;
  std::vector<FrameSequence> threshold;
  std::vector<FrameSequence> test_normal;
  std::vector<FrameSequence> test_abnormal;

  std::vector<FrameSequence> test() const;
};

/// Mirrors the normal scenarios, pools their sequences and draws the
/// threshold and normal test subsets by a seeded shuffle; the rest trains.
/// Abnormal sequences go to the test set only.
FrameDatasetSplit build_frame_dataset(const std::vector<FrameScenario>& normals,
                                      const std::vector<FrameScenario>& abnormals, std::size_t threshold_count,
                                      std::size_t test_count, std::uint64_t seed);

// --- Preprocessing and augmentation -----------------------------------------

/// ITU-R BT.601 luma from 8-bit RGB, mapped to [-1, 1].
double luma601(std::uint8_t r, std::uint8_t g, std::uint8_t b);

Frame resize_bilinear(const Frame& f, std::size_t rows, std::size_t cols);

struct AugmentSpec {
  bool flip = true;
  double rotate_deg = 10.0;
  double shift = 0.1;
  double zoom_lo = 0.9;
  double zoom_hi = 1.1;
};

struct AugmentParams {
  bool flip = false;
  double angle_rad = 0.0;
  double shift_x = 0.0;  // fraction of the width
  double shift_y = 0.0;
  double zoom = 1.0;
};

AugmentParams draw_augment(const AugmentSpec& spec, std::mt19937_64& rng);

/// Rotation, shift and zoom about the centre with bilinear sampling and
/// reflected borders, then the optional flip.
Frame augment(const Frame& f, const AugmentParams& p);

}  // namespace adrf::data
