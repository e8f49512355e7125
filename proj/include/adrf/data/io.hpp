#pragma once

#include "adrf/data/frames.hpp"
#include "adrf/data/imu.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace adrf::data {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record that could not be parsed; reading continues past it.
struct RecordIssue {
  std::size_t line = 0;
  std::string message;
};

struct ImuReadResult {
  ImuStream stream;
  std::vector<RecordIssue> issues;
};

/// CSV with header t,a_x,a_y,a_z,l_x,l_y,l_z and an optional label column.
/// A bad header is a FormatError; a bad record is skipped and reported.
ImuReadResult read_imu_csv(std::istream& in, const std::string& id);
void write_imu_csv(std::ostream& out, const ImuStream& s);

/// One JSON object per line with the same keys as the CSV header.
ImuReadResult read_imu_jsonl(std::istream& in, const std::string& id);
void write_imu_jsonl(std::ostream& out, const ImuStream& s);

/// Dispatches on the extension (.csv or .jsonl).
ImuReadResult read_imu_file(const std::filesystem::path& path, const std::string& id);

// --- Images ------------------------------------------------------------------

/// Binary PGM (P5, maxval <= 255) or PPM (P6, converted to luma).
Frame read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Frame& f);

/// Little-endian float32 intensities in [0, 1], shape from the sidecar
/// "<file>.shape" holding "rows cols".
Frame read_raw_frame(const std::filesystem::path& path);

/// Numbered images (NNNNNN.pgm, .ppm or .raw) plus labels.csv with
/// index,t,label. Frames of a different size are resized bilinearly.
FrameScenario read_frame_dir(const std::filesystem::path& dir, const std::string& id, std::size_t size);
void write_frame_dir(const std::filesystem::path& dir, const FrameScenario& s);

}  // namespace adrf::data
