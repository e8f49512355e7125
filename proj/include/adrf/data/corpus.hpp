#pragma once

#include "adrf/data/frames.hpp"
#include "adrf/data/imu.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adrf::data {

struct CorpusSpec {
  std::size_t normal_count = 6;
  std::size_t abnormal_count = 6;
  ImuScenarioSpec imu;
  FrameScenarioSpec frames;
};

/// Scenario ids are normal-<i> and abnormal-<i>.
struct Corpus {
  std::vector<ImuStream> imu_normal;
  std::vector<ImuStream> imu_abnormal;
  std::vector<FrameScenario> frames_normal;
  std::vector<FrameScenario> frames_abnormal;
};

Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed);

/// Scenario ids per role ("train", "threshold", "test").
struct SplitManifest {
  std::map<std::string, std::vector<std::string>> roles;

  const std::vector<std::string>& ids(const std::string& role) const;
};

/// normal-0 calibrates, the last normal and every abnormal scenario test,
/// the remaining normals train.
SplitManifest default_imu_split(const Corpus& c);

/// One line per role: the role name followed by its ids, space separated.
void write_manifest(const std::filesystem::path& path, const SplitManifest& m);
SplitManifest read_manifest(const std::filesystem::path& path);

/// Layout: imu/<id>.csv, frames/<id>/ (images + labels.csv), split.txt.
void write_corpus(const std::filesystem::path& dir, const Corpus& c);
Corpus read_corpus(const std::filesystem::path& dir, std::size_t frame_size);

}  // namespace adrf::data
