#include "adrf/data/corpus.hpp"

#include "adrf/data/io.hpp"
#include "adrf/tensor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace adrf::data {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return splitmix(splitmix(seed ^ splitmix(stream)) + index);
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec, std::uint64_t seed) {
  if (spec.normal_count < 3) throw ContractViolation("generate_corpus: need at least 3 normal scenarios");
  Corpus c;
  const ImuProfile profile = make_imu_profile(derive(seed, 0, 0));
  for (int abnormal = 0; abnormal < 2; ++abnormal) {
    const std::size_t count = abnormal ? spec.abnormal_count : spec.normal_count;
    for (std::size_t i = 0; i < count; ++i) {
      const std::string id = (abnormal ? "abnormal-" : "normal-") + std::to_string(i);
      ImuScenarioSpec is = spec.imu;
      is.abnormal = abnormal;
      FrameScenarioSpec fs = spec.frames;
      fs.abnormal = abnormal;
      auto imu = generate_imu_scenario(id, profile, is, derive(seed, 1 + abnormal, i));
      auto frames = generate_frame_scenario(id, fs, derive(seed, 3 + abnormal, i));
      (abnormal ? c.imu_abnormal : c.imu_normal).push_back(std::move(imu));
      (abnormal ? c.frames_abnormal : c.frames_normal).push_back(std::move(frames));
    }
  }
  return c;
}

const std::vector<std::string>& SplitManifest::ids(const std::string& role) const {
  const auto it = roles.find(role);
  if (it == roles.end()) throw ContractViolation("split manifest has no role '" + role + "'");
  return it->second;
}

SplitManifest default_imu_split(const Corpus& c) {
  SplitManifest m;
  auto& train = m.roles["train"];
  auto& threshold = m.roles["threshold"];
  auto& test = m.roles["test"];
  const std::size_t n = c.imu_normal.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& id = c.imu_normal[i].id;
    if (i == 0) {
      threshold.push_back(id);
    } else if (i + 1 == n) {
      test.push_back(id);
    } else {
      train.push_back(id);
    }
  }
  for (const auto& s : c.imu_abnormal) test.push_back(s.id);
  return m;
}

void write_manifest(const fs::path& path, const SplitManifest& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& [role, ids] : m.roles) {
    out << role;
    for (const auto& id : ids) out << ' ' << id;
    out << '\n';
  }
}

SplitManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  SplitManifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string role, id;
    if (!(ss >> role) || role.front() == '#') continue;
    if (m.roles.count(role)) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": role '" + role + "' repeated");
    auto& ids = m.roles[role];
    while (ss >> id) ids.push_back(id);
  }
  std::map<std::string, std::string> owner;
  for (const auto& [role, ids] : m.roles) {
    for (const auto& id : ids) {
      if (auto [it, fresh] = owner.emplace(id, role); !fresh) {
        throw FormatError(path.string() + ": scenario '" + id + "' appears in both '" + it->second + "' and '" + role + "'");
      }
    }
  }
  return m;
}

void write_corpus(const fs::path& dir, const Corpus& c) {
  fs::create_directories(dir / "imu");
  for (const auto* group : {&c.imu_normal, &c.imu_abnormal}) {
    for (const auto& s : *group) {
      std::ofstream out(dir / "imu" / (s.id + ".csv"));
      write_imu_csv(out, s);
    }
  }
  for (const auto* group : {&c.frames_normal, &c.frames_abnormal}) {
    for (const auto& s : *group) write_frame_dir(dir / "frames" / s.id, s);
  }
  write_manifest(dir / "split.txt", default_imu_split(c));
}

Corpus read_corpus(const fs::path& dir, std::size_t frame_size) {
  Corpus c;
  std::vector<fs::path> imu_files, frame_dirs;
  if (fs::is_directory(dir / "imu")) {
    for (const auto& e : fs::directory_iterator(dir / "imu")) {
      if (e.path().extension() == ".csv" || e.path().extension() == ".jsonl") imu_files.push_back(e.path());
    }
  }
  if (fs::is_directory(dir / "frames")) {
    for (const auto& e : fs::directory_iterator(dir / "frames")) {
      if (e.is_directory()) frame_dirs.push_back(e.path());
    }
  }
  // Natural order so normal-10 follows normal-9.
  auto natural = [](const fs::path& a, const fs::path& b) {
    const std::string x = a.stem().string(), y = b.stem().string();
    const auto px = x.find_last_not_of("0123456789") + 1, py = y.find_last_not_of("0123456789") + 1;
    if (x.substr(0, px) != y.substr(0, py) || px == x.size() || py == y.size()) return x < y;
    return std::stoul(x.substr(px)) < std::stoul(y.substr(py));
  };
  std::sort(imu_files.begin(), imu_files.end(), natural);
  std::sort(frame_dirs.begin(), frame_dirs.end(), natural);
  for (const auto& p : imu_files) {
    const std::string id = p.stem().string();
    auto r = read_imu_file(p, id);
    if (!r.issues.empty()) {
      const auto& first = r.issues.front();
      throw FormatError(p.string() + ":" + std::to_string(first.line) + ": " + first.message + " (" +
                        std::to_string(r.issues.size()) + " malformed record(s))");
    }
    const bool abnormal = id.rfind("abnormal", 0) == 0;
    (abnormal ? c.imu_abnormal : c.imu_normal).push_back(std::move(r.stream));
  }
  for (const auto& p : frame_dirs) {
    const std::string id = p.filename().string();
    auto s = read_frame_dir(p, id, frame_size);
    s.abnormal = id.rfind("abnormal", 0) == 0;
    (s.abnormal ? c.frames_abnormal : c.frames_normal).push_back(std::move(s));
  }
  return c;
}

}  // namespace adrf::data
