#include "adrf/data/io.hpp"

#include "adrf/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace adrf::data {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    cell.erase(0, cell.find_first_not_of(" \t\r"));
    cell.erase(cell.find_last_not_of(" \t\r") + 1);
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && ptr == end && std::isfinite(v);
}

// Appends a record unless its timestamp does not advance.
void accept(ImuReadResult& r, std::size_t line, double t, const ImuVector& x, std::optional<int> label) {
  if (!r.stream.t.empty() && !(t > r.stream.t.back())) {
    r.issues.push_back({line, "timestamp does not increase"});
    return;
  }
  r.stream.t.push_back(t);
  r.stream.x.push_back(x);
  if (label) r.stream.label.push_back(static_cast<std::uint8_t>(*label));
}

void finish(ImuReadResult& r) {
  if (!r.stream.label.empty() && r.stream.label.size() != r.stream.x.size()) {
    throw FormatError("imu stream '" + r.stream.id + "': label present on some records only");
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

ImuReadResult read_imu_csv(std::istream& in, const std::string& id) {
  ImuReadResult r;
  r.stream.id = id;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("imu csv '" + id + "': empty input");
  const auto header = split_csv(line);
  const bool labelled = header.size() == 8 && header[7] == "label";
  bool ok = header.size() == 7 || labelled;
  for (std::size_t d = 0; ok && d < kImuDims; ++d) ok = header[0] == "t" && header[d + 1] == kImuChannelNames[d];
  if (!ok) {
    throw FormatError("imu csv '" + id + "': header must be t,a_x,a_y,a_z,l_x,l_y,l_z[,label], got '" + line + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      r.issues.push_back({lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                      std::to_string(cells.size())});
      continue;
    }
    double t;
    ImuVector x;
    bool good = parse_double(cells[0], t);
    for (std::size_t d = 0; good && d < kImuDims; ++d) good = parse_double(cells[d + 1], x[d]);
    std::optional<int> label;
    if (good && labelled) {
      good = cells[7] == "0" || cells[7] == "1";
      if (good) label = cells[7] == "1";
    }
    if (!good) {
      r.issues.push_back({lineno, "unparsable or non-finite field"});
      continue;
    }
    accept(r, lineno, t, x, label);
  }
  finish(r);
  return r;
}

void write_imu_csv(std::ostream& out, const ImuStream& s) {
  validate(s);
  out << "t";
  for (const char* name : kImuChannelNames) out << ',' << name;
  if (!s.label.empty()) out << ",label";
  out << '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out << format_double(s.t[i]);
    for (double v : s.x[i]) out << ',' << format_double(v);
    if (!s.label.empty()) out << ',' << static_cast<int>(s.label[i]);
    out << '\n';
  }
}

ImuReadResult read_imu_jsonl(std::istream& in, const std::string& id) {
  ImuReadResult r;
  r.stream.id = id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      r.issues.push_back({lineno, "not a JSON object"});
      continue;
    }
    auto number = [&](const char* key, double& v) {
      const auto it = j.find(key);
      if (it == j.end() || !it->is_number()) return false;
      v = it->get<double>();
      return std::isfinite(v);
    };
    double t;
    ImuVector x;
    bool good = number("t", t);
    for (std::size_t d = 0; good && d < kImuDims; ++d) good = number(kImuChannelNames[d], x[d]);
    if (!good) {
      r.issues.push_back({lineno, "missing or non-finite field"});
      continue;
    }
    std::optional<int> label;
    if (const auto it = j.find("label"); it != j.end()) {
      if (!it->is_number_integer() || (it->get<int>() != 0 && it->get<int>() != 1)) {
        r.issues.push_back({lineno, "label must be 0 or 1"});
        continue;
      }
      label = it->get<int>();
    }
    accept(r, lineno, t, x, label);
  }
  finish(r);
  return r;
}

void write_imu_jsonl(std::ostream& out, const ImuStream& s) {
  validate(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    nlohmann::ordered_json j;
    j["t"] = s.t[i];
    for (std::size_t d = 0; d < kImuDims; ++d) j[kImuChannelNames[d]] = s.x[i][d];
    if (!s.label.empty()) j["label"] = static_cast<int>(s.label[i]);
    out << j.dump() << '\n';
  }
}

ImuReadResult read_imu_file(const fs::path& path, const std::string& id) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  if (path.extension() == ".csv") return read_imu_csv(in, id);
  if (path.extension() == ".jsonl") return read_imu_jsonl(in, id);
  throw FormatError("unknown imu format for " + path.string() + " (expected .csv or .jsonl)");
}

namespace {

// Reads a header token, skipping whitespace and # comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  while (true) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string ignored;
      std::getline(in, ignored);
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Frame read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P5" && magic != "P6") throw FormatError(path.string() + ": not a binary PGM/PPM (magic '" + magic + "')");
  int cols = 0, rows = 0, maxval = 0;
  try {
    cols = std::stoi(pnm_token(in));
    rows = std::stoi(pnm_token(in));
    maxval = std::stoi(pnm_token(in));
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": malformed header");
  }
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError(path.string() + ": unsupported dimensions or maxval");
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError(path.string() + ": truncated pixel data");
  Frame f(rows, cols);
  const double scale = 255.0 / maxval;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const unsigned char* px = &buf[(static_cast<std::size_t>(r) * cols + c) * channels];
      f(r, c) = channels == 1 ? px[0] * scale / 127.5 - 1.0
                              : luma601(static_cast<std::uint8_t>(px[0] * scale), static_cast<std::uint8_t>(px[1] * scale),
                                        static_cast<std::uint8_t>(px[2] * scale));
    }
  }
  return f;
}

void write_pgm(const fs::path& path, const Frame& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "P5\n" << f.cols() << ' ' << f.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < f.rows(); ++r) {
    for (Eigen::Index c = 0; c < f.cols(); ++c) {
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround((std::clamp(f(r, c), -1.0, 1.0) + 1.0) * 127.5))));
    }
  }
}

Frame read_raw_frame(const fs::path& path) {
  std::ifstream shape(path.string() + ".shape");
  std::size_t rows = 0, cols = 0;
  if (!(shape >> rows >> cols) || rows == 0 || cols == 0) {
    throw FormatError(path.string() + ".shape: expected 'rows cols'");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<unsigned char> buf(rows * cols * 4);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError(path.string() + ": truncated float data");
  Frame f(rows, cols);
  for (std::size_t k = 0; k < rows * cols; ++k) {
    std::uint32_t bits = static_cast<std::uint32_t>(buf[4 * k]) | static_cast<std::uint32_t>(buf[4 * k + 1]) << 8 |
                         static_cast<std::uint32_t>(buf[4 * k + 2]) << 16 | static_cast<std::uint32_t>(buf[4 * k + 3]) << 24;
    const float v = std::bit_cast<float>(bits);
    if (!(v >= 0.0f && v <= 1.0f)) throw FormatError(path.string() + ": intensity outside [0,1] at element " + std::to_string(k));
    f(static_cast<Eigen::Index>(k / cols), static_cast<Eigen::Index>(k % cols)) = 2.0 * v - 1.0;
  }
  return f;
}

FrameScenario read_frame_dir(const fs::path& dir, const std::string& id, std::size_t size) {
  std::ifstream labels(dir / "labels.csv");
  if (!labels) throw FormatError("missing " + (dir / "labels.csv").string());
  FrameScenario s;
  s.id = id;
  std::string line;
  std::getline(labels, line);
  if (line.rfind("index,t,label", 0) != 0) throw FormatError((dir / "labels.csv").string() + ": header must be index,t,label");
  std::size_t lineno = 1;
  while (std::getline(labels, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    double index, t;
    if (cells.size() != 3 || !parse_double(cells[0], index) || !parse_double(cells[1], t) ||
        (cells[2] != "0" && cells[2] != "1") || index != static_cast<double>(s.frames.size())) {
      throw FormatError((dir / "labels.csv").string() + ":" + std::to_string(lineno) + ": malformed record");
    }
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << s.frames.size();
    Frame f;
    if (fs::exists(dir / (name.str() + ".pgm"))) {
      f = read_pnm(dir / (name.str() + ".pgm"));
    } else if (fs::exists(dir / (name.str() + ".ppm"))) {
      f = read_pnm(dir / (name.str() + ".ppm"));
    } else if (fs::exists(dir / (name.str() + ".raw"))) {
      f = read_raw_frame(dir / (name.str() + ".raw"));
    } else {
      throw FormatError("missing image " + name.str() + " in " + dir.string());
    }
    if (static_cast<std::size_t>(f.rows()) != size || static_cast<std::size_t>(f.cols()) != size) {
      f = resize_bilinear(f, size, size);
    }
    s.frames.push_back(std::make_shared<const Frame>(std::move(f)));
    s.t.push_back(t);
    s.label.push_back(cells[2] == "1");
  }
  s.abnormal = std::any_of(s.label.begin(), s.label.end(), [](auto v) { return v != 0; });
  return s;
}

void write_frame_dir(const fs::path& dir, const FrameScenario& s) {
  fs::create_directories(dir);
  std::ofstream labels(dir / "labels.csv");
  labels << "index,t,label\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    std::ostringstream name;
    name << std::setw(6) << std::setfill('0') << i << ".pgm";
    write_pgm(dir / name.str(), *s.frames[i]);
    labels << i << ',' << format_double(s.t[i]) << ',' << static_cast<int>(s.label[i]) << '\n';
  }
}

}  // namespace adrf::data
