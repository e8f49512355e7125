#include "adrf/pipeline/thresholds.hpp"

#include "adrf/data/io.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace adrf::pipeline {

namespace {

/// Stream names contain dots, so keys are matched against each name.
std::optional<std::pair<stats::Stream, std::string>> parse_key(const std::string& key) {
  for (auto s : stats::kAllStreams) {
    const std::string name(stats::stream_name(s));
    if (key == name) return std::pair{s, std::string()};
    if (key.size() > name.size() && key.compare(0, name.size(), name) == 0 && key[name.size()] == '.') {
      return std::pair{s, key.substr(name.size() + 1)};
    }
  }
  return std::nullopt;
}

}  // namespace

void write_calibration(std::ostream& os, const CalibrationFile& f) {
  os << std::setprecision(17);
  os << "p=" << f.thresholds.p << '\n';
  for (const auto& c : f.streams) {
    const std::string n(stats::stream_name(c.stream));
    os << n << '=' << c.threshold << '\n';
    os << n << ".family=" << stats::family_name(stats::family_of(c.model.dist)) << '\n';
    os << n << ".params=";
    const auto params = stats::parameters(c.model.dist);
    for (std::size_t i = 0; i < params.size(); ++i) os << (i ? "," : "") << params[i];
    os << '\n';
    os << n << ".ks=" << c.model.ks << '\n';
    os << n << ".n=" << c.model.n << '\n';
    os << n << ".flagged_fraction=" << c.flagged_fraction << '\n';
  }
}

CalibrationFile read_calibration(std::istream& is) {
  CalibrationFile f;
  std::map<stats::Stream, std::map<std::string, std::string>> fields;
  std::vector<stats::Stream> order;
  bool have_p = false;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw data::FormatError("calibration line " + std::to_string(n) + ": expected key=value");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    try {
      if (key == "p") {
        f.thresholds.p = std::stod(value);
        have_p = true;
        continue;
      }
      const auto parsed = parse_key(key);
      if (!parsed) throw data::FormatError("unknown stream in key '" + key + "'");
      const auto& [stream, field] = *parsed;
      if (!fields.count(stream)) order.push_back(stream);
      fields[stream][field] = value;
    } catch (const data::FormatError& e) {
      throw data::FormatError("calibration line " + std::to_string(n) + ": " + e.what());
    } catch (const std::exception&) {
      throw data::FormatError("calibration line " + std::to_string(n) + ": bad value '" + value + "'");
    }
  }
  if (!have_p) throw data::FormatError("calibration file lacks 'p'");
  for (auto s : order) {
    auto& kv = fields[s];
    const std::string name(stats::stream_name(s));
    auto need = [&](const std::string& k) -> const std::string& {
      if (!kv.count(k)) throw data::FormatError("calibration file lacks '" + name + (k.empty() ? "" : "." + k) + "'");
      return kv[k];
    };
    stats::StreamCalibration c;
    c.stream = s;
    try {
      c.threshold = std::stod(need(""));
      std::vector<double> params;
      std::stringstream ss(need("params"));
      std::string item;
      while (std::getline(ss, item, ',')) params.push_back(std::stod(item));
      c.model.dist = stats::make_distribution(stats::parse_family(need("family")), params);
      c.model.ks = std::stod(need("ks"));
      c.model.n = std::stoul(need("n"));
      c.flagged_fraction = std::stod(need("flagged_fraction"));
    } catch (const data::FormatError&) {
      throw;
    } catch (const std::exception& e) {
      throw data::FormatError("calibration stream '" + name + "': " + e.what());
    }
    f.thresholds[s] = c.threshold;
    f.streams.push_back(std::move(c));
  }
  return f;
}

void save_calibration(const std::filesystem::path& path, const CalibrationFile& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  write_calibration(os, f);
}

CalibrationFile load_calibration(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  try {
    return read_calibration(is);
  } catch (const data::FormatError& e) {
    throw data::FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace adrf::pipeline
