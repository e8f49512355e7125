#include "adrf/pipeline/evaluate.hpp"

#include "adrf/data/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace adrf::pipeline {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string fmt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << *v;
  return os.str();
}

std::string csv_value(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream os;
  os << std::setprecision(17) << *v;
  return os.str();
}

Metrics macro_of(const std::vector<const ScenarioRow*>& rows) {
  auto mean = [&](auto field) -> std::optional<double> {
    double s = 0.0;
    std::size_t n = 0;
    for (const auto* r : rows) {
      if (const auto v = r->metrics.*field) {
        s += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return s / static_cast<double>(n);
  };
  return {mean(&Metrics::precision), mean(&Metrics::recall), mean(&Metrics::f1), mean(&Metrics::accuracy)};
}

/// Digit runs compare as numbers, so normal-10 follows normal-9.
bool natural_less(const std::string& a, const std::string& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
      std::size_t ie = i, je = j;
      while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
      while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
      const auto x = std::stoull(a.substr(i, ie - i)), y = std::stoull(b.substr(j, je - j));
      if (x != y) return x < y;
      i = ie;
      j = je;
    } else {
      if (a[i] != b[j]) return a[i] < b[j];
      ++i;
      ++j;
    }
  }
  return a.size() - i < b.size() - j;
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

std::string label_key(Source source, const std::string& stream) {
  return (source == Source::vision ? "vision/" : "imu/") + stream;
}

Metrics metrics(const Confusion& c) {
  Metrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  m.accuracy = ratio(c.tp + c.tn, c.total());
  return m;
}

EvalReport evaluate(const std::vector<FlagEvent>& events, const std::map<std::string, LabelTrack>& labels) {
  // Keyed by (detector, scenario) in first-seen order.
  std::vector<ScenarioRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  for (const auto& e : events) {
    if (!e.evaluable) continue;
    const auto it = labels.find(label_key(e.source, e.stream));
    if (it == labels.end()) throw LabelMismatch("no labels for stream '" + e.stream + "'");
    const auto& track = it->second;
    if (e.index >= track.label.size()) {
      throw LabelMismatch("stream '" + e.stream + "': event index " + std::to_string(e.index) + " beyond " +
                          std::to_string(track.label.size()) + " labels");
    }
    if (e.index < track.t.size() && std::abs(track.t[e.index] - e.t) > 1e-9 * std::max(1.0, std::abs(e.t))) {
      throw LabelMismatch("stream '" + e.stream + "' index " + std::to_string(e.index) + ": event time " +
                          std::to_string(e.t) + " but label time " + std::to_string(track.t[e.index]));
    }
    const std::string det(source_name(e.source));
    auto [pos, inserted] = where.try_emplace({det, e.stream}, rows.size());
    if (inserted) rows.push_back({det, e.stream, false, {}, {}});
    auto& row = rows[pos->second];
    const bool truth = track.label[e.index] != 0, pred = e.flagged();
    row.abnormal = row.abnormal || truth;
    auto& c = row.confusion;
    (truth ? (pred ? c.tp : c.fn) : (pred ? c.fp : c.tn)) += 1;
  }
  EvalReport report;
  for (auto& r : rows) r.metrics = metrics(r.confusion);
  std::vector<std::string> detector_order;
  for (const auto& r : rows)
    if (std::find(detector_order.begin(), detector_order.end(), r.detector) == detector_order.end())
      detector_order.push_back(r.detector);
  auto rank = [&](const std::string& d) { return std::find(detector_order.begin(), detector_order.end(), d); };
  std::stable_sort(rows.begin(), rows.end(), [&](const ScenarioRow& a, const ScenarioRow& b) {
    if (a.detector != b.detector) return rank(a.detector) < rank(b.detector);
    if (a.abnormal != b.abnormal) return !a.abnormal;
    return natural_less(a.scenario, b.scenario);
  });
  for (const auto& r : rows) {
    auto it = std::find_if(report.detectors.begin(), report.detectors.end(),
                           [&](const DetectorSummary& d) { return d.detector == r.detector; });
    if (it == report.detectors.end()) {
      report.detectors.push_back({r.detector, {}, {}, {}, 0});
      it = std::prev(report.detectors.end());
    }
    it->pooled += r.confusion;
  }
  for (auto& d : report.detectors) {
    std::vector<const ScenarioRow*> abnormal;
    for (const auto& r : rows)
      if (r.detector == d.detector && r.abnormal) abnormal.push_back(&r);
    d.pooled_metrics = metrics(d.pooled);
    d.macro = macro_of(abnormal);
    d.abnormal_scenarios = abnormal.size();
  }
  report.rows = std::move(rows);
  return report;
}

void write_report_table(std::ostream& os, const EvalReport& r) {
  auto line = [&](const std::string& scenario, const Confusion* c, const Metrics& m) {
    os << "  " << std::left << std::setw(22) << scenario << std::right;
    if (c) {
      os << std::setw(6) << c->tp << std::setw(6) << c->fp << std::setw(6) << c->tn << std::setw(6) << c->fn;
    } else {
      os << std::setw(24) << "";
    }
    os << std::setw(11) << fmt(m.precision) << std::setw(9) << fmt(m.recall) << std::setw(9) << fmt(m.f1)
       << std::setw(10) << fmt(m.accuracy) << '\n';
  };
  for (const auto& d : r.detectors) {
    os << d.detector << '\n';
    os << "  " << std::left << std::setw(22) << "scenario" << std::right << std::setw(6) << "TP" << std::setw(6) << "FP"
       << std::setw(6) << "TN" << std::setw(6) << "FN" << std::setw(11) << "precision" << std::setw(9) << "recall"
       << std::setw(9) << "F1" << std::setw(10) << "accuracy" << '\n';
    for (const auto& row : r.rows)
      if (row.detector == d.detector) line(row.scenario, &row.confusion, row.metrics);
    line("average (abnormal)", nullptr, d.macro);
    line("pooled", &d.pooled, d.pooled_metrics);
    os << '\n';
  }
}

void write_report_csv(std::ostream& os, const EvalReport& r) {
  os << "detector,scenario,abnormal,tp,fp,tn,fn,precision,recall,f1,accuracy\n";
  auto metrics_csv = [&](const Metrics& m) {
    os << csv_value(m.precision) << ',' << csv_value(m.recall) << ',' << csv_value(m.f1) << ','
       << csv_value(m.accuracy) << '\n';
  };
  for (const auto& row : r.rows) {
    const auto& c = row.confusion;
    os << row.detector << ',' << row.scenario << ',' << (row.abnormal ? 1 : 0) << ',' << c.tp << ',' << c.fp << ','
       << c.tn << ',' << c.fn << ',';
    metrics_csv(row.metrics);
  }
  for (const auto& d : r.detectors) {
    os << d.detector << ",macro," << d.abnormal_scenarios << ",,,,,";
    metrics_csv(d.macro);
    const auto& c = d.pooled;
    os << d.detector << ",pooled,," << c.tp << ',' << c.fp << ',' << c.tn << ',' << c.fn << ',';
    metrics_csv(d.pooled_metrics);
  }
}

EvalReport read_report_csv(std::istream& is) {
  EvalReport r;
  std::string line;
  std::size_t n = 0;
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(is, line)) {
    if (++n == 1) continue;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 11) f.emplace_back();
    try {
      const Metrics m{opt(f[7]), opt(f[8]), opt(f[9]), opt(f[10])};
      auto count = [&](int i) { return f[i].empty() ? std::size_t{0} : static_cast<std::size_t>(std::stoull(f[i])); };
      const Confusion c{count(3), count(4), count(5), count(6)};
      auto summary = [&]() -> DetectorSummary& {
        for (auto& d : r.detectors)
          if (d.detector == f[0]) return d;
        r.detectors.push_back({f[0], {}, {}, {}, 0});
        return r.detectors.back();
      };
      if (f[1] == "macro") {
        auto& d = summary();
        d.macro = m;
        d.abnormal_scenarios = count(2);
      } else if (f[1] == "pooled") {
        auto& d = summary();
        d.pooled = c;
        d.pooled_metrics = m;
      } else {
        r.rows.push_back({f[0], f[1], f[2] == "1", c, m});
      }
    } catch (const std::exception& e) {
      throw data::FormatError("report line " + std::to_string(n) + ": " + e.what());
    }
  }
  return r;
}

}  // namespace adrf::pipeline
