#include "bafrcnn/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "bafrcnn/common/error.hpp"

namespace bafrcnn::eval {
namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fixed(const std::optional<double>& v) { return v ? fixed(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string svg_open(int w, int h, const std::string& title) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
    << ' ' << h << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << title << "</text>\n";
  return s.str();
}

std::string hash_comment(const std::vector<std::string>& hashes) {
  std::string s = "<!-- config_hash:";
  for (const auto& h : hashes) s += " " + h;
  return s + " -->\n";
}

}  // namespace

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::ostringstream s;
  s << kMetricsHeader << '\n';
  for (const auto& r : rows) {
    s << r.experiment << ',' << r.mode << ',' << r.seed << ',' << r.class_name << ',' << fixed(r.ap) << ','
      << fixed(r.map) << ',' << fixed(r.far_at_threshold) << ',' << fixed(r.probe_recall) << ','
      << fixed(r.probe_auc) << ',' << fixed(r.score_threshold) << ',' << r.config_hash << '\n';
  }
  return s.str();
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  write_text(path, format_metrics_csv(rows));
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw ValidationError(path.string() + ": unexpected header");
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 11) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": expected 11 columns, found " +
                            std::to_string(c.size()));
    }
    MetricsRow r;
    try {
      r.experiment = c[0];
      r.mode = c[1];
      r.seed = std::stoull(c[2]);
      r.class_name = c[3];
      r.ap = parse_optional(c[4]);
      r.map = std::stod(c[5]);
      r.far_at_threshold = std::stod(c[6]);
      r.probe_recall = parse_optional(c[7]);
      r.probe_auc = parse_optional(c[8]);
      r.score_threshold = std::stod(c[9]);
      r.config_hash = c[10];
    } catch (const std::logic_error&) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_pr_csv(const std::filesystem::path& path, const ApResult& result, const std::string& config_hash) {
  std::ostringstream s;
  s << "class,recall,precision,config_hash\n";
  for (const auto& c : result.classes) {
    for (std::size_t k = 0; k < c.curve.recall.size(); ++k) {
      s << detector::class_name(c.class_id) << ',' << fixed(c.curve.recall[k]) << ',' << fixed(c.curve.precision[k])
        << ',' << config_hash << '\n';
    }
  }
  write_text(path, s.str());
}

std::string pr_curves_svg(const ApResult& result, const std::string& title, const std::string& config_hash) {
  const int w = 480, h = 400, left = 50, top = 40, pw = 380, ph = 300;
  std::ostringstream s;
  s << svg_open(w, h, title) << hash_comment({config_hash});
  s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<text x=\"" << left + pw / 2 << "\" y=\"" << top + ph + 30
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">recall</text>\n";
  s << "<text x=\"15\" y=\"" << top + ph / 2
    << "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 15 " << top + ph / 2
    << ")\">precision</text>\n";
  for (std::size_t i = 0; i < result.classes.size(); ++i) {
    const auto& c = result.classes[i];
    s << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 5] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < c.curve.recall.size(); ++k) {
      s << fixed(left + c.curve.recall[k] * pw) << ',' << fixed(top + (1.0 - c.curve.precision[k]) * ph) << ' ';
    }
    s << "\"/>\n";
    s << "<text x=\"" << left + pw - 90 << "\" y=\"" << top + 18 + 16 * static_cast<int>(i)
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << kPalette[i % 5] << "\">"
      << detector::class_name(c.class_id) << " AP " << (c.ap ? fixed(*c.ap).substr(0, 5) : std::string("n/a"))
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string metrics_svg(const std::vector<MetricsRow>& rows, const std::string& title) {
  // mode -> series (4 classes + mAP) -> (sum, count); keep first-seen mode order.
  std::vector<std::string> modes;
  std::map<std::string, std::map<std::string, std::pair<double, int>>> acc;
  std::map<std::pair<std::string, std::uint64_t>, bool> map_seen;
  for (const auto& r : rows) {
    const std::string key = r.experiment + "/" + r.mode;
    if (!acc.count(key)) modes.push_back(key);
    auto& m = acc[key];
    if (r.ap) {
      m[r.class_name].first += *r.ap;
      m[r.class_name].second += 1;
    }
    if (!map_seen[{key, r.seed}]) {
      map_seen[{key, r.seed}] = true;
      m["mAP"].first += r.map;
      m["mAP"].second += 1;
    }
  }
  const std::vector<std::string> series = {"Knives", "Blunts", "Guns", "LAGs", "mAP"};
  const int group_w = 110, left = 50, top = 40, ph = 260;
  const int w = left + group_w * static_cast<int>(std::max<std::size_t>(modes.size(), 1)) + 120, h = 380;
  std::vector<std::string> hashes;
  for (const auto& r : rows) {
    if (std::find(hashes.begin(), hashes.end(), r.config_hash) == hashes.end()) hashes.push_back(r.config_hash);
  }
  std::ostringstream s;
  s << svg_open(w, h, title) << hash_comment(hashes);
  s << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << w - 110 << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double y = top + ph * (1.0 - t / 4.0);
    s << "<text x=\"" << left - 6 << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"10\">" << fixed(t / 4.0).substr(0, 4) << "</text>\n";
  }
  for (std::size_t g = 0; g < modes.size(); ++g) {
    const int x0 = left + 10 + group_w * static_cast<int>(g);
    for (std::size_t k = 0; k < series.size(); ++k) {
      const auto it = acc[modes[g]].find(series[k]);
      if (it == acc[modes[g]].end() || it->second.second == 0) continue;
      const double v = it->second.first / it->second.second;
      s << "<rect x=\"" << x0 + 18 * static_cast<int>(k) << "\" y=\"" << fixed(top + ph * (1.0 - v))
        << "\" width=\"16\" height=\"" << fixed(ph * v) << "\" fill=\"" << kPalette[k] << "\"/>\n";
    }
    s << "<text x=\"" << x0 + 45 << "\" y=\"" << top + ph + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << modes[g] << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    s << "<rect x=\"" << w - 100 << "\" y=\"" << top + 16 * static_cast<int>(k) << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[k] << "\"/><text x=\"" << w - 86 << "\" y=\"" << top + 9 + 16 * static_cast<int>(k)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[k] << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace bafrcnn::eval
