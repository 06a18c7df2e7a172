#include "support.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vitlens/dataset.hpp"
#include "vitlens/nadf.hpp"
#include "vitlens/parallel.hpp"

namespace vitlens::cli {

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyRun:
      return kExitEmpty;
    case ErrorCode::kNumericalError:
    case ErrorCode::kNonFiniteData:
      return kExitNumerical;
    default:
      return kExitContract;
  }
}

void Manifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["arguments"] = arguments;
  j["working_directory"] = std::filesystem::current_path().string();
  j["seeds"] = seeds;
  j["tool_version"] = VITLENS_VERSION;
  j["inputs"] = nlohmann::json::array();
  for (const auto& p : inputs) j["inputs"].push_back(p.string());
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : outputs) j["outputs"].push_back({{"path", p.string()}, {"sha256", nadf::file_sha256(p)}});
  write_text(path, j.dump(2) + "\n");
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

Csv::Csv(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
  text_ += '\n';
}

void Csv::row(const std::vector<std::string>& fields) {
  require(fields.size() == columns_, ErrorCode::kInvalidArgument, "CSV row has the wrong number of fields");
  for (std::size_t i = 0; i < fields.size(); ++i) text_ += (i ? "," : "") + fields[i];
  text_ += '\n';
  ++rows_;
}

void Csv::save(const std::filesystem::path& path) const { write_text(path, text_); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + path.string());
  out << text;
  require(static_cast<bool>(out), ErrorCode::kIoError, "failed writing " + path.string());
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

void write_svg(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
               const std::string& y_label, const std::vector<Series>& series) {
  constexpr double width = 640, height = 400, left = 70, right = 150, top = 40, bottom = 50;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (double x : s.x) x0 = std::min(x0, x), x1 = std::max(x1, x);
    for (double y : s.y)
      if (std::isfinite(y)) y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(title) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4, yv = y0 + (y1 - y0) * i / 4;
    svg << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << tick(xv)
        << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fixed(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
        << "</text>\n";
  }
  svg << "<text x=\"" << fixed(left + pw / 2) << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << fixed(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fixed(top + ph / 2) << ")\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!std::isfinite(series[s].y[i])) continue;
      svg << (i ? " " : "") << fixed(px(series[s].x[i])) << "," << fixed(py(series[s].y[i]));
    }
    svg << "\"/>\n";
    const double ly = top + 14.0 * static_cast<double>(s);
    svg << "<line x1=\"" << width - right + 10 << "\" y1=\"" << fixed(ly) << "\" x2=\"" << width - right + 30
        << "\" y2=\"" << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << width - right + 34 << "\" y=\"" << fixed(ly + 4) << "\">" << escape_xml(series[s].name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  write_text(path, svg.str());
}

std::vector<ActivationBundle> load_dataset(const std::filesystem::path& dir,
                                           std::vector<std::filesystem::path>* paths) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIoError, "not a directory: " + dir.string());
  const auto files = list_bundles(dir);
  require(!files.empty(), ErrorCode::kEmptyRun, "no activation bundles in " + dir.string());
  std::vector<ActivationBundle> bundles(files.size());
  parallel_for(files.size(), [&](std::size_t i) { bundles[i] = load_bundle(files[i]); });
  for (std::size_t i = 1; i < bundles.size(); ++i)
    require(bundles[i].config == bundles[0].config, ErrorCode::kMixedBundles,
            files[i].string() + " was produced by a different model config than " + files[0].string());
  if (paths) *paths = files;
  return bundles;
}

std::vector<int> labels_for(const std::vector<std::filesystem::path>& paths, const std::filesystem::path& csv) {
  const auto table = read_labels_csv(csv);
  std::vector<int> labels;
  labels.reserve(paths.size());
  for (const auto& p : paths) {
    const auto it = table.find(p.stem().string());
    require(it != table.end(), ErrorCode::kInvalidArgument,
            "no label for " + p.stem().string() + " in " + csv.string());
    labels.push_back(it->second);
  }
  return labels;
}

}  // namespace vitlens::cli
