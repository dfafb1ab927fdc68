/*
 * Copyright 2026 The curreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "curreg/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "curreg/error.hpp"

namespace curreg {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed_digits(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace

std::string method_label(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kBaseline: return "1-cascade VTN";
    case StrategyKind::kInputBlur: return "1-cascade VTN + curriculum by input blur";
    case StrategyKind::kDropout: return "1-cascade VTN + curriculum dropout";
    case StrategyKind::kSmoothing: return "1-cascade VTN + curriculum by smoothing";
  }
  return "?";
}

std::string format_report_text(const RunReport& report) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({kReportColumns[0], kReportColumns[1], kReportColumns[2], kReportColumns[3], kReportColumns[4]});
  for (const MethodRow& r : report.rows) {
    cells.push_back({method_label(r.strategy), std::to_string(r.steps), fixed_digits(r.seconds_per_step, 3),
                     fixed_digits(r.dice, 5), fixed_digits(r.jaccard, 5)});
  }
  std::size_t width[5] = {};
  for (const auto& row : cells) {
    for (int c = 0; c < 5; ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  auto rule = [&] {
    os << '+';
    for (std::size_t w : width) os << std::string(w + 2, '-') << '+';
    os << '\n';
  };
  auto line = [&](const std::vector<std::string>& row) {
    os << '|';
    for (int c = 0; c < 5; ++c) {
      os << ' ' << row[c] << std::string(width[c] - row[c].size(), ' ') << " |";
    }
    os << '\n';
  };
  rule();
  line(cells[0]);
  rule();
  for (std::size_t i = 1; i < cells.size(); ++i) line(cells[i]);
  rule();
  os << "Time per step in seconds (mean over timed steps).\n";
  os << "Unregistered: Dice " << fixed_digits(report.unregistered_dice, 5) << ", Jaccard "
     << fixed_digits(report.unregistered_jaccard, 5) << "\n";
  os << "\n# configuration\n" << report.config_echo;
  return os.str();
}

std::string format_report_json(const RunReport& report) {
  json j;
  j["columns"] = {kReportColumns[0], kReportColumns[1], kReportColumns[2], kReportColumns[3], kReportColumns[4]};
  j["config"] = report.config_echo;
  j["unregistered"] = {{"dice", report.unregistered_dice}, {"jaccard", report.unregistered_jaccard}};
  json rows = json::array();
  for (const MethodRow& r : report.rows) {
    json row;
    row["Method"] = method_label(r.strategy);
    row["strategy"] = std::string(strategy_name(r.strategy));
    row["#Steps"] = r.steps;
    row["Time per step"] = r.seconds_per_step;
    row["Dice"] = r.dice;
    row["Jaccard"] = r.jaccard;
    row["param_checksum"] = r.param_checksum;
    json pairs = json::array();
    for (const PairEvaluation& p : r.pairs) {
      pairs.push_back({{"seed", p.seed}, {"dice", p.scores.dice}, {"jaccard", p.scores.jaccard},
                       {"unregistered_dice", p.unregistered.dice}});
    }
    row["pairs"] = std::move(pairs);
    row["loss_curve"] = r.loss_curve;
    json val = json::array();
    for (const ValidationRecord& v : r.validation) val.push_back({{"step", v.step}, {"dice", v.dice}, {"jaccard", v.jaccard}});
    row["validation"] = std::move(val);
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  j["metadata"] = {{"generated_at", report.generated_at}};
  return j.dump(2) + "\n";
}

void write_report(const fs::path& dir, const RunReport& report) {
  fs::create_directories(dir);
  write_text(dir / "report.txt", format_report_text(report));
  write_text(dir / "report.json", format_report_json(report));
}

double mid_slice_max_abs_diff(const Volume& fixed, const Volume& warped) {
  if (!(fixed.dims == warped.dims)) throw ConfigError("difference map: dims mismatch");
  const int z = fixed.dims.d / 2;
  double m = 0.0;
  for (int y = 0; y < fixed.dims.h; ++y) {
    for (int x = 0; x < fixed.dims.w; ++x) m = std::max(m, double(std::abs(fixed.at(z, y, x) - warped.at(z, y, x))));
  }
  return m;
}

std::vector<std::uint8_t> difference_map(const Volume& fixed, const Volume& warped, double max_diff) {
  if (!(fixed.dims == warped.dims)) throw ConfigError("difference map: dims mismatch");
  const Dims d = fixed.dims;
  const int z = d.d / 2;
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(3) * d.h * d.w);
  for (int y = 0; y < d.h; ++y) {
    for (int x = 0; x < d.w; ++x) {
      const double diff = std::abs(double(fixed.at(z, y, x)) - double(warped.at(z, y, x)));
      const double r = max_diff > 0 ? std::clamp(diff / max_diff, 0.0, 1.0) : 0.0;
      const auto fade = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - r)));
      std::uint8_t* px = &rgb[3 * (static_cast<std::size_t>(y) * d.w + x)];
      px[0] = 255;
      px[1] = fade;
      px[2] = fade;
    }
  }
  return rgb;
}

void write_ppm(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(3) * width * height) throw ConfigError("write_ppm: size mismatch");
  std::ostringstream os;
  os << "P6\n" << width << ' ' << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  write_text(path, os.str());
}

void write_difference_maps(const fs::path& dir, const std::vector<PairSample>& pairs,
                           const std::vector<MethodRow>& rows) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    double norm = 0.0;
    for (const MethodRow& r : rows) {
      if (r.pairs.size() != pairs.size()) throw ConfigError("difference maps: pair count mismatch");
      norm = std::max(norm, mid_slice_max_abs_diff(pairs[i].fixed, r.pairs[i].warped));
    }
    for (const MethodRow& r : rows) {
      const auto rgb = difference_map(pairs[i].fixed, r.pairs[i].warped, norm);
      write_ppm(dir / (std::to_string(pairs[i].seed) + "_" + std::string(strategy_name(r.strategy)) + ".ppm"),
                pairs[i].fixed.dims.w, pairs[i].fixed.dims.h, rgb);
    }
  }
}

}  // namespace curreg
