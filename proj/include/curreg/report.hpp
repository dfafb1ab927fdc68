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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "curreg/curriculum.hpp"
#include "curreg/phantom.hpp"
#include "curreg/trainer.hpp"

namespace curreg {

struct MethodRow {
  StrategyKind strategy = StrategyKind::kBaseline;
  long steps = 0;
  double seconds_per_step = 0.0;
  double dice = 0.0;
  double jaccard = 0.0;
  std::vector<PairEvaluation> pairs;  // warped volumes not serialized
  std::vector<double> loss_curve;
  std::vector<ValidationRecord> validation;
  std::uint64_t param_checksum = 0;
};

struct RunReport {
  std::string config_echo;
  double unregistered_dice = 0.0;
  double unregistered_jaccard = 0.0;
  std::vector<MethodRow> rows;
  std::string generated_at;  // metadata only; excluded from determinism checks
};

inline const char* const kReportColumns[5] = {"Method", "#Steps", "Time per step", "Dice", "Jaccard"};

std::string method_label(StrategyKind kind);

// Table layout: one row per method, columns as kReportColumns.
std::string format_report_text(const RunReport& report);
std::string format_report_json(const RunReport& report);
void write_report(const std::filesystem::path& dir, const RunReport& report);

/// RGB pixels (row-major, H x W of the mid-axial slice): white where
/// |fixed - warped| = 0, pure red where it reaches `max_diff`.
std::vector<std::uint8_t> difference_map(const Volume& fixed, const Volume& warped, double max_diff);
double mid_slice_max_abs_diff(const Volume& fixed, const Volume& warped);
void write_ppm(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& rgb);

/// One image per (pair, method) under dir, normalized per pair by the largest
/// difference across methods. rows[k].pairs must carry warped volumes.
void write_difference_maps(const std::filesystem::path& dir, const std::vector<PairSample>& pairs,
                           const std::vector<MethodRow>& rows);

}  // namespace curreg
