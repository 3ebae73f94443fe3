/*
 * Copyright 2026 The scsplit Authors.
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

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scsplit/data.hpp"
#include "scsplit/infer.hpp"
#include "scsplit/nets.hpp"

namespace scsplit {

// --- Metrics ------------------------------------------------------------------

/// Value reported for a perfect reconstruction.
constexpr double kPsnrCap = 100.0;

struct PsnrResult {
   double value = 0.0;     // dB, kPsnrCap when infinite
   bool infinite = false;  // zero MSE
};

/// 10 log10(range^2 / MSE) with range = max(gt) - min(gt).
PsnrResult Psnr( Image const& pred, Image const& gt );

struct SsimResult {
   double value = 0.0;
   bool single_scale = false;  // frame too small for five scales
};

/// Smallest side that supports the five-scale pyramid with an 11 px window.
constexpr int kMsSsimMinSide = 161;

/// Five-scale structural similarity (Gaussian window 11, sigma 1.5, K = 0.01 / 0.03,
/// weights 0.0448 0.2856 0.3001 0.2363 0.1333). The dynamic range is taken over
/// both images so the measure is symmetric. Falls back to single-scale SSIM for
/// frames smaller than kMsSsimMinSide. Result clamped to [0, 1].
SsimResult MsSsim( Image const& pred, Image const& gt );
/// Mean SSIM at full resolution (not clamped).
double Ssim( Image const& pred, Image const& gt );

// --- Regimes and reports ------------------------------------------------------

struct RegimeSpec {
   std::string name;
   std::vector< double > w_values;
};

/// weak {0.1, 0.2, 0.3}, balanced {0.4, 0.5, 0.6}, dominant {0.7, 0.8, 0.9}.
std::vector< RegimeSpec > DefaultRegimes();
void ValidateRegimes( std::vector< RegimeSpec > const& regimes );

struct EvalRow {
   std::string model_variant;
   std::string regime;
   double w = 0.0;
   int channel = 0;
   std::string metric;
   double value = 0.0;
   double std_error = 0.0;
   int n_frames = 0;

   friend bool operator==( EvalRow const&, EvalRow const& ) = default;
};

/// Mean over all (w, channel) cells of one regime.
struct RegimeSummary {
   std::string model_variant;
   std::string regime;
   std::string metric;
   double value = 0.0;
};

struct EvalReport {
   std::vector< EvalRow > rows;
   std::vector< RegimeSummary > summaries;
   Json metadata = Json::object();

   /// Channel-averaged value of one (variant, w, metric) cell.
   double CellMean( std::string const& variant, double w, std::string const& metric ) const;
   double RegimeValue( std::string const& variant, std::string const& regime, std::string const& metric ) const;
};

struct EvalOptions {
   std::vector< RegimeSpec > regimes = DefaultRegimes();
   std::vector< std::string > variants{ "scsplit", "fixed:0.5", "noagg" };
   std::vector< std::string > metrics{ "psnr", "ms_ssim" };
   InferenceConfig base;
   std::function< void( Json const& ) > progress;
};

/// For each w: channel 0 is scored on inputs mixed at t = 1 - w, channel 1 at
/// t = w. All test frames form one acquisition. Throws kIngest on an empty split.
EvalReport EvaluateRegimes( ModelBundle const& bundle, ChannelFrameSet const& test, EvalOptions const& options );

/// Regime summaries recomputed from the rows.
std::vector< RegimeSummary > SummarizeRegimes( std::vector< EvalRow > const& rows,
                                               std::vector< RegimeSpec > const& regimes );

struct SweepCell {
   double actual_w = 0.0;
   double assumed_w = 0.0;
   double psnr = 0.0;      // mean of the two channels
   double psnr_c0 = 0.0;
   double psnr_c1 = 0.0;
};

struct SweepTable {
   std::vector< SweepCell > cells;
   Json metadata = Json::object();

   /// Assumed w with the highest PSNR for one actual w.
   double ArgmaxAssumed( double actual_w ) const;
};

/// PSNR for every (actual, assumed) pair using fixed-t inference.
SweepTable DegradationSweep( ModelBundle const& bundle, ChannelFrameSet const& test, std::vector< double > const& actual_w,
                             std::vector< double > const& assumed_w, InferenceConfig const& base,
                             std::function< void( Json const& ) > const& progress = {} );

// --- Emission -----------------------------------------------------------------

struct EmitOptions {
   bool csv = true;
   bool json = true;
   bool plot_data = true;
};

/// Writes eval_report.{csv,json}, eval_summary.csv and plot_data.csv into `dir`.
std::vector< std::filesystem::path > EmitReport( EvalReport const& report, std::filesystem::path const& dir,
                                                 EmitOptions const& options );
std::vector< std::filesystem::path > EmitSweep( SweepTable const& table, std::filesystem::path const& dir,
                                                EmitOptions const& options );

std::string ReportCsv( EvalReport const& report );
std::vector< EvalRow > ParseReportCsv( std::string const& text );
Json ReportJson( EvalReport const& report );

} // namespace scsplit
