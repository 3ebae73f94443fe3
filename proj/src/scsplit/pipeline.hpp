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

// Command layer: one RunConfig drives every stage, each stage reads its
// inputs from and writes its outputs to a directory under `out`.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scsplit/data.hpp"
#include "scsplit/eval.hpp"
#include "scsplit/infer.hpp"
#include "scsplit/scin.hpp"
#include "scsplit/train.hpp"

namespace scsplit {

enum class ReusePolicy { kReproduce, kReuse };

struct DatasetSection {
   std::optional< SynthConfig > synth;           // set unless `manifest` is given
   std::filesystem::path manifest;
   std::optional< double > clip_quantile;
   std::vector< double > demo_t{ 0.3, 0.7 };     // test-split acquisitions written by synth
};

struct EvalSection {
   std::vector< RegimeSpec > regimes = DefaultRegimes();
   std::vector< std::string > variants{ "scsplit", "fixed:0.5", "noagg" };
   std::vector< std::string > metrics{ "psnr", "ms_ssim" };
   bool plot_data = true;
   bool wall_clock_timestamp = false;
};

struct SweepSection {
   std::vector< double > actual_w{ 0.3, 0.5, 0.7 };
   std::vector< double > assumed_w{ 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9 };
};

struct RunConfig {
   std::uint64_t seed = 7;
   std::filesystem::path out;
   int jobs = 1;
   std::string format = "both";       // csv, json or both
   ReusePolicy policy = ReusePolicy::kReproduce;
   DatasetSection dataset;
   ScinBuildOptions scin;
   TrainConfig train;
   InferenceConfig infer;
   EvalSection eval;
   SweepSection sweep;
   // Inputs of later stages; empty means the default location under `out`.
   std::filesystem::path dataset_dir;
   std::filesystem::path table_path;
   std::filesystem::path bundle_dir;
   std::filesystem::path acquisition_manifest;

   std::filesystem::path DatasetDir() const;
   std::filesystem::path TablePath() const;
   std::filesystem::path BundleDir() const;
   std::filesystem::path AcquisitionManifest() const;

   /// Effective config with every seed resolved.
   Json ToJson() const;
   std::string Hash() const;
   /// Collects every problem before throwing kConfig. Sub-seeds not given
   /// explicitly are derived from `seed`.
   static RunConfig FromJson( Json const& j );
};

/// File values (if any) patched with `overrides`. A missing `out` falls back to
/// $SCSPLIT_CACHE_DIR (or ./scsplit_runs) / run-<hash>.
RunConfig LoadRunConfig( std::optional< std::filesystem::path > const& config_file, Json const& overrides );

using ProgressSink = std::function< void( Json const& ) >;

/// Commands return a JSON summary of what was written.
Json CmdSynth( RunConfig const& cfg, ProgressSink const& progress = {} );
Json CmdBuildScin( RunConfig const& cfg, ProgressSink const& progress = {} );
Json CmdTrain( RunConfig const& cfg, ProgressSink const& progress = {} );
Json CmdInfer( RunConfig const& cfg, ProgressSink const& progress = {} );
Json CmdEval( RunConfig const& cfg, ProgressSink const& progress = {} );
Json CmdSweep( RunConfig const& cfg, ProgressSink const& progress = {} );
/// synth, build-scin, train, eval and sweep in order.
Json CmdRun( RunConfig const& cfg, ProgressSink const& progress = {} );

/// Dispatch by command name (synth, build-scin, train, infer, eval, sweep, run).
Json RunCommand( std::string const& command, RunConfig const& cfg, ProgressSink const& progress = {} );
std::vector< std::string > CommandNames();

/// Frames of one acquisition file: TIFF pages or an (N, H, W) .npy stack.
std::vector< Image > ReadAcquisitionFile( std::filesystem::path const& path );

/// Entries of an acquisition manifest: {"acquisitions": [{"name", "files"}]} or one such entry.
std::vector< AcquisitionInput > LoadAcquisitions( std::filesystem::path const& manifest );

} // namespace scsplit
