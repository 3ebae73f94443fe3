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

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "scsplit/config.hpp"
#include "scsplit/data.hpp"
#include "scsplit/mixing.hpp"
#include "scsplit/nets.hpp"
#include "scsplit/scin.hpp"

namespace scsplit {

enum class RegTSampler { kUniform, kEq3 };

struct TrainConfig {
   int batch_size = 8;
   int max_steps = 1500;             // generators
   int reg_max_steps = 2000;
   double learning_rate = 1e-3;
   std::string optimizer = "adam";
   std::string gen_loss = "mae";
   std::string reg_loss = "mse";
   TSamplerConfig t_sampler_gen;     // a = 1, atom at 0.5
   RegTSampler t_sampler_reg = RegTSampler::kUniform;
   NoiseConfig noise;
   int patch_size = 32;
   int val_every = 100;
   int patience = 5;                 // validation rounds without improvement
   int val_patches_per_t = 16;
   double grad_clip = 0.0;           // <= 0 disables
   int probe_every = 25;
   /// When > 0, (patch, t) pairs are drawn from a fixed pool of this size.
   int pool_size = 0;
   std::uint64_t seed = 0;
   int gen_depth = 3;
   int gen_base_width = 16;
   Conditioning conditioning = Conditioning::kConcat;
   int reg_depth = 3;
   int reg_base_width = 16;
   RegHead reg_head = RegHead::kSigmoid;

   GenSpec MakeGenSpec( int channel ) const;
   RegSpec MakeRegSpec() const;

   void Check( Problems& problems ) const;
   void Validate() const;
   Json ToJson() const;
   static TrainConfig FromJson( ConfigReader r );
   static TrainConfig FromJson( Json const& j );
};

struct CurvePoint {
   int step = 0;
   double value = 0.0;
};

/// Batch statistics of the SCIN-normalized training inputs.
struct NormalizationProbe {
   int batches = 0;
   int violations = 0;          // batches outside |mean| <= 0.2, var in [0.5, 1.5]
   double max_abs_mean = 0.0;
   double min_var = 0.0;
   double max_var = 0.0;
   double mean_of_means = 0.0;
   double mean_of_vars = 0.0;

   void Add( double mean, double var );
   Json ToJson() const;
};

struct TrainReport {
   std::map< std::string, std::vector< CurvePoint >> train_loss;
   std::map< std::string, std::vector< CurvePoint >> val_loss;
   std::map< std::string, int > best_step;
   std::map< std::string, double > best_val;
   int steps_run = 0;
   double wall_clock_seconds = 0.0;
   std::string validation_split = "val";
   NormalizationProbe probe;

   /// Deterministic content only (no timing).
   Json ToJson() const;
   void Merge( TrainReport const& other );
};

/// Receives one JSON object per progress event.
using TrainLogSink = std::function< void( Json const& ) >;

struct GeneratorPair {
   Generator gen0;
   Generator gen1;
   TrainReport report;
};

struct RegressorResult {
   Regressor reg;
   TrainReport report;
};

/// Trains both generators in one loop that shares (patch, t) samples.
/// Throws kFingerprint when `table` was not built on `fs`, kDiverged on a non-finite loss.
GeneratorPair TrainGenerators( ChannelFrameSet const& fs, ScinTable const& table, TargetChannelStats const& target_stats,
                               TrainConfig const& cfg, TrainLogSink const& log = {} );

RegressorResult TrainRegressor( ChannelFrameSet const& fs, ScinTable const& table, TrainConfig const& cfg,
                                TrainLogSink const& log = {} );

/// Per-patch mean absolute error of `reg` over t in {0.1, ..., 0.9} on random
/// crops of `split`, inputs normalized with the table at the true t.
double RegressorMae( Regressor const& reg, ChannelFrameSet const& fs, ScinTable const& table, Split split,
                     int patch_size, int patches_per_t, std::uint64_t seed );

} // namespace scsplit
