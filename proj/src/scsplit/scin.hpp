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

// Severity-cognizant input normalization. The interval [0, 1] of mixing
// ratios is cut into n bins; for each bin the expected per-patch mean and
// standard deviation of mixed patches are tabulated, so that a patch mixed
// at ratio t can be standardized with the statistics of its own bin.

#include <cstdint>
#include <string>
#include <vector>

#include "scsplit/data.hpp"
#include "scsplit/io.hpp"
#include "scsplit/mixing.hpp"

namespace scsplit {

/// Per-patch moments of the two channels, averaged over training patches.
struct ChannelStats {
   double mean_p0 = 0.0;   // E[p0]
   double mean_p1 = 0.0;   // E[p1]
   double var0 = 0.0;      // E[sigma^2(0)]
   double var1 = 0.0;      // E[sigma^2(1)]
   double cov01 = 0.0;     // E[within-patch Cov(p0, p1)]

   Json ToJson() const;
   static ChannelStats FromJson( Json const& j );
};

struct ScinTable {
   static constexpr int kVersion = 1;

   int n_bins = 0;
   std::vector< double > mu;
   std::vector< double > sigma;
   std::vector< std::int64_t > samples_per_bin;
   ChannelStats channel_stats;
   int patch_size_used = 0;
   std::string dataset_fingerprint;
   std::uint64_t seed = 0;

   bool built() const { return n_bins > 0 && static_cast< int >( mu.size()) == n_bins; }
   /// min(floor(t * n), n - 1).
   int BinIndex( MixingRatio t ) const;

   Json ToJson() const;
   static ScinTable FromJson( Json const& j );
   /// Hash of the serialized table; identifies the table a model was trained with.
   std::string Fingerprint() const;
};

struct ScinBuildOptions {
   int patch_size = 32;
   int n_bins = 100;
   int samples_per_bin = 2000;
   int channel_stat_samples = 20000;
   std::uint64_t seed = 0;
   int jobs = 1;
};

/// Tabulates (mu_i, sigma_i) for t drawn uniformly in (i/n, (i+1)/n] from
/// random training crops. sigma_i is the mean of per-patch standard deviations.
ScinTable BuildScinTable( ChannelFrameSet const& fs, ScinBuildOptions const& options );

/// Channel moments from `samples` random training crops.
ChannelStats EstimateChannelStats( ChannelFrameSet const& fs, int patch_size, int samples, std::uint64_t seed );

Image Normalize( Image const& c_t, MixingRatio t, ScinTable const& table );
Image Denormalize( Image const& x, MixingRatio t, ScinTable const& table );

/// (1-t)^2 E[s2(0)] + t^2 E[s2(1)] + 2t(1-t) Cov(p0, p1).
double PredictVariance( MixingRatio t, ChannelStats const& stats );

/// Standardization of the target channels the generators predict.
struct TargetChannelStats {
   double mean_c0 = 0.0;
   double std_c0 = 1.0;
   double mean_c1 = 0.0;
   double std_c1 = 1.0;

   Json ToJson() const;
   static TargetChannelStats FromJson( Json const& j );
};

/// Averages per-frame means and standard deviations over the training split.
/// Throws kIngest when a channel is constant.
TargetChannelStats ComputeTargetStats( ChannelFrameSet const& fs );

Image NormalizeTarget( Image const& c, int channel, TargetChannelStats const& stats );
Image DenormalizeTarget( Image const& x, int channel, TargetChannelStats const& stats );

} // namespace scsplit
