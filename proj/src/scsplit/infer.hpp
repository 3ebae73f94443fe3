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

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scsplit/config.hpp"
#include "scsplit/image.hpp"
#include "scsplit/mixing.hpp"
#include "scsplit/nets.hpp"

namespace scsplit {

// --- Tiling -------------------------------------------------------------------

struct TileSpec {
   int tile = 32;
   int overlap = 8;

   int stride() const { return tile - overlap; }
   /// Throws kShape when the tile does not fit the frame, kConfig on bad geometry.
   void Validate( int height, int width ) const;
};

struct TilePos {
   int y = 0;
   int x = 0;
};

/// Start offsets along one axis: 0, stride, 2 stride, ... with the last tile
/// anchored to the far border.
std::vector< int > TileStarts( int length, int tile, int stride );
std::vector< TilePos > TileGrid( int height, int width, TileSpec const& spec );
std::vector< Image > TileFrame( Image const& frame, TileSpec const& spec );
/// Inverse of TileFrame. Overlaps are blended with linear ramps on interior
/// tile edges; unchanged tiles reproduce the frame exactly.
Image StitchTiles( std::span< Image const > tiles, int height, int width, TileSpec const& spec );
/// Number of tiles covering each pixel.
Image CoverageMap( int height, int width, TileSpec const& spec );

// --- Configuration ------------------------------------------------------------

enum class Aggregation { kMean, kMedian, kMode, kWgtSum, kWgtProd, kFixed, kPerFrame };

std::string ToString( Aggregation a );

struct InferenceConfig {
   Aggregation aggregation = Aggregation::kMean;
   double fixed_t = 0.5;         // used by kFixed
   int mmse_count = 10;
   int steps = 1;
   TileSpec tile;
   NoiseConfig noise;
   std::uint64_t seed = 0;

   /// Variant label: scsplit, mean, median, mode, wgt_sum, wgt_prod, noagg, fixed:<t>.
   std::string VariantName() const;
   /// Copy of this config with the aggregation taken from a variant label.
   InferenceConfig WithVariant( std::string const& variant ) const;

   void Check( Problems& problems ) const;
   void Validate() const;
   Json ToJson() const;
   static InferenceConfig FromJson( ConfigReader r );
   static InferenceConfig FromJson( Json const& j );
};

// --- Acquisitions -------------------------------------------------------------

/// Superimposed single-channel frames sharing one (unknown) mixing ratio.
struct AcquisitionInput {
   std::string name;
   std::vector< Image > frames;

   /// Throws kIngest when empty, non-finite or of mixed shapes.
   void Validate() const;
};

struct NormalizedAcquisition {
   std::vector< Image > frames;
   double mean = 0.0;
   double std = 1.0;
};

/// Standardizes with the mean and std pooled over all pixels of all frames.
NormalizedAcquisition NormalizeAcquisition( AcquisitionInput const& acq );

/// Regressor outputs for every tile of every frame, frame-major.
struct PatchEstimates {
   std::vector< double > t;
   std::vector< std::size_t > frame;
   std::vector< TilePos > pos;
};

PatchEstimates EstimateT( std::span< Image const > normalized_frames, Regressor const& reg, TileSpec const& tile );

/// mean, median or mode (histogram with 0.01 bins, centre of the fullest bin).
double Aggregate( std::span< double const > t, Aggregation method );

/// Per-frame maps with every pixel holding the estimate of the tiles covering it.
std::vector< Image > TMaps( PatchEstimates const& est, std::size_t n_frames, int height, int width, TileSpec const& tile );

/// Weighted mean of the t maps. Each rough channel estimate is min-max scaled
/// to [0, 1] over the acquisition; weights are their sum or their product.
/// Falls back to the unweighted mean of the maps when all weights vanish.
double AggregateWeighted( std::span< Image const > t_maps, std::span< Image const > c0_rough,
                          std::span< Image const > c1_rough, bool product, bool* fell_back = nullptr );

// --- Unmixing -----------------------------------------------------------------

/// Input statistics seen before one generator call.
struct IterationRecord {
   int channel = 0;
   int step = 0;
   std::vector< double > severity;   // one per frame
   double input_mean = 0.0;
   double input_var = 0.0;
};

struct UnmixOptions {
   std::array< bool, 2 > channels{ true, true };
   /// Per-frame t values that bypass the regressor and aggregation.
   std::optional< std::vector< double >> frame_t;
   std::function< void( IterationRecord const& ) > observer;
};

struct UnmixResult {
   std::vector< Image > c0_hat;      // empty when the channel was not requested
   std::vector< Image > c1_hat;
   double t_estimate = 0.5;
   std::vector< double > frame_t;    // t used for each frame
   PatchEstimates per_patch;
   double input_mean = 0.0;
   double input_std = 1.0;
   std::string warning;
   Json config;
};

/// Full pipeline: normalize, estimate and aggregate t, run the generators
/// (cfg.steps times) with MMSE averaging, stitch and denormalize.
UnmixResult Unmix( AcquisitionInput const& acq, ModelBundle const& bundle, InferenceConfig const& cfg,
                   UnmixOptions const& options = {} );
/// Same as Unmix; requires cfg.steps >= 1 and documents the iterative contract:
/// the severity of step j is s0 (k - j) / k and each intermediate is
/// re-standardized over the acquisition before the next call.
UnmixResult UnmixIterative( AcquisitionInput const& acq, ModelBundle const& bundle, InferenceConfig const& cfg,
                            UnmixOptions const& options = {} );

/// Severity schedule {s0 (k - j) / k : j = 0 .. k-1}.
std::vector< double > SeveritySchedule( double s0, int steps );

Json SummarizeEstimates( std::span< double const > t );

} // namespace scsplit
