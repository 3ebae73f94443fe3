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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scsplit/common.hpp"
#include "scsplit/image.hpp"
#include "scsplit/io.hpp"

namespace scsplit {

enum class Split { kTrain, kVal, kTest };
std::string ToString( Split s );
Split ParseSplit( std::string const& s );

/// Co-registered two-channel ground-truth frames of one acquisition.
struct ChannelFrameSet {
   std::string name;
   std::vector< Image > frames_c0;
   std::vector< Image > frames_c1;
   std::vector< Split > splits;                 // one per frame
   std::optional< double > pixel_clip_quantile;
   std::optional< float > clip_threshold;       // set when clipping was applied

   std::size_t size() const { return frames_c0.size(); }
   /// Throws kIngest on count/shape mismatch or non-finite pixels.
   void Validate() const;
   std::vector< std::size_t > Indices( Split s ) const;
   ChannelFrameSet Subset( Split s ) const;
   /// SHA-256 over name, splits and all pixel data.
   std::string Fingerprint() const;
};

enum class StructureFamily { kFilaments, kBlobs, kRings };
std::string ToString( StructureFamily f );
StructureFamily ParseStructureFamily( std::string const& s );

struct ChannelSynth {
   StructureFamily family = StructureFamily::kFilaments;
   double density = 12.0;          // expected structures per 64x64 pixels
   double intensity_scale = 1.0;
};

/// Procedural stand-in for a two-structure microscopy dataset.
struct SynthConfig {
   std::string name = "synthetic";
   std::uint64_t seed = 7;
   int height = 64;
   int width = 64;
   int train_frames = 40;
   int val_frames = 6;
   int test_frames = 6;
   ChannelSynth c0{ StructureFamily::kFilaments, 48.0, 1.0 };
   ChannelSynth c1{ StructureFamily::kBlobs, 80.0, 1.0 };
   double background_level = 0.0;
   /// Fraction of channel-0 structure copied into channel 1; > 0 makes the channels correlated.
   double colocalization = 0.0;

   void Validate() const;
   Json ToJson() const;
   static SynthConfig FromJson( Json const& j );
};

ChannelFrameSet SynthesizeDataset( SynthConfig const& cfg );

/// Loads a dataset described by a JSON manifest (or a directory holding
/// `manifest.json`). When `clip_quantile` is set, every pixel above the
/// training-split quantile of both channels is set to that value.
ChannelFrameSet LoadDataset( std::filesystem::path const& path, std::optional< double > clip_quantile );

/// Writes c0.npy, c1.npy and manifest.json into `dir`.
void SaveDataset( ChannelFrameSet const& fs, std::filesystem::path const& dir, Json const& extra = Json::object());

/// Nearest-rank quantile: the smallest value v with at least q of the values <= v.
float NearestRankQuantile( std::vector< float > values, double q );

/// Clips every frame at the nearest-rank quantile of the training split.
void ApplyQuantileClip( ChannelFrameSet& fs, double quantile );

struct PatchSpec {
   int patch_size = 32;
   int stride = 24;
   Split split = Split::kTrain;

   void Validate( int frame_height, int frame_width ) const;
};

struct PatchPair {
   Image c0;
   Image c1;
   std::size_t frame = 0;
   int y = 0;
   int x = 0;
};

/// Endless stream of random aligned crops from one split; owns its RNG.
class PatchSampler {
 public:
   PatchSampler( ChannelFrameSet const& fs, PatchSpec const& spec, std::uint64_t seed );
   PatchPair Next();

 private:
   ChannelFrameSet const* fs_;
   PatchSpec spec_;
   std::vector< std::size_t > frames_;
   Rng rng_;
};

} // namespace scsplit
