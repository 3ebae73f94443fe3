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
#include <random>
#include <string>

#include "scsplit/common.hpp"
#include "scsplit/data.hpp"
#include "scsplit/image.hpp"

namespace scsplit::testing {

inline Image RandomImage( int h, int w, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f ) {
   Rng rng( seed );
   std::uniform_real_distribution< float > u( lo, hi );
   Image img( h, w );
   for( float& v : img.pixels()) {
      v = u( rng );
   }
   return img;
}

/// Small synthetic set for fast tests.
inline SynthConfig TinySynth( std::uint64_t seed = 3, int size = 32, int train = 6, int val = 2, int test = 2 ) {
   SynthConfig c;
   c.name = "tiny";
   c.seed = seed;
   c.height = size;
   c.width = size;
   c.train_frames = train;
   c.val_frames = val;
   c.test_frames = test;
   return c;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
   explicit TempDir( std::string const& tag ) {
      std::random_device rd;
      path_ = std::filesystem::temp_directory_path() / ( "scsplit_" + tag + "_" + std::to_string( rd()));
      std::filesystem::create_directories( path_ );
   }
   ~TempDir() {
      std::error_code ec;
      std::filesystem::remove_all( path_, ec );
   }
   TempDir( TempDir const& ) = delete;
   TempDir& operator=( TempDir const& ) = delete;
   std::filesystem::path const& path() const { return path_; }

 private:
   std::filesystem::path path_;
};

} // namespace scsplit::testing
