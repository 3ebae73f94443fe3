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

#include <cstddef>
#include <span>
#include <vector>

namespace scsplit {

/// A single-channel 2-D float32 image, row-major.
class Image {
 public:
   Image() = default;
   Image( int height, int width, float fill = 0.0f );

   int height() const { return height_; }
   int width() const { return width_; }
   std::size_t size() const { return pixels_.size(); }
   bool empty() const { return pixels_.empty(); }

   float& operator()( int y, int x ) { return pixels_[ static_cast< std::size_t >( y ) * width_ + x ]; }
   float operator()( int y, int x ) const { return pixels_[ static_cast< std::size_t >( y ) * width_ + x ]; }

   float* data() { return pixels_.data(); }
   float const* data() const { return pixels_.data(); }
   std::span< float > pixels() { return pixels_; }
   std::span< float const > pixels() const { return pixels_; }

   bool SameShape( Image const& other ) const {
      return height_ == other.height_ && width_ == other.width_;
   }

   friend bool operator==( Image const&, Image const& ) = default;

 private:
   int height_ = 0;
   int width_ = 0;
   std::vector< float > pixels_;
};

struct MeanStd {
   double mean = 0.0;
   double std = 0.0;  // population standard deviation
};

/// Mean and population std of all pixels, accumulated in double.
MeanStd ComputeMeanStd( std::span< float const > pixels );
inline MeanStd ComputeMeanStd( Image const& img ) { return ComputeMeanStd( img.pixels() ); }

/// Copies the window [y, y+h) x [x, x+w). Throws kShape if out of bounds.
Image Crop( Image const& img, int y, int x, int h, int w );

/// Writes `patch` into `img` at (y, x).
void Paste( Image& img, Image const& patch, int y, int x );

float MinValue( Image const& img );
float MaxValue( Image const& img );

/// Throws kShape unless both images have the same shape.
void RequireSameShape( Image const& a, Image const& b, char const* context );

} // namespace scsplit
