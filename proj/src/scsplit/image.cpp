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

#include "scsplit/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scsplit/common.hpp"

namespace scsplit {

Image::Image( int height, int width, float fill ) : height_( height ), width_( width ) {
   Require( height >= 0 && width >= 0, ErrorCode::kShape, "negative image size" );
   pixels_.assign( static_cast< std::size_t >( height ) * static_cast< std::size_t >( width ), fill );
}

MeanStd ComputeMeanStd( std::span< float const > pixels ) {
   MeanStd out;
   if( pixels.empty() ) {
      return out;
   }
   double sum = 0.0;
   for( float v : pixels ) {
      sum += v;
   }
   out.mean = sum / static_cast< double >( pixels.size() );
   double ss = 0.0;
   for( float v : pixels ) {
      double d = v - out.mean;
      ss += d * d;
   }
   out.std = std::sqrt( ss / static_cast< double >( pixels.size() ));
   return out;
}

Image Crop( Image const& img, int y, int x, int h, int w ) {
   if( y < 0 || x < 0 || h < 0 || w < 0 || y + h > img.height() || x + w > img.width() ) {
      Fail( ErrorCode::kShape, "crop window " + std::to_string( h ) + "x" + std::to_string( w ) + " at (" +
                               std::to_string( y ) + "," + std::to_string( x ) + ") exceeds image " +
                               std::to_string( img.height() ) + "x" + std::to_string( img.width() ));
   }
   Image out( h, w );
   for( int r = 0; r < h; ++r ) {
      std::copy_n( img.data() + static_cast< std::size_t >( y + r ) * img.width() + x, w,
                   out.data() + static_cast< std::size_t >( r ) * w );
   }
   return out;
}

void Paste( Image& img, Image const& patch, int y, int x ) {
   Require( y >= 0 && x >= 0 && y + patch.height() <= img.height() && x + patch.width() <= img.width(),
            ErrorCode::kShape, "paste window exceeds image" );
   for( int r = 0; r < patch.height(); ++r ) {
      std::copy_n( patch.data() + static_cast< std::size_t >( r ) * patch.width(), patch.width(),
                   img.data() + static_cast< std::size_t >( y + r ) * img.width() + x );
   }
}

float MinValue( Image const& img ) {
   Require( !img.empty(), ErrorCode::kShape, "min of empty image" );
   return *std::min_element( img.pixels().begin(), img.pixels().end() );
}

float MaxValue( Image const& img ) {
   Require( !img.empty(), ErrorCode::kShape, "max of empty image" );
   return *std::max_element( img.pixels().begin(), img.pixels().end() );
}

void RequireSameShape( Image const& a, Image const& b, char const* context ) {
   if( !a.SameShape( b )) {
      Fail( ErrorCode::kShape, std::string( context ) + ": shape mismatch " + std::to_string( a.height() ) + "x" +
                               std::to_string( a.width() ) + " vs " + std::to_string( b.height() ) + "x" +
                               std::to_string( b.width() ));
   }
}

} // namespace scsplit
