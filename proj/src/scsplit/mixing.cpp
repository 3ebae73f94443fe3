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

#include "scsplit/mixing.hpp"

#include <cmath>
#include <string>

namespace scsplit {

MixingRatio::MixingRatio( double t ) : t_( t ) {
   if( !( t >= 0.0 && t <= 1.0 )) {
      Fail( ErrorCode::kRange, "mixing ratio " + std::to_string( t ) + " outside [0, 1]" );
   }
}

void TSamplerConfig::Validate() const {
   Require( a >= 0.0 && std::isfinite( a ), ErrorCode::kConfig, "t sampler: a must be >= 0" );
   Require( atom_location >= 0.0 && atom_location <= 1.0, ErrorCode::kConfig, "t sampler: atom must lie in [0, 1]" );
}

void NoiseConfig::Validate() const {
   Require( epsilon >= 0.0 && std::isfinite( epsilon ), ErrorCode::kConfig, "noise epsilon must be >= 0" );
}

Image Mix( Image const& c0, Image const& c1, MixingRatio t ) {
   RequireSameShape( c0, c1, "mix" );
   Image out( c0.height(), c0.width());
   auto const w1 = static_cast< float >( t.value());
   auto const w0 = static_cast< float >( 1.0 - t.value());
   // Endpoints are exact: 1 * c + 0 * c' == c in IEEE arithmetic.
   for( std::size_t i = 0; i < out.size(); ++i ) {
      out.data()[ i ] = w0 * c0.data()[ i ] + w1 * c1.data()[ i ];
   }
   return out;
}

MixingRatio SampleT( TSamplerConfig const& cfg, Rng& rng ) {
   std::uniform_real_distribution< double > uni( 0.0, 1.0 );
   double const atom_mass = cfg.a / ( 1.0 + cfg.a );
   if( cfg.a > 0.0 && uni( rng ) < atom_mass ) {
      return MixingRatio( cfg.atom_location );
   }
   return MixingRatio( uni( rng ));
}

MixingRatio ConvertWToT( double w, int wanted_channel ) {
   if( !( w >= 0.0 && w <= 1.0 )) {
      Fail( ErrorCode::kRange, "w = " + std::to_string( w ) + " outside [0, 1]" );
   }
   Require( wanted_channel == 0 || wanted_channel == 1, ErrorCode::kRange, "wanted channel must be 0 or 1" );
   return MixingRatio( wanted_channel == 0 ? 1.0 - w : w );
}

Image Perturb( Image const& x_norm, MixingRatio t, NoiseConfig const& cfg, Rng& rng ) {
   Image out = x_norm;
   double const scale = t.value() * cfg.epsilon;
   if( !cfg.enabled || scale == 0.0 ) {
      return out;
   }
   std::normal_distribution< double > normal( 0.0, 1.0 );
   for( float& v : out.pixels()) {
      v = static_cast< float >( v + scale * normal( rng ));
   }
   return out;
}

} // namespace scsplit
