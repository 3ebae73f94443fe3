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

#include <algorithm>
#include <cmath>
#include <vector>

#include "scsplit/image.hpp"

namespace scsplit::testing {

// Direct 2-D windowed SSIM terms; no separability, no shared code.
struct OracleTerms {
   double ssim = 0.0;
   double cs = 0.0;
};

using Grid = std::vector< std::vector< double >>;

inline Grid ToGrid( Image const& img ) {
   Grid g( static_cast< std::size_t >( img.height()), std::vector< double >( static_cast< std::size_t >( img.width())));
   for( int y = 0; y < img.height(); ++y ) {
      for( int x = 0; x < img.width(); ++x ) g[ y ][ x ] = img( y, x );
   }
   return g;
}

inline OracleTerms OracleSsim( Grid const& a, Grid const& b, double range ) {
   double win[ 11 ][ 11 ];
   double total = 0.0;
   for( int i = 0; i < 11; ++i ) {
      for( int j = 0; j < 11; ++j ) {
         win[ i ][ j ] = std::exp( -(( i - 5 ) * ( i - 5 ) + ( j - 5 ) * ( j - 5 )) / ( 2.0 * 1.5 * 1.5 ));
         total += win[ i ][ j ];
      }
   }
   double const c1 = std::pow( 0.01 * range, 2 );
   double const c2 = std::pow( 0.03 * range, 2 );
   int const h = static_cast< int >( a.size());
   int const w = static_cast< int >( a[ 0 ].size());
   OracleTerms t;
   int n = 0;
   for( int y = 0; y + 11 <= h; ++y ) {
      for( int x = 0; x + 11 <= w; ++x ) {
         double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
         for( int i = 0; i < 11; ++i ) {
            for( int j = 0; j < 11; ++j ) {
               double const k = win[ i ][ j ] / total;
               double const va = a[ y + i ][ x + j ];
               double const vb = b[ y + i ][ x + j ];
               ma += k * va;
               mb += k * vb;
               saa += k * va * va;
               sbb += k * vb * vb;
               sab += k * va * vb;
            }
         }
         double const cs = ( 2 * ( sab - ma * mb ) + c2 ) / (( saa - ma * ma ) + ( sbb - mb * mb ) + c2 );
         t.cs += cs;
         t.ssim += ( 2 * ma * mb + c1 ) / ( ma * ma + mb * mb + c1 ) * cs;
         ++n;
      }
   }
   t.cs /= n;
   t.ssim /= n;
   return t;
}

inline Grid Halve( Grid const& g ) {
   Grid out( g.size() / 2, std::vector< double >( g[ 0 ].size() / 2 ));
   for( std::size_t y = 0; y < out.size(); ++y ) {
      for( std::size_t x = 0; x < out[ 0 ].size(); ++x ) {
         out[ y ][ x ] = ( g[ 2 * y ][ 2 * x ] + g[ 2 * y ][ 2 * x + 1 ] + g[ 2 * y + 1 ][ 2 * x ] + g[ 2 * y + 1 ][ 2 * x + 1 ] ) / 4;
      }
   }
   return out;
}

inline double OracleMsSsim( Image const& pred, Image const& gt ) {
   double const hi = std::max( MaxValue( pred ), MaxValue( gt ));
   double const lo = std::min( MinValue( pred ), MinValue( gt ));
   double const weights[ 5 ] = { 0.0448, 0.2856, 0.3001, 0.2363, 0.1333 };
   Grid a = ToGrid( pred );
   Grid b = ToGrid( gt );
   double v = 1.0;
   for( int s = 0; s < 5; ++s ) {
      OracleTerms const t = OracleSsim( a, b, hi - lo );
      v *= std::pow( std::max( s == 4 ? t.ssim : t.cs, 0.0 ), weights[ s ] );
      a = Halve( a );
      b = Halve( b );
   }
   return std::clamp( v, 0.0, 1.0 );
}

/// 10 log10(range^2 / MSE) in double, range over the ground truth.
inline double OraclePsnr( Image const& pred, Image const& gt ) {
   double lo = gt.data()[ 0 ], hi = lo, mse = 0.0;
   for( std::size_t i = 0; i < gt.size(); ++i ) {
      double const g = gt.data()[ i ];
      lo = std::min( lo, g );
      hi = std::max( hi, g );
      double const d = static_cast< double >( pred.data()[ i ] ) - g;
      mse += d * d;
   }
   mse /= static_cast< double >( gt.size());
   return 10.0 * std::log10(( hi - lo ) * ( hi - lo ) / mse );
}

} // namespace scsplit::testing
