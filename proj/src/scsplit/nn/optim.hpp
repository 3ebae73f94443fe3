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

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace scsplit::nn {

/// Mean absolute error over all elements; writes d(loss)/d(pred) to `grad`.
template< typename T >
double MaeLoss( std::span< T const > pred, std::span< T const > target, std::span< T > grad ) {
   double sum = 0.0;
   T const inv = T( 1 ) / static_cast< T >( pred.size());
   for( std::size_t i = 0; i < pred.size(); ++i ) {
      T const d = pred[ i ] - target[ i ];
      sum += std::abs( static_cast< double >( d ));
      grad[ i ] = d > T( 0 ) ? inv : ( d < T( 0 ) ? -inv : T( 0 ));
   }
   return sum / static_cast< double >( pred.size());
}

/// Mean squared error over all elements; writes d(loss)/d(pred) to `grad`.
template< typename T >
double MseLoss( std::span< T const > pred, std::span< T const > target, std::span< T > grad ) {
   double sum = 0.0;
   T const scale = T( 2 ) / static_cast< T >( pred.size());
   for( std::size_t i = 0; i < pred.size(); ++i ) {
      T const d = pred[ i ] - target[ i ];
      sum += static_cast< double >( d ) * static_cast< double >( d );
      grad[ i ] = scale * d;
   }
   return sum / static_cast< double >( pred.size());
}

/// Scales `grad` so its L2 norm does not exceed `max_norm` (no-op when max_norm <= 0).
/// Returns the norm before clipping.
template< typename T >
double ClipGradNorm( std::span< T > grad, double max_norm ) {
   double ss = 0.0;
   for( T g : grad ) {
      ss += static_cast< double >( g ) * static_cast< double >( g );
   }
   double const norm = std::sqrt( ss );
   if( max_norm > 0.0 && norm > max_norm ) {
      T const scale = static_cast< T >( max_norm / norm );
      for( T& g : grad ) {
         g *= scale;
      }
   }
   return norm;
}

template< typename T >
class Adam {
 public:
   struct Options {
      double learning_rate = 1e-3;
      double beta1 = 0.9;
      double beta2 = 0.999;
      double epsilon = 1e-8;
   };

   Adam( std::size_t size, Options const& options ) : options_( options ), m_( size, T( 0 )), v_( size, T( 0 )) {}

   void Step( std::span< T > params, std::span< T const > grads ) {
      ++step_;
      double const c1 = 1.0 - std::pow( options_.beta1, static_cast< double >( step_ ));
      double const c2 = 1.0 - std::pow( options_.beta2, static_cast< double >( step_ ));
      T const b1 = static_cast< T >( options_.beta1 );
      T const b2 = static_cast< T >( options_.beta2 );
      T const lr = static_cast< T >( options_.learning_rate / c1 );
      T const inv_c2 = static_cast< T >( 1.0 / c2 );
      T const eps = static_cast< T >( options_.epsilon );
      for( std::size_t i = 0; i < params.size(); ++i ) {
         T const g = grads[ i ];
         m_[ i ] = b1 * m_[ i ] + ( T( 1 ) - b1 ) * g;
         v_[ i ] = b2 * v_[ i ] + ( T( 1 ) - b2 ) * g * g;
         params[ i ] -= lr * m_[ i ] / ( std::sqrt( v_[ i ] * inv_c2 ) + eps );
      }
   }

   long step() const { return step_; }
   Options const& options() const { return options_; }

 private:
   Options options_;
   std::vector< T > m_;
   std::vector< T > v_;
   long step_ = 0;
};

} // namespace scsplit::nn
