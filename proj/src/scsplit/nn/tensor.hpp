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
#include <vector>

namespace scsplit::nn {

/// Dense NCHW activation tensor.
template< typename T >
struct Tensor {
   int n = 0;
   int c = 0;
   int h = 0;
   int w = 0;
   std::vector< T > v;

   Tensor() = default;
   Tensor( int n_, int c_, int h_, int w_, T fill = T( 0 )) : n( n_ ), c( c_ ), h( h_ ), w( w_ ),
      v( static_cast< std::size_t >( n_ ) * c_ * h_ * w_, fill ) {}

   void Resize( int n_, int c_, int h_, int w_ ) {
      n = n_; c = c_; h = h_; w = w_;
      v.assign( static_cast< std::size_t >( n ) * c * h * w, T( 0 ));
   }
   std::size_t plane() const { return static_cast< std::size_t >( h ) * w; }
   std::size_t sample_size() const { return plane() * c; }
   T* sample( int i ) { return v.data() + sample_size() * i; }
   T const* sample( int i ) const { return v.data() + sample_size() * i; }
   bool SameShape( Tensor const& o ) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

} // namespace scsplit::nn
