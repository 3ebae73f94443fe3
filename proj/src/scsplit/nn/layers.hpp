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

// Building blocks for the generator and regressor networks. Parameters of a
// network live in one flat array; each layer only remembers its offset into
// it, so forward passes are const and gradients go to a caller-owned buffer
// of the same layout.

#include <cstddef>
#include <span>

#include "scsplit/common.hpp"
#include "scsplit/nn/tensor.hpp"

namespace scsplit::nn {

/// Hands out consecutive ranges of a flat parameter array.
class ParamLayout {
 public:
   std::size_t Allocate( std::size_t count ) {
      std::size_t offset = size_;
      size_ += count;
      return offset;
   }
   std::size_t size() const { return size_; }
 private:
   std::size_t size_ = 0;
};

/// Square `kernel`x`kernel` convolution, stride 1, zero "same" padding.
template< typename T >
class Conv2d {
 public:
   Conv2d() = default;
   Conv2d( int in_channels, int out_channels, int kernel, ParamLayout& layout );

   int in_channels() const { return in_; }
   int out_channels() const { return out_; }

   /// He-normal weights, zero bias.
   void Init( std::span< T > params, Rng& rng ) const;
   void Forward( std::span< T const > params, Tensor< T > const& x, Tensor< T >& y ) const;
   /// Accumulates into `grads`; writes the input gradient to `dx` when non-null.
   void Backward( std::span< T const > params, Tensor< T > const& x, Tensor< T > const& dy,
                  std::span< T > grads, Tensor< T >* dx ) const;

 private:
   int in_ = 0;
   int out_ = 0;
   int k_ = 1;
   std::size_t weight_offset_ = 0;
   std::size_t bias_offset_ = 0;
};

/// Feature-wise affine modulation driven by a per-sample scalar s:
/// y = x * (1 + a*s + b) + (c*s + d), one (a, b, c, d) per channel.
template< typename T >
class Film {
 public:
   Film() = default;
   Film( int channels, ParamLayout& layout );

   void Init( std::span< T > params ) const;
   void Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s, Tensor< T >& y ) const;
   void Backward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s,
                  Tensor< T > const& dy, std::span< T > grads, Tensor< T >& dx ) const;

 private:
   int channels_ = 0;
   std::size_t offset_ = 0;
};

inline constexpr double kLeakySlope = 0.1;

template< typename T >
void LeakyReluInPlace( Tensor< T >& x );
/// `y` is the activation output; multiplies `dy` by the local derivative.
template< typename T >
void LeakyReluBackwardInPlace( Tensor< T > const& y, Tensor< T >& dy );

template< typename T >
void AvgPool2( Tensor< T > const& x, Tensor< T >& y );
template< typename T >
void AvgPool2Backward( Tensor< T > const& dy, Tensor< T >& dx );

template< typename T >
void Upsample2( Tensor< T > const& x, Tensor< T >& y );
template< typename T >
void Upsample2Backward( Tensor< T > const& dy, Tensor< T >& dx );

/// Channel concatenation [a, b].
template< typename T >
void Concat( Tensor< T > const& a, Tensor< T > const& b, Tensor< T >& y );
template< typename T >
void ConcatBackward( Tensor< T > const& dy, int a_channels, Tensor< T >& da, Tensor< T >& db );

template< typename T >
void GlobalAvgPool( Tensor< T > const& x, Tensor< T >& y );
template< typename T >
void GlobalAvgPoolBackward( Tensor< T > const& dy, int h, int w, Tensor< T >& dx );

} // namespace scsplit::nn
