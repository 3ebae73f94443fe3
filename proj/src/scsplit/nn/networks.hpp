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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scsplit/nn/layers.hpp"
#include "scsplit/nn/tensor.hpp"

namespace scsplit {

enum class Conditioning { kConcat, kFilm };
enum class RegHead { kSigmoid, kClampedLinear };

std::string ToString( Conditioning c );
std::string ToString( RegHead h );
Conditioning ParseConditioning( std::string const& s );
RegHead ParseRegHead( std::string const& s );

/// Architecture of one severity-conditioned generator.
struct GenSpec {
   int channel_index = 0;
   int depth = 3;
   int base_width = 16;
   Conditioning conditioning = Conditioning::kConcat;
   int patch_size = 32;

   void Validate() const;
   friend bool operator==( GenSpec const&, GenSpec const& ) = default;
};

/// Architecture of the mixing-ratio regressor.
struct RegSpec {
   int depth = 3;
   int base_width = 16;
   RegHead head = RegHead::kSigmoid;
   int patch_size = 32;

   void Validate() const;
   friend bool operator==( RegSpec const&, RegSpec const& ) = default;
};

namespace nn {

/// Two 3x3 convolutions with leaky ReLU; the first optionally FiLM-modulated.
template< typename T >
struct ConvBlock {
   Conv2d< T > first;
   Conv2d< T > second;
   std::optional< Film< T >> film;

   struct Trace {
      Tensor< T > input;
      Tensor< T > first_pre;   // conv output before modulation
      Tensor< T > first_act;
      Tensor< T > out;
   };

   ConvBlock() = default;
   ConvBlock( int in_channels, int out_channels, bool with_film, ParamLayout& layout );
   void Init( std::span< T > params, Rng& rng ) const;
   void Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s, Trace& trace ) const;
   /// `dout` is consumed. Writes d(input) to `dx` when non-null.
   void Backward( std::span< T const > params, Trace const& trace, std::span< T const > s, Tensor< T >& dout,
                  std::span< T > grads, Tensor< T >* dx ) const;
};

/// Encoder-decoder with skip connections mapping a 1-channel image plus a
/// severity scalar to a 1-channel image of the same size.
template< typename T >
class UNet {
 public:
   struct Trace {
      Tensor< T > input;
      std::vector< typename ConvBlock< T >::Trace > enc;
      std::vector< Tensor< T >> pooled;
      std::vector< Tensor< T >> upsampled;
      std::vector< Tensor< T >> concat;
      std::vector< typename ConvBlock< T >::Trace > dec;
      Tensor< T > out;
   };

   explicit UNet( GenSpec const& spec );

   GenSpec const& spec() const { return spec_; }
   std::size_t param_count() const { return param_count_; }
   void Init( std::span< T > params, std::uint64_t seed ) const;

   /// x is N x 1 x H x W with H, W divisible by 2^(depth-1); one severity per sample.
   void Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > severity,
                 Tensor< T >& y ) const;
   void ForwardTrace( std::span< T const > params, Tensor< T > const& x, std::span< T const > severity,
                      Trace& trace ) const;
   /// Accumulates parameter gradients for upstream gradient `dy` into `grads`.
   void Backward( std::span< T const > params, Trace const& trace, std::span< T const > severity,
                  Tensor< T > const& dy, std::span< T > grads ) const;

 private:
   void CheckInput( Tensor< T > const& x, std::span< T const > severity ) const;

   GenSpec spec_;
   std::vector< ConvBlock< T >> enc_;
   std::vector< ConvBlock< T >> dec_;
   Conv2d< T > head_;
   std::size_t param_count_ = 0;
};

/// Convolutional encoder, global average pooling and a bounded scalar head.
template< typename T >
class RegressorNet {
 public:
   struct Trace {
      std::vector< typename ConvBlock< T >::Trace > enc;
      std::vector< Tensor< T >> pooled;
      Tensor< T > gap;
      Tensor< T > hidden;
      Tensor< T > logit;
      Tensor< T > out;
   };

   explicit RegressorNet( RegSpec const& spec );

   RegSpec const& spec() const { return spec_; }
   std::size_t param_count() const { return param_count_; }
   void Init( std::span< T > params, std::uint64_t seed ) const;

   /// x is N x 1 x H x W; y is N x 1 x 1 x 1 with values in [0, 1].
   void Forward( std::span< T const > params, Tensor< T > const& x, Tensor< T >& y ) const;
   void ForwardTrace( std::span< T const > params, Tensor< T > const& x, Trace& trace ) const;
   void Backward( std::span< T const > params, Trace const& trace, Tensor< T > const& dy,
                  std::span< T > grads ) const;

 private:
   RegSpec spec_;
   std::vector< ConvBlock< T >> enc_;
   Conv2d< T > dense1_;
   Conv2d< T > dense2_;
   std::size_t param_count_ = 0;
};

} // namespace nn
} // namespace scsplit
