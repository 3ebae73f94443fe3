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

#include "scsplit/nn/networks.hpp"

#include <algorithm>
#include <cmath>

namespace scsplit {

std::string ToString( Conditioning c ) {
   return c == Conditioning::kConcat ? "scalar-broadcast-concat" : "feature-film";
}

std::string ToString( RegHead h ) {
   return h == RegHead::kSigmoid ? "sigmoid-bounded" : "clamped-linear";
}

Conditioning ParseConditioning( std::string const& s ) {
   if( s == "scalar-broadcast-concat" || s == "concat" ) {
      return Conditioning::kConcat;
   }
   if( s == "feature-film" || s == "film" ) {
      return Conditioning::kFilm;
   }
   Fail( ErrorCode::kConfig, "unknown conditioning mode '" + s + "'" );
}

RegHead ParseRegHead( std::string const& s ) {
   if( s == "sigmoid-bounded" || s == "sigmoid" ) {
      return RegHead::kSigmoid;
   }
   if( s == "clamped-linear" || s == "clamp" ) {
      return RegHead::kClampedLinear;
   }
   Fail( ErrorCode::kConfig, "unknown regressor head '" + s + "'" );
}

void GenSpec::Validate() const {
   Require( channel_index == 0 || channel_index == 1, ErrorCode::kConfig, "GenSpec.channel_index must be 0 or 1" );
   Require( depth >= 2, ErrorCode::kConfig, "GenSpec.depth must be >= 2" );
   Require( base_width >= 1, ErrorCode::kConfig, "GenSpec.base_width must be >= 1" );
   Require( patch_size > 0 && patch_size % ( 1 << ( depth - 1 )) == 0, ErrorCode::kConfig,
            "GenSpec.patch_size must be a positive multiple of 2^(depth-1)" );
}

void RegSpec::Validate() const {
   Require( depth >= 1, ErrorCode::kConfig, "RegSpec.depth must be >= 1" );
   Require( base_width >= 1, ErrorCode::kConfig, "RegSpec.base_width must be >= 1" );
   Require( patch_size > 0 && patch_size % ( 1 << ( depth - 1 )) == 0, ErrorCode::kConfig,
            "RegSpec.patch_size must be a positive multiple of 2^(depth-1)" );
}

namespace nn {

// --- ConvBlock --------------------------------------------------------------

template< typename T >
ConvBlock< T >::ConvBlock( int in_channels, int out_channels, bool with_film, ParamLayout& layout )
   : first( in_channels, out_channels, 3, layout ), second( out_channels, out_channels, 3, layout ) {
   if( with_film ) {
      film.emplace( out_channels, layout );
   }
}

template< typename T >
void ConvBlock< T >::Init( std::span< T > params, Rng& rng ) const {
   first.Init( params, rng );
   second.Init( params, rng );
   if( film ) {
      film->Init( params );
   }
}

template< typename T >
void ConvBlock< T >::Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s,
                              Trace& trace ) const {
   trace.input = x;
   first.Forward( params, x, trace.first_pre );
   if( film ) {
      film->Forward( params, trace.first_pre, s, trace.first_act );
   } else {
      trace.first_act = trace.first_pre;
   }
   LeakyReluInPlace( trace.first_act );
   second.Forward( params, trace.first_act, trace.out );
   LeakyReluInPlace( trace.out );
}

template< typename T >
void ConvBlock< T >::Backward( std::span< T const > params, Trace const& trace, std::span< T const > s,
                               Tensor< T >& dout, std::span< T > grads, Tensor< T >* dx ) const {
   LeakyReluBackwardInPlace( trace.out, dout );
   Tensor< T > dmid;
   second.Backward( params, trace.first_act, dout, grads, &dmid );
   LeakyReluBackwardInPlace( trace.first_act, dmid );
   if( film ) {
      Tensor< T > dpre;
      film->Backward( params, trace.first_pre, s, dmid, grads, dpre );
      dmid = std::move( dpre );
   }
   first.Backward( params, trace.input, dmid, grads, dx );
}

// --- UNet -------------------------------------------------------------------

template< typename T >
UNet< T >::UNet( GenSpec const& spec ) : spec_( spec ) {
   spec_.Validate();
   ParamLayout layout;
   bool const film = spec_.conditioning == Conditioning::kFilm;
   int in_channels = film ? 1 : 2;
   for( int l = 0; l < spec_.depth; ++l ) {
      int const width = spec_.base_width << l;
      enc_.emplace_back( in_channels, width, film, layout );
      in_channels = width;
   }
   dec_.resize( static_cast< std::size_t >( spec_.depth - 1 ));
   for( int l = spec_.depth - 2; l >= 0; --l ) {
      int const width = spec_.base_width << l;
      int const below = spec_.base_width << ( l + 1 );
      dec_[ static_cast< std::size_t >( l ) ] = ConvBlock< T >( below + width, width, film, layout );
   }
   head_ = Conv2d< T >( spec_.base_width, 1, 1, layout );
   param_count_ = layout.size();
}

template< typename T >
void UNet< T >::Init( std::span< T > params, std::uint64_t seed ) const {
   Require( params.size() == param_count_, ErrorCode::kShape, "generator parameter count mismatch" );
   Rng rng( seed );
   for( auto const& b : enc_ ) {
      b.Init( params, rng );
   }
   for( auto const& b : dec_ ) {
      b.Init( params, rng );
   }
   head_.Init( params, rng );
}

template< typename T >
void UNet< T >::CheckInput( Tensor< T > const& x, std::span< T const > severity ) const {
   int const factor = 1 << ( spec_.depth - 1 );
   Require( x.c == 1 && x.h > 0 && x.w > 0 && x.h % factor == 0 && x.w % factor == 0, ErrorCode::kShape,
            "generator input must be N x 1 x H x W with H, W divisible by " + std::to_string( factor ));
   Require( static_cast< int >( severity.size()) == x.n, ErrorCode::kShape, "one severity per sample required" );
   for( T s : severity ) {
      Require( s >= T( 0 ) && s <= T( 1 ), ErrorCode::kRange, "severity must lie in [0, 1]" );
   }
}

template< typename T >
void UNet< T >::Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > severity,
                         Tensor< T >& y ) const {
   Trace trace;
   ForwardTrace( params, x, severity, trace );
   y = std::move( trace.out );
}

template< typename T >
void UNet< T >::ForwardTrace( std::span< T const > params, Tensor< T > const& x, std::span< T const > severity,
                              Trace& trace ) const {
   CheckInput( x, severity );
   Require( params.size() == param_count_, ErrorCode::kShape, "generator parameter count mismatch" );
   std::size_t const depth = static_cast< std::size_t >( spec_.depth );
   if( spec_.conditioning == Conditioning::kConcat ) {
      trace.input.Resize( x.n, 2, x.h, x.w );
      for( int i = 0; i < x.n; ++i ) {
         std::copy_n( x.sample( i ), x.plane(), trace.input.sample( i ));
         std::fill_n( trace.input.sample( i ) + x.plane(), x.plane(), severity[ static_cast< std::size_t >( i ) ] );
      }
   } else {
      trace.input = x;
   }
   trace.enc.resize( depth );
   trace.pooled.resize( depth - 1 );
   trace.upsampled.resize( depth - 1 );
   trace.concat.resize( depth - 1 );
   trace.dec.resize( depth - 1 );

   Tensor< T > const* cur = &trace.input;
   for( std::size_t l = 0; l < depth; ++l ) {
      enc_[ l ].Forward( params, *cur, severity, trace.enc[ l ] );
      if( l + 1 < depth ) {
         AvgPool2( trace.enc[ l ].out, trace.pooled[ l ] );
         cur = &trace.pooled[ l ];
      }
   }
   Tensor< T > const* below = &trace.enc[ depth - 1 ].out;
   for( std::size_t li = depth - 1; li-- > 0; ) {
      Upsample2( *below, trace.upsampled[ li ] );
      Concat( trace.upsampled[ li ], trace.enc[ li ].out, trace.concat[ li ] );
      dec_[ li ].Forward( params, trace.concat[ li ], severity, trace.dec[ li ] );
      below = &trace.dec[ li ].out;
   }
   head_.Forward( params, trace.dec[ 0 ].out, trace.out );
}

template< typename T >
void UNet< T >::Backward( std::span< T const > params, Trace const& trace, std::span< T const > severity,
                          Tensor< T > const& dy, std::span< T > grads ) const {
   Require( grads.size() == param_count_, ErrorCode::kShape, "generator gradient size mismatch" );
   Require( dy.SameShape( trace.out ), ErrorCode::kShape, "generator output gradient shape mismatch" );
   std::size_t const depth = static_cast< std::size_t >( spec_.depth );
   std::vector< Tensor< T >> dskip( depth - 1 );

   Tensor< T > dcur;
   head_.Backward( params, trace.dec[ 0 ].out, dy, grads, &dcur );
   for( std::size_t l = 0; l + 1 < depth; ++l ) {
      Tensor< T > dcat;
      dec_[ l ].Backward( params, trace.dec[ l ], severity, dcur, grads, &dcat );
      Tensor< T > dup;
      ConcatBackward( dcat, trace.upsampled[ l ].c, dup, dskip[ l ] );
      Upsample2Backward( dup, dcur );
   }
   // dcur now holds the gradient of the bottleneck output.
   for( std::size_t l = depth; l-- > 0; ) {
      if( l + 1 < depth ) {
         Tensor< T > dpool = std::move( dcur );
         AvgPool2Backward( dpool, dcur );
         for( std::size_t i = 0; i < dcur.v.size(); ++i ) {
            dcur.v[ i ] += dskip[ l ].v[ i ];
         }
      }
      Tensor< T > dx;
      enc_[ l ].Backward( params, trace.enc[ l ], severity, dcur, grads, l > 0 ? &dx : nullptr );
      dcur = std::move( dx );
   }
}

// --- RegressorNet -----------------------------------------------------------

template< typename T >
RegressorNet< T >::RegressorNet( RegSpec const& spec ) : spec_( spec ) {
   spec_.Validate();
   ParamLayout layout;
   int in_channels = 1;
   for( int l = 0; l < spec_.depth; ++l ) {
      int const width = spec_.base_width << l;
      enc_.emplace_back( in_channels, width, false, layout );
      in_channels = width;
   }
   dense1_ = Conv2d< T >( in_channels, in_channels, 1, layout );
   dense2_ = Conv2d< T >( in_channels, 1, 1, layout );
   param_count_ = layout.size();
}

template< typename T >
void RegressorNet< T >::Init( std::span< T > params, std::uint64_t seed ) const {
   Require( params.size() == param_count_, ErrorCode::kShape, "regressor parameter count mismatch" );
   Rng rng( seed );
   for( auto const& b : enc_ ) {
      b.Init( params, rng );
   }
   dense1_.Init( params, rng );
   dense2_.Init( params, rng );
}

template< typename T >
void RegressorNet< T >::Forward( std::span< T const > params, Tensor< T > const& x, Tensor< T >& y ) const {
   Trace trace;
   ForwardTrace( params, x, trace );
   y = std::move( trace.out );
}

template< typename T >
void RegressorNet< T >::ForwardTrace( std::span< T const > params, Tensor< T > const& x, Trace& trace ) const {
   int const factor = 1 << ( spec_.depth - 1 );
   Require( x.c == 1 && x.h > 0 && x.w > 0 && x.h % factor == 0 && x.w % factor == 0, ErrorCode::kShape,
            "regressor input must be N x 1 x H x W with H, W divisible by " + std::to_string( factor ));
   Require( params.size() == param_count_, ErrorCode::kShape, "regressor parameter count mismatch" );
   std::size_t const depth = enc_.size();
   trace.enc.resize( depth );
   trace.pooled.resize( depth - 1 );
   Tensor< T > const* cur = &x;
   for( std::size_t l = 0; l < depth; ++l ) {
      enc_[ l ].Forward( params, *cur, {}, trace.enc[ l ] );
      if( l + 1 < depth ) {
         AvgPool2( trace.enc[ l ].out, trace.pooled[ l ] );
         cur = &trace.pooled[ l ];
      }
   }
   GlobalAvgPool( trace.enc[ depth - 1 ].out, trace.gap );
   dense1_.Forward( params, trace.gap, trace.hidden );
   LeakyReluInPlace( trace.hidden );
   dense2_.Forward( params, trace.hidden, trace.logit );
   trace.out = trace.logit;
   for( T& v : trace.out.v ) {
      if( spec_.head == RegHead::kSigmoid ) {
         v = T( 1 ) / ( T( 1 ) + std::exp( -v ));
      } else {
         v = std::clamp( v, T( 0 ), T( 1 ));
      }
      // Bound must hold even for non-finite logits.
      if( !( v >= T( 0 ))) {
         v = T( 0 );
      }
      if( !( v <= T( 1 ))) {
         v = T( 1 );
      }
   }
}

template< typename T >
void RegressorNet< T >::Backward( std::span< T const > params, Trace const& trace, Tensor< T > const& dy,
                                  std::span< T > grads ) const {
   Require( grads.size() == param_count_, ErrorCode::kShape, "regressor gradient size mismatch" );
   Tensor< T > dlogit = dy;
   for( std::size_t i = 0; i < dlogit.v.size(); ++i ) {
      T const out = trace.out.v[ i ];
      if( spec_.head == RegHead::kSigmoid ) {
         dlogit.v[ i ] *= out * ( T( 1 ) - out );
      } else {
         T const z = trace.logit.v[ i ];
         if( !( z > T( 0 ) && z < T( 1 ))) {
            dlogit.v[ i ] = T( 0 );
         }
      }
   }
   Tensor< T > dhidden;
   dense2_.Backward( params, trace.hidden, dlogit, grads, &dhidden );
   LeakyReluBackwardInPlace( trace.hidden, dhidden );
   Tensor< T > dgap;
   dense1_.Backward( params, trace.gap, dhidden, grads, &dgap );
   std::size_t const depth = enc_.size();
   Tensor< T > dcur;
   GlobalAvgPoolBackward( dgap, trace.enc[ depth - 1 ].out.h, trace.enc[ depth - 1 ].out.w, dcur );
   for( std::size_t l = depth; l-- > 0; ) {
      Tensor< T > dx;
      enc_[ l ].Backward( params, trace.enc[ l ], {}, dcur, grads, l > 0 ? &dx : nullptr );
      if( l > 0 ) {
         AvgPool2Backward( dx, dcur );
      }
   }
}

template struct ConvBlock< float >;
template struct ConvBlock< double >;
template class UNet< float >;
template class UNet< double >;
template class RegressorNet< float >;
template class RegressorNet< double >;

} // namespace nn
} // namespace scsplit
