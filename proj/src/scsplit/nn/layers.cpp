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

#include "scsplit/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace scsplit::nn {

namespace {

template< typename T >
using RowMat = Eigen::Matrix< T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor >;
template< typename T >
using MatMap = Eigen::Map< RowMat< T >>;
template< typename T >
using ConstMatMap = Eigen::Map< RowMat< T > const >;

// Column matrix of shape (C*k*k) x (H*W) for one sample.
template< typename T >
void Im2Col( T const* x, int channels, int h, int w, int k, T* col ) {
   int const pad = k / 2;
   std::size_t const hw = static_cast< std::size_t >( h ) * w;
   for( int ci = 0; ci < channels; ++ci ) {
      T const* plane = x + hw * ci;
      for( int ky = 0; ky < k; ++ky ) {
         for( int kx = 0; kx < k; ++kx ) {
            T* row = col + hw * (( static_cast< std::size_t >( ci ) * k + ky ) * k + kx );
            int const dx = kx - pad;
            int const x_lo = std::max( 0, -dx );
            int const x_hi = std::min( w, w - dx );
            for( int y = 0; y < h; ++y ) {
               T* out = row + static_cast< std::size_t >( y ) * w;
               int const sy = y + ky - pad;
               if( sy < 0 || sy >= h || x_lo >= x_hi ) {
                  std::fill_n( out, w, T( 0 ));
                  continue;
               }
               T const* src = plane + static_cast< std::size_t >( sy ) * w;
               std::fill( out, out + x_lo, T( 0 ));
               std::copy( src + x_lo + dx, src + x_hi + dx, out + x_lo );
               std::fill( out + x_hi, out + w, T( 0 ));
            }
         }
      }
   }
}

template< typename T >
void Col2Im( T const* col, int channels, int h, int w, int k, T* x ) {
   int const pad = k / 2;
   std::size_t const hw = static_cast< std::size_t >( h ) * w;
   std::fill_n( x, hw * channels, T( 0 ));
   for( int ci = 0; ci < channels; ++ci ) {
      T* plane = x + hw * ci;
      for( int ky = 0; ky < k; ++ky ) {
         for( int kx = 0; kx < k; ++kx ) {
            T const* row = col + hw * (( static_cast< std::size_t >( ci ) * k + ky ) * k + kx );
            int const dx = kx - pad;
            int const x_lo = std::max( 0, -dx );
            int const x_hi = std::min( w, w - dx );
            for( int y = 0; y < h; ++y ) {
               int const sy = y + ky - pad;
               if( sy < 0 || sy >= h ) {
                  continue;
               }
               T const* in = row + static_cast< std::size_t >( y ) * w;
               T* dst = plane + static_cast< std::size_t >( sy ) * w;
               for( int xx = x_lo; xx < x_hi; ++xx ) {
                  dst[ xx + dx ] += in[ xx ];
               }
            }
         }
      }
   }
}

template< typename T >
std::vector< T >& Scratch( int slot ) {
   thread_local std::vector< T > buffers[ 2 ];
   return buffers[ slot ];
}

} // namespace

template< typename T >
Conv2d< T >::Conv2d( int in_channels, int out_channels, int kernel, ParamLayout& layout )
   : in_( in_channels ), out_( out_channels ), k_( kernel ) {
   Require( in_channels > 0 && out_channels > 0 && kernel > 0 && kernel % 2 == 1, ErrorCode::kConfig,
            "invalid convolution geometry" );
   weight_offset_ = layout.Allocate( static_cast< std::size_t >( out_ ) * in_ * k_ * k_ );
   bias_offset_ = layout.Allocate( static_cast< std::size_t >( out_ ));
}

template< typename T >
void Conv2d< T >::Init( std::span< T > params, Rng& rng ) const {
   double const fan_in = static_cast< double >( in_ ) * k_ * k_;
   std::normal_distribution< double > normal( 0.0, std::sqrt( 2.0 / fan_in ));
   std::size_t const count = static_cast< std::size_t >( out_ ) * in_ * k_ * k_;
   for( std::size_t i = 0; i < count; ++i ) {
      params[ weight_offset_ + i ] = static_cast< T >( normal( rng ));
   }
   std::fill_n( params.begin() + static_cast< std::ptrdiff_t >( bias_offset_ ), out_, T( 0 ));
}

template< typename T >
void Conv2d< T >::Forward( std::span< T const > params, Tensor< T > const& x, Tensor< T >& y ) const {
   Require( x.c == in_, ErrorCode::kShape, "convolution input channel mismatch" );
   y.Resize( x.n, out_, x.h, x.w );
   int const kk = in_ * k_ * k_;
   int const hw = x.h * x.w;
   ConstMatMap< T > weights( params.data() + weight_offset_, out_, kk );
   Eigen::Map< Eigen::Matrix< T, Eigen::Dynamic, 1 > const > bias( params.data() + bias_offset_, out_ );
   auto& col = Scratch< T >( 0 );
   for( int i = 0; i < x.n; ++i ) {
      MatMap< T > out( y.sample( i ), out_, hw );
      if( k_ == 1 ) {
         out.noalias() = weights * ConstMatMap< T >( x.sample( i ), kk, hw );
      } else {
         col.resize( static_cast< std::size_t >( kk ) * hw );
         Im2Col( x.sample( i ), in_, x.h, x.w, k_, col.data());
         out.noalias() = weights * ConstMatMap< T >( col.data(), kk, hw );
      }
      out.colwise() += bias;
   }
}

template< typename T >
void Conv2d< T >::Backward( std::span< T const > params, Tensor< T > const& x, Tensor< T > const& dy,
                            std::span< T > grads, Tensor< T >* dx ) const {
   int const kk = in_ * k_ * k_;
   int const hw = x.h * x.w;
   ConstMatMap< T > weights( params.data() + weight_offset_, out_, kk );
   MatMap< T > dweights( grads.data() + weight_offset_, out_, kk );
   Eigen::Map< Eigen::Matrix< T, Eigen::Dynamic, 1 >> dbias( grads.data() + bias_offset_, out_ );
   if( dx ) {
      dx->Resize( x.n, x.c, x.h, x.w );
   }
   auto& col = Scratch< T >( 0 );
   auto& dcol = Scratch< T >( 1 );
   for( int i = 0; i < x.n; ++i ) {
      ConstMatMap< T > g( dy.sample( i ), out_, hw );
      dbias += g.rowwise().sum();
      if( k_ == 1 ) {
         dweights.noalias() += g * ConstMatMap< T >( x.sample( i ), kk, hw ).transpose();
         if( dx ) {
            MatMap< T >( dx->sample( i ), kk, hw ).noalias() = weights.transpose() * g;
         }
         continue;
      }
      col.resize( static_cast< std::size_t >( kk ) * hw );
      Im2Col( x.sample( i ), in_, x.h, x.w, k_, col.data());
      dweights.noalias() += g * ConstMatMap< T >( col.data(), kk, hw ).transpose();
      if( dx ) {
         dcol.resize( static_cast< std::size_t >( kk ) * hw );
         MatMap< T >( dcol.data(), kk, hw ).noalias() = weights.transpose() * g;
         Col2Im( dcol.data(), in_, x.h, x.w, k_, dx->sample( i ));
      }
   }
}

template< typename T >
Film< T >::Film( int channels, ParamLayout& layout ) : channels_( channels ) {
   offset_ = layout.Allocate( static_cast< std::size_t >( channels ) * 4 );
}

template< typename T >
void Film< T >::Init( std::span< T > params ) const {
   std::fill_n( params.begin() + static_cast< std::ptrdiff_t >( offset_ ), channels_ * 4, T( 0 ));
}

template< typename T >
void Film< T >::Forward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s,
                         Tensor< T >& y ) const {
   Require( x.c == channels_ && static_cast< int >( s.size()) == x.n, ErrorCode::kShape, "FiLM shape mismatch" );
   y.Resize( x.n, x.c, x.h, x.w );
   T const* a = params.data() + offset_;
   T const* b = a + channels_;
   T const* c = b + channels_;
   T const* d = c + channels_;
   std::size_t const plane = x.plane();
   for( int i = 0; i < x.n; ++i ) {
      for( int ch = 0; ch < channels_; ++ch ) {
         T const scale = T( 1 ) + a[ ch ] * s[ i ] + b[ ch ];
         T const shift = c[ ch ] * s[ i ] + d[ ch ];
         T const* in = x.sample( i ) + plane * ch;
         T* out = y.sample( i ) + plane * ch;
         for( std::size_t p = 0; p < plane; ++p ) {
            out[ p ] = in[ p ] * scale + shift;
         }
      }
   }
}

template< typename T >
void Film< T >::Backward( std::span< T const > params, Tensor< T > const& x, std::span< T const > s,
                          Tensor< T > const& dy, std::span< T > grads, Tensor< T >& dx ) const {
   dx.Resize( x.n, x.c, x.h, x.w );
   T const* a = params.data() + offset_;
   T const* b = a + channels_;
   T* ga = grads.data() + offset_;
   T* gb = ga + channels_;
   T* gc = gb + channels_;
   T* gd = gc + channels_;
   std::size_t const plane = x.plane();
   for( int i = 0; i < x.n; ++i ) {
      for( int ch = 0; ch < channels_; ++ch ) {
         T const scale = T( 1 ) + a[ ch ] * s[ i ] + b[ ch ];
         T const* in = x.sample( i ) + plane * ch;
         T const* g = dy.sample( i ) + plane * ch;
         T* out = dx.sample( i ) + plane * ch;
         T gx = 0;
         T gsum = 0;
         for( std::size_t p = 0; p < plane; ++p ) {
            out[ p ] = g[ p ] * scale;
            gx += g[ p ] * in[ p ];
            gsum += g[ p ];
         }
         ga[ ch ] += gx * s[ i ];
         gb[ ch ] += gx;
         gc[ ch ] += gsum * s[ i ];
         gd[ ch ] += gsum;
      }
   }
}

template< typename T >
void LeakyReluInPlace( Tensor< T >& x ) {
   T const slope = static_cast< T >( kLeakySlope );
   for( T& v : x.v ) {
      v = v > T( 0 ) ? v : v * slope;
   }
}

template< typename T >
void LeakyReluBackwardInPlace( Tensor< T > const& y, Tensor< T >& dy ) {
   T const slope = static_cast< T >( kLeakySlope );
   for( std::size_t i = 0; i < dy.v.size(); ++i ) {
      if( !( y.v[ i ] > T( 0 ))) {
         dy.v[ i ] *= slope;
      }
   }
}

template< typename T >
void AvgPool2( Tensor< T > const& x, Tensor< T >& y ) {
   Require( x.h % 2 == 0 && x.w % 2 == 0, ErrorCode::kShape, "pooling needs even spatial size" );
   y.Resize( x.n, x.c, x.h / 2, x.w / 2 );
   for( int i = 0; i < x.n * x.c; ++i ) {
      T const* in = x.v.data() + x.plane() * i;
      T* out = y.v.data() + y.plane() * i;
      for( int r = 0; r < y.h; ++r ) {
         T const* r0 = in + static_cast< std::size_t >( 2 * r ) * x.w;
         T const* r1 = r0 + x.w;
         for( int c = 0; c < y.w; ++c ) {
            out[ static_cast< std::size_t >( r ) * y.w + c ] =
               ( r0[ 2 * c ] + r0[ 2 * c + 1 ] + r1[ 2 * c ] + r1[ 2 * c + 1 ] ) * T( 0.25 );
         }
      }
   }
}

template< typename T >
void AvgPool2Backward( Tensor< T > const& dy, Tensor< T >& dx ) {
   dx.Resize( dy.n, dy.c, dy.h * 2, dy.w * 2 );
   for( int i = 0; i < dy.n * dy.c; ++i ) {
      T const* g = dy.v.data() + dy.plane() * i;
      T* out = dx.v.data() + dx.plane() * i;
      for( int r = 0; r < dx.h; ++r ) {
         for( int c = 0; c < dx.w; ++c ) {
            out[ static_cast< std::size_t >( r ) * dx.w + c ] = g[ static_cast< std::size_t >( r / 2 ) * dy.w + c / 2 ] * T( 0.25 );
         }
      }
   }
}

template< typename T >
void Upsample2( Tensor< T > const& x, Tensor< T >& y ) {
   y.Resize( x.n, x.c, x.h * 2, x.w * 2 );
   for( int i = 0; i < x.n * x.c; ++i ) {
      T const* in = x.v.data() + x.plane() * i;
      T* out = y.v.data() + y.plane() * i;
      for( int r = 0; r < y.h; ++r ) {
         for( int c = 0; c < y.w; ++c ) {
            out[ static_cast< std::size_t >( r ) * y.w + c ] = in[ static_cast< std::size_t >( r / 2 ) * x.w + c / 2 ];
         }
      }
   }
}

template< typename T >
void Upsample2Backward( Tensor< T > const& dy, Tensor< T >& dx ) {
   dx.Resize( dy.n, dy.c, dy.h / 2, dy.w / 2 );
   for( int i = 0; i < dy.n * dy.c; ++i ) {
      T const* g = dy.v.data() + dy.plane() * i;
      T* out = dx.v.data() + dx.plane() * i;
      for( int r = 0; r < dy.h; ++r ) {
         for( int c = 0; c < dy.w; ++c ) {
            out[ static_cast< std::size_t >( r / 2 ) * dx.w + c / 2 ] += g[ static_cast< std::size_t >( r ) * dy.w + c ];
         }
      }
   }
}

template< typename T >
void Concat( Tensor< T > const& a, Tensor< T > const& b, Tensor< T >& y ) {
   Require( a.n == b.n && a.h == b.h && a.w == b.w, ErrorCode::kShape, "concat shape mismatch" );
   y.Resize( a.n, a.c + b.c, a.h, a.w );
   for( int i = 0; i < a.n; ++i ) {
      std::copy_n( a.sample( i ), a.sample_size(), y.sample( i ));
      std::copy_n( b.sample( i ), b.sample_size(), y.sample( i ) + a.sample_size());
   }
}

template< typename T >
void ConcatBackward( Tensor< T > const& dy, int a_channels, Tensor< T >& da, Tensor< T >& db ) {
   da.Resize( dy.n, a_channels, dy.h, dy.w );
   db.Resize( dy.n, dy.c - a_channels, dy.h, dy.w );
   for( int i = 0; i < dy.n; ++i ) {
      std::copy_n( dy.sample( i ), da.sample_size(), da.sample( i ));
      std::copy_n( dy.sample( i ) + da.sample_size(), db.sample_size(), db.sample( i ));
   }
}

template< typename T >
void GlobalAvgPool( Tensor< T > const& x, Tensor< T >& y ) {
   y.Resize( x.n, x.c, 1, 1 );
   std::size_t const plane = x.plane();
   for( int i = 0; i < x.n * x.c; ++i ) {
      T const* in = x.v.data() + plane * i;
      T sum = 0;
      for( std::size_t p = 0; p < plane; ++p ) {
         sum += in[ p ];
      }
      y.v[ i ] = sum / static_cast< T >( plane );
   }
}

template< typename T >
void GlobalAvgPoolBackward( Tensor< T > const& dy, int h, int w, Tensor< T >& dx ) {
   dx.Resize( dy.n, dy.c, h, w );
   std::size_t const plane = dx.plane();
   for( int i = 0; i < dy.n * dy.c; ++i ) {
      std::fill_n( dx.v.data() + plane * i, plane, dy.v[ i ] / static_cast< T >( plane ));
   }
}

#define SCSPLIT_INSTANTIATE_LAYERS( T ) \
   template class Conv2d< T >; \
   template class Film< T >; \
   template void LeakyReluInPlace< T >( Tensor< T >& ); \
   template void LeakyReluBackwardInPlace< T >( Tensor< T > const&, Tensor< T >& ); \
   template void AvgPool2< T >( Tensor< T > const&, Tensor< T >& ); \
   template void AvgPool2Backward< T >( Tensor< T > const&, Tensor< T >& ); \
   template void Upsample2< T >( Tensor< T > const&, Tensor< T >& ); \
   template void Upsample2Backward< T >( Tensor< T > const&, Tensor< T >& ); \
   template void Concat< T >( Tensor< T > const&, Tensor< T > const&, Tensor< T >& ); \
   template void ConcatBackward< T >( Tensor< T > const&, int, Tensor< T >&, Tensor< T >& ); \
   template void GlobalAvgPool< T >( Tensor< T > const&, Tensor< T >& ); \
   template void GlobalAvgPoolBackward< T >( Tensor< T > const&, int, int, Tensor< T >& );

SCSPLIT_INSTANTIATE_LAYERS( float )
SCSPLIT_INSTANTIATE_LAYERS( double )

#undef SCSPLIT_INSTANTIATE_LAYERS

} // namespace scsplit::nn
