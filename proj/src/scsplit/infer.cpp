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

#include "scsplit/infer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scsplit {

// --- Tiling -------------------------------------------------------------------

void TileSpec::Validate( int height, int width ) const {
   Require( tile >= 1, ErrorCode::kConfig, "tile size must be >= 1" );
   Require( overlap >= 0 && overlap < tile, ErrorCode::kConfig, "tile overlap must be in [0, tile)" );
   Require( tile <= height && tile <= width, ErrorCode::kShape,
            "tile " + std::to_string( tile ) + " is larger than the " + std::to_string( height ) + "x" +
            std::to_string( width ) + " frame" );
}

std::vector< int > TileStarts( int length, int tile, int stride ) {
   Require( tile >= 1 && tile <= length && stride >= 1, ErrorCode::kShape, "invalid tile geometry" );
   std::vector< int > starts;
   int pos = 0;
   while( pos + tile < length ) {
      starts.push_back( pos );
      pos += stride;
   }
   starts.push_back( length - tile );
   return starts;
}

std::vector< TilePos > TileGrid( int height, int width, TileSpec const& spec ) {
   spec.Validate( height, width );
   std::vector< TilePos > grid;
   for( int y : TileStarts( height, spec.tile, spec.stride())) {
      for( int x : TileStarts( width, spec.tile, spec.stride())) {
         grid.push_back( { y, x } );
      }
   }
   return grid;
}

std::vector< Image > TileFrame( Image const& frame, TileSpec const& spec ) {
   std::vector< Image > tiles;
   for( TilePos const& p : TileGrid( frame.height(), frame.width(), spec )) {
      tiles.push_back( Crop( frame, p.y, p.x, spec.tile, spec.tile ));
   }
   return tiles;
}

namespace {

// Integer ramp weights along one axis of a tile: rising from 1 on edges that
// face a neighbouring tile, capped at overlap + 1, flat on frame borders.
std::vector< double > AxisWeights( int start, int tile, int length, int overlap ) {
   std::vector< double > w( static_cast< std::size_t >( tile ));
   int const cap = overlap + 1;
   for( int r = 0; r < tile; ++r ) {
      int v = cap;
      if( start > 0 ) {
         v = std::min( v, r + 1 );
      }
      if( start + tile < length ) {
         v = std::min( v, tile - r );
      }
      w[ static_cast< std::size_t >( r ) ] = v;
   }
   return w;
}

} // namespace

Image StitchTiles( std::span< Image const > tiles, int height, int width, TileSpec const& spec ) {
   std::vector< TilePos > const grid = TileGrid( height, width, spec );
   Require( tiles.size() == grid.size(), ErrorCode::kShape,
            "expected " + std::to_string( grid.size()) + " tiles, got " + std::to_string( tiles.size()));
   std::vector< double > acc( static_cast< std::size_t >( height ) * width, 0.0 );
   std::vector< double > wsum( acc.size(), 0.0 );
   for( std::size_t k = 0; k < grid.size(); ++k ) {
      Image const& t = tiles[ k ];
      Require( t.height() == spec.tile && t.width() == spec.tile, ErrorCode::kShape, "tile has the wrong size" );
      auto const wy = AxisWeights( grid[ k ].y, spec.tile, height, spec.overlap );
      auto const wx = AxisWeights( grid[ k ].x, spec.tile, width, spec.overlap );
      for( int r = 0; r < spec.tile; ++r ) {
         for( int c = 0; c < spec.tile; ++c ) {
            double const w = wy[ static_cast< std::size_t >( r ) ] * wx[ static_cast< std::size_t >( c ) ];
            std::size_t const idx = static_cast< std::size_t >( grid[ k ].y + r ) * width + ( grid[ k ].x + c );
            acc[ idx ] += w * t( r, c );
            wsum[ idx ] += w;
         }
      }
   }
   Image out( height, width );
   for( std::size_t i = 0; i < acc.size(); ++i ) {
      out.data()[ i ] = static_cast< float >( acc[ i ] / wsum[ i ] );
   }
   return out;
}

Image CoverageMap( int height, int width, TileSpec const& spec ) {
   Image cover( height, width );
   for( TilePos const& p : TileGrid( height, width, spec )) {
      for( int r = 0; r < spec.tile; ++r ) {
         for( int c = 0; c < spec.tile; ++c ) {
            cover( p.y + r, p.x + c ) += 1.0f;
         }
      }
   }
   return cover;
}

// --- Configuration ------------------------------------------------------------

std::string ToString( Aggregation a ) {
   switch( a ) {
      case Aggregation::kMean: return "mean";
      case Aggregation::kMedian: return "median";
      case Aggregation::kMode: return "mode";
      case Aggregation::kWgtSum: return "wgt_sum";
      case Aggregation::kWgtProd: return "wgt_prod";
      case Aggregation::kFixed: return "fixed";
      case Aggregation::kPerFrame: return "noagg";
   }
   return "mean";
}

namespace {

std::string FormatT( double t ) {
   char buf[ 32 ];
   std::snprintf( buf, sizeof( buf ), "%g", t );
   return buf;
}

} // namespace

std::string InferenceConfig::VariantName() const {
   switch( aggregation ) {
      case Aggregation::kMean: return "scsplit";
      case Aggregation::kFixed: return "fixed:" + FormatT( fixed_t );
      default: return ToString( aggregation );
   }
}

InferenceConfig InferenceConfig::WithVariant( std::string const& variant ) const {
   InferenceConfig c = *this;
   if( variant == "scsplit" || variant == "mean" ) {
      c.aggregation = Aggregation::kMean;
   } else if( variant == "median" ) {
      c.aggregation = Aggregation::kMedian;
   } else if( variant == "mode" ) {
      c.aggregation = Aggregation::kMode;
   } else if( variant == "wgt_sum" ) {
      c.aggregation = Aggregation::kWgtSum;
   } else if( variant == "wgt_prod" ) {
      c.aggregation = Aggregation::kWgtProd;
   } else if( variant == "noagg" || variant == "-agg" ) {
      c.aggregation = Aggregation::kPerFrame;
   } else if( variant.rfind( "fixed:", 0 ) == 0 ) {
      c.aggregation = Aggregation::kFixed;
      std::string const num = variant.substr( 6 );
      char* end = nullptr;
      c.fixed_t = std::strtod( num.c_str(), &end );
      Require( !num.empty() && end && *end == '\0' && c.fixed_t >= 0.0 && c.fixed_t <= 1.0, ErrorCode::kConfig,
               "variant '" + variant + "': expected fixed:<t> with t in [0, 1]" );
   } else {
      Fail( ErrorCode::kConfig, "unknown variant '" + variant + "'" );
   }
   return c;
}

void InferenceConfig::Check( Problems& p ) const {
   p.Check( mmse_count >= 1, "infer.mmse_count must be >= 1" );
   p.Check( steps >= 1, "infer.steps must be >= 1" );
   p.Check( fixed_t >= 0.0 && fixed_t <= 1.0, "infer.fixed_t must lie in [0, 1]" );
   p.Check( tile.tile >= 1, "infer.tile.size must be >= 1" );
   p.Check( tile.overlap >= 0 && tile.overlap < tile.tile, "infer.tile.overlap must be in [0, tile size)" );
   p.Capture( [ & ] { noise.Validate(); } );
}

void InferenceConfig::Validate() const {
   Problems p;
   Check( p );
   p.ThrowIfAny( "inference config" );
}

Json InferenceConfig::ToJson() const {
   return Json{{ "aggregation", VariantName() }, { "mmse_count", mmse_count }, { "steps", steps },
               { "tile", {{ "size", tile.tile }, { "overlap", tile.overlap }}},
               { "noise", {{ "epsilon", noise.epsilon }, { "enabled", noise.enabled }}}, { "seed", seed }};
}

InferenceConfig InferenceConfig::FromJson( ConfigReader r ) {
   InferenceConfig c;
   Problems& p = r.problems();
   std::string const variant = r.Get< std::string >( "aggregation", "scsplit" );
   p.Capture( [ & ] { c = c.WithVariant( variant ); } );
   c.mmse_count = r.Get( "mmse_count", c.mmse_count );
   c.steps = r.Get( "steps", c.steps );
   ConfigReader tile = r.Child( "tile" );
   c.tile.tile = tile.Get( "size", c.tile.tile );
   c.tile.overlap = tile.Get( "overlap", c.tile.overlap );
   ConfigReader noise = r.Child( "noise" );
   c.noise.epsilon = noise.Get( "epsilon", c.noise.epsilon );
   c.noise.enabled = noise.Get( "enabled", c.noise.enabled );
   c.seed = r.Get( "seed", c.seed );
   c.Check( p );
   return c;
}

InferenceConfig InferenceConfig::FromJson( Json const& j ) {
   Problems p;
   InferenceConfig c = FromJson( ConfigReader( j, "infer", p ));
   p.ThrowIfAny( "inference config" );
   return c;
}

// --- Acquisitions -------------------------------------------------------------

void AcquisitionInput::Validate() const {
   Require( !frames.empty(), ErrorCode::kIngest, "acquisition '" + name + "' has no frames" );
   for( std::size_t i = 0; i < frames.size(); ++i ) {
      Require( !frames[ i ].empty() && frames[ i ].SameShape( frames.front()), ErrorCode::kIngest,
               "acquisition '" + name + "': frame " + std::to_string( i ) + " has a different shape" );
      for( float v : frames[ i ].pixels()) {
         Require( std::isfinite( v ), ErrorCode::kIngest,
                  "acquisition '" + name + "': frame " + std::to_string( i ) + " has non-finite pixels" );
      }
   }
}

namespace {

MeanStd PooledMeanStd( std::span< Image const > frames ) {
   double sum = 0.0;
   std::size_t n = 0;
   for( Image const& f : frames ) {
      for( float v : f.pixels()) {
         sum += v;
      }
      n += f.size();
   }
   double const mean = sum / static_cast< double >( n );
   double ss = 0.0;
   for( Image const& f : frames ) {
      for( float v : f.pixels()) {
         ss += ( v - mean ) * ( v - mean );
      }
   }
   return { mean, std::sqrt( ss / static_cast< double >( n )) };
}

std::vector< Image > Standardize( std::span< Image const > frames, MeanStd const& ms ) {
   std::vector< Image > out;
   for( Image const& f : frames ) {
      Image g( f.height(), f.width());
      for( std::size_t i = 0; i < f.size(); ++i ) {
         g.data()[ i ] = static_cast< float >(( f.data()[ i ] - ms.mean ) / ms.std );
      }
      out.push_back( std::move( g ));
   }
   return out;
}

} // namespace

NormalizedAcquisition NormalizeAcquisition( AcquisitionInput const& acq ) {
   acq.Validate();
   MeanStd const ms = PooledMeanStd( acq.frames );
   Require( ms.std > 0.0, ErrorCode::kIngest, "acquisition '" + acq.name + "' is constant (zero std)" );
   return { Standardize( acq.frames, ms ), ms.mean, ms.std };
}

namespace {

constexpr int kBatch = 64;

void CopyInto( Image const& img, nn::Tensor< float >& t, int n ) {
   std::copy( img.data(), img.data() + img.size(), t.sample( n ));
}

} // namespace

PatchEstimates EstimateT( std::span< Image const > frames, Regressor const& reg, TileSpec const& tile ) {
   PatchEstimates est;
   std::vector< Image > tiles;
   for( std::size_t f = 0; f < frames.size(); ++f ) {
      for( TilePos const& p : TileGrid( frames[ f ].height(), frames[ f ].width(), tile )) {
         tiles.push_back( Crop( frames[ f ], p.y, p.x, tile.tile, tile.tile ));
         est.frame.push_back( f );
         est.pos.push_back( p );
      }
   }
   nn::Tensor< float > x;
   for( std::size_t b = 0; b < tiles.size(); b += kBatch ) {
      std::size_t const e = std::min( tiles.size(), b + kBatch );
      x.Resize( static_cast< int >( e - b ), 1, tile.tile, tile.tile );
      for( std::size_t i = b; i < e; ++i ) {
         CopyInto( tiles[ i ], x, static_cast< int >( i - b ));
      }
      for( double t : reg.Forward( x )) {
         est.t.push_back( t );
      }
   }
   return est;
}

double Aggregate( std::span< double const > t, Aggregation method ) {
   Require( !t.empty(), ErrorCode::kRange, "cannot aggregate an empty set of estimates" );
   switch( method ) {
      case Aggregation::kMean:
      case Aggregation::kPerFrame: {
         double sum = 0.0;
         for( double v : t ) {
            sum += v;
         }
         return sum / static_cast< double >( t.size());
      }
      case Aggregation::kMedian: {
         std::vector< double > s( t.begin(), t.end());
         std::sort( s.begin(), s.end());
         std::size_t const n = s.size();
         return n % 2 == 1 ? s[ n / 2 ] : 0.5 * ( s[ n / 2 - 1 ] + s[ n / 2 ] );
      }
      case Aggregation::kMode: {
         std::array< int, 100 > hist{};
         for( double v : t ) {
            int const bin = std::clamp( static_cast< int >( std::floor( v * 100.0 )), 0, 99 );
            ++hist[ static_cast< std::size_t >( bin ) ];
         }
         auto const best = std::max_element( hist.begin(), hist.end()) - hist.begin();
         return ( static_cast< double >( best ) + 0.5 ) / 100.0;
      }
      default:
         Fail( ErrorCode::kConfig, "aggregation '" + ToString( method ) + "' needs rough channel estimates" );
   }
}

std::vector< Image > TMaps( PatchEstimates const& est, std::size_t n_frames, int height, int width, TileSpec const& tile ) {
   std::vector< TilePos > const grid = TileGrid( height, width, tile );
   Require( est.t.size() == n_frames * grid.size(), ErrorCode::kShape, "estimate count does not match the tiling" );
   std::vector< Image > maps;
   for( std::size_t f = 0; f < n_frames; ++f ) {
      std::vector< Image > tiles;
      for( std::size_t k = 0; k < grid.size(); ++k ) {
         tiles.emplace_back( tile.tile, tile.tile, static_cast< float >( est.t[ f * grid.size() + k ] ));
      }
      maps.push_back( StitchTiles( tiles, height, width, tile ));
   }
   return maps;
}

double AggregateWeighted( std::span< Image const > t_maps, std::span< Image const > c0_rough,
                          std::span< Image const > c1_rough, bool product, bool* fell_back ) {
   Require( !t_maps.empty() && t_maps.size() == c0_rough.size() && t_maps.size() == c1_rough.size(),
            ErrorCode::kShape, "weighted aggregation needs one rough estimate per frame and channel" );
   auto range = []( std::span< Image const > frames ) {
      float lo = MinValue( frames.front());
      float hi = MaxValue( frames.front());
      for( Image const& f : frames ) {
         lo = std::min( lo, MinValue( f ));
         hi = std::max( hi, MaxValue( f ));
      }
      return std::pair< double, double >( lo, hi );
   };
   auto const [ lo0, hi0 ] = range( c0_rough );
   auto const [ lo1, hi1 ] = range( c1_rough );
   auto scale = []( double v, double lo, double hi ) { return hi > lo ? ( v - lo ) / ( hi - lo ) : 0.0; };
   double num = 0.0;
   double den = 0.0;
   double plain = 0.0;
   std::size_t count = 0;
   for( std::size_t f = 0; f < t_maps.size(); ++f ) {
      RequireSameShape( t_maps[ f ], c0_rough[ f ], "weighted aggregation" );
      RequireSameShape( t_maps[ f ], c1_rough[ f ], "weighted aggregation" );
      for( std::size_t i = 0; i < t_maps[ f ].size(); ++i ) {
         double const a = scale( c0_rough[ f ].data()[ i ], lo0, hi0 );
         double const b = scale( c1_rough[ f ].data()[ i ], lo1, hi1 );
         double const w = product ? a * b : a + b;
         double const t = t_maps[ f ].data()[ i ];
         num += w * t;
         den += w;
         plain += t;
         ++count;
      }
   }
   if( fell_back ) {
      *fell_back = !( den > 0.0 );
   }
   return den > 0.0 ? num / den : plain / static_cast< double >( count );
}

std::vector< double > SeveritySchedule( double s0, int steps ) {
   Require( steps >= 1, ErrorCode::kConfig, "steps must be >= 1" );
   std::vector< double > s;
   for( int j = 0; j < steps; ++j ) {
      s.push_back( s0 * static_cast< double >( steps - j ) / static_cast< double >( steps ));
   }
   return s;
}

Json SummarizeEstimates( std::span< double const > t ) {
   if( t.empty()) {
      return Json{{ "count", 0 }};
   }
   double const mean = Aggregate( t, Aggregation::kMean );
   double ss = 0.0;
   for( double v : t ) {
      ss += ( v - mean ) * ( v - mean );
   }
   return Json{{ "count", t.size() }, { "mean", mean }, { "std", std::sqrt( ss / static_cast< double >( t.size())) },
               { "min", *std::min_element( t.begin(), t.end()) }, { "max", *std::max_element( t.begin(), t.end()) },
               { "median", Aggregate( t, Aggregation::kMedian ) }};
}

// --- Unmixing -----------------------------------------------------------------

namespace {

/// One MMSE-averaged generator pass over every frame, tiled and stitched.
std::vector< Image > ForwardFrames( std::span< Image const > frames, Generator const& gen, std::vector< double > const& severity,
                                    InferenceConfig const& cfg, int channel, int step ) {
   TileSpec const& ts = cfg.tile;
   std::vector< Image > out;
   for( std::size_t f = 0; f < frames.size(); ++f ) {
      int const h = frames[ f ].height();
      int const w = frames[ f ].width();
      std::vector< Image > const tiles = TileFrame( frames[ f ], ts );
      MixingRatio const sev( severity[ f ] );
      MixingRatio const t = ChannelSeverity( channel, sev );  // the mixing ratio the severity stands for
      bool const noisy = cfg.noise.enabled && cfg.noise.epsilon > 0.0 && t.value() > 0.0;
      int const passes = noisy ? cfg.mmse_count : 1;
      Rng rng = MakeRng( cfg.seed, ( static_cast< std::uint64_t >( channel ) << 40 ) |
                                   ( static_cast< std::uint64_t >( step ) << 24 ) | f );

      std::vector< Image > inputs;
      for( int m = 0; m < passes; ++m ) {
         for( Image const& tile : tiles ) {
            inputs.push_back( noisy ? Perturb( tile, t, cfg.noise, rng ) : tile );
         }
      }
      std::size_t const plane = static_cast< std::size_t >( ts.tile ) * ts.tile;
      std::vector< double > acc( tiles.size() * plane, 0.0 );
      nn::Tensor< float > x, y;
      for( std::size_t b = 0; b < inputs.size(); b += kBatch ) {
         std::size_t const e = std::min( inputs.size(), b + kBatch );
         x.Resize( static_cast< int >( e - b ), 1, ts.tile, ts.tile );
         for( std::size_t i = b; i < e; ++i ) {
            CopyInto( inputs[ i ], x, static_cast< int >( i - b ));
         }
         std::vector< float > const s( e - b, static_cast< float >( sev.value()));
         gen.Forward( x, s, y );
         for( std::size_t i = b; i < e; ++i ) {
            std::size_t const k = i % tiles.size();
            float const* src = y.sample( static_cast< int >( i - b ));
            for( std::size_t p = 0; p < plane; ++p ) {
               acc[ k * plane + p ] += src[ p ];
            }
         }
      }
      std::vector< Image > averaged;
      for( std::size_t k = 0; k < tiles.size(); ++k ) {
         Image a( ts.tile, ts.tile );
         for( std::size_t p = 0; p < plane; ++p ) {
            a.data()[ p ] = static_cast< float >( acc[ k * plane + p ] / passes );
         }
         averaged.push_back( std::move( a ));
      }
      out.push_back( StitchTiles( averaged, h, w, ts ));
   }
   return out;
}

/// Normalized estimate of one channel, following the decreasing severity schedule.
std::vector< Image > RunChannel( std::vector< Image > x, Generator const& gen, std::vector< double > const& s0,
                                 InferenceConfig const& cfg, int channel,
                                 std::function< void( IterationRecord const& ) > const& observer ) {
   int const k = cfg.steps;
   std::vector< Image > chat;
   for( int j = 0; j < k; ++j ) {
      if( j > 0 ) {
         MeanStd const ms = PooledMeanStd( x );
         Require( ms.std > 0.0, ErrorCode::kIngest, "intermediate image became constant" );
         x = Standardize( x, ms );
      }
      std::vector< double > sev;
      for( double s : s0 ) {
         sev.push_back( s * static_cast< double >( k - j ) / static_cast< double >( k ));
      }
      if( observer ) {
         MeanStd const ms = PooledMeanStd( x );
         observer( IterationRecord{ channel, j, sev, ms.mean, ms.std * ms.std } );
      }
      chat = ForwardFrames( x, gen, sev, cfg, channel, j );
      if( j + 1 < k ) {
         for( std::size_t f = 0; f < x.size(); ++f ) {
            double const delta = s0[ f ] / k;
            double const a = sev[ f ] > 0.0 ? delta / sev[ f ] : 0.0;
            for( std::size_t i = 0; i < x[ f ].size(); ++i ) {
               x[ f ].data()[ i ] = static_cast< float >( a * chat[ f ].data()[ i ] + ( 1.0 - a ) * x[ f ].data()[ i ] );
            }
         }
      }
   }
   return chat;
}

std::vector< Image > DenormalizeAll( std::vector< Image > const& frames, int channel, TargetChannelStats const& stats ) {
   std::vector< Image > out;
   for( Image const& f : frames ) {
      out.push_back( DenormalizeTarget( f, channel, stats ));
   }
   return out;
}

UnmixResult Run( AcquisitionInput const& acq, ModelBundle const& bundle, InferenceConfig const& cfg,
                 UnmixOptions const& options, bool iterative ) {
   cfg.Validate();
   NormalizedAcquisition const na = NormalizeAcquisition( acq );
   int const h = na.frames.front().height();
   int const w = na.frames.front().width();
   cfg.tile.Validate( h, w );
   std::size_t const n = na.frames.size();

   UnmixResult res;
   res.input_mean = na.mean;
   res.input_std = na.std;
   res.config = cfg.ToJson();

   if( options.frame_t ) {
      Require( options.frame_t->size() == n, ErrorCode::kShape, "frame_t needs one value per frame" );
      for( double t : *options.frame_t ) {
         static_cast< void >( MixingRatio( t ));
      }
      res.frame_t = *options.frame_t;
      res.t_estimate = Aggregate( res.frame_t, Aggregation::kMean );
   } else if( cfg.aggregation == Aggregation::kFixed ) {
      res.t_estimate = cfg.fixed_t;
      res.frame_t.assign( n, cfg.fixed_t );
   } else {
      res.per_patch = EstimateT( na.frames, bundle.reg, cfg.tile );
      switch( cfg.aggregation ) {
         case Aggregation::kPerFrame: {
            std::vector< std::vector< double >> by_frame( n );
            for( std::size_t i = 0; i < res.per_patch.t.size(); ++i ) {
               by_frame[ res.per_patch.frame[ i ] ].push_back( res.per_patch.t[ i ] );
            }
            for( auto const& v : by_frame ) {
               res.frame_t.push_back( Aggregate( v, Aggregation::kMean ));
            }
            res.t_estimate = Aggregate( res.frame_t, Aggregation::kMean );
            break;
         }
         case Aggregation::kWgtSum:
         case Aggregation::kWgtProd: {
            InferenceConfig rough_cfg = cfg;
            rough_cfg.steps = 1;
            rough_cfg.mmse_count = 1;
            rough_cfg.noise.enabled = false;
            std::vector< double > const half( n, 0.5 );
            auto const c0 = DenormalizeAll( RunChannel( na.frames, bundle.gen0, half, rough_cfg, 0, {} ), 0, bundle.target_stats );
            auto const c1 = DenormalizeAll( RunChannel( na.frames, bundle.gen1, half, rough_cfg, 1, {} ), 1, bundle.target_stats );
            auto const maps = TMaps( res.per_patch, n, h, w, cfg.tile );
            bool fell_back = false;
            res.t_estimate = AggregateWeighted( maps, c0, c1, cfg.aggregation == Aggregation::kWgtProd, &fell_back );
            if( fell_back ) {
               res.warning = "all aggregation weights were zero; used the unweighted mean";
            }
            res.frame_t.assign( n, res.t_estimate );
            break;
         }
         default:
            res.t_estimate = Aggregate( res.per_patch.t, cfg.aggregation );
            res.frame_t.assign( n, res.t_estimate );
      }
   }
   res.t_estimate = std::clamp( res.t_estimate, 0.0, 1.0 );

   for( int c = 0; c < 2; ++c ) {
      if( !options.channels[ static_cast< std::size_t >( c ) ] ) {
         continue;
      }
      std::vector< double > s0;
      for( double t : res.frame_t ) {
         s0.push_back( ChannelSeverity( c, MixingRatio( t )).value());
      }
      auto est = iterative ? RunChannel( na.frames, bundle.generator( c ), s0, cfg, c, options.observer )
                           : ForwardFrames( na.frames, bundle.generator( c ), s0, cfg, c, 0 );
      ( c == 0 ? res.c0_hat : res.c1_hat ) = DenormalizeAll( est, c, bundle.target_stats );
   }
   return res;
}

} // namespace

UnmixResult Unmix( AcquisitionInput const& acq, ModelBundle const& bundle, InferenceConfig const& cfg,
                   UnmixOptions const& options ) {
   return Run( acq, bundle, cfg, options, cfg.steps > 1 );
}

UnmixResult UnmixIterative( AcquisitionInput const& acq, ModelBundle const& bundle, InferenceConfig const& cfg,
                            UnmixOptions const& options ) {
   return Run( acq, bundle, cfg, options, true );
}

} // namespace scsplit
