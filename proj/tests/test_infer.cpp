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

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <doctest.h>

#include "scsplit/infer.hpp"
#include "scsplit/train.hpp"
#include "support.hpp"

using namespace scsplit;
using testing::RandomImage;
using testing::TinySynth;

namespace {

ModelBundle RandomBundle( ChannelFrameSet const& fs, std::uint64_t seed ) {
   ScinBuildOptions o;
   o.patch_size = 16;
   o.n_bins = 10;
   o.samples_per_bin = 20;
   o.channel_stat_samples = 50;
   ScinTable const table = BuildScinTable( fs, o );
   TrainConfig cfg;
   cfg.patch_size = 16;
   cfg.gen_depth = 2;
   cfg.gen_base_width = 4;
   cfg.reg_depth = 2;
   cfg.reg_base_width = 4;
   std::string const fp = table.Fingerprint();
   return MakeBundle( Generator( cfg.MakeGenSpec( 0 ), seed, fp ), Generator( cfg.MakeGenSpec( 1 ), seed + 1, fp ),
                      Regressor( cfg.MakeRegSpec(), seed + 2, fp ), table, ComputeTargetStats( fs ), cfg.ToJson());
}

InferenceConfig SmallInfer() {
   InferenceConfig c;
   c.tile = TileSpec{ 16, 4 };
   c.mmse_count = 3;
   c.seed = 12;
   return c;
}

AcquisitionInput MixedAcquisition( ChannelFrameSet const& fs, double t ) {
   AcquisitionInput acq;
   acq.name = "acq";
   for( std::size_t i : fs.Indices( Split::kTest )) {
      acq.frames.push_back( Mix( fs.frames_c0[ i ], fs.frames_c1[ i ], MixingRatio( t )));
   }
   return acq;
}

bool Equal( std::vector< Image > const& a, std::vector< Image > const& b ) {
   if( a.size() != b.size()) return false;
   for( std::size_t i = 0; i < a.size(); ++i ) {
      if( !( a[ i ] == b[ i ] )) return false;
   }
   return true;
}

} // namespace

TEST_CASE( "acquisition normalization uses pooled statistics" ) {
   AcquisitionInput acq;
   acq.frames = { RandomImage( 8, 8, 1, 0.0f, 3.0f ), RandomImage( 8, 8, 2, 1.0f, 2.0f ) };
   double s = 0.0;
   double n = 0.0;
   for( auto const& f : acq.frames ) {
      for( float v : f.pixels()) {
         s += v;
         n += 1.0;
      }
   }
   double const mean = s / n;
   double ss = 0.0;
   for( auto const& f : acq.frames ) {
      for( float v : f.pixels()) ss += ( v - mean ) * ( v - mean );
   }
   double const sd = std::sqrt( ss / n );
   NormalizedAcquisition const na = NormalizeAcquisition( acq );
   CHECK( na.mean == doctest::Approx( mean ).epsilon( 1e-12 ));
   CHECK( na.std == doctest::Approx( sd ).epsilon( 1e-12 ));
   for( std::size_t f = 0; f < 2; ++f ) {
      for( std::size_t i = 0; i < 64; ++i ) {
         CHECK( na.frames[ f ].data()[ i ] ==
                doctest::Approx(( acq.frames[ f ].data()[ i ] - mean ) / sd ).epsilon( 1e-6 ).scale( 1.0 ));
      }
   }

   AcquisitionInput bad;
   CHECK_THROWS_AS( bad.Validate(), Error );
   bad.frames = { RandomImage( 8, 8, 1 ), RandomImage( 8, 4, 1 ) };
   CHECK_THROWS_AS( bad.Validate(), Error );
   bad.frames = { RandomImage( 8, 8, 1 ) };
   bad.frames[ 0 ]( 2, 3 ) = std::numeric_limits< float >::quiet_NaN();
   try {
      bad.Validate();
      FAIL( "expected an ingestion error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kIngest );
   }
   AcquisitionInput flat;
   flat.frames = { Image( 8, 8, 2.0f ) };
   CHECK_THROWS_AS( NormalizeAcquisition( flat ), Error );
}

TEST_CASE( "tiling" ) {
   CHECK( TileStarts( 64, 32, 24 ) == std::vector< int >{ 0, 24, 32 } );
   CHECK( TileStarts( 32, 32, 24 ) == std::vector< int >{ 0 } );
   CHECK( TileStarts( 40, 16, 12 ) == std::vector< int >{ 0, 12, 24 } );
   CHECK_THROWS_AS( TileStarts( 16, 32, 24 ), Error );

   struct Case { int h, w, tile, overlap; };
   for( Case c : { Case{ 64, 64, 32, 8 }, Case{ 40, 56, 16, 4 }, Case{ 32, 32, 32, 0 }, Case{ 48, 33, 16, 6 } } ) {
      TileSpec const spec{ c.tile, c.overlap };
      Image const frame = RandomImage( c.h, c.w, 7, -3.0f, 3.0f );
      std::vector< Image > const tiles = TileFrame( frame, spec );
      CHECK( tiles.size() == TileGrid( c.h, c.w, spec ).size());
      CHECK( StitchTiles( tiles, c.h, c.w, spec ) == frame );

      Image const cov = CoverageMap( c.h, c.w, spec );
      double total = 0.0;
      for( float v : cov.pixels()) {
         CHECK( v >= 1.0f );
         total += v;
      }
      CHECK( total == static_cast< double >( tiles.size()) * c.tile * c.tile );
      // The last tile sits flush with the far border.
      auto const grid = TileGrid( c.h, c.w, spec );
      CHECK( grid.back().y == c.h - c.tile );
      CHECK( grid.back().x == c.w - c.tile );
   }
   CHECK_THROWS_AS(( TileSpec{ 16, 16 }.Validate( 32, 32 )), Error );
   try {
      TileSpec{ 64, 8 }.Validate( 32, 32 );
      FAIL( "expected a shape error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kShape );
   }
}

TEST_CASE( "aggregation matches brute-force oracles" ) {
   std::vector< double > const a{ 0.4, 0.5, 0.6 };
   CHECK( Aggregate( a, Aggregation::kMean ) == doctest::Approx( 0.5 ).epsilon( 1e-15 ));
   std::vector< double > const b{ 0.1, 0.2, 0.9 };
   CHECK( Aggregate( b, Aggregation::kMedian ) == 0.2 );
   std::vector< double > const c{ 0.231, 0.235, 0.5, 0.9, 0.12 };
   CHECK( Aggregate( c, Aggregation::kMode ) == doctest::Approx( 0.235 ));
   std::vector< double > const d{ 1.0, 1.0, 0.0 };
   CHECK( Aggregate( d, Aggregation::kMode ) == doctest::Approx( 0.995 ));
   CHECK_THROWS_AS( Aggregate( std::vector< double >{}, Aggregation::kMean ), Error );

   Rng rng( 4 );
   std::uniform_real_distribution< double > u( 0.0, 1.0 );
   for( int trial = 0; trial < 50; ++trial ) {
      std::vector< double > v( 1 + trial );
      for( double& x : v ) x = u( rng );
      double sum = 0.0;
      for( double x : v ) sum += x;
      CHECK( Aggregate( v, Aggregation::kMean ) == doctest::Approx( sum / v.size()).epsilon( 1e-12 ));

      // Median: the value with at most half the others on either side.
      double best = 0.0;
      bool found = false;
      for( double x : v ) {
         std::size_t below = 0, above = 0;
         for( double y : v ) {
            below += y < x;
            above += y > x;
         }
         if( below <= v.size() / 2 && above <= v.size() / 2 && v.size() % 2 == 1 ) {
            best = x;
            found = true;
         }
      }
      if( found ) {
         CHECK( Aggregate( v, Aggregation::kMedian ) == best );
      }

      // Mode: brute-force count per 0.01 bin, first maximum wins.
      int best_bin = 0, best_count = -1;
      for( int bin = 0; bin < 100; ++bin ) {
         int count = 0;
         for( double x : v ) count += std::min( 99, static_cast< int >( x * 100.0 )) == bin;
         if( count > best_count ) {
            best_count = count;
            best_bin = bin;
         }
      }
      CHECK( Aggregate( v, Aggregation::kMode ) == doctest::Approx(( best_bin + 0.5 ) / 100.0 ));
   }
   std::vector< double > const even{ 0.9, 0.1, 0.3, 0.5 };
   CHECK( Aggregate( even, Aggregation::kMedian ) == doctest::Approx( 0.4 ));
}

TEST_CASE( "weighted aggregation" ) {
   std::vector< Image > maps{ RandomImage( 6, 6, 1 ), RandomImage( 6, 6, 2 ) };
   std::vector< Image > c0{ RandomImage( 6, 6, 3, -1.0f, 4.0f ), RandomImage( 6, 6, 4, 0.0f, 2.0f ) };
   std::vector< Image > c1{ RandomImage( 6, 6, 5, 1.0f, 3.0f ), RandomImage( 6, 6, 6, -2.0f, 1.0f ) };
   auto range = []( std::vector< Image > const& f ) {
      double lo = 1e300, hi = -1e300;
      for( auto const& img : f ) {
         for( float v : img.pixels()) {
            lo = std::min< double >( lo, v );
            hi = std::max< double >( hi, v );
         }
      }
      return std::pair{ lo, hi };
   };
   auto [ lo0, hi0 ] = range( c0 );
   auto [ lo1, hi1 ] = range( c1 );
   for( bool product : { false, true } ) {
      double num = 0.0, den = 0.0;
      for( std::size_t f = 0; f < 2; ++f ) {
         for( std::size_t i = 0; i < 36; ++i ) {
            double const a = ( c0[ f ].data()[ i ] - lo0 ) / ( hi0 - lo0 );
            double const b = ( c1[ f ].data()[ i ] - lo1 ) / ( hi1 - lo1 );
            double const w = product ? a * b : a + b;
            num += w * maps[ f ].data()[ i ];
            den += w;
         }
      }
      bool fell_back = true;
      CHECK( AggregateWeighted( maps, c0, c1, product, &fell_back ) == doctest::Approx( num / den ).epsilon( 1e-12 ));
      CHECK( !fell_back );
   }
   // Constant rough estimates carry no weight.
   std::vector< Image > flat{ Image( 6, 6, 1.0f ), Image( 6, 6, 1.0f ) };
   bool fell_back = false;
   double plain = 0.0;
   for( auto const& m : maps ) {
      for( float v : m.pixels()) plain += v;
   }
   CHECK( AggregateWeighted( maps, flat, c1, true, &fell_back ) == doctest::Approx( plain / 72.0 ).epsilon( 1e-12 ));
   CHECK( fell_back );
}

TEST_CASE( "inference config variants" ) {
   InferenceConfig const base;
   CHECK( base.WithVariant( "scsplit" ).aggregation == Aggregation::kMean );
   CHECK( base.WithVariant( "noagg" ).aggregation == Aggregation::kPerFrame );
   CHECK( base.WithVariant( "fixed:0.3" ).fixed_t == 0.3 );
   CHECK( base.WithVariant( "fixed:0.3" ).VariantName() == "fixed:0.3" );
   CHECK( base.WithVariant( "wgt_prod" ).aggregation == Aggregation::kWgtProd );
   CHECK_THROWS_AS( base.WithVariant( "fixed:1.5" ), Error );
   CHECK_THROWS_AS( base.WithVariant( "bogus" ), Error );
   CHECK( InferenceConfig::FromJson( base.ToJson()).ToJson() == base.ToJson());
}

TEST_CASE( "unmix determinism and variants" ) {
   auto const fs = SynthesizeDataset( TinySynth( 3, 32, 6, 2, 3 ));
   ModelBundle const bundle = RandomBundle( fs, 50 );
   AcquisitionInput const acq = MixedAcquisition( fs, 0.3 );
   InferenceConfig const cfg = SmallInfer();

   UnmixResult const a = Unmix( acq, bundle, cfg );
   UnmixResult const b = Unmix( acq, bundle, cfg );
   CHECK( Equal( a.c0_hat, b.c0_hat ));
   CHECK( Equal( a.c1_hat, b.c1_hat ));
   CHECK( a.t_estimate == b.t_estimate );
   CHECK( a.c0_hat.size() == acq.frames.size());
   CHECK( a.per_patch.t.size() == acq.frames.size() * TileGrid( 32, 32, cfg.tile ).size());
   CHECK( a.t_estimate == doctest::Approx( Aggregate( a.per_patch.t, Aggregation::kMean )).epsilon( 1e-12 ));

   InferenceConfig other = cfg;
   other.seed = 13;
   CHECK( !Equal( Unmix( acq, bundle, other ).c0_hat, a.c0_hat ));

   InferenceConfig per_frame = cfg.WithVariant( "noagg" );
   UnmixResult const pf = Unmix( acq, bundle, per_frame );
   for( std::size_t f = 0; f < acq.frames.size(); ++f ) {
      std::vector< double > mine;
      for( std::size_t i = 0; i < pf.per_patch.t.size(); ++i ) {
         if( pf.per_patch.frame[ i ] == f ) mine.push_back( pf.per_patch.t[ i ] );
      }
      CHECK( pf.frame_t[ f ] == doctest::Approx( Aggregate( mine, Aggregation::kMean )).epsilon( 1e-12 ));
   }

   // Supplying the per-frame t equals the fixed variant.
   UnmixOptions opt;
   opt.frame_t = std::vector< double >( acq.frames.size(), 0.5 );
   UnmixResult const oracle = Unmix( acq, bundle, cfg, opt );
   UnmixResult const fixed = Unmix( acq, bundle, cfg.WithVariant( "fixed:0.5" ));
   CHECK( Equal( oracle.c0_hat, fixed.c0_hat ));
   CHECK( Equal( oracle.c1_hat, fixed.c1_hat ));

   UnmixOptions only0;
   only0.channels = { true, false };
   UnmixResult const half = Unmix( acq, bundle, cfg, only0 );
   CHECK( half.c1_hat.empty());
   CHECK( Equal( half.c0_hat, a.c0_hat ));

   UnmixResult const weighted = Unmix( acq, bundle, cfg.WithVariant( "wgt_sum" ));
   CHECK( weighted.t_estimate >= 0.0 );
   CHECK( weighted.t_estimate <= 1.0 );
}

TEST_CASE( "iterative contract" ) {
   auto const fs = SynthesizeDataset( TinySynth( 3, 32, 6, 2, 3 ));
   ModelBundle const bundle = RandomBundle( fs, 60 );
   AcquisitionInput const acq = MixedAcquisition( fs, 0.6 );
   InferenceConfig cfg = SmallInfer();

   UnmixResult const one = Unmix( acq, bundle, cfg );
   UnmixResult const it1 = UnmixIterative( acq, bundle, cfg );
   CHECK( Equal( one.c0_hat, it1.c0_hat ));
   CHECK( Equal( one.c1_hat, it1.c1_hat ));

   CHECK( SeveritySchedule( 0.6, 3 ) == std::vector< double >{ 0.6, 0.6 * 2 / 3, 0.6 * 1 / 3 } );
   CHECK( SeveritySchedule( 0.25, 1 ) == std::vector< double >{ 0.25 } );
   CHECK_THROWS_AS( SeveritySchedule( 0.5, 0 ), Error );

   cfg.steps = 4;
   std::vector< IterationRecord > records;
   UnmixOptions opt;
   opt.observer = [ & ]( IterationRecord const& r ) { records.push_back( r ); };
   UnmixResult const res = UnmixIterative( acq, bundle, cfg, opt );
   REQUIRE( records.size() == 8 );
   for( auto const& r : records ) {
      double const s0 = ChannelSeverity( r.channel, MixingRatio( res.t_estimate )).value();
      std::vector< double > const schedule = SeveritySchedule( s0, 4 );
      for( double s : r.severity ) CHECK( s == doctest::Approx( schedule[ static_cast< std::size_t >( r.step ) ] ).epsilon( 1e-12 ));
      CHECK( std::abs( r.input_mean ) < 1e-5 );
      CHECK( r.input_var == doctest::Approx( 1.0 ).epsilon( 1e-5 ));
   }
   CHECK( res.c0_hat.size() == acq.frames.size());
}

TEST_CASE( "swapping generator roles swaps the outputs" ) {
   auto const fs = SynthesizeDataset( TinySynth( 3, 32, 6, 2, 3 ));
   ModelBundle const b = RandomBundle( fs, 70 );
   GenSpec s0 = b.gen1.spec();
   s0.channel_index = 0;
   GenSpec s1 = b.gen0.spec();
   s1.channel_index = 1;
   TargetChannelStats swapped;
   swapped.mean_c0 = b.target_stats.mean_c1;
   swapped.std_c0 = b.target_stats.std_c1;
   swapped.mean_c1 = b.target_stats.mean_c0;
   swapped.std_c1 = b.target_stats.std_c0;
   std::string const fp = b.table.Fingerprint();
   ModelBundle const mirror = MakeBundle( Generator( s0, b.gen1.params(), fp ), Generator( s1, b.gen0.params(), fp ), b.reg,
                                          b.table, swapped, b.train_config );

   InferenceConfig cfg = SmallInfer();
   cfg.noise.enabled = false;
   AcquisitionInput const acq = MixedAcquisition( fs, 0.35 );
   for( double t : { 0.2, 0.35, 0.8 } ) {
      UnmixOptions o;
      o.frame_t = std::vector< double >( acq.frames.size(), t );
      UnmixOptions m;
      m.frame_t = std::vector< double >( acq.frames.size(), 1.0 - t );
      UnmixResult const r = Unmix( acq, b, cfg, o );
      UnmixResult const q = Unmix( acq, mirror, cfg, m );
      CHECK( Equal( r.c0_hat, q.c1_hat ));
      CHECK( Equal( r.c1_hat, q.c0_hat ));
   }
}
