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

#include <doctest.h>

#include "scsplit/scin.hpp"
#include "support.hpp"

using namespace scsplit;
using testing::RandomImage;
using testing::TinySynth;

namespace {

// Frames of independent standard normal pixels in both channels.
ChannelFrameSet NoiseFrames( std::uint64_t seed, int n = 10, int size = 64 ) {
   ChannelFrameSet fs;
   fs.name = "noise";
   Rng rng( seed );
   std::normal_distribution< float > normal( 0.0f, 1.0f );
   for( int i = 0; i < n; ++i ) {
      Image a( size, size ), b( size, size );
      for( float& v : a.pixels()) v = normal( rng );
      for( float& v : b.pixels()) v = normal( rng );
      fs.frames_c0.push_back( a );
      fs.frames_c1.push_back( b );
      fs.splits.push_back( Split::kTrain );
   }
   return fs;
}

struct Moments {
   double mean = 0.0;
   double var = 0.0;
};

// Two-pass moments in double.
Moments PatchMoments( Image const& img ) {
   double s = 0.0;
   for( float v : img.pixels()) s += v;
   double const m = s / static_cast< double >( img.size());
   double ss = 0.0;
   for( float v : img.pixels()) ss += ( v - m ) * ( v - m );
   return { m, ss / static_cast< double >( img.size()) };
}

ChannelFrameSet DeskLike( std::uint64_t seed ) {
   SynthConfig c = TinySynth( seed, 64, 40, 6, 6 );
   return SynthesizeDataset( c );
}

} // namespace

TEST_CASE( "sigma of standardized independent channels at t = 0.5" ) {
   auto const fs = NoiseFrames( 1 );
   ScinBuildOptions o;
   o.n_bins = 100;
   o.samples_per_bin = 2000;
   o.seed = 3;
   ScinTable const table = BuildScinTable( fs, o );
   // E[sigma^2(0.5)] = 0.25 + 0.25
   CHECK( table.sigma[ 50 ] == doctest::Approx( std::sqrt( 0.5 )).epsilon( 0.02 ));
   CHECK( std::abs( table.mu[ 50 ] ) < 0.02 );
   CHECK( table.channel_stats.cov01 == doctest::Approx( 0.0 ).scale( 1.0 ).epsilon( 0.02 ));
}

TEST_CASE( "end bins approach the pure-channel spreads" ) {
   auto const fs = SynthesizeDataset( TinySynth( 5, 64, 8, 1, 1 ));
   ScinBuildOptions o;
   o.n_bins = 100;
   o.samples_per_bin = 2000;
   o.seed = 4;
   ScinTable const table = BuildScinTable( fs, o );
   PatchSampler sampler( fs, PatchSpec{ 32, 32, Split::kTrain }, 99 );
   double s0 = 0.0, s1 = 0.0;
   int const n = 4000;
   for( int k = 0; k < n; ++k ) {
      PatchPair p = sampler.Next();
      s0 += std::sqrt( PatchMoments( p.c0 ).var );
      s1 += std::sqrt( PatchMoments( p.c1 ).var );
   }
   CHECK( table.sigma.front() == doctest::Approx( s0 / n ).epsilon( 0.05 ));
   CHECK( table.sigma.back() == doctest::Approx( s1 / n ).epsilon( 0.05 ));
}

TEST_CASE( "table matches an independent recomputation over the same seeds" ) {
   auto const fs = SynthesizeDataset( TinySynth( 7, 64, 6, 1, 1 ));
   ScinBuildOptions o;
   o.n_bins = 100;
   o.samples_per_bin = 200;
   o.seed = 21;
   ScinTable const table = BuildScinTable( fs, o );
   for( int bin = 0; bin < o.n_bins; bin += 7 ) {
      PatchSampler sampler( fs, PatchSpec{ 32, 32, Split::kTrain }, DeriveSeed( o.seed, static_cast< std::uint64_t >( bin )));
      Rng rng = MakeRng( o.seed ^ 0x5C1Full, static_cast< std::uint64_t >( bin ));
      std::uniform_real_distribution< double > uni( 0.0, 1.0 );
      double sm = 0.0, ss = 0.0;
      for( int k = 0; k < o.samples_per_bin; ++k ) {
         PatchPair p = sampler.Next();
         double const lo = bin / 100.0, hi = ( bin + 1 ) / 100.0;
         double const t = std::min( hi, lo + ( hi - lo ) * ( 1.0 - uni( rng )));
         REQUIRE( t > lo );
         REQUIRE( t <= hi );
         Moments const m = PatchMoments( Mix( p.c0, p.c1, MixingRatio( t )));
         sm += m.mean;
         ss += std::sqrt( m.var );
      }
      CHECK( table.mu[ bin ] == doctest::Approx( sm / o.samples_per_bin ).epsilon( 1e-9 ));
      CHECK( table.sigma[ bin ] == doctest::Approx( ss / o.samples_per_bin ).epsilon( 1e-9 ));
      CHECK( table.samples_per_bin[ bin ] == o.samples_per_bin );
   }
}

TEST_CASE( "table build is deterministic and independent of worker count" ) {
   auto const fs = SynthesizeDataset( TinySynth());
   ScinBuildOptions o;
   o.patch_size = 16;
   o.n_bins = 20;
   o.samples_per_bin = 100;
   o.seed = 2;
   ScinTable const a = BuildScinTable( fs, o );
   o.jobs = 3;
   ScinTable const b = BuildScinTable( fs, o );
   CHECK( a.ToJson().dump() == b.ToJson().dump());
   CHECK( a.Fingerprint() == b.Fingerprint());
   o.seed = 3;
   CHECK( BuildScinTable( fs, o ).Fingerprint() != a.Fingerprint());

   ScinTable const back = ScinTable::FromJson( Json::parse( a.ToJson().dump()));
   CHECK( back.Fingerprint() == a.Fingerprint());
   CHECK( back.mu == a.mu );
   CHECK( back.sigma == a.sigma );
   CHECK( back.dataset_fingerprint == fs.Fingerprint());

   Json broken = a.ToJson();
   broken[ "sigma" ].erase( 0 );
   CHECK_THROWS_AS( ScinTable::FromJson( broken ), Error );
}

TEST_CASE( "table build errors" ) {
   auto fs = SynthesizeDataset( TinySynth());
   ScinBuildOptions o;
   o.patch_size = 16;
   o.n_bins = 10;
   o.samples_per_bin = 10;
   ChannelFrameSet no_train = fs;
   std::fill( no_train.splits.begin(), no_train.splits.end(), Split::kTest );
   CHECK_THROWS_AS( BuildScinTable( no_train, o ), Error );
   ChannelFrameSet flat = fs;
   for( auto* frames : { &flat.frames_c0, &flat.frames_c1 } ) {
      for( auto& f : *frames ) f = Image( f.height(), f.width(), 1.0f );
   }
   try {
      BuildScinTable( flat, o );
      FAIL( "expected an ingestion error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kIngest );
   }
   o.n_bins = 0;
   CHECK_THROWS_AS( BuildScinTable( fs, o ), Error );
}

TEST_CASE( "normalize and denormalize" ) {
   auto const fs = SynthesizeDataset( TinySynth());
   ScinBuildOptions o;
   o.patch_size = 16;
   o.n_bins = 100;
   o.samples_per_bin = 50;
   ScinTable const table = BuildScinTable( fs, o );

   CHECK( table.BinIndex( MixingRatio( 0.0 )) == 0 );
   CHECK( table.BinIndex( MixingRatio( 1.0 )) == 99 );
   CHECK( table.BinIndex( MixingRatio( 0.4299 )) == 42 );
   CHECK( table.BinIndex( MixingRatio( 0.43 )) == 43 );

   MixingRatio const t( 0.42 );
   int const b = table.BinIndex( t );
   Image const flat( 8, 8, static_cast< float >( table.mu[ b ] ));
   Image const z = Normalize( flat, t, table );
   for( float v : z.pixels()) CHECK( std::abs( v ) < 1e-6f );

   Image const x = RandomImage( 16, 16, 3, 0.0f, 2.0f );
   Image const back = Denormalize( Normalize( x, t, table ), t, table );
   for( std::size_t i = 0; i < x.size(); ++i ) {
      CHECK( back.data()[ i ] == doctest::Approx( x.data()[ i ] ).epsilon( 1e-6 ));
   }
   Image const zero( 4, 4 );
   Image const zero_back = Denormalize( zero, t, table );
   for( float v : zero_back.pixels()) {
      CHECK( v == doctest::Approx( table.mu[ b ] ).epsilon( 1e-6 ));
   }
   Image const two( 4, 4, 2.0f );
   Image const two_back = Denormalize( two, t, table );
   for( float v : two_back.pixels()) {
      CHECK( v - table.mu[ b ] == doctest::Approx( 2.0 * table.sigma[ b ] ).epsilon( 1e-6 ));
   }
   ScinTable const unbuilt;
   try {
      Normalize( x, t, unbuilt );
      FAIL( "expected a state error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kState );
   }
}

TEST_CASE( "fresh patches at t = 0.42 have unit statistics after normalization" ) {
   auto const fs = DeskLike( 7 );
   ScinBuildOptions o;
   o.seed = 5;
   ScinTable const table = BuildScinTable( fs, o );
   PatchSampler sampler( fs, PatchSpec{ 32, 32, Split::kTrain }, 1234 );
   MixingRatio const t( 0.42 );
   double s = 0.0, ss = 0.0;
   std::size_t n = 0;
   for( int k = 0; k < 5000; ++k ) {
      PatchPair p = sampler.Next();
      Image const z = Normalize( Mix( p.c0, p.c1, t ), t, table );
      for( float v : z.pixels()) {
         s += v;
         ss += static_cast< double >( v ) * v;
      }
      n += z.size();
   }
   double const mean = s / static_cast< double >( n );
   double const var = ss / static_cast< double >( n ) - mean * mean;
   CHECK( std::abs( mean ) <= 0.05 );
   CHECK( var >= 0.9 );
   CHECK( var <= 1.1 );
}

TEST_CASE( "target normalization" ) {
   auto fs = SynthesizeDataset( TinySynth());
   TargetChannelStats const st = ComputeTargetStats( fs );
   CHECK( st.std_c0 > 0.0 );
   CHECK( st.std_c1 > 0.0 );
   Image const x = fs.frames_c1[ 0 ];
   Image const back = DenormalizeTarget( NormalizeTarget( x, 1, st ), 1, st );
   for( std::size_t i = 0; i < x.size(); ++i ) {
      CHECK( back.data()[ i ] == doctest::Approx( x.data()[ i ] ).epsilon( 1e-6 ).scale( 1.0 ));
   }
   double m = 0.0;
   std::size_t n = 0;
   for( std::size_t i : fs.Indices( Split::kTrain )) {
      Image const z = NormalizeTarget( fs.frames_c0[ i ], 0, st );
      for( float v : z.pixels()) {
         m += v;
         ++n;
      }
   }
   CHECK( std::abs( m / static_cast< double >( n )) <= 0.05 );
   CHECK( TargetChannelStats::FromJson( st.ToJson()).std_c0 == st.std_c0 );

   for( auto& f : fs.frames_c0 ) f = Image( f.height(), f.width(), 0.5f );
   CHECK_THROWS_AS( ComputeTargetStats( fs ), Error );
}

TEST_CASE( "variance prediction" ) {
   ChannelStats s;
   s.var0 = 1.0;
   s.var1 = 1.0;
   s.cov01 = 1.0;
   for( int k = 0; k <= 10; ++k ) {
      CHECK( PredictVariance( MixingRatio( k / 10.0 ), s ) == doctest::Approx( 1.0 ).epsilon( 1e-12 ));
   }
   s.cov01 = 0.0;
   CHECK( PredictVariance( MixingRatio( 0.5 ), s ) == doctest::Approx( 0.5 ));

   for( double coloc : { 0.0, 0.6 } ) {
      SynthConfig c = TinySynth( 9, 64, 20, 1, 1 );
      c.colocalization = coloc;
      auto const fs = SynthesizeDataset( c );
      ChannelStats const cs = EstimateChannelStats( fs, 32, 20000, 77 );
      if( coloc > 0.0 ) {
         CHECK( cs.cov01 > 0.05 * std::sqrt( cs.var0 * cs.var1 ));
      }
      PatchSampler sampler( fs, PatchSpec{ 32, 32, Split::kTrain }, 555 );
      std::vector< PatchPair > patches;
      for( int k = 0; k < 10000; ++k ) patches.push_back( sampler.Next());
      for( int k = 0; k <= 10; ++k ) {
         MixingRatio const t( k / 10.0 );
         double v = 0.0;
         for( auto const& p : patches ) v += PatchMoments( Mix( p.c0, p.c1, t )).var;
         v /= static_cast< double >( patches.size());
         CHECK( PredictVariance( t, cs ) == doctest::Approx( v ).epsilon( 0.02 ));
      }
   }
}
