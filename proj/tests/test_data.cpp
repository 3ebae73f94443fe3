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
#include <fstream>
#include <limits>

#include <doctest.h>
#include <tiffio.h>

#include "scsplit/data.hpp"
#include "scsplit/mixing.hpp"
#include "support.hpp"

using namespace scsplit;
using testing::TempDir;
using testing::TinySynth;

namespace {

// Sorted-array nearest rank: element ceil(q n) (1-based).
float NearestRankOracle( std::vector< float > v, double q ) {
   std::sort( v.begin(), v.end());
   auto const rank = static_cast< std::size_t >( std::ceil( q * static_cast< double >( v.size())));
   return v[ std::max< std::size_t >( rank, 1 ) - 1 ];
}

void WriteTwoChannelTiff( std::filesystem::path const& path, std::vector< Image > const& c0, std::vector< Image > const& c1 ) {
   TIFF* tif = TIFFOpen( path.c_str(), "w" );
   REQUIRE( tif );
   for( std::size_t f = 0; f < c0.size(); ++f ) {
      int const h = c0[ f ].height(), w = c0[ f ].width();
      TIFFSetField( tif, TIFFTAG_IMAGEWIDTH, w );
      TIFFSetField( tif, TIFFTAG_IMAGELENGTH, h );
      TIFFSetField( tif, TIFFTAG_SAMPLESPERPIXEL, 2 );
      TIFFSetField( tif, TIFFTAG_BITSPERSAMPLE, 32 );
      TIFFSetField( tif, TIFFTAG_SAMPLEFORMAT, SAMPLEFORMAT_IEEEFP );
      TIFFSetField( tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG );
      TIFFSetField( tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK );
      uint16_t extra = EXTRASAMPLE_UNSPECIFIED;
      TIFFSetField( tif, TIFFTAG_EXTRASAMPLES, 1, &extra );
      TIFFSetField( tif, TIFFTAG_ROWSPERSTRIP, h );
      TIFFSetField( tif, TIFFTAG_SUBFILETYPE, FILETYPE_PAGE );
      std::vector< float > row( static_cast< std::size_t >( w ) * 2 );
      for( int y = 0; y < h; ++y ) {
         for( int x = 0; x < w; ++x ) {
            row[ 2 * x ] = c0[ f ]( y, x );
            row[ 2 * x + 1 ] = c1[ f ]( y, x );
         }
         REQUIRE( TIFFWriteScanline( tif, row.data(), static_cast< uint32_t >( y ), 0 ) == 1 );
      }
      TIFFWriteDirectory( tif );
   }
   TIFFClose( tif );
}

} // namespace

TEST_CASE( "synthesis is deterministic and shaped" ) {
   SynthConfig cfg = TinySynth( 7, 64, 3, 1, 1 );
   auto const a = SynthesizeDataset( cfg );
   auto const b = SynthesizeDataset( cfg );
   REQUIRE( a.size() == 5 );
   CHECK( a.Fingerprint() == b.Fingerprint());
   for( std::size_t i = 0; i < a.size(); ++i ) {
      CHECK( a.frames_c0[ i ] == b.frames_c0[ i ] );
      CHECK( a.frames_c1[ i ] == b.frames_c1[ i ] );
      CHECK( a.frames_c0[ i ].height() == 64 );
      CHECK( a.frames_c1[ i ].SameShape( a.frames_c0[ i ] ));
      CHECK( MinValue( a.frames_c0[ i ] ) >= 0.0f );
      CHECK( MinValue( a.frames_c1[ i ] ) >= 0.0f );
   }
   cfg.seed = 8;
   CHECK( SynthesizeDataset( cfg ).Fingerprint() != a.Fingerprint());
   CHECK( a.Indices( Split::kTrain ).size() == 3 );
   CHECK( a.Indices( Split::kTest ) == std::vector< std::size_t >{ 4 } );
}

TEST_CASE( "zero density leaves the background" ) {
   SynthConfig cfg = TinySynth();
   cfg.c0.density = 0.0;
   cfg.background_level = 0.25;
   auto const d = SynthesizeDataset( cfg );
   for( auto const& f : d.frames_c0 ) {
      CHECK( MinValue( f ) == 0.25f );
      CHECK( MaxValue( f ) == 0.25f );
   }
}

TEST_CASE( "synth config rejects identical families and bad sizes" ) {
   SynthConfig cfg = TinySynth();
   cfg.c1.family = cfg.c0.family;
   CHECK_THROWS_AS( cfg.Validate(), Error );
   cfg = TinySynth();
   cfg.height = 0;
   CHECK_THROWS_AS( SynthesizeDataset( cfg ), Error );
}

TEST_CASE( "nearest-rank quantile matches the sorted oracle" ) {
   Rng rng( 5 );
   std::uniform_real_distribution< float > u( 0.0f, 100.0f );
   for( int trial = 0; trial < 20; ++trial ) {
      std::vector< float > v( 1 + trial * 37 );
      for( float& x : v ) {
         x = u( rng );
      }
      for( double q : { 0.001, 0.1, 0.5, 0.9, 0.995, 1.0 } ) {
         CHECK( NearestRankQuantile( v, q ) == NearestRankOracle( v, q ));
      }
   }
   CHECK_THROWS_AS( NearestRankQuantile( {}, 0.5 ), Error );
   CHECK_THROWS_AS( NearestRankQuantile( { 1.0f }, 0.0 ), Error );
}

TEST_CASE( "clipping" ) {
   TempDir dir( "clip" );
   auto const d = SynthesizeDataset( TinySynth());
   SaveDataset( d, dir.path());

   SUBCASE( "absent quantile returns data unmodified" ) {
      auto const loaded = LoadDataset( dir.path(), std::nullopt );
      CHECK( loaded.Fingerprint() == d.Fingerprint());
      CHECK_FALSE( loaded.clip_threshold.has_value());
   }
   SUBCASE( "max pixel equals the train quantile" ) {
      auto const loaded = LoadDataset( dir.path(), 0.995 );
      std::vector< float > pool;
      for( std::size_t i : d.Indices( Split::kTrain )) {
         pool.insert( pool.end(), d.frames_c0[ i ].pixels().begin(), d.frames_c0[ i ].pixels().end());
         pool.insert( pool.end(), d.frames_c1[ i ].pixels().begin(), d.frames_c1[ i ].pixels().end());
      }
      float const thr = NearestRankOracle( pool, 0.995 );
      REQUIRE( loaded.clip_threshold.has_value());
      CHECK( *loaded.clip_threshold == thr );
      float mx = 0.0f;
      for( std::size_t i : loaded.Indices( Split::kTrain )) {
         mx = std::max( { mx, MaxValue( loaded.frames_c0[ i ] ), MaxValue( loaded.frames_c1[ i ] ) } );
      }
      CHECK( mx == thr );
      for( std::size_t i = 0; i < loaded.size(); ++i ) {
         CHECK( MaxValue( loaded.frames_c0[ i ] ) <= thr );
         CHECK( MaxValue( loaded.frames_c1[ i ] ) <= thr );
      }
      // Idempotent.
      ChannelFrameSet twice = loaded;
      ApplyQuantileClip( twice, 0.995 );
      CHECK( twice.Fingerprint() == loaded.Fingerprint());
   }
   SUBCASE( "constant stack is unchanged" ) {
      ChannelFrameSet c = d;
      for( auto* frames : { &c.frames_c0, &c.frames_c1 } ) {
         for( auto& f : *frames ) {
            f = Image( f.height(), f.width(), 3.0f );
         }
      }
      std::string const before = c.Fingerprint();
      ApplyQuantileClip( c, 0.9 );
      CHECK( c.Fingerprint() == before );
   }
}

TEST_CASE( "dataset round trip through npy" ) {
   TempDir dir( "npy" );
   auto const d = SynthesizeDataset( TinySynth());
   SaveDataset( d, dir.path());
   auto const back = LoadDataset( dir.path() / "manifest.json", std::nullopt );
   CHECK( back.Fingerprint() == d.Fingerprint());
   CHECK( back.splits == d.splits );
}

TEST_CASE( "two-channel TIFF ingestion" ) {
   TempDir dir( "tiff" );
   std::vector< Image > c0, c1;
   for( int f = 0; f < 4; ++f ) {
      c0.push_back( testing::RandomImage( 16, 20, 10 + f ));
      c1.push_back( testing::RandomImage( 16, 20, 20 + f ));
   }
   WriteTwoChannelTiff( dir.path() / "stack.tif", c0, c1 );
   WriteJsonFile( dir.path() / "manifest.json",
                  Json{{ "name", "tif" }, { "format", "tiff" }, { "path", "stack.tif" }, { "splits", {{ "train", 2 }, { "val", 1 }, { "test", 1 }} }} );
   auto const d = LoadDataset( dir.path(), std::nullopt );
   REQUIRE( d.size() == 4 );
   for( int f = 0; f < 4; ++f ) {
      CHECK( d.frames_c0[ f ] == c0[ f ] );
      CHECK( d.frames_c1[ f ] == c1[ f ] );
   }
   CHECK( d.splits == std::vector< Split >{ Split::kTrain, Split::kTrain, Split::kVal, Split::kTest } );
}

TEST_CASE( "ingestion errors name the problem" ) {
   TempDir dir( "bad" );
   auto d = SynthesizeDataset( TinySynth());
   SUBCASE( "NaN pixel" ) {
      d.frames_c1[ 2 ]( 3, 3 ) = std::numeric_limits< float >::quiet_NaN();
      try {
         d.Validate();
         FAIL( "expected an ingestion error" );
      } catch( Error const& e ) {
         CHECK( e.code() == ErrorCode::kIngest );
         CHECK( std::string( e.what()).find( "frame 2" ) != std::string::npos );
      }
   }
   SUBCASE( "channel-count mismatch" ) {
      WriteNpyStack( dir.path() / "c0.npy", d.frames_c0 );
      std::vector< Image > fewer( d.frames_c1.begin(), d.frames_c1.end() - 1 );
      WriteNpyStack( dir.path() / "c1.npy", fewer );
      WriteJsonFile( dir.path() / "manifest.json", Json{{ "c0", "c0.npy" }, { "c1", "c1.npy" }} );
      try {
         LoadDataset( dir.path(), std::nullopt );
         FAIL( "expected an ingestion error" );
      } catch( Error const& e ) {
         CHECK( e.code() == ErrorCode::kIngest );
      }
   }
   SUBCASE( "unreadable file" ) {
      CHECK_THROWS_AS( LoadDataset( dir.path() / "missing.json", std::nullopt ), Error );
   }
}

TEST_CASE( "patch sampler" ) {
   auto const d = SynthesizeDataset( TinySynth( 3, 64, 4, 1, 1 ));
   SUBCASE( "full-frame patch is the frame pair" ) {
      PatchSampler s( d, PatchSpec{ 64, 64, Split::kTrain }, 1 );
      for( int i = 0; i < 8; ++i ) {
         PatchPair p = s.Next();
         CHECK( p.c0 == d.frames_c0[ p.frame ] );
         CHECK( p.c1 == d.frames_c1[ p.frame ] );
         CHECK( d.splits[ p.frame ] == Split::kTrain );
      }
   }
   SUBCASE( "same seed gives the same crops" ) {
      PatchSampler a( d, PatchSpec{ 32, 32, Split::kTrain }, 9 );
      PatchSampler b( d, PatchSpec{ 32, 32, Split::kTrain }, 9 );
      for( int i = 0; i < 50; ++i ) {
         PatchPair pa = a.Next(), pb = b.Next();
         CHECK( pa.frame == pb.frame );
         CHECK( pa.y == pb.y );
         CHECK( pa.x == pb.x );
         CHECK( pa.c0 == pb.c0 );
      }
   }
   SUBCASE( "crops are in bounds, aligned and paired" ) {
      PatchSampler s( d, PatchSpec{ 32, 32, Split::kTrain }, 4 );
      for( int i = 0; i < 1000; ++i ) {
         PatchPair p = s.Next();
         REQUIRE( p.y >= 0 );
         REQUIRE( p.x >= 0 );
         REQUIRE( p.y + 32 <= 64 );
         REQUIRE( p.x + 32 <= 64 );
         Image const& f0 = d.frames_c0[ p.frame ];
         auto const m = ComputeMeanStd( p.c0 ).mean;
         REQUIRE( m >= MinValue( f0 ));
         REQUIRE( m <= MaxValue( f0 ));
         REQUIRE( p.c0 == Crop( f0, p.y, p.x, 32, 32 ));
         REQUIRE( p.c1 == Crop( d.frames_c1[ p.frame ], p.y, p.x, 32, 32 ));
         Image const summed = Mix( f0, d.frames_c1[ p.frame ], MixingRatio( 0.5 ));
         REQUIRE( Mix( p.c0, p.c1, MixingRatio( 0.5 )) == Crop( summed, p.y, p.x, 32, 32 ));
      }
   }
   SUBCASE( "patch larger than the frame" ) {
      try {
         PatchSampler s( d, PatchSpec{ 65, 65, Split::kTrain }, 1 );
         FAIL( "expected a configuration error" );
      } catch( Error const& e ) {
         CHECK( e.code() == ErrorCode::kConfig );
      }
   }
}

TEST_CASE( "npy reader accepts integer stacks" ) {
   TempDir dir( "npyint" );
   // (2, 2, 3) little-endian uint16
   std::string header = "{'descr': '<u2', 'fortran_order': False, 'shape': (2, 2, 3), }";
   std::size_t const total = 10 + header.size() + 1;
   header.append(( 64 - total % 64 ) % 64, ' ' );
   header.push_back( '\n' );
   std::ofstream out( dir.path() / "s.npy", std::ios::binary );
   out.write( "\x93NUMPY\x01\x00", 8 );
   auto const hl = static_cast< std::uint16_t >( header.size());
   out.put( static_cast< char >( hl & 0xFF ));
   out.put( static_cast< char >( hl >> 8 ));
   out << header;
   for( std::uint16_t v = 0; v < 12; ++v ) {
      std::uint16_t const x = static_cast< std::uint16_t >( v * 1000 );
      out.put( static_cast< char >( x & 0xFF ));
      out.put( static_cast< char >( x >> 8 ));
   }
   out.close();
   auto const frames = ReadNpyStack( dir.path() / "s.npy" );
   REQUIRE( frames.size() == 2 );
   CHECK( frames[ 0 ].height() == 2 );
   CHECK( frames[ 0 ].width() == 3 );
   CHECK( frames[ 1 ]( 1, 2 ) == 11000.0f );
}
