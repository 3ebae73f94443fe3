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

#include "scsplit/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace scsplit {

namespace fs = std::filesystem;

std::string ToString( Split s ) {
   switch( s ) {
      case Split::kTrain: return "train";
      case Split::kVal: return "val";
      case Split::kTest: return "test";
   }
   return "train";
}

Split ParseSplit( std::string const& s ) {
   if( s == "train" ) return Split::kTrain;
   if( s == "val" ) return Split::kVal;
   if( s == "test" ) return Split::kTest;
   Fail( ErrorCode::kConfig, "unknown split '" + s + "'" );
}

std::string ToString( StructureFamily f ) {
   switch( f ) {
      case StructureFamily::kFilaments: return "filaments";
      case StructureFamily::kBlobs: return "blobs";
      case StructureFamily::kRings: return "rings";
   }
   return "filaments";
}

StructureFamily ParseStructureFamily( std::string const& s ) {
   if( s == "filaments" ) return StructureFamily::kFilaments;
   if( s == "blobs" ) return StructureFamily::kBlobs;
   if( s == "rings" ) return StructureFamily::kRings;
   Fail( ErrorCode::kConfig, "unknown structure family '" + s + "'" );
}

// --- ChannelFrameSet --------------------------------------------------------

void ChannelFrameSet::Validate() const {
   Require( frames_c0.size() == frames_c1.size(), ErrorCode::kIngest,
            name + ": channel frame counts differ (" + std::to_string( frames_c0.size()) + " vs " +
            std::to_string( frames_c1.size()) + ")" );
   Require( splits.size() == frames_c0.size(), ErrorCode::kIngest, name + ": split list does not match frame count" );
   for( std::size_t i = 0; i < frames_c0.size(); ++i ) {
      Require( frames_c0[ i ].SameShape( frames_c1[ i ] ), ErrorCode::kIngest,
               name + ": frame " + std::to_string( i ) + " has mismatched channel shapes" );
      for( auto const* img : { &frames_c0[ i ], &frames_c1[ i ] } ) {
         for( float v : img->pixels()) {
            if( !std::isfinite( v )) {
               Fail( ErrorCode::kIngest, name + ": frame " + std::to_string( i ) + " contains non-finite pixels" );
            }
         }
      }
      if( clip_threshold ) {
         Require( MaxValue( frames_c0[ i ] ) <= *clip_threshold && MaxValue( frames_c1[ i ] ) <= *clip_threshold,
                  ErrorCode::kIngest, name + ": frame " + std::to_string( i ) + " exceeds the clip threshold" );
      }
   }
}

std::vector< std::size_t > ChannelFrameSet::Indices( Split s ) const {
   std::vector< std::size_t > out;
   for( std::size_t i = 0; i < splits.size(); ++i ) {
      if( splits[ i ] == s ) {
         out.push_back( i );
      }
   }
   return out;
}

ChannelFrameSet ChannelFrameSet::Subset( Split s ) const {
   ChannelFrameSet out;
   out.name = name + ":" + ToString( s );
   out.pixel_clip_quantile = pixel_clip_quantile;
   out.clip_threshold = clip_threshold;
   for( std::size_t i : Indices( s )) {
      out.frames_c0.push_back( frames_c0[ i ] );
      out.frames_c1.push_back( frames_c1[ i ] );
      out.splits.push_back( s );
   }
   return out;
}

std::string ChannelFrameSet::Fingerprint() const {
   std::string bytes = name;
   for( std::size_t i = 0; i < size(); ++i ) {
      bytes += "|" + ToString( splits[ i ] ) + ":" + std::to_string( frames_c0[ i ].height()) + "x" +
               std::to_string( frames_c0[ i ].width()) + ":";
      bytes += Sha256Hex( frames_c0[ i ].pixels());
      bytes += Sha256Hex( frames_c1[ i ].pixels());
   }
   return Sha256Hex( bytes );
}

// --- Synthesis --------------------------------------------------------------

void SynthConfig::Validate() const {
   std::vector< std::string > problems;
   if( height < 8 || width < 8 ) problems.push_back( "frame size must be at least 8x8" );
   if( train_frames < 1 ) problems.push_back( "train_frames must be >= 1" );
   if( val_frames < 0 || test_frames < 0 ) problems.push_back( "val/test frame counts must be >= 0" );
   if( c0.family == c1.family ) problems.push_back( "the two channels need different structure families" );
   for( auto const* c : { &c0, &c1 } ) {
      if( !( c->density >= 0.0 ) || !std::isfinite( c->density )) problems.push_back( "density must be >= 0" );
      if( !( c->intensity_scale > 0.0 ) || !std::isfinite( c->intensity_scale ))
         problems.push_back( "intensity_scale must be > 0" );
   }
   if( !( background_level >= 0.0 )) problems.push_back( "background_level must be >= 0" );
   if( !( colocalization >= 0.0 && colocalization <= 1.0 )) problems.push_back( "colocalization must lie in [0, 1]" );
   if( !problems.empty()) {
      std::string msg = "invalid synth config:";
      for( auto const& p : problems ) {
         msg += " " + p + ";";
      }
      Fail( ErrorCode::kConfig, msg );
   }
}

Json SynthConfig::ToJson() const {
   auto channel = []( ChannelSynth const& c ) {
      return Json{{ "family", ToString( c.family ) }, { "density", c.density }, { "intensity_scale", c.intensity_scale }};
   };
   return Json{
      { "name", name }, { "seed", seed }, { "frame_size", { height, width }},
      { "frames", {{ "train", train_frames }, { "val", val_frames }, { "test", test_frames }}},
      { "c0", channel( c0 ) }, { "c1", channel( c1 ) },
      { "background_level", background_level }, { "colocalization", colocalization }};
}

SynthConfig SynthConfig::FromJson( Json const& j ) {
   SynthConfig c;
   try {
      c.name = j.value( "name", c.name );
      c.seed = j.value( "seed", c.seed );
      if( j.contains( "frame_size" )) {
         c.height = j.at( "frame_size" ).at( 0 ).get< int >();
         c.width = j.at( "frame_size" ).at( 1 ).get< int >();
      }
      if( j.contains( "frames" )) {
         auto const& f = j.at( "frames" );
         c.train_frames = f.value( "train", c.train_frames );
         c.val_frames = f.value( "val", c.val_frames );
         c.test_frames = f.value( "test", c.test_frames );
      }
      auto channel = []( Json const& cj, ChannelSynth& out ) {
         if( cj.contains( "family" )) out.family = ParseStructureFamily( cj.at( "family" ).get< std::string >());
         out.density = cj.value( "density", out.density );
         out.intensity_scale = cj.value( "intensity_scale", out.intensity_scale );
      };
      if( j.contains( "c0" )) channel( j.at( "c0" ), c.c0 );
      if( j.contains( "c1" )) channel( j.at( "c1" ), c.c1 );
      c.background_level = j.value( "background_level", c.background_level );
      c.colocalization = j.value( "colocalization", c.colocalization );
   } catch( Json::exception const& e ) {
      Fail( ErrorCode::kConfig, std::string( "invalid synth config: " ) + e.what());
   }
   return c;
}

namespace {

constexpr double kFilamentSigma = 1.0;
constexpr double kBlobEdge = 0.7;
constexpr double kRingWidth = 1.2;

// Draws one structure into `layer` (max-composited so a self-overlapping
// filament does not double its brightness).
void RenderFilament( Image& layer, Rng& rng, double amplitude, double margin ) {
   std::uniform_real_distribution< double > uni( 0.0, 1.0 );
   double y = -margin + uni( rng ) * ( layer.height() + 2 * margin );
   double x = -margin + uni( rng ) * ( layer.width() + 2 * margin );
   double angle = uni( rng ) * 2.0 * std::numbers::pi;
   double const length = 12.0 + uni( rng ) * 16.0;
   std::normal_distribution< double > turn( 0.0, 0.12 );
   int const radius = 3;
   double const inv2s2 = 1.0 / ( 2.0 * kFilamentSigma * kFilamentSigma );
   Image single( layer.height(), layer.width());
   for( double s = 0.0; s <= length; s += 0.5 ) {
      int const cy = static_cast< int >( std::lround( y ));
      int const cx = static_cast< int >( std::lround( x ));
      for( int py = std::max( 0, cy - radius ); py <= std::min( layer.height() - 1, cy + radius ); ++py ) {
         for( int px = std::max( 0, cx - radius ); px <= std::min( layer.width() - 1, cx + radius ); ++px ) {
            double const d2 = ( py - y ) * ( py - y ) + ( px - x ) * ( px - x );
            float const v = static_cast< float >( amplitude * std::exp( -d2 * inv2s2 ));
            single( py, px ) = std::max( single( py, px ), v );
         }
      }
      y += 0.5 * std::sin( angle );
      x += 0.5 * std::cos( angle );
      angle += turn( rng ) * 0.5;
   }
   for( std::size_t i = 0; i < layer.size(); ++i ) {
      layer.data()[ i ] += single.data()[ i ];
   }
}

void RenderRadial( Image& layer, Rng& rng, double amplitude, StructureFamily family, double margin ) {
   std::uniform_real_distribution< double > uni( 0.0, 1.0 );
   double const cy = -margin + uni( rng ) * ( layer.height() + 2 * margin );
   double const cx = -margin + uni( rng ) * ( layer.width() + 2 * margin );
   double const r = family == StructureFamily::kBlobs ? 1.5 + uni( rng ) * 1.5 : 4.0 + uni( rng ) * 4.0;
   int const reach = static_cast< int >( std::ceil( r + 5.0 ));
   for( int py = std::max( 0, static_cast< int >( cy ) - reach ); py <= std::min( layer.height() - 1, static_cast< int >( cy ) + reach ); ++py ) {
      for( int px = std::max( 0, static_cast< int >( cx ) - reach ); px <= std::min( layer.width() - 1, static_cast< int >( cx ) + reach ); ++px ) {
         double const d = std::hypot( py - cy, px - cx );
         double v = 0.0;
         if( family == StructureFamily::kBlobs ) {
            v = 1.0 / ( 1.0 + std::exp(( d - r ) / kBlobEdge ));
         } else {
            v = std::exp( -( d - r ) * ( d - r ) / ( 2.0 * kRingWidth * kRingWidth ));
         }
         layer( py, px ) += static_cast< float >( amplitude * v );
      }
   }
}

// Farthest a structure can reach from its anchor point.
double Reach( StructureFamily family ) {
   switch( family ) {
      case StructureFamily::kFilaments: return 28.0 + 4.0;
      case StructureFamily::kBlobs: return 4.0 + 6.0;
      case StructureFamily::kRings: return 8.0 + 6.0;
   }
   return 0.0;
}

// Anchors are spread over the frame grown by the structure reach, so the
// field is stationary: border pixels are as likely to be covered as central ones.
Image RenderChannel( SynthConfig const& cfg, ChannelSynth const& ch, Rng& rng ) {
   Image layer( cfg.height, cfg.width );
   double const margin = Reach( ch.family );
   double const area_units = ( cfg.height + 2.0 * margin ) * ( cfg.width + 2.0 * margin ) / 4096.0;
   std::poisson_distribution< int > count( std::max( ch.density * area_units, 0.0 ));
   int const n = ch.density > 0.0 ? count( rng ) : 0;
   std::uniform_real_distribution< double > jitter( 0.7, 1.3 );
   for( int i = 0; i < n; ++i ) {
      double const amplitude = ch.intensity_scale * jitter( rng );
      if( ch.family == StructureFamily::kFilaments ) {
         RenderFilament( layer, rng, amplitude, margin );
      } else {
         RenderRadial( layer, rng, amplitude, ch.family, margin );
      }
   }
   return layer;
}

} // namespace

ChannelFrameSet SynthesizeDataset( SynthConfig const& cfg ) {
   cfg.Validate();
   ChannelFrameSet out;
   out.name = cfg.name;
   int const total = cfg.train_frames + cfg.val_frames + cfg.test_frames;
   for( int i = 0; i < total; ++i ) {
      Rng rng0 = MakeRng( cfg.seed, static_cast< std::uint64_t >( i ) * 2 );
      Rng rng1 = MakeRng( cfg.seed, static_cast< std::uint64_t >( i ) * 2 + 1 );
      Image s0 = RenderChannel( cfg, cfg.c0, rng0 );
      Image s1 = RenderChannel( cfg, cfg.c1, rng1 );
      auto const bg = static_cast< float >( cfg.background_level );
      auto const coloc = static_cast< float >( cfg.colocalization );
      Image f0( cfg.height, cfg.width ), f1( cfg.height, cfg.width );
      for( std::size_t p = 0; p < f0.size(); ++p ) {
         f0.data()[ p ] = bg + s0.data()[ p ];
         f1.data()[ p ] = bg + s1.data()[ p ] + coloc * s0.data()[ p ];
      }
      out.frames_c0.push_back( std::move( f0 ));
      out.frames_c1.push_back( std::move( f1 ));
      out.splits.push_back( i < cfg.train_frames ? Split::kTrain
                            : i < cfg.train_frames + cfg.val_frames ? Split::kVal : Split::kTest );
   }
   return out;
}

// --- Ingestion --------------------------------------------------------------

float NearestRankQuantile( std::vector< float > values, double q ) {
   Require( !values.empty(), ErrorCode::kIngest, "quantile of an empty set" );
   Require( q > 0.0 && q <= 1.0, ErrorCode::kRange, "quantile must lie in (0, 1]" );
   auto rank = static_cast< std::size_t >( std::ceil( q * static_cast< double >( values.size())));
   rank = std::clamp< std::size_t >( rank, 1, values.size());
   auto nth = values.begin() + static_cast< std::ptrdiff_t >( rank - 1 );
   std::nth_element( values.begin(), nth, values.end());
   return *nth;
}

void ApplyQuantileClip( ChannelFrameSet& fs, double quantile ) {
   std::vector< float > pool;
   for( std::size_t i : fs.Indices( Split::kTrain )) {
      pool.insert( pool.end(), fs.frames_c0[ i ].pixels().begin(), fs.frames_c0[ i ].pixels().end());
      pool.insert( pool.end(), fs.frames_c1[ i ].pixels().begin(), fs.frames_c1[ i ].pixels().end());
   }
   Require( !pool.empty(), ErrorCode::kIngest, fs.name + ": clipping needs a non-empty training split" );
   float const threshold = NearestRankQuantile( std::move( pool ), quantile );
   for( auto* frames : { &fs.frames_c0, &fs.frames_c1 } ) {
      for( auto& f : *frames ) {
         for( float& v : f.pixels()) {
            v = std::min( v, threshold );
         }
      }
   }
   fs.pixel_clip_quantile = quantile;
   fs.clip_threshold = threshold;
}

namespace {

std::vector< Split > SplitsFromManifest( Json const& m, std::size_t n, std::string const& name ) {
   std::vector< Split > splits;
   if( m.contains( "splits" ) && m.at( "splits" ).is_array()) {
      for( auto const& s : m.at( "splits" )) {
         splits.push_back( ParseSplit( s.get< std::string >()));
      }
      Require( splits.size() == n, ErrorCode::kIngest, name + ": split list length does not match frame count" );
      return splits;
   }
   std::size_t n_train = n, n_val = 0, n_test = 0;
   if( m.contains( "splits" )) {
      auto const& s = m.at( "splits" );
      n_val = s.value( "val", std::size_t{ 0 } );
      n_test = s.value( "test", std::size_t{ 0 } );
      n_train = s.value( "train", n - std::min( n, n_val + n_test ));
   } else if( n >= 3 ) {
      n_test = std::max< std::size_t >( 1, n / 10 );
      n_val = std::max< std::size_t >( 1, n / 10 );
      n_train = n - n_val - n_test;
   }
   Require( n_train + n_val + n_test == n, ErrorCode::kIngest, name + ": split counts do not add up to the frame count" );
   splits.insert( splits.end(), n_train, Split::kTrain );
   splits.insert( splits.end(), n_val, Split::kVal );
   splits.insert( splits.end(), n_test, Split::kTest );
   return splits;
}

} // namespace

ChannelFrameSet LoadDataset( fs::path const& path, std::optional< double > clip_quantile ) {
   fs::path manifest_path = path;
   if( fs::is_directory( path )) {
      manifest_path = path / "manifest.json";
   }
   Json const m = ReadJsonFile( manifest_path );
   fs::path const base = manifest_path.parent_path();
   ChannelFrameSet out;
   out.name = m.value( "name", manifest_path.stem().string());
   std::string const format = m.value( "format", "npy" );
   if( format == "npy" ) {
      Require( m.contains( "c0" ) && m.contains( "c1" ), ErrorCode::kIngest, out.name + ": npy manifest needs c0 and c1" );
      out.frames_c0 = ReadNpyStack( base / m.at( "c0" ).get< std::string >());
      out.frames_c1 = ReadNpyStack( base / m.at( "c1" ).get< std::string >());
   } else if( format == "tiff" ) {
      Require( m.contains( "path" ), ErrorCode::kIngest, out.name + ": tiff manifest needs a path" );
      auto pages = ReadTiffPages( base / m.at( "path" ).get< std::string >());
      bool const two_channel_pages = !pages.empty() && pages[ 0 ].channels.size() == 2;
      if( two_channel_pages ) {
         for( std::size_t i = 0; i < pages.size(); ++i ) {
            Require( pages[ i ].channels.size() == 2, ErrorCode::kIngest,
                     out.name + ": frame " + std::to_string( i ) + " does not have 2 channels" );
            out.frames_c0.push_back( std::move( pages[ i ].channels[ 0 ] ));
            out.frames_c1.push_back( std::move( pages[ i ].channels[ 1 ] ));
         }
      } else {
         Require( pages.size() % 2 == 0, ErrorCode::kIngest,
                  out.name + ": interleaved single-channel TIFF needs an even page count" );
         for( std::size_t i = 0; i < pages.size(); ++i ) {
            Require( pages[ i ].channels.size() == 1, ErrorCode::kIngest,
                     out.name + ": page " + std::to_string( i ) + " has an unexpected channel count" );
            ( i % 2 == 0 ? out.frames_c0 : out.frames_c1 ).push_back( std::move( pages[ i ].channels[ 0 ] ));
         }
      }
   } else {
      Fail( ErrorCode::kIngest, out.name + ": unknown format '" + format + "'" );
   }
   Require( out.frames_c0.size() == out.frames_c1.size(), ErrorCode::kIngest,
            out.name + ": channel-count mismatch (" + std::to_string( out.frames_c0.size()) + " vs " +
            std::to_string( out.frames_c1.size()) + " frames)" );
   out.splits = SplitsFromManifest( m, out.frames_c0.size(), out.name );
   out.clip_threshold.reset();
   out.Validate();
   if( clip_quantile ) {
      ApplyQuantileClip( out, *clip_quantile );
   }
   return out;
}

void SaveDataset( ChannelFrameSet const& fs, fs::path const& dir, Json const& extra ) {
   fs.Validate();
   fs::create_directories( dir );
   WriteNpyStack( dir / "c0.npy", fs.frames_c0 );
   WriteNpyStack( dir / "c1.npy", fs.frames_c1 );
   Json splits = Json::array();
   for( Split s : fs.splits ) {
      splits.push_back( ToString( s ));
   }
   Json m = extra;
   m[ "name" ] = fs.name;
   m[ "format" ] = "npy";
   m[ "c0" ] = "c0.npy";
   m[ "c1" ] = "c1.npy";
   m[ "splits" ] = splits;
   m[ "fingerprint" ] = fs.Fingerprint();
   if( fs.clip_threshold ) {
      m[ "clip_threshold" ] = *fs.clip_threshold;
   }
   WriteJsonFile( dir / "manifest.json", m );
}

// --- Patches ----------------------------------------------------------------

void PatchSpec::Validate( int frame_height, int frame_width ) const {
   Require( patch_size >= 1, ErrorCode::kConfig, "patch_size must be >= 1" );
   Require( patch_size <= std::min( frame_height, frame_width ), ErrorCode::kConfig,
            "patch_size " + std::to_string( patch_size ) + " exceeds the frame size " + std::to_string( frame_height ) +
            "x" + std::to_string( frame_width ));
   Require( stride >= 1 && stride <= patch_size, ErrorCode::kConfig, "stride must lie in [1, patch_size]" );
}

PatchSampler::PatchSampler( ChannelFrameSet const& fs, PatchSpec const& spec, std::uint64_t seed )
   : fs_( &fs ), spec_( spec ), frames_( fs.Indices( spec.split )), rng_( seed ) {
   Require( !frames_.empty(), ErrorCode::kConfig, fs.name + ": split " + ToString( spec.split ) + " is empty" );
   for( std::size_t i : frames_ ) {
      spec_.Validate( fs.frames_c0[ i ].height(), fs.frames_c0[ i ].width());
   }
}

PatchPair PatchSampler::Next() {
   std::uniform_int_distribution< std::size_t > pick( 0, frames_.size() - 1 );
   std::size_t const frame = frames_[ pick( rng_ ) ];
   Image const& f0 = fs_->frames_c0[ frame ];
   std::uniform_int_distribution< int > py( 0, f0.height() - spec_.patch_size );
   std::uniform_int_distribution< int > px( 0, f0.width() - spec_.patch_size );
   PatchPair out;
   out.frame = frame;
   out.y = py( rng_ );
   out.x = px( rng_ );
   out.c0 = Crop( f0, out.y, out.x, spec_.patch_size, spec_.patch_size );
   out.c1 = Crop( fs_->frames_c1[ frame ], out.y, out.x, spec_.patch_size, spec_.patch_size );
   return out;
}

} // namespace scsplit
