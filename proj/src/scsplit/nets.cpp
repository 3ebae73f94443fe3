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

#include "scsplit/nets.hpp"

#include <cstring>

namespace scsplit {

Json ToJson( GenSpec const& spec ) {
   return Json{{ "channel_index", spec.channel_index }, { "depth", spec.depth }, { "base_width", spec.base_width },
               { "conditioning_mode", ToString( spec.conditioning ) }, { "patch_size", spec.patch_size }};
}

GenSpec GenSpecFromJson( Json const& j ) {
   GenSpec s;
   s.channel_index = j.value( "channel_index", s.channel_index );
   s.depth = j.value( "depth", s.depth );
   s.base_width = j.value( "base_width", s.base_width );
   s.conditioning = ParseConditioning( j.value( "conditioning_mode", ToString( s.conditioning )));
   s.patch_size = j.value( "patch_size", s.patch_size );
   s.Validate();
   return s;
}

Json ToJson( RegSpec const& spec ) {
   return Json{{ "depth", spec.depth }, { "base_width", spec.base_width }, { "head", ToString( spec.head ) },
               { "patch_size", spec.patch_size }};
}

RegSpec RegSpecFromJson( Json const& j ) {
   RegSpec s;
   s.depth = j.value( "depth", s.depth );
   s.base_width = j.value( "base_width", s.base_width );
   s.head = ParseRegHead( j.value( "head", ToString( s.head )));
   s.patch_size = j.value( "patch_size", s.patch_size );
   s.Validate();
   return s;
}

MixingRatio ChannelSeverity( int channel, MixingRatio t ) {
   Require( channel == 0 || channel == 1, ErrorCode::kRange, "channel must be 0 or 1" );
   return channel == 0 ? t : t.Complement();
}

namespace {

nn::Tensor< float > ToTensor( Image const& x ) {
   nn::Tensor< float > t;
   t.Resize( 1, 1, x.height(), x.width());
   std::copy( x.data(), x.data() + x.size(), t.v.begin());
   return t;
}

} // namespace

// --- Generator ----------------------------------------------------------------

Generator::Generator( GenSpec const& spec, std::uint64_t seed, std::string table_fingerprint )
      : net_( std::make_shared< nn::UNet< float > const >( spec )), table_fingerprint_( std::move( table_fingerprint )) {
   params_.assign( net_->param_count(), 0.0f );
   net_->Init( params_, seed );
}

Generator::Generator( GenSpec const& spec, std::vector< float > params, std::string table_fingerprint )
      : net_( std::make_shared< nn::UNet< float > const >( spec )), params_( std::move( params )),
        table_fingerprint_( std::move( table_fingerprint )) {
   Require( params_.size() == net_->param_count(), ErrorCode::kShape,
            "generator expects " + std::to_string( net_->param_count()) + " parameters, got " +
            std::to_string( params_.size()));
}

Image Generator::Forward( Image const& x, double severity ) const {
   Require( valid(), ErrorCode::kState, "generator is not initialized" );
   float const s = static_cast< float >( MixingRatio( severity ).value());
   nn::Tensor< float > y;
   net_->Forward( params_, ToTensor( x ), std::span< float const >( &s, 1 ), y );
   Image out( x.height(), x.width());
   std::copy( y.v.begin(), y.v.end(), out.data());
   return out;
}

void Generator::Forward( nn::Tensor< float > const& x, std::span< float const > severity, nn::Tensor< float >& y ) const {
   Require( valid(), ErrorCode::kState, "generator is not initialized" );
   net_->Forward( params_, x, severity, y );
}

// --- Regressor ----------------------------------------------------------------

Regressor::Regressor( RegSpec const& spec, std::uint64_t seed, std::string table_fingerprint )
      : net_( std::make_shared< nn::RegressorNet< float > const >( spec )),
        table_fingerprint_( std::move( table_fingerprint )) {
   params_.assign( net_->param_count(), 0.0f );
   net_->Init( params_, seed );
}

Regressor::Regressor( RegSpec const& spec, std::vector< float > params, std::string table_fingerprint )
      : net_( std::make_shared< nn::RegressorNet< float > const >( spec )), params_( std::move( params )),
        table_fingerprint_( std::move( table_fingerprint )) {
   Require( params_.size() == net_->param_count(), ErrorCode::kShape,
            "regressor expects " + std::to_string( net_->param_count()) + " parameters, got " +
            std::to_string( params_.size()));
}

double Regressor::Forward( Image const& x ) const {
   return Forward( ToTensor( x )).front();
}

std::vector< double > Regressor::Forward( nn::Tensor< float > const& x ) const {
   Require( valid(), ErrorCode::kState, "regressor is not initialized" );
   nn::Tensor< float > y;
   net_->Forward( params_, x, y );
   return { y.v.begin(), y.v.end() };
}

// --- Bundle -------------------------------------------------------------------

namespace {

constexpr char const* kNondeterminism[] = {
   "float summation order depends on the SIMD width selected at build time; with SCSPLIT_NATIVE it also depends on heap alignment",
   "SCIN table bins are built in parallel but each bin owns its random stream, so the result does not depend on --jobs",
};

std::string BlobBytes( std::vector< float > const& params ) {
   std::string bytes( params.size() * sizeof( float ), '\0' );
   std::memcpy( bytes.data(), params.data(), bytes.size());
   return bytes;
}

std::vector< float > ReadBlob( std::filesystem::path const& path, std::string const& expected_hash ) {
   std::string const bytes = ReadTextFile( path );
   Require( Sha256Hex( bytes ) == expected_hash, ErrorCode::kFingerprint, path.string() + ": parameter hash mismatch" );
   Require( bytes.size() % sizeof( float ) == 0, ErrorCode::kIo, path.string() + ": size is not a multiple of 4" );
   std::vector< float > params( bytes.size() / sizeof( float ));
   std::memcpy( params.data(), bytes.data(), bytes.size());
   return params;
}

} // namespace

Generator const& ModelBundle::generator( int channel ) const {
   Require( channel == 0 || channel == 1, ErrorCode::kRange, "channel must be 0 or 1" );
   return channel == 0 ? gen0 : gen1;
}

Json ModelBundle::Manifest() const {
   Require( gen0.valid() && gen1.valid() && reg.valid(), ErrorCode::kState, "bundle is incomplete" );
   Json nondeterminism = Json::array();
   for( char const* s : kNondeterminism ) {
      nondeterminism.push_back( s );
   }
   return Json{
      { "version", kVersion },
      { "gen0", {{ "spec", ToJson( gen0.spec()) }, { "blob", "gen0.bin" }, { "sha256", Sha256Hex( BlobBytes( gen0.params())) },
                 { "param_count", gen0.params().size() }}},
      { "gen1", {{ "spec", ToJson( gen1.spec()) }, { "blob", "gen1.bin" }, { "sha256", Sha256Hex( BlobBytes( gen1.params())) },
                 { "param_count", gen1.params().size() }}},
      { "reg", {{ "spec", ToJson( reg.spec()) }, { "blob", "reg.bin" }, { "sha256", Sha256Hex( BlobBytes( reg.params())) },
                { "param_count", reg.params().size() }}},
      { "scin_table_ref", scin_table_fingerprint() },
      { "dataset_fingerprint", table.dataset_fingerprint },
      { "target_stats", target_stats.ToJson() },
      { "train_config", train_config },
      { "train_config_hash", JsonHash( train_config ) },
      { "learning_rate", train_config.value( "learning_rate", 1e-3 ) },
      { "metrics", metrics },
      { "nondeterminism_sources", nondeterminism },
   };
}

std::string ModelBundle::Fingerprint() const {
   return JsonHash( Manifest());
}

ModelBundle MakeBundle( Generator gen0, Generator gen1, Regressor reg, ScinTable table,
                        TargetChannelStats const& target_stats, Json train_config, Json metrics ) {
   Require( gen0.valid() && gen1.valid() && reg.valid(), ErrorCode::kState, "bundle components must be initialized" );
   Require( table.built(), ErrorCode::kState, "bundle needs a built SCIN table" );
   Require( gen0.spec().channel_index == 0 && gen1.spec().channel_index == 1, ErrorCode::kConfig,
            "gen0/gen1 channel indices must be 0 and 1" );
   std::string const fp = table.Fingerprint();
   Require( gen0.table_fingerprint() == fp, ErrorCode::kFingerprint, "gen0 was trained against a different SCIN table" );
   Require( gen1.table_fingerprint() == fp, ErrorCode::kFingerprint, "gen1 was trained against a different SCIN table" );
   Require( reg.table_fingerprint() == fp, ErrorCode::kFingerprint, "reg was trained against a different SCIN table" );
   ModelBundle b;
   b.gen0 = std::move( gen0 );
   b.gen1 = std::move( gen1 );
   b.reg = std::move( reg );
   b.table = std::move( table );
   b.target_stats = target_stats;
   b.train_config = std::move( train_config );
   b.metrics = std::move( metrics );
   return b;
}

void SaveBundle( ModelBundle const& bundle, std::filesystem::path const& dir ) {
   Json const manifest = bundle.Manifest();
   std::error_code ec;
   std::filesystem::create_directories( dir, ec );
   Require( !ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
   WriteFileAtomic( dir / "gen0.bin", BlobBytes( bundle.gen0.params()));
   WriteFileAtomic( dir / "gen1.bin", BlobBytes( bundle.gen1.params()));
   WriteFileAtomic( dir / "reg.bin", BlobBytes( bundle.reg.params()));
   WriteJsonFile( dir / "scin_table.json", bundle.table.ToJson());
   // Manifest last: its presence marks a complete bundle.
   WriteJsonFile( dir / "manifest.json", manifest );
}

ModelBundle LoadBundle( std::filesystem::path const& dir ) {
   Json const m = ReadJsonFile( dir / "manifest.json" );
   try {
      Require( m.at( "version" ).get< int >() == ModelBundle::kVersion, ErrorCode::kConfig,
               dir.string() + ": unsupported bundle version" );
      ScinTable table = ScinTable::FromJson( ReadJsonFile( dir / "scin_table.json" ));
      std::string const fp = table.Fingerprint();
      Require( fp == m.at( "scin_table_ref" ).get< std::string >(), ErrorCode::kFingerprint,
               dir.string() + ": SCIN table does not match the manifest fingerprint" );
      auto blob = [ & ]( char const* key ) {
         Json const& c = m.at( key );
         return ReadBlob( dir / c.at( "blob" ).get< std::string >(), c.at( "sha256" ).get< std::string >());
      };
      Generator gen0( GenSpecFromJson( m.at( "gen0" ).at( "spec" )), blob( "gen0" ), fp );
      Generator gen1( GenSpecFromJson( m.at( "gen1" ).at( "spec" )), blob( "gen1" ), fp );
      Regressor reg( RegSpecFromJson( m.at( "reg" ).at( "spec" )), blob( "reg" ), fp );
      return MakeBundle( std::move( gen0 ), std::move( gen1 ), std::move( reg ), std::move( table ),
                         TargetChannelStats::FromJson( m.at( "target_stats" )), m.at( "train_config" ),
                         m.value( "metrics", Json::object()));
   } catch( Json::exception const& e ) {
      Fail( ErrorCode::kConfig, dir.string() + ": invalid bundle manifest: " + e.what());
   }
}

} // namespace scsplit
