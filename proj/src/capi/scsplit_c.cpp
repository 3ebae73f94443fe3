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

#include "scsplit/scsplit.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <stdexcept>
#include <string>

#include "scsplit/pipeline.hpp"

struct scs_dataset {
   scsplit::ChannelFrameSet fs;
};

struct scs_table {
   scsplit::ScinTable table;
};

struct scs_bundle {
   scsplit::ModelBundle bundle;
};

namespace {

thread_local std::string last_error;

scs_status Status( scsplit::ErrorCode code ) {
   return static_cast< scs_status >( static_cast< int >( code ));
}

scs_status SetError( scs_status status, std::string msg ) {
   last_error = std::move( msg );
   return status;
}

// Runs `fn`, mapping exceptions onto status codes.
template< typename F >
scs_status Call( F&& fn ) {
   last_error.clear();
   try {
      fn();
      return SCS_OK;
   } catch( scsplit::Error const& e ) {
      return SetError( Status( e.code()), e.what());
   } catch( scsplit::Json::exception const& e ) {
      return SetError( SCS_ERR_CONFIG, std::string( "JSON: " ) + e.what());
   } catch( std::invalid_argument const& e ) {
      return SetError( SCS_ERR_ARGUMENT, e.what());
   } catch( std::bad_alloc const& ) {
      return SetError( SCS_ERR_INTERNAL, "out of memory" );
   } catch( std::exception const& e ) {
      return SetError( SCS_ERR_INTERNAL, e.what());
   } catch( ... ) {
      return SetError( SCS_ERR_INTERNAL, "unknown exception" );
   }
}

void NeedArg( bool ok, char const* what ) {
   if( !ok ) {
      throw std::invalid_argument( what );
   }
}

char* CopyString( std::string const& s ) {
   char* out = static_cast< char* >( std::malloc( s.size() + 1 ));
   if( !out ) {
      throw std::bad_alloc();
   }
   std::memcpy( out, s.c_str(), s.size() + 1 );
   return out;
}

void Store( char** out, scsplit::Json const& j ) {
   if( out ) {
      *out = CopyString( j.dump());
   }
}

scsplit::Json ParseOptional( char const* text ) {
   if( !text || !*text ) {
      return scsplit::Json::object();
   }
   return scsplit::Json::parse( text );
}

std::optional< std::filesystem::path > OptionalPath( char const* path ) {
   if( !path || !*path ) {
      return std::nullopt;
   }
   return std::filesystem::path( path );
}

scsplit::Image ImageFrom( float const* data, int height, int width ) {
   scsplit::Require( height > 0 && width > 0, scsplit::ErrorCode::kShape, "height and width must be positive" );
   scsplit::Image img( height, width );
   std::memcpy( img.data(), data, img.size() * sizeof( float ));
   return img;
}

scsplit::AcquisitionInput AcquisitionFrom( float const* frames, std::size_t n, int height, int width ) {
   scsplit::AcquisitionInput acq;
   acq.name = "capi";
   std::size_t const stride = static_cast< std::size_t >( height ) * static_cast< std::size_t >( width );
   for( std::size_t i = 0; i < n; ++i ) {
      acq.frames.push_back( ImageFrom( frames + i * stride, height, width ));
   }
   return acq;
}

} // namespace

extern "C" {

char const* scs_version( void ) {
   return "0.1.0";
}

char const* scs_status_name( scs_status status ) {
   switch( status ) {
      case SCS_OK: return "ok";
      case SCS_ERR_CONFIG: return "config";
      case SCS_ERR_IO: return "io";
      case SCS_ERR_INGEST: return "ingest";
      case SCS_ERR_SHAPE: return "shape";
      case SCS_ERR_FINGERPRINT: return "fingerprint";
      case SCS_ERR_DIVERGED: return "diverged";
      case SCS_ERR_STATE: return "state";
      case SCS_ERR_RANGE: return "range";
      case SCS_ERR_ARGUMENT: return "argument";
      case SCS_ERR_INTERNAL: return "internal";
   }
   return "unknown";
}

char const* scs_last_error( void ) {
   return last_error.c_str();
}

void scs_free_string( char* s ) {
   std::free( s );
}

char const* scs_command_names( void ) {
   return "synth build-scin train infer eval sweep run";
}

scs_status scs_effective_config( char const* config_path, char const* overrides_json, char** out_json ) {
   return Call( [ & ] {
      NeedArg( out_json, "out_json is null" );
      auto const cfg = scsplit::LoadRunConfig( OptionalPath( config_path ), ParseOptional( overrides_json ));
      Store( out_json, cfg.ToJson());
   } );
}

scs_status scs_run_command( char const* command, char const* config_path, char const* overrides_json,
                            scs_progress_fn progress, void* user, char** result_json ) {
   return Call( [ & ] {
      NeedArg( command, "command is null" );
      auto const cfg = scsplit::LoadRunConfig( OptionalPath( config_path ), ParseOptional( overrides_json ));
      scsplit::ProgressSink sink;
      if( progress ) {
         sink = [ progress, user ]( scsplit::Json const& event ) { progress( event.dump().c_str(), user ); };
      }
      Store( result_json, scsplit::RunCommand( command, cfg, sink ));
   } );
}

scs_status scs_dataset_synthesize( char const* synth_json, scs_dataset** out ) {
   return Call( [ & ] {
      NeedArg( out, "out is null" );
      auto const cfg = scsplit::SynthConfig::FromJson( ParseOptional( synth_json ));
      *out = new scs_dataset{ scsplit::SynthesizeDataset( cfg ) };
   } );
}

scs_status scs_dataset_load( char const* path, double clip_quantile, scs_dataset** out ) {
   return Call( [ & ] {
      NeedArg( path && out, "path or out is null" );
      std::optional< double > q;
      if( clip_quantile > 0.0 && clip_quantile <= 1.0 ) {
         q = clip_quantile;
      }
      *out = new scs_dataset{ scsplit::LoadDataset( path, q ) };
   } );
}

void scs_dataset_free( scs_dataset* ds ) {
   delete ds;
}

scs_status scs_dataset_info( scs_dataset const* ds, char** out_json ) {
   return Call( [ & ] {
      NeedArg( ds && out_json, "dataset or out_json is null" );
      scsplit::Json splits = scsplit::Json::array();
      for( auto s : ds->fs.splits ) {
         splits.push_back( scsplit::ToString( s ));
      }
      int const h = ds->fs.size() ? ds->fs.frames_c0[ 0 ].height() : 0;
      int const w = ds->fs.size() ? ds->fs.frames_c0[ 0 ].width() : 0;
      Store( out_json, scsplit::Json{{ "name", ds->fs.name }, { "frames", ds->fs.size() }, { "height", h }, { "width", w },
                                     { "splits", splits }, { "fingerprint", ds->fs.Fingerprint() }} );
   } );
}

scs_status scs_dataset_frame( scs_dataset const* ds, size_t index, int channel, float* out ) {
   return Call( [ & ] {
      NeedArg( ds && out, "dataset or out is null" );
      scsplit::Require( index < ds->fs.size(), scsplit::ErrorCode::kRange, "frame index out of range" );
      scsplit::Require( channel == 0 || channel == 1, scsplit::ErrorCode::kRange, "channel must be 0 or 1" );
      auto const& img = channel == 0 ? ds->fs.frames_c0[ index ] : ds->fs.frames_c1[ index ];
      std::memcpy( out, img.data(), img.size() * sizeof( float ));
   } );
}

scs_status scs_mix( float const* c0, float const* c1, size_t n, double t, float* out ) {
   return Call( [ & ] {
      NeedArg( c0 && c1 && out, "null buffer" );
      scsplit::Require( n > 0 && n <= static_cast< std::size_t >( INT32_MAX ), scsplit::ErrorCode::kShape, "bad pixel count" );
      int const len = static_cast< int >( n );
      auto const mixed = scsplit::Mix( ImageFrom( c0, 1, len ), ImageFrom( c1, 1, len ), scsplit::MixingRatio( t ));
      std::memcpy( out, mixed.data(), n * sizeof( float ));
   } );
}

scs_status scs_table_build( scs_dataset const* ds, char const* options_json, scs_table** out ) {
   return Call( [ & ] {
      NeedArg( ds && out, "dataset or out is null" );
      scsplit::Json const j = ParseOptional( options_json );
      scsplit::ScinBuildOptions o;
      o.patch_size = j.value( "patch_size", o.patch_size );
      o.n_bins = j.value( "n_bins", o.n_bins );
      o.samples_per_bin = j.value( "samples_per_bin", o.samples_per_bin );
      o.channel_stat_samples = j.value( "channel_stat_samples", o.channel_stat_samples );
      o.seed = j.value( "seed", o.seed );
      o.jobs = j.value( "jobs", o.jobs );
      *out = new scs_table{ scsplit::BuildScinTable( ds->fs, o ) };
   } );
}

scs_status scs_table_load( char const* path, scs_table** out ) {
   return Call( [ & ] {
      NeedArg( path && out, "path or out is null" );
      *out = new scs_table{ scsplit::ScinTable::FromJson( scsplit::ReadJsonFile( path )) };
   } );
}

scs_status scs_table_save( scs_table const* table, char const* path ) {
   return Call( [ & ] {
      NeedArg( table && path, "table or path is null" );
      scsplit::WriteJsonFile( path, table->table.ToJson());
   } );
}

void scs_table_free( scs_table* table ) {
   delete table;
}

scs_status scs_table_json( scs_table const* table, char** out_json ) {
   return Call( [ & ] {
      NeedArg( table && out_json, "table or out_json is null" );
      Store( out_json, table->table.ToJson());
   } );
}

scs_status scs_table_bin_index( scs_table const* table, double t, int* out ) {
   return Call( [ & ] {
      NeedArg( table && out, "table or out is null" );
      *out = table->table.BinIndex( scsplit::MixingRatio( t ));
   } );
}

scs_status scs_table_normalize( scs_table const* table, double t, float const* in, int height, int width, float* out ) {
   return Call( [ & ] {
      NeedArg( table && in && out, "null argument" );
      auto const r = scsplit::Normalize( ImageFrom( in, height, width ), scsplit::MixingRatio( t ), table->table );
      std::memcpy( out, r.data(), r.size() * sizeof( float ));
   } );
}

scs_status scs_table_denormalize( scs_table const* table, double t, float const* in, int height, int width, float* out ) {
   return Call( [ & ] {
      NeedArg( table && in && out, "null argument" );
      auto const r = scsplit::Denormalize( ImageFrom( in, height, width ), scsplit::MixingRatio( t ), table->table );
      std::memcpy( out, r.data(), r.size() * sizeof( float ));
   } );
}

scs_status scs_table_predict_variance( scs_table const* table, double t, double* out ) {
   return Call( [ & ] {
      NeedArg( table && out, "table or out is null" );
      *out = scsplit::PredictVariance( scsplit::MixingRatio( t ), table->table.channel_stats );
   } );
}

scs_status scs_bundle_load( char const* dir, scs_bundle** out ) {
   return Call( [ & ] {
      NeedArg( dir && out, "dir or out is null" );
      *out = new scs_bundle{ scsplit::LoadBundle( dir ) };
   } );
}

void scs_bundle_free( scs_bundle* bundle ) {
   delete bundle;
}

scs_status scs_bundle_manifest( scs_bundle const* bundle, char** out_json ) {
   return Call( [ & ] {
      NeedArg( bundle && out_json, "bundle or out_json is null" );
      scsplit::Json m = bundle->bundle.Manifest();
      m[ "fingerprint" ] = bundle->bundle.Fingerprint();
      Store( out_json, m );
   } );
}

scs_status scs_estimate_t( scs_bundle const* bundle, float const* frames, size_t n_frames, int height, int width,
                           char const* infer_json, double* t_estimate ) {
   return Call( [ & ] {
      NeedArg( bundle && frames && t_estimate, "null argument" );
      auto const cfg = scsplit::InferenceConfig::FromJson( ParseOptional( infer_json ));
      scsplit::UnmixOptions options;
      options.channels = { false, false };
      auto const res = scsplit::Unmix( AcquisitionFrom( frames, n_frames, height, width ), bundle->bundle, cfg, options );
      *t_estimate = res.t_estimate;
   } );
}

scs_status scs_unmix( scs_bundle const* bundle, float const* frames, size_t n_frames, int height, int width,
                      char const* infer_json, float* c0_out, float* c1_out, double* t_estimate, char** result_json ) {
   return Call( [ & ] {
      NeedArg( bundle && frames, "bundle or frames is null" );
      auto const cfg = scsplit::InferenceConfig::FromJson( ParseOptional( infer_json ));
      scsplit::UnmixOptions options;
      options.channels = { c0_out != nullptr, c1_out != nullptr };
      auto const res = scsplit::Unmix( AcquisitionFrom( frames, n_frames, height, width ), bundle->bundle, cfg, options );
      std::size_t const stride = static_cast< std::size_t >( height ) * static_cast< std::size_t >( width );
      for( std::size_t i = 0; i < n_frames; ++i ) {
         if( c0_out ) {
            std::memcpy( c0_out + i * stride, res.c0_hat[ i ].data(), stride * sizeof( float ));
         }
         if( c1_out ) {
            std::memcpy( c1_out + i * stride, res.c1_hat[ i ].data(), stride * sizeof( float ));
         }
      }
      if( t_estimate ) {
         *t_estimate = res.t_estimate;
      }
      Store( result_json, scsplit::Json{{ "t_estimate", res.t_estimate }, { "frame_t", res.frame_t },
                                        { "per_patch_t", scsplit::SummarizeEstimates( res.per_patch.t ) },
                                        { "input_mean", res.input_mean }, { "input_std", res.input_std },
                                        { "warning", res.warning }, { "config", res.config }} );
   } );
}

} // extern "C"
