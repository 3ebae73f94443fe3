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

#include "scsplit/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>

namespace scsplit {

namespace fs = std::filesystem;

namespace {

// Sub-seed streams of the top-level seed.
constexpr std::uint64_t kSynthStream = 1;
constexpr std::uint64_t kScinStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kInferStream = 4;

constexpr char const* kRunRecord = "run.json";

std::string ToString( ReusePolicy p ) {
   return p == ReusePolicy::kReuse ? "reuse" : "reproduce";
}

std::vector< double > ReadDoubles( ConfigReader& r, char const* key, std::vector< double > fallback ) {
   auto v = r.Get< std::vector< double >>( key, fallback );
   if( v.empty()) {
      r.problems().Add( r.Path( key ) + ": must not be empty" );
   }
   return v;
}

bool InUnit( double v ) {
   return v >= 0.0 && v <= 1.0;
}

std::string UtcNow() {
   std::time_t const now = std::chrono::system_clock::to_time_t( std::chrono::system_clock::now());
   std::tm tm{};
   gmtime_r( &now, &tm );
   char buf[ 32 ];
   std::strftime( buf, sizeof( buf ), "%Y-%m-%dT%H:%M:%SZ", &tm );
   return buf;
}

// --- Stage bookkeeping ---------------------------------------------------------

// Slice of the effective config a stage depends on.
Json StageInputs( RunConfig const& cfg, std::string const& stage ) {
   Json const all = cfg.ToJson();
   Json in{{ "stage", stage }, { "dataset", all.at( "dataset" ) }, { "paths", all.at( "paths" ) }};
   if( stage == "synth" ) {
      return in;
   }
   in[ "scin" ] = all.at( "scin" );
   in[ "patch_size" ] = cfg.train.patch_size;
   if( stage == "build-scin" ) {
      return in;
   }
   in[ "train" ] = all.at( "train" );
   if( stage == "train" ) {
      return in;
   }
   in[ "infer" ] = all.at( "infer" );
   if( stage == "eval" ) {
      in[ "eval" ] = all.at( "eval" );
   } else if( stage == "sweep" ) {
      in[ "sweep" ] = all.at( "sweep" );
   }
   return in;
}

class Stage {
 public:
   Stage( RunConfig const& cfg, std::string name, fs::path dir )
         : cfg_( cfg ), name_( std::move( name )), dir_( std::move( dir )),
           hash_( JsonHash( StageInputs( cfg, name_ ))) {}

   fs::path const& dir() const { return dir_; }
   std::string const& hash() const { return hash_; }

   /// Summary of a previous identical run, when the policy allows reuse.
   std::optional< Json > Reusable() const {
      if( cfg_.policy != ReusePolicy::kReuse || !fs::exists( dir_ / kRunRecord )) {
         return std::nullopt;
      }
      Json const rec = ReadJsonFile( dir_ / kRunRecord );
      if( rec.value( "stage_hash", "" ) != hash_ ) {
         return std::nullopt;
      }
      for( auto const& f : rec.value( "outputs", Json::array())) {
         if( !fs::exists( f.get< std::string >())) {
            return std::nullopt;
         }
      }
      Json summary = rec.value( "summary", Json::object());
      summary[ "reused" ] = true;
      return summary;
   }

   void Begin() const {
      fs::create_directories( dir_ );
      WriteJsonFile( dir_ / "effective_config.json", cfg_.ToJson());
   }

   Json Finish( Json summary, std::vector< fs::path > const& outputs ) const {
      Json files = Json::array();
      for( auto const& p : outputs ) {
         files.push_back( p.string());
      }
      summary[ "command" ] = name_;
      summary[ "outputs" ] = files;
      summary[ "config_hash" ] = cfg_.Hash();
      summary[ "stage_hash" ] = hash_;
      summary[ "seed" ] = cfg_.seed;
      WriteJsonFile( dir_ / kRunRecord, Json{{ "command", name_ }, { "stage_hash", hash_ }, { "config_hash", cfg_.Hash() },
                                             { "seed", cfg_.seed }, { "outputs", files }, { "summary", summary }} );
      summary[ "reused" ] = false;
      return summary;
   }

 private:
   RunConfig const& cfg_;
   std::string name_;
   fs::path dir_;
   std::string hash_;
};

ChannelFrameSet LoadStageDataset( RunConfig const& cfg ) {
   fs::path const dir = cfg.DatasetDir();
   Require( fs::exists( dir ), ErrorCode::kIo, "dataset not found at " + dir.string() + " (run synth first)" );
   return LoadDataset( dir, cfg.dataset.clip_quantile );
}

ScinTable LoadStageTable( RunConfig const& cfg ) {
   fs::path const path = cfg.TablePath();
   Require( fs::exists( path ), ErrorCode::kIo, "SCIN table not found at " + path.string() + " (run build-scin first)" );
   return ScinTable::FromJson( ReadJsonFile( path ));
}

ModelBundle LoadStageBundle( RunConfig const& cfg ) {
   fs::path const dir = cfg.BundleDir();
   Require( fs::exists( dir / "manifest.json" ), ErrorCode::kIo,
            "model bundle not found at " + dir.string() + " (run train first)" );
   return LoadBundle( dir );
}

void Emit( ProgressSink const& progress, Json const& event ) {
   if( progress ) {
      progress( event );
   }
}

EmitOptions FormatOptions( RunConfig const& cfg ) {
   EmitOptions e;
   e.csv = cfg.format != "json";
   e.json = cfg.format != "csv";
   e.plot_data = cfg.eval.plot_data;
   return e;
}

Image MixFrame( Image const& c0, Image const& c1, double t ) {
   return Mix( c0, c1, MixingRatio( t ));
}

std::string Label( double t ) {
   char buf[ 32 ];
   std::snprintf( buf, sizeof( buf ), "t%.2f", t );
   return buf;
}

} // namespace

// --- RunConfig ----------------------------------------------------------------

fs::path RunConfig::DatasetDir() const {
   if( !dataset_dir.empty()) {
      return dataset_dir;
   }
   if( !dataset.synth && !dataset.manifest.empty()) {
      return dataset.manifest;
   }
   return out / "dataset";
}

fs::path RunConfig::TablePath() const {
   return table_path.empty() ? out / "scin" / "scin_table.json" : table_path;
}

fs::path RunConfig::BundleDir() const {
   return bundle_dir.empty() ? out / "bundle" : bundle_dir;
}

fs::path RunConfig::AcquisitionManifest() const {
   return acquisition_manifest.empty() ? out / "dataset" / "acquisitions" / "manifest.json" : acquisition_manifest;
}

Json RunConfig::ToJson() const {
   Json ds = Json::object();
   if( dataset.synth ) {
      ds[ "synth" ] = dataset.synth->ToJson();
   } else {
      ds[ "manifest" ] = dataset.manifest.string();
   }
   ds[ "clip_quantile" ] = dataset.clip_quantile ? Json( *dataset.clip_quantile ) : Json();
   ds[ "demo_t" ] = dataset.demo_t;
   Json regimes = Json::array();
   for( auto const& r : eval.regimes ) {
      regimes.push_back( Json{{ "name", r.name }, { "w", r.w_values }} );
   }
   return Json{
      { "seed", seed },
      { "out", out.string() },
      { "jobs", jobs },
      { "format", format },
      { "policy", ToString( policy ) },
      { "dataset", ds },
      { "scin", {{ "n_bins", scin.n_bins }, { "samples_per_bin", scin.samples_per_bin },
                 { "channel_stat_samples", scin.channel_stat_samples }, { "seed", scin.seed }} },
      { "train", train.ToJson() },
      { "infer", infer.ToJson() },
      { "eval", {{ "regimes", regimes }, { "variants", eval.variants }, { "metrics", eval.metrics },
                 { "plot_data", eval.plot_data }, { "wall_clock_timestamp", eval.wall_clock_timestamp }} },
      { "sweep", {{ "actual_w", sweep.actual_w }, { "assumed_w", sweep.assumed_w }} },
      { "paths", {{ "dataset", dataset_dir.string() }, { "table", table_path.string() },
                  { "bundle", bundle_dir.string() }, { "acquisitions", acquisition_manifest.string() }} },
   };
}

std::string RunConfig::Hash() const {
   Json j = ToJson();
   // Where results land and how many threads computed them does not change them.
   j.erase( "out" );
   j.erase( "jobs" );
   j.erase( "format" );
   j.erase( "policy" );
   return JsonHash( j );
}

RunConfig RunConfig::FromJson( Json const& j ) {
   Problems p;
   if( !j.is_object()) {
      Fail( ErrorCode::kConfig, "run config must be a JSON object" );
   }
   ConfigReader r( j, "", p );
   RunConfig c;
   c.seed = r.Get< std::uint64_t >( "seed", c.seed );
   c.out = r.Get< std::string >( "out", "" );
   c.jobs = r.Get( "jobs", c.jobs );
   p.Check( c.jobs >= 1, "jobs must be >= 1" );
   c.format = r.Get( "format", c.format );
   p.Check( c.format == "csv" || c.format == "json" || c.format == "both", "format must be csv, json or both" );
   std::string const policy = r.Get< std::string >( "policy", "reproduce" );
   if( policy == "reuse" ) {
      c.policy = ReusePolicy::kReuse;
   } else if( policy != "reproduce" ) {
      p.Add( "policy must be 'reproduce' or 'reuse'" );
   }

   ConfigReader ds = r.Child( "dataset" );
   std::string const manifest = ds.Get< std::string >( "manifest", "" );
   if( !manifest.empty()) {
      p.Check( !ds.Has( "synth" ), "dataset: give either synth or manifest, not both" );
      c.dataset.manifest = manifest;
      p.Check( fs::exists( c.dataset.manifest ), "dataset.manifest: " + manifest + " does not exist" );
   } else {
      Json sj = ds.Has( "synth" ) ? ds.json().at( "synth" ) : Json::object();
      if( !sj.contains( "seed" )) {
         sj[ "seed" ] = DeriveSeed( c.seed, kSynthStream );
      }
      p.Capture( [ & ] {
         SynthConfig s = SynthConfig::FromJson( sj );
         s.Validate();
         c.dataset.synth = s;
      } );
   }
   if( ds.Has( "clip_quantile" ) && !ds.json().at( "clip_quantile" ).is_null()) {
      double const q = ds.Get( "clip_quantile", 1.0 );
      p.Check( q > 0.0 && q <= 1.0, "dataset.clip_quantile must lie in (0, 1]" );
      c.dataset.clip_quantile = q;
   }
   c.dataset.demo_t = ds.Get( "demo_t", c.dataset.demo_t );
   for( double t : c.dataset.demo_t ) {
      p.Check( InUnit( t ), "dataset.demo_t values must lie in [0, 1]" );
   }

   ConfigReader sc = r.Child( "scin" );
   c.scin.n_bins = sc.Get( "n_bins", c.scin.n_bins );
   c.scin.samples_per_bin = sc.Get( "samples_per_bin", c.scin.samples_per_bin );
   c.scin.channel_stat_samples = sc.Get( "channel_stat_samples", c.scin.channel_stat_samples );
   c.scin.seed = sc.Get< std::uint64_t >( "seed", DeriveSeed( c.seed, kScinStream ));
   p.Check( c.scin.n_bins >= 1, "scin.n_bins must be >= 1" );
   p.Check( c.scin.samples_per_bin >= 1, "scin.samples_per_bin must be >= 1" );
   p.Check( c.scin.channel_stat_samples >= 1, "scin.channel_stat_samples must be >= 1" );

   Json tj = r.Has( "train" ) ? j.at( "train" ) : Json::object();
   if( tj.is_object() && !tj.contains( "seed" )) {
      tj[ "seed" ] = DeriveSeed( c.seed, kTrainStream );
   }
   c.train = TrainConfig::FromJson( ConfigReader( tj, "train", p ));
   c.scin.patch_size = c.train.patch_size;
   c.scin.jobs = c.jobs;

   Json ij = r.Has( "infer" ) ? j.at( "infer" ) : Json::object();
   if( ij.is_object() && !ij.contains( "seed" )) {
      ij[ "seed" ] = DeriveSeed( c.seed, kInferStream );
   }
   c.infer = InferenceConfig::FromJson( ConfigReader( ij, "infer", p ));

   ConfigReader ev = r.Child( "eval" );
   if( ev.Has( "regimes" )) {
      c.eval.regimes.clear();
      for( auto const& rj : ev.json().at( "regimes" )) {
         try {
            c.eval.regimes.push_back( { rj.at( "name" ).get< std::string >(), rj.at( "w" ).get< std::vector< double >>() } );
         } catch( Json::exception const& ) {
            p.Add( "eval.regimes: each entry needs a name and a w list" );
         }
      }
   }
   p.Capture( [ & ] { ValidateRegimes( c.eval.regimes ); } );
   c.eval.variants = ev.Get( "variants", c.eval.variants );
   p.Check( !c.eval.variants.empty(), "eval.variants must not be empty" );
   for( auto const& v : c.eval.variants ) {
      p.Capture( [ & ] { static_cast< void >( c.infer.WithVariant( v )); } );
   }
   c.eval.metrics = ev.Get( "metrics", c.eval.metrics );
   p.Check( !c.eval.metrics.empty(), "eval.metrics must not be empty" );
   for( auto const& m : c.eval.metrics ) {
      p.Check( m == "psnr" || m == "ms_ssim", "eval.metrics: unknown metric '" + m + "'" );
   }
   c.eval.plot_data = ev.Get( "plot_data", c.eval.plot_data );
   c.eval.wall_clock_timestamp = ev.Get( "wall_clock_timestamp", c.eval.wall_clock_timestamp );

   ConfigReader sw = r.Child( "sweep" );
   c.sweep.actual_w = ReadDoubles( sw, "actual_w", c.sweep.actual_w );
   c.sweep.assumed_w = ReadDoubles( sw, "assumed_w", c.sweep.assumed_w );
   for( double w : c.sweep.actual_w ) {
      p.Check( InUnit( w ), "sweep.actual_w values must lie in [0, 1]" );
   }
   for( double w : c.sweep.assumed_w ) {
      p.Check( InUnit( w ), "sweep.assumed_w values must lie in [0, 1]" );
   }

   ConfigReader paths = r.Child( "paths" );
   c.dataset_dir = paths.Get< std::string >( "dataset", "" );
   c.table_path = paths.Get< std::string >( "table", "" );
   c.bundle_dir = paths.Get< std::string >( "bundle", "" );
   c.acquisition_manifest = paths.Get< std::string >( "acquisitions", "" );

   if( c.dataset.synth && c.train.patch_size > std::min( c.dataset.synth->height, c.dataset.synth->width )) {
      p.Add( "train.patch_size exceeds the synthetic frame size" );
   }
   if( c.dataset.synth && c.infer.tile.tile > std::min( c.dataset.synth->height, c.dataset.synth->width )) {
      p.Add( "infer.tile.size exceeds the synthetic frame size" );
   }
   p.ThrowIfAny( "run config" );
   return c;
}

RunConfig LoadRunConfig( std::optional< fs::path > const& config_file, Json const& overrides ) {
   Json j = Json::object();
   if( config_file ) {
      j = ReadJsonFile( *config_file );
      Require( j.is_object(), ErrorCode::kConfig, config_file->string() + ": run config must be a JSON object" );
      // Relative dataset and path entries are taken relative to the config file.
      fs::path const base = config_file->parent_path();
      auto rebase = [ & ]( Json& obj, char const* key ) {
         if( obj.is_object() && obj.contains( key ) && obj.at( key ).is_string()) {
            fs::path const v = obj.at( key ).get< std::string >();
            if( !v.empty() && v.is_relative()) {
               obj[ key ] = ( base / v ).lexically_normal().string();
            }
         }
      };
      if( j.contains( "dataset" )) {
         rebase( j[ "dataset" ], "manifest" );
      }
      if( j.contains( "paths" )) {
         for( char const* key : { "dataset", "table", "bundle", "acquisitions" } ) {
            rebase( j[ "paths" ], key );
         }
      }
   }
   if( !overrides.is_null()) {
      Require( overrides.is_object(), ErrorCode::kConfig, "overrides must be a JSON object" );
      j.merge_patch( overrides );
   }
   RunConfig c = RunConfig::FromJson( j );
   if( c.out.empty()) {
      char const* cache = std::getenv( "SCSPLIT_CACHE_DIR" );
      fs::path const root = cache && *cache ? fs::path( cache ) : fs::path( "scsplit_runs" );
      c.out = root / ( "run-" + c.Hash().substr( 0, 12 ));
   }
   return c;
}

// --- Acquisitions --------------------------------------------------------------

std::vector< Image > ReadAcquisitionFile( fs::path const& path ) {
   std::string ext = path.extension().string();
   std::transform( ext.begin(), ext.end(), ext.begin(), []( unsigned char ch ) { return std::tolower( ch ); } );
   if( ext == ".npy" ) {
      return ReadNpyStack( path );
   }
   Require( ext == ".tif" || ext == ".tiff", ErrorCode::kIngest, path.string() + ": expected .tif, .tiff or .npy" );
   std::vector< Image > frames;
   auto pages = ReadTiffPages( path );
   for( std::size_t i = 0; i < pages.size(); ++i ) {
      Require( pages[ i ].channels.size() == 1, ErrorCode::kIngest,
               path.string() + ": page " + std::to_string( i ) + " is not single-channel" );
      frames.push_back( std::move( pages[ i ].channels[ 0 ] ));
   }
   return frames;
}

std::vector< AcquisitionInput > LoadAcquisitions( fs::path const& manifest ) {
   Json const m = ReadJsonFile( manifest );
   fs::path const base = manifest.parent_path();
   Json entries = m.contains( "acquisitions" ) ? m.at( "acquisitions" ) : Json::array( { m } );
   Require( entries.is_array() && !entries.empty(), ErrorCode::kIngest, manifest.string() + ": no acquisitions listed" );
   std::vector< AcquisitionInput > out;
   for( auto const& e : entries ) {
      AcquisitionInput acq;
      try {
         acq.name = e.value( "name", "acquisition" + std::to_string( out.size()));
         Json files = e.at( "files" );
         if( files.is_string()) {
            files = Json::array( { files } );
         }
         for( auto const& f : files ) {
            auto frames = ReadAcquisitionFile( base / f.get< std::string >());
            std::move( frames.begin(), frames.end(), std::back_inserter( acq.frames ));
         }
      } catch( Json::exception const& ex ) {
         Fail( ErrorCode::kIngest, manifest.string() + ": bad acquisition entry (" + ex.what() + ")" );
      }
      acq.Validate();
      out.push_back( std::move( acq ));
   }
   return out;
}

// --- Commands ------------------------------------------------------------------

Json CmdSynth( RunConfig const& cfg, ProgressSink const& progress ) {
   Require( cfg.dataset.synth.has_value(), ErrorCode::kConfig, "synth needs a dataset.synth section" );
   Stage stage( cfg, "synth", cfg.out / "dataset" );
   if( auto reused = stage.Reusable()) {
      return *reused;
   }
   stage.Begin();
   ChannelFrameSet const data = SynthesizeDataset( *cfg.dataset.synth );
   SaveDataset( data, stage.dir(), Json{{ "synth", cfg.dataset.synth->ToJson() }, { "config_hash", cfg.Hash() },
                                         { "seed", cfg.dataset.synth->seed }} );
   std::vector< fs::path > outputs{ stage.dir() / "manifest.json", stage.dir() / "c0.npy", stage.dir() / "c1.npy" };

   // Test-split acquisitions at known t, ready for `infer`.
   fs::path const acq_dir = stage.dir() / "acquisitions";
   fs::create_directories( acq_dir );
   ChannelFrameSet const test = data.Subset( Split::kTest );
   Json entries = Json::array();
   for( double t : cfg.dataset.demo_t ) {
      std::vector< Image > frames;
      for( std::size_t f = 0; f < test.size(); ++f ) {
         frames.push_back( MixFrame( test.frames_c0[ f ], test.frames_c1[ f ], t ));
      }
      std::string const name = "test_" + Label( t );
      WriteNpyStack( acq_dir / ( name + ".npy" ), frames );
      entries.push_back( Json{{ "name", name }, { "files", Json::array( { name + ".npy" } ) }, { "t", t }} );
      outputs.push_back( acq_dir / ( name + ".npy" ));
   }
   WriteJsonFile( acq_dir / "manifest.json", Json{{ "acquisitions", entries }} );
   outputs.push_back( acq_dir / "manifest.json" );
   Emit( progress, Json{{ "event", "synth" }, { "frames", data.size() }} );
   return stage.Finish( Json{{ "dataset", stage.dir().string() }, { "fingerprint", data.Fingerprint() },
                             { "frames", data.size() }, { "acquisitions", ( acq_dir / "manifest.json" ).string() }},
                        outputs );
}

Json CmdBuildScin( RunConfig const& cfg, ProgressSink const& progress ) {
   Stage stage( cfg, "build-scin", cfg.TablePath().parent_path());
   if( auto reused = stage.Reusable()) {
      return *reused;
   }
   ChannelFrameSet const data = LoadStageDataset( cfg );
   stage.Begin();
   ScinTable const table = BuildScinTable( data, cfg.scin );
   WriteJsonFile( cfg.TablePath(), table.ToJson());
   Emit( progress, Json{{ "event", "scin" }, { "n_bins", table.n_bins }} );
   return stage.Finish( Json{{ "table", cfg.TablePath().string() }, { "fingerprint", table.Fingerprint() },
                             { "dataset_fingerprint", table.dataset_fingerprint }},
                        { cfg.TablePath() } );
}

Json CmdTrain( RunConfig const& cfg, ProgressSink const& progress ) {
   Stage stage( cfg, "train", cfg.out / "train" );
   if( auto reused = stage.Reusable()) {
      return *reused;
   }
   ChannelFrameSet const data = LoadStageDataset( cfg );
   ScinTable const table = LoadStageTable( cfg );
   stage.Begin();
   fs::path const log_path = stage.dir() / "train_log.jsonl";
   std::ofstream log_file( log_path, std::ios::trunc );
   Require( log_file.good(), ErrorCode::kIo, "cannot write " + log_path.string());
   TrainLogSink const log = [ & ]( Json const& event ) {
      log_file << event.dump() << '\n';
      Emit( progress, event );
   };
   TargetChannelStats const target_stats = ComputeTargetStats( data );
   GeneratorPair gens = TrainGenerators( data, table, target_stats, cfg.train, log );
   RegressorResult reg = TrainRegressor( data, table, cfg.train, log );
   log_file.flush();

   Json metrics{
      { "reg_mae_val", RegressorMae( reg.reg, data, table, Split::kVal, cfg.train.patch_size, 16, DeriveSeed( cfg.train.seed, 90 )) },
      { "reg_mae_test", RegressorMae( reg.reg, data, table, Split::kTest, cfg.train.patch_size, 16, DeriveSeed( cfg.train.seed, 91 )) },
   };
   TrainReport report = gens.report;
   report.Merge( reg.report );
   metrics[ "best_val" ] = report.ToJson().at( "best_val" );
   ModelBundle const bundle = MakeBundle( std::move( gens.gen0 ), std::move( gens.gen1 ), std::move( reg.reg ), table,
                                          target_stats, cfg.train.ToJson(), metrics );
   SaveBundle( bundle, cfg.BundleDir());
   Json full_report = report.ToJson();
   full_report[ "wall_clock_seconds" ] = report.wall_clock_seconds;
   WriteJsonFile( stage.dir() / "train_report.json", full_report );
   return stage.Finish( Json{{ "bundle", cfg.BundleDir().string() }, { "fingerprint", bundle.Fingerprint() },
                             { "metrics", metrics }},
                        { cfg.BundleDir() / "manifest.json", log_path, stage.dir() / "train_report.json" } );
}

Json CmdInfer( RunConfig const& cfg, ProgressSink const& progress ) {
   ModelBundle const bundle = LoadStageBundle( cfg );
   fs::path const manifest = cfg.AcquisitionManifest();
   Require( fs::exists( manifest ), ErrorCode::kIo, "acquisition manifest not found at " + manifest.string());
   Json const m = ReadJsonFile( manifest );
   std::vector< AcquisitionInput > const acquisitions = LoadAcquisitions( manifest );

   Stage stage( cfg, "infer", cfg.out / "infer" );
   stage.Begin();
   std::vector< fs::path > outputs;
   Json results = Json::array();
   Json const entries = m.contains( "acquisitions" ) ? m.at( "acquisitions" ) : Json::array( { m } );
   for( std::size_t i = 0; i < acquisitions.size(); ++i ) {
      AcquisitionInput const& acq = acquisitions[ i ];
      UnmixResult const res = Unmix( acq, bundle, cfg.infer );
      fs::path const dir = stage.dir() / acq.name;
      fs::create_directories( dir );
      WriteTiffStack( dir / "c0_hat.tif", res.c0_hat );
      WriteTiffStack( dir / "c1_hat.tif", res.c1_hat );
      Json sidecar{
         { "name", acq.name },
         { "t_estimate", res.t_estimate },
         { "frame_t", res.frame_t },
         { "per_patch_t", SummarizeEstimates( res.per_patch.t ) },
         { "input_mean", res.input_mean },
         { "input_std", res.input_std },
         { "config", res.config },
         { "bundle_fingerprint", bundle.Fingerprint() },
         { "config_hash", cfg.Hash() },
         { "seed", cfg.infer.seed },
      };
      if( !res.warning.empty()) {
         sidecar[ "warning" ] = res.warning;
      }
      if( entries[ i ].contains( "t" )) {
         sidecar[ "t_true" ] = entries[ i ].at( "t" );
      }
      WriteJsonFile( dir / "result.json", sidecar );
      outputs.insert( outputs.end(), { dir / "c0_hat.tif", dir / "c1_hat.tif", dir / "result.json" } );
      results.push_back( Json{{ "name", acq.name }, { "t_estimate", res.t_estimate }, { "frames", acq.frames.size() }} );
      Emit( progress, Json{{ "event", "infer" }, { "name", acq.name }, { "t_estimate", res.t_estimate }} );
   }
   return stage.Finish( Json{{ "dir", stage.dir().string() }, { "acquisitions", results }}, outputs );
}

Json CmdEval( RunConfig const& cfg, ProgressSink const& progress ) {
   Stage stage( cfg, "eval", cfg.out / "eval" );
   if( auto reused = stage.Reusable()) {
      return *reused;
   }
   ModelBundle const bundle = LoadStageBundle( cfg );
   ChannelFrameSet const test = LoadStageDataset( cfg ).Subset( Split::kTest );
   stage.Begin();
   EvalOptions options;
   options.regimes = cfg.eval.regimes;
   options.variants = cfg.eval.variants;
   options.metrics = cfg.eval.metrics;
   options.base = cfg.infer;
   options.progress = progress;
   EvalReport report = EvaluateRegimes( bundle, test, options );
   report.metadata[ "config_hash" ] = cfg.Hash();
   report.metadata[ "timestamp" ] = cfg.eval.wall_clock_timestamp ? UtcNow() : "1970-01-01T00:00:00Z";
   auto const outputs = EmitReport( report, stage.dir(), FormatOptions( cfg ));

   Json gains = Json::object();
   bool const has_fixed = std::find( cfg.eval.variants.begin(), cfg.eval.variants.end(), "fixed:0.5" ) != cfg.eval.variants.end();
   bool const has_full = std::find( cfg.eval.variants.begin(), cfg.eval.variants.end(), "scsplit" ) != cfg.eval.variants.end();
   bool const has_psnr = std::find( cfg.eval.metrics.begin(), cfg.eval.metrics.end(), "psnr" ) != cfg.eval.metrics.end();
   if( has_fixed && has_full && has_psnr ) {
      for( auto const& regime : cfg.eval.regimes ) {
         for( double w : regime.w_values ) {
            char key[ 16 ];
            std::snprintf( key, sizeof( key ), "%.2f", w );
            gains[ key ] = report.CellMean( "scsplit", w, "psnr" ) - report.CellMean( "fixed:0.5", w, "psnr" );
         }
      }
   }
   return stage.Finish( Json{{ "dir", stage.dir().string() }, { "rows", report.rows.size() },
                             { "psnr_gain_over_fixed", gains }},
                        outputs );
}

Json CmdSweep( RunConfig const& cfg, ProgressSink const& progress ) {
   Stage stage( cfg, "sweep", cfg.out / "sweep" );
   if( auto reused = stage.Reusable()) {
      return *reused;
   }
   ModelBundle const bundle = LoadStageBundle( cfg );
   ChannelFrameSet const test = LoadStageDataset( cfg ).Subset( Split::kTest );
   stage.Begin();
   SweepTable table = DegradationSweep( bundle, test, cfg.sweep.actual_w, cfg.sweep.assumed_w, cfg.infer, progress );
   table.metadata[ "config_hash" ] = cfg.Hash();
   auto const outputs = EmitSweep( table, stage.dir(), FormatOptions( cfg ));
   Json argmax = Json::object();
   for( double aw : cfg.sweep.actual_w ) {
      char key[ 16 ];
      std::snprintf( key, sizeof( key ), "%.2f", aw );
      argmax[ key ] = table.ArgmaxAssumed( aw );
   }
   return stage.Finish( Json{{ "dir", stage.dir().string() }, { "argmax_assumed_w", argmax }}, outputs );
}

Json CmdRun( RunConfig const& cfg, ProgressSink const& progress ) {
   Json out = Json::object();
   if( cfg.dataset.synth ) {
      out[ "synth" ] = CmdSynth( cfg, progress );
   }
   out[ "build-scin" ] = CmdBuildScin( cfg, progress );
   out[ "train" ] = CmdTrain( cfg, progress );
   out[ "eval" ] = CmdEval( cfg, progress );
   out[ "sweep" ] = CmdSweep( cfg, progress );
   return out;
}

std::vector< std::string > CommandNames() {
   return { "synth", "build-scin", "train", "infer", "eval", "sweep", "run" };
}

Json RunCommand( std::string const& command, RunConfig const& cfg, ProgressSink const& progress ) {
   if( command == "synth" ) return CmdSynth( cfg, progress );
   if( command == "build-scin" ) return CmdBuildScin( cfg, progress );
   if( command == "train" ) return CmdTrain( cfg, progress );
   if( command == "infer" ) return CmdInfer( cfg, progress );
   if( command == "eval" ) return CmdEval( cfg, progress );
   if( command == "sweep" ) return CmdSweep( cfg, progress );
   if( command == "run" ) return CmdRun( cfg, progress );
   Fail( ErrorCode::kConfig, "unknown command '" + command + "'" );
}

} // namespace scsplit
