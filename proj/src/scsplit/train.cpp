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

#include "scsplit/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "scsplit/nn/optim.hpp"

namespace scsplit {

// --- TrainConfig --------------------------------------------------------------

GenSpec TrainConfig::MakeGenSpec( int channel ) const {
   GenSpec s;
   s.channel_index = channel;
   s.depth = gen_depth;
   s.base_width = gen_base_width;
   s.conditioning = conditioning;
   s.patch_size = patch_size;
   return s;
}

RegSpec TrainConfig::MakeRegSpec() const {
   RegSpec s;
   s.depth = reg_depth;
   s.base_width = reg_base_width;
   s.head = reg_head;
   s.patch_size = patch_size;
   return s;
}

void TrainConfig::Check( Problems& p ) const {
   p.Check( batch_size >= 1, "train.batch_size must be >= 1" );
   p.Check( max_steps >= 1, "train.max_steps must be >= 1" );
   p.Check( reg_max_steps >= 1, "train.reg_max_steps must be >= 1" );
   p.Check( learning_rate > 0.0 && std::isfinite( learning_rate ), "train.learning_rate must be > 0" );
   p.Check( optimizer == "adam", "train.optimizer: only 'adam' is supported" );
   p.Check( gen_loss == "mae", "train.gen_loss: only 'mae' is supported" );
   p.Check( reg_loss == "mse", "train.reg_loss: only 'mse' is supported" );
   p.Capture( [ & ] { t_sampler_gen.Validate(); } );
   p.Capture( [ & ] { noise.Validate(); } );
   p.Check( val_every >= 1, "train.val_every must be >= 1" );
   p.Check( patience >= 1, "train.patience must be >= 1" );
   p.Check( val_patches_per_t >= 1, "train.val_patches_per_t must be >= 1" );
   p.Check( probe_every >= 1, "train.probe_every must be >= 1" );
   p.Check( pool_size >= 0, "train.pool_size must be >= 0" );
   p.Capture( [ & ] { MakeGenSpec( 0 ).Validate(); } );
   p.Capture( [ & ] { MakeRegSpec().Validate(); } );
}

void TrainConfig::Validate() const {
   Problems p;
   Check( p );
   p.ThrowIfAny( "train config" );
}

Json TrainConfig::ToJson() const {
   return Json{
      { "batch_size", batch_size },
      { "max_steps", max_steps },
      { "reg_max_steps", reg_max_steps },
      { "learning_rate", learning_rate },
      { "optimizer", optimizer },
      { "gen_loss", gen_loss },
      { "reg_loss", reg_loss },
      { "t_sampler_gen", {{ "a", t_sampler_gen.a }, { "atom_location", t_sampler_gen.atom_location }}},
      { "t_sampler_reg", t_sampler_reg == RegTSampler::kUniform ? "uniform" : "eq3" },
      { "noise", {{ "epsilon", noise.epsilon }, { "enabled", noise.enabled }}},
      { "patch_size", patch_size },
      { "val_every", val_every },
      { "patience", patience },
      { "val_patches_per_t", val_patches_per_t },
      { "grad_clip", grad_clip },
      { "probe_every", probe_every },
      { "pool_size", pool_size },
      { "seed", seed },
      { "gen", {{ "depth", gen_depth }, { "base_width", gen_base_width }, { "conditioning_mode", ToString( conditioning ) }}},
      { "reg", {{ "depth", reg_depth }, { "base_width", reg_base_width }, { "head", ToString( reg_head ) }}},
   };
}

TrainConfig TrainConfig::FromJson( ConfigReader r ) {
   TrainConfig c;
   Problems& p = r.problems();
   c.batch_size = r.Get( "batch_size", c.batch_size );
   c.max_steps = r.Get( "max_steps", c.max_steps );
   c.reg_max_steps = r.Get( "reg_max_steps", c.reg_max_steps );
   c.learning_rate = r.Get( "learning_rate", c.learning_rate );
   c.optimizer = r.Get( "optimizer", c.optimizer );
   c.gen_loss = r.Get( "gen_loss", c.gen_loss );
   c.reg_loss = r.Get( "reg_loss", c.reg_loss );
   ConfigReader ts = r.Child( "t_sampler_gen" );
   c.t_sampler_gen.a = ts.Get( "a", c.t_sampler_gen.a );
   c.t_sampler_gen.atom_location = ts.Get( "atom_location", c.t_sampler_gen.atom_location );
   std::string const reg_sampler = r.Get< std::string >( "t_sampler_reg", "uniform" );
   if( reg_sampler == "uniform" ) {
      c.t_sampler_reg = RegTSampler::kUniform;
   } else if( reg_sampler == "eq3" ) {
      c.t_sampler_reg = RegTSampler::kEq3;
   } else {
      p.Add( r.Path( "t_sampler_reg" ) + ": expected 'uniform' or 'eq3'" );
   }
   ConfigReader noise = r.Child( "noise" );
   c.noise.epsilon = noise.Get( "epsilon", c.noise.epsilon );
   c.noise.enabled = noise.Get( "enabled", c.noise.enabled );
   c.patch_size = r.Get( "patch_size", c.patch_size );
   c.val_every = r.Get( "val_every", c.val_every );
   c.patience = r.Get( "patience", c.patience );
   c.val_patches_per_t = r.Get( "val_patches_per_t", c.val_patches_per_t );
   c.grad_clip = r.Get( "grad_clip", c.grad_clip );
   c.probe_every = r.Get( "probe_every", c.probe_every );
   c.pool_size = r.Get( "pool_size", c.pool_size );
   c.seed = r.Get( "seed", c.seed );
   ConfigReader gen = r.Child( "gen" );
   c.gen_depth = gen.Get( "depth", c.gen_depth );
   c.gen_base_width = gen.Get( "base_width", c.gen_base_width );
   p.Capture( [ & ] { c.conditioning = ParseConditioning( gen.Get( "conditioning_mode", ToString( c.conditioning ))); } );
   ConfigReader reg = r.Child( "reg" );
   c.reg_depth = reg.Get( "depth", c.reg_depth );
   c.reg_base_width = reg.Get( "base_width", c.reg_base_width );
   p.Capture( [ & ] { c.reg_head = ParseRegHead( reg.Get( "head", ToString( c.reg_head ))); } );
   c.Check( p );
   return c;
}

TrainConfig TrainConfig::FromJson( Json const& j ) {
   Problems p;
   TrainConfig c = FromJson( ConfigReader( j, "train", p ));
   p.ThrowIfAny( "train config" );
   return c;
}

// --- Reports ------------------------------------------------------------------

void NormalizationProbe::Add( double mean, double var ) {
   if( batches == 0 ) {
      min_var = max_var = var;
   }
   ++batches;
   max_abs_mean = std::max( max_abs_mean, std::abs( mean ));
   min_var = std::min( min_var, var );
   max_var = std::max( max_var, var );
   mean_of_means += ( mean - mean_of_means ) / batches;
   mean_of_vars += ( var - mean_of_vars ) / batches;
   if( std::abs( mean ) > 0.2 || var < 0.5 || var > 1.5 ) {
      ++violations;
   }
}

Json NormalizationProbe::ToJson() const {
   return Json{{ "batches", batches }, { "violations", violations }, { "max_abs_mean", max_abs_mean },
               { "min_var", min_var }, { "max_var", max_var }, { "mean_of_means", mean_of_means },
               { "mean_of_vars", mean_of_vars }};
}

Json TrainReport::ToJson() const {
   auto curves = []( std::map< std::string, std::vector< CurvePoint >> const& m ) {
      Json j = Json::object();
      for( auto const& [ k, v ] : m ) {
         Json arr = Json::array();
         for( auto const& pt : v ) {
            arr.push_back( Json::array( { pt.step, pt.value } ));
         }
         j[ k ] = arr;
      }
      return j;
   };
   return Json{{ "train_loss", curves( train_loss ) }, { "val_loss", curves( val_loss ) }, { "best_step", best_step },
               { "best_val", best_val }, { "steps_run", steps_run }, { "validation_split", validation_split },
               { "normalization_probe", probe.ToJson() }};
}

void TrainReport::Merge( TrainReport const& o ) {
   for( auto const& [ k, v ] : o.train_loss ) {
      train_loss[ k ] = v;
   }
   for( auto const& [ k, v ] : o.val_loss ) {
      val_loss[ k ] = v;
   }
   for( auto const& [ k, v ] : o.best_step ) {
      best_step[ k ] = v;
   }
   for( auto const& [ k, v ] : o.best_val ) {
      best_val[ k ] = v;
   }
   steps_run = std::max( steps_run, o.steps_run );
   wall_clock_seconds += o.wall_clock_seconds;
}

// --- Sampling -----------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

struct Example {
   Image x;        // SCIN-normalized mixed patch (before noise)
   Image target0;  // normalized ground truth
   Image target1;
   float t = 0.5f;
};

/// Produces training examples: crop, t, mix, SCIN-normalize.
class ExampleSource {
 public:
   ExampleSource( ChannelFrameSet const& fs, ScinTable const& table, TargetChannelStats const* target_stats,
                  TrainConfig const& cfg, bool for_reg, std::uint64_t seed )
         : table_( table ), target_stats_( target_stats ), cfg_( cfg ), for_reg_( for_reg ),
           sampler_( fs, PatchSpec{ cfg.patch_size, cfg.patch_size, Split::kTrain }, DeriveSeed( seed, 1 )),
           t_rng_( MakeRng( seed, 2 )), pick_rng_( MakeRng( seed, 3 )) {
      for( int i = 0; i < cfg.pool_size; ++i ) {
         pool_.push_back( Fresh());
      }
   }

   Example const& Next() {
      if( !pool_.empty()) {
         std::uniform_int_distribution< std::size_t > pick( 0, pool_.size() - 1 );
         return pool_[ pick( pick_rng_ ) ];
      }
      current_ = Fresh();
      return current_;
   }

 private:
   MixingRatio DrawT() {
      if( for_reg_ && cfg_.t_sampler_reg == RegTSampler::kUniform ) {
         std::uniform_real_distribution< double > uni( 0.0, 1.0 );
         return MixingRatio( uni( t_rng_ ));
      }
      return SampleT( cfg_.t_sampler_gen, t_rng_ );
   }

   Example Fresh() {
      PatchPair p = sampler_.Next();
      MixingRatio const t = DrawT();
      Example e;
      e.x = Normalize( Mix( p.c0, p.c1, t ), t, table_ );
      e.t = static_cast< float >( t.value());
      if( target_stats_ ) {
         e.target0 = NormalizeTarget( p.c0, 0, *target_stats_ );
         e.target1 = NormalizeTarget( p.c1, 1, *target_stats_ );
      }
      return e;
   }

   ScinTable const& table_;
   TargetChannelStats const* target_stats_;
   TrainConfig const& cfg_;
   bool for_reg_;
   PatchSampler sampler_;
   Rng t_rng_;
   Rng pick_rng_;
   std::vector< Example > pool_;
   Example current_;
};

void CopyInto( Image const& img, nn::Tensor< float >& t, int n ) {
   std::copy( img.data(), img.data() + img.size(), t.sample( n ));
}

/// Fixed validation examples over the t grid {0.1, ..., 0.9}; no noise.
struct ValidationSet {
   nn::Tensor< float > x;
   nn::Tensor< float > target0;
   nn::Tensor< float > target1;
   std::vector< float > t;
};

ValidationSet MakeValidationSet( ChannelFrameSet const& fs, ScinTable const& table,
                                 TargetChannelStats const* target_stats, TrainConfig const& cfg, Split split ) {
   PatchSampler sampler( fs, PatchSpec{ cfg.patch_size, cfg.patch_size, split }, DeriveSeed( cfg.seed, 4 ));
   int const n = 9 * cfg.val_patches_per_t;
   ValidationSet v;
   v.x.Resize( n, 1, cfg.patch_size, cfg.patch_size );
   if( target_stats ) {
      v.target0.Resize( n, 1, cfg.patch_size, cfg.patch_size );
      v.target1.Resize( n, 1, cfg.patch_size, cfg.patch_size );
   }
   int k = 0;
   for( int g = 1; g <= 9; ++g ) {
      MixingRatio const t( g / 10.0 );
      for( int i = 0; i < cfg.val_patches_per_t; ++i, ++k ) {
         PatchPair p = sampler.Next();
         CopyInto( Normalize( Mix( p.c0, p.c1, t ), t, table ), v.x, k );
         if( target_stats ) {
            CopyInto( NormalizeTarget( p.c0, 0, *target_stats ), v.target0, k );
            CopyInto( NormalizeTarget( p.c1, 1, *target_stats ), v.target1, k );
         }
         v.t.push_back( static_cast< float >( t.value()));
      }
   }
   return v;
}

nn::Tensor< float > Slice( nn::Tensor< float > const& t, int begin, int end ) {
   nn::Tensor< float > s;
   s.Resize( end - begin, t.c, t.h, t.w );
   std::copy( t.v.begin() + static_cast< std::ptrdiff_t >( begin * t.sample_size()),
              t.v.begin() + static_cast< std::ptrdiff_t >( end * t.sample_size()), s.v.begin());
   return s;
}

constexpr int kValChunk = 32;

double GenValidationLoss( Generator const& gen, ValidationSet const& v ) {
   int const n = v.x.n;
   int const channel = gen.spec().channel_index;
   nn::Tensor< float > const& target = channel == 0 ? v.target0 : v.target1;
   double total = 0.0;
   for( int b = 0; b < n; b += kValChunk ) {
      int const e = std::min( n, b + kValChunk );
      std::vector< float > sev;
      for( int i = b; i < e; ++i ) {
         sev.push_back( channel == 0 ? v.t[ i ] : 1.0f - v.t[ i ] );
      }
      nn::Tensor< float > y;
      gen.Forward( Slice( v.x, b, e ), sev, y );
      nn::Tensor< float > const tg = Slice( target, b, e );
      std::vector< float > grad( y.v.size());
      total += nn::MaeLoss< float >( y.v, tg.v, grad ) * ( e - b );
   }
   return total / n;
}

double RegValidationLoss( Regressor const& reg, ValidationSet const& v ) {
   int const n = v.x.n;
   double total = 0.0;
   for( int b = 0; b < n; b += kValChunk ) {
      int const e = std::min( n, b + kValChunk );
      std::vector< double > const pred = reg.Forward( Slice( v.x, b, e ));
      for( int i = b; i < e; ++i ) {
         double const d = pred[ static_cast< std::size_t >( i - b ) ] - v.t[ static_cast< std::size_t >( i ) ];
         total += d * d;
      }
   }
   return total / n;
}

/// Best-checkpoint bookkeeping and patience counting for one component.
struct Tracker {
   std::string name;
   double best = std::numeric_limits< double >::infinity();
   int best_step = 0;
   int bad_rounds = 0;
   bool frozen = false;
   std::vector< float > best_params;
   double window_sum = 0.0;
   int window_count = 0;

   void Observe( double loss, int step, std::string const& diagnostic ) {
      if( !std::isfinite( loss )) {
         Fail( ErrorCode::kDiverged, name + " loss became non-finite at step " + std::to_string( step ) + diagnostic );
      }
      window_sum += loss;
      ++window_count;
   }
};

void CheckFingerprint( ChannelFrameSet const& fs, ScinTable const& table, TrainConfig const& cfg ) {
   Require( table.built(), ErrorCode::kState, "SCIN table has not been built" );
   Require( table.dataset_fingerprint == fs.Fingerprint(), ErrorCode::kFingerprint,
            "SCIN table was built on a different dataset than '" + fs.name + "'" );
   Require( table.patch_size_used == cfg.patch_size, ErrorCode::kConfig,
            "SCIN table patch size " + std::to_string( table.patch_size_used ) + " differs from train.patch_size " +
            std::to_string( cfg.patch_size ));
}

Split ValidationSplit( ChannelFrameSet const& fs, TrainReport& report ) {
   if( fs.Indices( Split::kVal ).empty()) {
      report.validation_split = "train";
      return Split::kTrain;
   }
   return Split::kVal;
}

double Seconds( Clock::time_point start ) {
   return std::chrono::duration< double >( Clock::now() - start ).count();
}

void Emit( TrainLogSink const& log, Json event ) {
   if( log ) {
      log( event );
   }
}

void FlushWindow( Tracker& tr, int step, double lr, Clock::time_point start, TrainReport& report,
                  TrainLogSink const& log ) {
   if( tr.window_count == 0 ) {
      return;
   }
   double const avg = tr.window_sum / tr.window_count;
   report.train_loss[ tr.name ].push_back( { step, avg } );
   Emit( log, Json{{ "event", "train" }, { "component", tr.name }, { "step", step }, { "loss", avg }, { "lr", lr },
                   { "wall_clock", Seconds( start ) }} );
   tr.window_sum = 0.0;
   tr.window_count = 0;
}

/// Records a validation loss; returns true when it is a new best.
bool Validate( Tracker& tr, double loss, int step, int patience, double lr, Clock::time_point start,
               TrainReport& report, TrainLogSink const& log ) {
   report.val_loss[ tr.name ].push_back( { step, loss } );
   Emit( log, Json{{ "event", "val" }, { "component", tr.name }, { "step", step }, { "loss", loss }, { "lr", lr },
                   { "wall_clock", Seconds( start ) }} );
   if( loss < tr.best ) {
      tr.best = loss;
      tr.best_step = step;
      tr.bad_rounds = 0;
      return true;
   }
   if( ++tr.bad_rounds >= patience ) {
      tr.frozen = true;
      Emit( log, Json{{ "event", "early_stop" }, { "component", tr.name }, { "step", step }, { "best_step", tr.best_step }} );
   }
   return false;
}

} // namespace

// --- Generators ---------------------------------------------------------------

GeneratorPair TrainGenerators( ChannelFrameSet const& fs, ScinTable const& table, TargetChannelStats const& target_stats,
                               TrainConfig const& cfg, TrainLogSink const& log ) {
   cfg.Validate();
   CheckFingerprint( fs, table, cfg );
   auto const start = Clock::now();
   std::string const table_fp = table.Fingerprint();

   GeneratorPair out;
   TrainReport& report = out.report;
   Generator gens[ 2 ] = { Generator( cfg.MakeGenSpec( 0 ), DeriveSeed( cfg.seed, 10 ), table_fp ),
                           Generator( cfg.MakeGenSpec( 1 ), DeriveSeed( cfg.seed, 11 ), table_fp ) };
   nn::Adam< float >::Options const adam_opts{ cfg.learning_rate };
   nn::Adam< float > adam[ 2 ] = { nn::Adam< float >( gens[ 0 ].params().size(), adam_opts ),
                                   nn::Adam< float >( gens[ 1 ].params().size(), adam_opts ) };
   Tracker track[ 2 ];
   track[ 0 ].name = "gen0";
   track[ 1 ].name = "gen1";
   for( int c = 0; c < 2; ++c ) {
      track[ c ].best_params = gens[ c ].params();
   }

   ExampleSource source( fs, table, &target_stats, cfg, false, DeriveSeed( cfg.seed, 20 ));
   Rng noise_rng = MakeRng( cfg.seed, 21 );
   ValidationSet const val = MakeValidationSet( fs, table, &target_stats, cfg, ValidationSplit( fs, report ));

   int const B = cfg.batch_size;
   int const P = cfg.patch_size;
   nn::Tensor< float > x, target[ 2 ], dy;
   x.Resize( B, 1, P, P );
   target[ 0 ].Resize( B, 1, P, P );
   target[ 1 ].Resize( B, 1, P, P );
   std::vector< float > sev[ 2 ] = { std::vector< float >( static_cast< std::size_t >( B )),
                                     std::vector< float >( static_cast< std::size_t >( B )) };
   std::vector< float > grads;
   nn::UNet< float >::Trace trace;

   int step = 0;
   while( step < cfg.max_steps && !( track[ 0 ].frozen && track[ 1 ].frozen )) {
      ++step;
      for( int b = 0; b < B; ++b ) {
         Example const& e = source.Next();
         MixingRatio const t( e.t );
         CopyInto( Perturb( e.x, t, cfg.noise, noise_rng ), x, b );
         CopyInto( e.target0, target[ 0 ], b );
         CopyInto( e.target1, target[ 1 ], b );
         sev[ 0 ][ static_cast< std::size_t >( b ) ] = e.t;
         sev[ 1 ][ static_cast< std::size_t >( b ) ] = 1.0f - e.t;
      }
      if( step % cfg.probe_every == 1 || cfg.probe_every == 1 ) {
         MeanStd const ms = ComputeMeanStd( x.v );
         report.probe.Add( ms.mean, ms.std * ms.std );
      }
      for( int c = 0; c < 2; ++c ) {
         if( track[ c ].frozen ) {
            continue;
         }
         Generator& g = gens[ c ];
         g.net().ForwardTrace( g.params(), x, sev[ c ], trace );
         dy.Resize( B, 1, P, P );
         double const loss = nn::MaeLoss< float >( trace.out.v, target[ c ].v, dy.v );
         track[ c ].Observe( loss, step, "" );
         grads.assign( g.params().size(), 0.0f );
         g.net().Backward( g.params(), trace, sev[ c ], dy, grads );
         nn::ClipGradNorm< float >( grads, cfg.grad_clip );
         adam[ c ].Step( g.params(), grads );
      }
      if( step % cfg.val_every == 0 || step == cfg.max_steps ) {
         for( int c = 0; c < 2; ++c ) {
            if( track[ c ].frozen ) {
               continue;
            }
            FlushWindow( track[ c ], step, cfg.learning_rate, start, report, log );
            double const vl = GenValidationLoss( gens[ c ], val );
            if( !std::isfinite( vl )) {
               Fail( ErrorCode::kDiverged, track[ c ].name + " validation loss became non-finite at step " + std::to_string( step ));
            }
            if( Validate( track[ c ], vl, step, cfg.patience, cfg.learning_rate, start, report, log )) {
               track[ c ].best_params = gens[ c ].params();
            }
         }
      }
   }
   report.steps_run = step;
   for( int c = 0; c < 2; ++c ) {
      report.best_step[ track[ c ].name ] = track[ c ].best_step;
      report.best_val[ track[ c ].name ] = track[ c ].best;
   }
   out.gen0 = Generator( cfg.MakeGenSpec( 0 ), std::move( track[ 0 ].best_params ), table_fp );
   out.gen1 = Generator( cfg.MakeGenSpec( 1 ), std::move( track[ 1 ].best_params ), table_fp );
   report.wall_clock_seconds = Seconds( start );
   return out;
}

// --- Regressor ----------------------------------------------------------------

RegressorResult TrainRegressor( ChannelFrameSet const& fs, ScinTable const& table, TrainConfig const& cfg,
                                TrainLogSink const& log ) {
   cfg.Validate();
   CheckFingerprint( fs, table, cfg );
   auto const start = Clock::now();
   std::string const table_fp = table.Fingerprint();

   RegressorResult out;
   TrainReport& report = out.report;
   Regressor reg( cfg.MakeRegSpec(), DeriveSeed( cfg.seed, 12 ), table_fp );
   nn::Adam< float > adam( reg.params().size(), nn::Adam< float >::Options{ cfg.learning_rate } );
   Tracker track;
   track.name = "reg";
   track.best_params = reg.params();

   ExampleSource source( fs, table, nullptr, cfg, true, DeriveSeed( cfg.seed, 30 ));
   Rng noise_rng = MakeRng( cfg.seed, 31 );
   ValidationSet const val = MakeValidationSet( fs, table, nullptr, cfg, ValidationSplit( fs, report ));

   int const B = cfg.batch_size;
   int const P = cfg.patch_size;
   nn::Tensor< float > x, dy;
   x.Resize( B, 1, P, P );
   std::vector< float > t( static_cast< std::size_t >( B ));
   std::vector< float > grads;
   nn::RegressorNet< float >::Trace trace;

   int step = 0;
   while( step < cfg.reg_max_steps && !track.frozen ) {
      ++step;
      for( int b = 0; b < B; ++b ) {
         Example const& e = source.Next();
         CopyInto( Perturb( e.x, MixingRatio( e.t ), cfg.noise, noise_rng ), x, b );
         t[ static_cast< std::size_t >( b ) ] = e.t;
      }
      if( step % cfg.probe_every == 1 || cfg.probe_every == 1 ) {
         MeanStd const ms = ComputeMeanStd( x.v );
         report.probe.Add( ms.mean, ms.std * ms.std );
      }
      reg.net().ForwardTrace( reg.params(), x, trace );
      dy.Resize( B, 1, 1, 1 );
      double const loss = nn::MseLoss< float >( trace.out.v, t, dy.v );
      track.Observe( loss, step, "" );
      grads.assign( reg.params().size(), 0.0f );
      reg.net().Backward( reg.params(), trace, dy, grads );
      nn::ClipGradNorm< float >( grads, cfg.grad_clip );
      adam.Step( reg.params(), grads );

      if( step % cfg.val_every == 0 || step == cfg.reg_max_steps ) {
         FlushWindow( track, step, cfg.learning_rate, start, report, log );
         double const vl = RegValidationLoss( reg, val );
         if( !std::isfinite( vl )) {
            Fail( ErrorCode::kDiverged, "reg validation loss became non-finite at step " + std::to_string( step ));
         }
         if( Validate( track, vl, step, cfg.patience, cfg.learning_rate, start, report, log )) {
            track.best_params = reg.params();
         }
      }
   }
   report.steps_run = step;
   report.best_step[ "reg" ] = track.best_step;
   report.best_val[ "reg" ] = track.best;
   out.reg = Regressor( cfg.MakeRegSpec(), std::move( track.best_params ), table_fp );
   report.wall_clock_seconds = Seconds( start );
   return out;
}

double RegressorMae( Regressor const& reg, ChannelFrameSet const& fs, ScinTable const& table, Split split,
                     int patch_size, int patches_per_t, std::uint64_t seed ) {
   PatchSampler sampler( fs, PatchSpec{ patch_size, patch_size, split }, seed );
   double total = 0.0;
   int count = 0;
   nn::Tensor< float > x;
   for( int g = 1; g <= 9; ++g ) {
      MixingRatio const t( g / 10.0 );
      x.Resize( patches_per_t, 1, patch_size, patch_size );
      for( int i = 0; i < patches_per_t; ++i ) {
         PatchPair p = sampler.Next();
         CopyInto( Normalize( Mix( p.c0, p.c1, t ), t, table ), x, i );
      }
      for( double pred : reg.Forward( x )) {
         total += std::abs( pred - t.value());
         ++count;
      }
   }
   return total / count;
}

} // namespace scsplit
