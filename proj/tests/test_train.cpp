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

#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "scsplit/nn/optim.hpp"
#include "scsplit/train.hpp"
#include "support.hpp"

using namespace scsplit;
using testing::TinySynth;

namespace {

TrainConfig SmallConfig() {
   TrainConfig c;
   c.patch_size = 16;
   c.batch_size = 4;
   c.max_steps = 150;
   c.reg_max_steps = 150;
   c.val_every = 25;
   c.patience = 100;
   c.val_patches_per_t = 2;
   c.gen_depth = 2;
   c.gen_base_width = 4;
   c.reg_depth = 2;
   c.reg_base_width = 4;
   c.seed = 5;
   return c;
}

ScinTable SmallTable( ChannelFrameSet const& fs ) {
   ScinBuildOptions o;
   o.patch_size = 16;
   o.n_bins = 20;
   o.samples_per_bin = 50;
   o.channel_stat_samples = 200;
   return BuildScinTable( fs, o );
}

} // namespace

TEST_CASE( "losses equal per-pixel formulas" ) {
   std::vector< double > const pred{ 0.5, -1.0, 2.0, 0.25 };
   std::vector< double > const target{ 0.0, 1.0, 2.0, 1.0 };
   std::vector< double > grad( 4 );
   double const mae = nn::MaeLoss< double >( pred, target, grad );
   CHECK( mae == doctest::Approx(( 0.5 + 2.0 + 0.0 + 0.75 ) / 4 ).epsilon( 1e-15 ));
   CHECK( grad[ 0 ] == 0.25 );
   CHECK( grad[ 1 ] == -0.25 );
   CHECK( grad[ 2 ] == 0.0 );
   double const mse = nn::MseLoss< double >( pred, target, grad );
   CHECK( mse == doctest::Approx(( 0.25 + 4.0 + 0.0 + 0.5625 ) / 4 ).epsilon( 1e-15 ));
   CHECK( grad[ 1 ] == doctest::Approx( 2.0 * -2.0 / 4 ));
   CHECK( grad[ 3 ] == doctest::Approx( 2.0 * -0.75 / 4 ));
}

TEST_CASE( "train config validation lists every problem" ) {
   Json j = SmallConfig().ToJson();
   j[ "batch_size" ] = 0;
   j[ "learning_rate" ] = -1.0;
   j[ "optimizer" ] = "sgd";
   try {
      TrainConfig::FromJson( j ).Validate();
      FAIL( "expected a config error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kConfig );
      std::string const msg = e.what();
      CHECK( msg.find( "batch_size" ) != std::string::npos );
      CHECK( msg.find( "learning_rate" ) != std::string::npos );
      CHECK( msg.find( "optimizer" ) != std::string::npos );
   }
   TrainConfig const back = TrainConfig::FromJson( SmallConfig().ToJson());
   CHECK( back.ToJson() == SmallConfig().ToJson());
}

TEST_CASE( "generator training lowers the loss and is reproducible" ) {
   auto const fs = SynthesizeDataset( TinySynth());
   ScinTable const table = SmallTable( fs );
   TargetChannelStats const ts = ComputeTargetStats( fs );
   TrainConfig const cfg = SmallConfig();
   std::vector< Json > events;
   GeneratorPair const a = TrainGenerators( fs, table, ts, cfg, [ & ]( Json const& e ) { events.push_back( e ); } );
   for( char const* name : { "gen0", "gen1" } ) {
      auto const& curve = a.report.train_loss.at( name );
      REQUIRE( curve.size() >= 2 );
      CHECK( curve.back().value < curve.front().value );
      CHECK( a.report.val_loss.count( name ) == 1 );
   }
   CHECK( !events.empty());
   CHECK( a.report.probe.batches > 0 );
   CHECK( a.gen0.table_fingerprint() == table.Fingerprint());

   GeneratorPair const b = TrainGenerators( fs, table, ts, cfg );
   CHECK( a.gen0.params() == b.gen0.params());
   CHECK( a.gen1.params() == b.gen1.params());
   CHECK( a.report.ToJson() == b.report.ToJson());
}

TEST_CASE( "regressor training lowers the loss" ) {
   auto const fs = SynthesizeDataset( TinySynth());
   ScinTable const table = SmallTable( fs );
   TrainConfig const cfg = SmallConfig();
   RegressorResult const r = TrainRegressor( fs, table, cfg );
   auto const& curve = r.report.train_loss.at( "reg" );
   REQUIRE( curve.size() >= 2 );
   CHECK( curve.back().value < curve.front().value );
   double const mae = RegressorMae( r.reg, fs, table, Split::kTest, 16, 4, 9 );
   CHECK( mae >= 0.0 );
   CHECK( mae <= 1.0 );
   double const z = r.reg.Forward( Image( 16, 16 ));
   CHECK( z >= 0.0 );
   CHECK( z <= 1.0 );
}

TEST_CASE( "training refuses a table built on other data" ) {
   auto const fs = SynthesizeDataset( TinySynth( 3 ));
   auto const other = SynthesizeDataset( TinySynth( 4 ));
   ScinTable const table = SmallTable( other );
   try {
      TrainRegressor( fs, table, SmallConfig());
      FAIL( "expected a fingerprint error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kFingerprint );
   }
   TrainConfig cfg = SmallConfig();
   cfg.patch_size = 8;
   try {
      TrainRegressor( fs, SmallTable( fs ), cfg );
      FAIL( "expected a config error" );
   } catch( Error const& e ) {
      CHECK( e.code() == ErrorCode::kConfig );
   }
}
