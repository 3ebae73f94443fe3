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

#include "scsplit/scin.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace scsplit {

Json ChannelStats::ToJson() const {
   return Json{{ "mean_p0", mean_p0 }, { "mean_p1", mean_p1 }, { "var0", var0 }, { "var1", var1 }, { "cov01", cov01 }};
}

ChannelStats ChannelStats::FromJson( Json const& j ) {
   ChannelStats s;
   s.mean_p0 = j.at( "mean_p0" ).get< double >();
   s.mean_p1 = j.at( "mean_p1" ).get< double >();
   s.var0 = j.at( "var0" ).get< double >();
   s.var1 = j.at( "var1" ).get< double >();
   s.cov01 = j.at( "cov01" ).get< double >();
   return s;
}

int ScinTable::BinIndex( MixingRatio t ) const {
   Require( built(), ErrorCode::kState, "SCIN table has not been built" );
   auto const i = static_cast< int >( std::floor( t.value() * n_bins ));
   return std::clamp( i, 0, n_bins - 1 );
}

Json ScinTable::ToJson() const {
   return Json{{ "version", kVersion }, { "n_bins", n_bins }, { "mu", mu }, { "sigma", sigma },
               { "samples_per_bin", samples_per_bin }, { "channel_stats", channel_stats.ToJson() },
               { "patch_size_used", patch_size_used }, { "dataset_fingerprint", dataset_fingerprint },
               { "seed", seed }};
}

ScinTable ScinTable::FromJson( Json const& j ) {
   ScinTable t;
   try {
      int const version = j.at( "version" ).get< int >();
      Require( version == kVersion, ErrorCode::kConfig, "unsupported SCIN table version " + std::to_string( version ));
      t.n_bins = j.at( "n_bins" ).get< int >();
      t.mu = j.at( "mu" ).get< std::vector< double >>();
      t.sigma = j.at( "sigma" ).get< std::vector< double >>();
      t.samples_per_bin = j.at( "samples_per_bin" ).get< std::vector< std::int64_t >>();
      t.channel_stats = ChannelStats::FromJson( j.at( "channel_stats" ));
      t.patch_size_used = j.at( "patch_size_used" ).get< int >();
      t.dataset_fingerprint = j.at( "dataset_fingerprint" ).get< std::string >();
      t.seed = j.value( "seed", std::uint64_t{ 0 } );
   } catch( Json::exception const& e ) {
      Fail( ErrorCode::kConfig, std::string( "invalid SCIN table: " ) + e.what());
   }
   auto const n = static_cast< std::size_t >( t.n_bins );
   Require( t.n_bins >= 1 && t.mu.size() == n && t.sigma.size() == n && t.samples_per_bin.size() == n,
            ErrorCode::kConfig, "SCIN table arrays must all have n_bins entries" );
   for( std::size_t i = 0; i < n; ++i ) {
      Require( t.samples_per_bin[ i ] <= 0 || t.sigma[ i ] > 0.0, ErrorCode::kConfig,
               "SCIN table bin " + std::to_string( i ) + " has non-positive sigma" );
   }
   return t;
}

std::string ScinTable::Fingerprint() const {
   return JsonHash( ToJson());
}

namespace {

struct PatchMoments {
   double mean0 = 0, mean1 = 0, var0 = 0, var1 = 0, cov = 0;
};

PatchMoments Moments( Image const& a, Image const& b ) {
   PatchMoments m;
   double const n = static_cast< double >( a.size());
   for( std::size_t i = 0; i < a.size(); ++i ) {
      m.mean0 += a.data()[ i ];
      m.mean1 += b.data()[ i ];
   }
   m.mean0 /= n;
   m.mean1 /= n;
   for( std::size_t i = 0; i < a.size(); ++i ) {
      double const d0 = a.data()[ i ] - m.mean0;
      double const d1 = b.data()[ i ] - m.mean1;
      m.var0 += d0 * d0;
      m.var1 += d1 * d1;
      m.cov += d0 * d1;
   }
   m.var0 /= n;
   m.var1 /= n;
   m.cov /= n;
   return m;
}

} // namespace

ChannelStats EstimateChannelStats( ChannelFrameSet const& fs, int patch_size, int samples, std::uint64_t seed ) {
   Require( samples >= 1, ErrorCode::kConfig, "channel statistics need at least one sample" );
   PatchSampler sampler( fs, PatchSpec{ patch_size, patch_size, Split::kTrain }, seed );
   ChannelStats s;
   for( int k = 0; k < samples; ++k ) {
      PatchPair p = sampler.Next();
      PatchMoments const m = Moments( p.c0, p.c1 );
      s.mean_p0 += m.mean0;
      s.mean_p1 += m.mean1;
      s.var0 += m.var0;
      s.var1 += m.var1;
      s.cov01 += m.cov;
   }
   double const n = samples;
   s.mean_p0 /= n;
   s.mean_p1 /= n;
   s.var0 /= n;
   s.var1 /= n;
   s.cov01 /= n;
   return s;
}

ScinTable BuildScinTable( ChannelFrameSet const& fs, ScinBuildOptions const& options ) {
   Require( options.n_bins >= 1, ErrorCode::kConfig, "n_bins must be >= 1" );
   Require( options.samples_per_bin >= 1, ErrorCode::kConfig, "samples_per_bin must be >= 1" );
   Require( !fs.Indices( Split::kTrain ).empty(), ErrorCode::kIngest, fs.name + ": training split is empty" );

   ScinTable table;
   table.n_bins = options.n_bins;
   table.mu.assign( static_cast< std::size_t >( options.n_bins ), 0.0 );
   table.sigma.assign( static_cast< std::size_t >( options.n_bins ), 0.0 );
   table.samples_per_bin.assign( static_cast< std::size_t >( options.n_bins ), 0 );
   table.patch_size_used = options.patch_size;
   table.dataset_fingerprint = fs.Fingerprint();
   table.seed = options.seed;

   PatchSpec const spec{ options.patch_size, options.patch_size, Split::kTrain };
   auto build_bin = [ & ]( int bin ) {
      PatchSampler sampler( fs, spec, DeriveSeed( options.seed, static_cast< std::uint64_t >( bin )));
      Rng rng = MakeRng( options.seed ^ 0x5C1Full, static_cast< std::uint64_t >( bin ));
      std::uniform_real_distribution< double > uni( 0.0, 1.0 );
      double const lo = static_cast< double >( bin ) / options.n_bins;
      double const hi = static_cast< double >( bin + 1 ) / options.n_bins;
      double sum_mean = 0.0;
      double sum_std = 0.0;
      for( int k = 0; k < options.samples_per_bin; ++k ) {
         PatchPair p = sampler.Next();
         // t in (lo, hi]
         double const t = std::min( hi, lo + ( hi - lo ) * ( 1.0 - uni( rng )));
         MeanStd const ms = ComputeMeanStd( Mix( p.c0, p.c1, MixingRatio( t )));
         sum_mean += ms.mean;
         sum_std += ms.std;
      }
      auto const i = static_cast< std::size_t >( bin );
      table.mu[ i ] = sum_mean / options.samples_per_bin;
      table.sigma[ i ] = sum_std / options.samples_per_bin;
      table.samples_per_bin[ i ] = options.samples_per_bin;
   };

   int const jobs = std::clamp( options.jobs, 1, options.n_bins );
   if( jobs == 1 ) {
      for( int b = 0; b < options.n_bins; ++b ) {
         build_bin( b );
      }
   } else {
      std::vector< std::jthread > workers;
      for( int j = 0; j < jobs; ++j ) {
         workers.emplace_back( [ &, j ] {
            for( int b = j; b < options.n_bins; b += jobs ) {
               build_bin( b );
            }
         } );
      }
   }

   for( int b = 0; b < options.n_bins; ++b ) {
      Require( table.sigma[ static_cast< std::size_t >( b ) ] > 0.0, ErrorCode::kIngest,
               fs.name + ": SCIN bin " + std::to_string( b ) + " has zero spread (constant data?)" );
   }
   table.channel_stats = EstimateChannelStats( fs, options.patch_size, options.channel_stat_samples,
                                               DeriveSeed( options.seed, static_cast< std::uint64_t >( options.n_bins ) + 17 ));
   return table;
}

Image Normalize( Image const& c_t, MixingRatio t, ScinTable const& table ) {
   auto const i = static_cast< std::size_t >( table.BinIndex( t ));
   double const mu = table.mu[ i ];
   double const sigma = table.sigma[ i ];
   Image out( c_t.height(), c_t.width());
   for( std::size_t p = 0; p < out.size(); ++p ) {
      out.data()[ p ] = static_cast< float >(( c_t.data()[ p ] - mu ) / sigma );
   }
   return out;
}

Image Denormalize( Image const& x, MixingRatio t, ScinTable const& table ) {
   auto const i = static_cast< std::size_t >( table.BinIndex( t ));
   double const mu = table.mu[ i ];
   double const sigma = table.sigma[ i ];
   Image out( x.height(), x.width());
   for( std::size_t p = 0; p < out.size(); ++p ) {
      out.data()[ p ] = static_cast< float >( x.data()[ p ] * sigma + mu );
   }
   return out;
}

double PredictVariance( MixingRatio t, ChannelStats const& stats ) {
   double const s = t.value();
   return ( 1.0 - s ) * ( 1.0 - s ) * stats.var0 + s * s * stats.var1 + 2.0 * s * ( 1.0 - s ) * stats.cov01;
}

Json TargetChannelStats::ToJson() const {
   return Json{{ "mean_c0", mean_c0 }, { "std_c0", std_c0 }, { "mean_c1", mean_c1 }, { "std_c1", std_c1 }};
}

TargetChannelStats TargetChannelStats::FromJson( Json const& j ) {
   TargetChannelStats s;
   s.mean_c0 = j.at( "mean_c0" ).get< double >();
   s.std_c0 = j.at( "std_c0" ).get< double >();
   s.mean_c1 = j.at( "mean_c1" ).get< double >();
   s.std_c1 = j.at( "std_c1" ).get< double >();
   Require( s.std_c0 > 0.0 && s.std_c1 > 0.0, ErrorCode::kConfig, "target statistics need positive std" );
   return s;
}

TargetChannelStats ComputeTargetStats( ChannelFrameSet const& fs ) {
   auto const train = fs.Indices( Split::kTrain );
   Require( !train.empty(), ErrorCode::kIngest, fs.name + ": training split is empty" );
   TargetChannelStats s{ 0.0, 0.0, 0.0, 0.0 };
   for( std::size_t i : train ) {
      MeanStd const a = ComputeMeanStd( fs.frames_c0[ i ] );
      MeanStd const b = ComputeMeanStd( fs.frames_c1[ i ] );
      s.mean_c0 += a.mean;
      s.std_c0 += a.std;
      s.mean_c1 += b.mean;
      s.std_c1 += b.std;
   }
   double const n = static_cast< double >( train.size());
   s.mean_c0 /= n;
   s.std_c0 /= n;
   s.mean_c1 /= n;
   s.std_c1 /= n;
   Require( s.std_c0 > 0.0, ErrorCode::kIngest, fs.name + ": channel 0 is constant (zero std)" );
   Require( s.std_c1 > 0.0, ErrorCode::kIngest, fs.name + ": channel 1 is constant (zero std)" );
   return s;
}

Image NormalizeTarget( Image const& c, int channel, TargetChannelStats const& stats ) {
   Require( channel == 0 || channel == 1, ErrorCode::kRange, "channel must be 0 or 1" );
   double const mean = channel == 0 ? stats.mean_c0 : stats.mean_c1;
   double const sd = channel == 0 ? stats.std_c0 : stats.std_c1;
   Require( sd > 0.0, ErrorCode::kRange, "target std must be positive" );
   Image out( c.height(), c.width());
   for( std::size_t p = 0; p < out.size(); ++p ) {
      out.data()[ p ] = static_cast< float >(( c.data()[ p ] - mean ) / sd );
   }
   return out;
}

Image DenormalizeTarget( Image const& x, int channel, TargetChannelStats const& stats ) {
   Require( channel == 0 || channel == 1, ErrorCode::kRange, "channel must be 0 or 1" );
   double const mean = channel == 0 ? stats.mean_c0 : stats.mean_c1;
   double const sd = channel == 0 ? stats.std_c0 : stats.std_c1;
   Image out( x.height(), x.width());
   for( std::size_t p = 0; p < out.size(); ++p ) {
      out.data()[ p ] = static_cast< float >( x.data()[ p ] * sd + mean );
   }
   return out;
}

} // namespace scsplit
