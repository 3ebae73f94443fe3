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

#include "scsplit/eval.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <limits>
#include <sstream>
#include <tuple>

namespace scsplit {

// --- Metrics ------------------------------------------------------------------

PsnrResult Psnr( Image const& pred, Image const& gt ) {
   RequireSameShape( pred, gt, "psnr" );
   Require( !gt.empty(), ErrorCode::kShape, "psnr of empty frames" );
   double mse = 0.0;
   for( std::size_t i = 0; i < gt.size(); ++i ) {
      double const d = static_cast< double >( pred.data()[ i ] ) - gt.data()[ i ];
      mse += d * d;
   }
   mse /= static_cast< double >( gt.size());
   if( mse == 0.0 ) {
      return { kPsnrCap, true };
   }
   double const range = static_cast< double >( MaxValue( gt )) - MinValue( gt );
   return { 10.0 * std::log10( range * range / mse ), false };
}

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr std::array< double, 5 > kWeights{ 0.0448, 0.2856, 0.3001, 0.2363, 0.1333 };

struct Plane {
   int h = 0;
   int w = 0;
   std::vector< double > v;
   double& at( int y, int x ) { return v[ static_cast< std::size_t >( y ) * w + x ]; }
   double at( int y, int x ) const { return v[ static_cast< std::size_t >( y ) * w + x ]; }
};

Plane ToPlane( Image const& img ) {
   Plane p{ img.height(), img.width(), {} };
   p.v.assign( img.data(), img.data() + img.size());
   return p;
}

std::array< double, kWin > GaussianWindow() {
   std::array< double, kWin > g{};
   double sum = 0.0;
   for( int i = 0; i < kWin; ++i ) {
      double const d = i - kWin / 2;
      g[ static_cast< std::size_t >( i ) ] = std::exp( -d * d / ( 2.0 * kSigma * kSigma ));
      sum += g[ static_cast< std::size_t >( i ) ];
   }
   for( double& v : g ) {
      v /= sum;
   }
   return g;
}

/// Separable "valid" Gaussian filtering.
Plane Filter( Plane const& in ) {
   static std::array< double, kWin > const g = GaussianWindow();
   Plane tmp{ in.h, in.w - kWin + 1, {} };
   tmp.v.assign( static_cast< std::size_t >( tmp.h ) * tmp.w, 0.0 );
   for( int y = 0; y < tmp.h; ++y ) {
      for( int x = 0; x < tmp.w; ++x ) {
         double s = 0.0;
         for( int k = 0; k < kWin; ++k ) {
            s += g[ static_cast< std::size_t >( k ) ] * in.at( y, x + k );
         }
         tmp.at( y, x ) = s;
      }
   }
   Plane out{ in.h - kWin + 1, tmp.w, {} };
   out.v.assign( static_cast< std::size_t >( out.h ) * out.w, 0.0 );
   for( int y = 0; y < out.h; ++y ) {
      for( int x = 0; x < out.w; ++x ) {
         double s = 0.0;
         for( int k = 0; k < kWin; ++k ) {
            s += g[ static_cast< std::size_t >( k ) ] * tmp.at( y + k, x );
         }
         out.at( y, x ) = s;
      }
   }
   return out;
}

Plane Product( Plane const& a, Plane const& b ) {
   Plane p = a;
   for( std::size_t i = 0; i < p.v.size(); ++i ) {
      p.v[ i ] *= b.v[ i ];
   }
   return p;
}

Plane Downsample( Plane const& in ) {
   Plane out{ in.h / 2, in.w / 2, {} };
   out.v.assign( static_cast< std::size_t >( out.h ) * out.w, 0.0 );
   for( int y = 0; y < out.h; ++y ) {
      for( int x = 0; x < out.w; ++x ) {
         out.at( y, x ) = 0.25 * ( in.at( 2 * y, 2 * x ) + in.at( 2 * y, 2 * x + 1 ) + in.at( 2 * y + 1, 2 * x ) +
                                   in.at( 2 * y + 1, 2 * x + 1 ));
      }
   }
   return out;
}

struct SsimTerms {
   double ssim = 0.0;  // mean of the full SSIM map
   double cs = 0.0;    // mean of the contrast-structure map
};

SsimTerms SsimAtScale( Plane const& a, Plane const& b, double range ) {
   double const c1 = ( kK1 * range ) * ( kK1 * range );
   double const c2 = ( kK2 * range ) * ( kK2 * range );
   Plane const mu1 = Filter( a );
   Plane const mu2 = Filter( b );
   Plane const s11 = Filter( Product( a, a ));
   Plane const s22 = Filter( Product( b, b ));
   Plane const s12 = Filter( Product( a, b ));
   SsimTerms t;
   std::size_t const n = mu1.v.size();
   for( std::size_t i = 0; i < n; ++i ) {
      double const m1 = mu1.v[ i ];
      double const m2 = mu2.v[ i ];
      double const v1 = s11.v[ i ] - m1 * m1;
      double const v2 = s22.v[ i ] - m2 * m2;
      double const cov = s12.v[ i ] - m1 * m2;
      double const cs = ( 2.0 * cov + c2 ) / ( v1 + v2 + c2 );
      t.cs += cs;
      t.ssim += ( 2.0 * m1 * m2 + c1 ) / ( m1 * m1 + m2 * m2 + c1 ) * cs;
   }
   t.cs /= static_cast< double >( n );
   t.ssim /= static_cast< double >( n );
   return t;
}

double JointRange( Image const& a, Image const& b ) {
   double const hi = std::max( MaxValue( a ), MaxValue( b ));
   double const lo = std::min( MinValue( a ), MinValue( b ));
   return hi - lo;
}

} // namespace

double Ssim( Image const& pred, Image const& gt ) {
   RequireSameShape( pred, gt, "ssim" );
   Require( gt.height() >= kWin && gt.width() >= kWin, ErrorCode::kShape,
            "SSIM needs frames of at least 11x11 pixels" );
   double const range = JointRange( pred, gt );
   if( range == 0.0 ) {
      return 1.0;
   }
   return SsimAtScale( ToPlane( pred ), ToPlane( gt ), range ).ssim;
}

SsimResult MsSsim( Image const& pred, Image const& gt ) {
   RequireSameShape( pred, gt, "ms_ssim" );
   if( std::min( gt.height(), gt.width()) < kMsSsimMinSide ) {
      return { std::clamp( Ssim( pred, gt ), 0.0, 1.0 ), true };
   }
   double const range = JointRange( pred, gt );
   if( range == 0.0 ) {
      return { 1.0, false };
   }
   Plane a = ToPlane( pred );
   Plane b = ToPlane( gt );
   double value = 1.0;
   for( std::size_t s = 0; s < kWeights.size(); ++s ) {
      SsimTerms const t = SsimAtScale( a, b, range );
      bool const last = s + 1 == kWeights.size();
      value *= std::pow( std::max( last ? t.ssim : t.cs, 0.0 ), kWeights[ s ] );
      if( !last ) {
         a = Downsample( a );
         b = Downsample( b );
      }
   }
   return { std::clamp( value, 0.0, 1.0 ), false };
}

// --- Regimes ------------------------------------------------------------------

std::vector< RegimeSpec > DefaultRegimes() {
   return { { "weak", { 0.1, 0.2, 0.3 } }, { "balanced", { 0.4, 0.5, 0.6 } }, { "dominant", { 0.7, 0.8, 0.9 } } };
}

void ValidateRegimes( std::vector< RegimeSpec > const& regimes ) {
   Require( !regimes.empty(), ErrorCode::kConfig, "at least one regime is required" );
   std::vector< double > seen;
   for( auto const& r : regimes ) {
      Require( !r.name.empty() && !r.w_values.empty(), ErrorCode::kConfig, "regimes need a name and w values" );
      for( double w : r.w_values ) {
         Require( w >= 0.0 && w <= 1.0, ErrorCode::kConfig, "regime '" + r.name + "': w outside [0, 1]" );
         Require( std::find( seen.begin(), seen.end(), w ) == seen.end(), ErrorCode::kConfig,
                  "regimes must be disjoint (w = " + std::to_string( w ) + " repeated)" );
         seen.push_back( w );
      }
   }
}

namespace {

struct FrameStats {
   double mean = 0.0;
   double std_error = 0.0;
};

FrameStats MeanAndError( std::vector< double > const& v ) {
   FrameStats s;
   double const n = static_cast< double >( v.size());
   for( double x : v ) {
      s.mean += x;
   }
   s.mean /= n;
   if( v.size() > 1 ) {
      double ss = 0.0;
      for( double x : v ) {
         ss += ( x - s.mean ) * ( x - s.mean );
      }
      s.std_error = std::sqrt( ss / ( n - 1.0 )) / std::sqrt( n );
   }
   return s;
}

AcquisitionInput MixedAcquisition( ChannelFrameSet const& test, MixingRatio t, std::string name ) {
   AcquisitionInput acq;
   acq.name = std::move( name );
   for( std::size_t f = 0; f < test.size(); ++f ) {
      acq.frames.push_back( Mix( test.frames_c0[ f ], test.frames_c1[ f ], t ));
   }
   return acq;
}

double MetricValue( std::string const& metric, Image const& pred, Image const& gt ) {
   if( metric == "psnr" ) {
      return Psnr( pred, gt ).value;
   }
   if( metric == "ms_ssim" ) {
      return MsSsim( pred, gt ).value;
   }
   Fail( ErrorCode::kConfig, "unknown metric '" + metric + "'" );
}

std::string Format( double v ) {
   char buf[ 40 ];
   std::snprintf( buf, sizeof( buf ), "%.17g", v );
   return buf;
}

} // namespace

EvalReport EvaluateRegimes( ModelBundle const& bundle, ChannelFrameSet const& test, EvalOptions const& options ) {
   Require( test.size() > 0, ErrorCode::kIngest, "evaluation needs a non-empty test split" );
   ValidateRegimes( options.regimes );
   Require( !options.variants.empty() && !options.metrics.empty(), ErrorCode::kConfig,
            "evaluation needs at least one variant and one metric" );
   for( auto const& m : options.metrics ) {
      Require( m == "psnr" || m == "ms_ssim", ErrorCode::kConfig, "unknown metric '" + m + "'" );
   }
   EvalReport report;
   for( std::string const& variant : options.variants ) {
      InferenceConfig const cfg = options.base.WithVariant( variant );
      for( RegimeSpec const& regime : options.regimes ) {
         for( double w : regime.w_values ) {
            for( int channel = 0; channel < 2; ++channel ) {
               MixingRatio const t = ConvertWToT( w, channel );
               UnmixOptions uo;
               uo.channels = { channel == 0, channel == 1 };
               UnmixResult const res = Unmix( MixedAcquisition( test, t, test.name ), bundle, cfg, uo );
               auto const& pred = channel == 0 ? res.c0_hat : res.c1_hat;
               auto const& gt = channel == 0 ? test.frames_c0 : test.frames_c1;
               for( std::string const& metric : options.metrics ) {
                  std::vector< double > per_frame;
                  for( std::size_t f = 0; f < gt.size(); ++f ) {
                     per_frame.push_back( MetricValue( metric, pred[ f ], gt[ f ] ));
                  }
                  FrameStats const s = MeanAndError( per_frame );
                  report.rows.push_back( { cfg.VariantName(), regime.name, w, channel, metric, s.mean, s.std_error,
                                           static_cast< int >( per_frame.size()) } );
               }
               if( options.progress ) {
                  options.progress( Json{{ "event", "eval" }, { "variant", cfg.VariantName() }, { "w", w },
                                         { "channel", channel }, { "t_estimate", res.t_estimate }} );
               }
            }
         }
      }
   }
   report.summaries = SummarizeRegimes( report.rows, options.regimes );

   Json regimes = Json::array();
   for( auto const& r : options.regimes ) {
      regimes.push_back( Json{{ "name", r.name }, { "w_values", r.w_values }} );
   }
   report.metadata = Json{
      { "bundle_fingerprint", bundle.Fingerprint() },
      { "dataset_fingerprint", test.Fingerprint() },
      { "scin_table_fingerprint", bundle.scin_table_fingerprint() },
      { "train_config_hash", JsonHash( bundle.train_config ) },
      { "inference_config", options.base.ToJson() },
      { "inference_config_hash", JsonHash( options.base.ToJson()) },
      { "mmse_count", options.base.mmse_count },
      { "seed", options.base.seed },
      { "regimes", regimes },
      { "regime_note", "weak and balanced w sets are symmetric extrapolations of the dominant set" },
      { "metrics", options.metrics },
      { "reserved_metrics", Json::array( { "lpips" } ) },
      { "n_test_frames", test.size() },
      { "ms_ssim_single_scale", std::min( test.frames_c0.front().height(), test.frames_c0.front().width()) < kMsSsimMinSide },
   };
   return report;
}

std::vector< RegimeSummary > SummarizeRegimes( std::vector< EvalRow > const& rows,
                                               std::vector< RegimeSpec > const& regimes ) {
   std::vector< RegimeSummary > out;
   std::vector< std::string > variants;
   std::vector< std::string > metrics;
   for( auto const& r : rows ) {
      if( std::find( variants.begin(), variants.end(), r.model_variant ) == variants.end()) {
         variants.push_back( r.model_variant );
      }
      if( std::find( metrics.begin(), metrics.end(), r.metric ) == metrics.end()) {
         metrics.push_back( r.metric );
      }
   }
   for( auto const& v : variants ) {
      for( auto const& reg : regimes ) {
         for( auto const& m : metrics ) {
            double sum = 0.0;
            int n = 0;
            for( auto const& r : rows ) {
               if( r.model_variant == v && r.regime == reg.name && r.metric == m ) {
                  sum += r.value;
                  ++n;
               }
            }
            if( n > 0 ) {
               out.push_back( { v, reg.name, m, sum / n } );
            }
         }
      }
   }
   return out;
}

double EvalReport::CellMean( std::string const& variant, double w, std::string const& metric ) const {
   double sum = 0.0;
   int n = 0;
   for( auto const& r : rows ) {
      if( r.model_variant == variant && r.w == w && r.metric == metric ) {
         sum += r.value;
         ++n;
      }
   }
   Require( n > 0, ErrorCode::kRange, "no report cell for " + variant + " at w = " + Format( w ));
   return sum / n;
}

double EvalReport::RegimeValue( std::string const& variant, std::string const& regime, std::string const& metric ) const {
   for( auto const& s : summaries ) {
      if( s.model_variant == variant && s.regime == regime && s.metric == metric ) {
         return s.value;
      }
   }
   Fail( ErrorCode::kRange, "no summary for " + variant + " / " + regime + " / " + metric );
}

// --- Sweep --------------------------------------------------------------------

SweepTable DegradationSweep( ModelBundle const& bundle, ChannelFrameSet const& test, std::vector< double > const& actual_w,
                             std::vector< double > const& assumed_w, InferenceConfig const& base,
                             std::function< void( Json const& ) > const& progress ) {
   Require( test.size() > 0, ErrorCode::kIngest, "sweep needs a non-empty test split" );
   Require( !actual_w.empty() && !assumed_w.empty(), ErrorCode::kConfig, "sweep grids must be non-empty" );
   SweepTable table;
   for( double aw : actual_w ) {
      for( double sw : assumed_w ) {
         SweepCell cell{ aw, sw, 0.0, 0.0, 0.0 };
         for( int channel = 0; channel < 2; ++channel ) {
            InferenceConfig cfg = base;
            cfg.aggregation = Aggregation::kFixed;
            cfg.fixed_t = ConvertWToT( sw, channel ).value();
            UnmixOptions uo;
            uo.channels = { channel == 0, channel == 1 };
            UnmixResult const res = Unmix( MixedAcquisition( test, ConvertWToT( aw, channel ), test.name ), bundle, cfg, uo );
            auto const& pred = channel == 0 ? res.c0_hat : res.c1_hat;
            auto const& gt = channel == 0 ? test.frames_c0 : test.frames_c1;
            std::vector< double > per_frame;
            for( std::size_t f = 0; f < gt.size(); ++f ) {
               per_frame.push_back( Psnr( pred[ f ], gt[ f ] ).value );
            }
            ( channel == 0 ? cell.psnr_c0 : cell.psnr_c1 ) = MeanAndError( per_frame ).mean;
         }
         cell.psnr = 0.5 * ( cell.psnr_c0 + cell.psnr_c1 );
         table.cells.push_back( cell );
         if( progress ) {
            progress( Json{{ "event", "sweep" }, { "actual_w", aw }, { "assumed_w", sw }, { "psnr", cell.psnr }} );
         }
      }
   }
   table.metadata = Json{{ "bundle_fingerprint", bundle.Fingerprint() }, { "dataset_fingerprint", test.Fingerprint() },
                         { "inference_config", base.ToJson() }, { "inference_config_hash", JsonHash( base.ToJson()) },
                         { "actual_w", actual_w }, { "assumed_w", assumed_w }};
   return table;
}

double SweepTable::ArgmaxAssumed( double actual_w ) const {
   double best = -std::numeric_limits< double >::infinity();
   double arg = -1.0;
   for( auto const& c : cells ) {
      if( c.actual_w == actual_w && c.psnr > best ) {
         best = c.psnr;
         arg = c.assumed_w;
      }
   }
   Require( arg >= 0.0, ErrorCode::kRange, "no sweep cells for actual w = " + Format( actual_w ));
   return arg;
}

// --- Emission -----------------------------------------------------------------

namespace {

constexpr char const* kCsvHeader = "model_variant,regime,w,channel,metric,value,std_error,n_frames";

std::vector< std::string > SplitCsvLine( std::string const& line ) {
   std::vector< std::string > cells;
   std::string cur;
   for( char ch : line ) {
      if( ch == ',' ) {
         cells.push_back( cur );
         cur.clear();
      } else if( ch != '\r' ) {
         cur += ch;
      }
   }
   cells.push_back( cur );
   return cells;
}

void CreateDir( std::filesystem::path const& dir ) {
   std::error_code ec;
   std::filesystem::create_directories( dir, ec );
   Require( !ec, ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

} // namespace

std::string ReportCsv( EvalReport const& report ) {
   std::string out = std::string( kCsvHeader ) + "\n";
   for( auto const& r : report.rows ) {
      out += r.model_variant + "," + r.regime + "," + Format( r.w ) + "," + std::to_string( r.channel ) + "," + r.metric +
             "," + Format( r.value ) + "," + Format( r.std_error ) + "," + std::to_string( r.n_frames ) + "\n";
   }
   return out;
}

std::vector< EvalRow > ParseReportCsv( std::string const& text ) {
   std::istringstream in( text );
   std::string line;
   Require( static_cast< bool >( std::getline( in, line )) && SplitCsvLine( line ) == SplitCsvLine( kCsvHeader ),
            ErrorCode::kIo, "report CSV has an unexpected header" );
   std::vector< EvalRow > rows;
   while( std::getline( in, line )) {
      if( line.empty()) {
         continue;
      }
      auto const c = SplitCsvLine( line );
      Require( c.size() == 8, ErrorCode::kIo, "report CSV row has " + std::to_string( c.size()) + " cells" );
      try {
         rows.push_back( { c[ 0 ], c[ 1 ], std::stod( c[ 2 ] ), std::stoi( c[ 3 ] ), c[ 4 ], std::stod( c[ 5 ] ),
                           std::stod( c[ 6 ] ), std::stoi( c[ 7 ] ) } );
      } catch( std::exception const& ) {
         Fail( ErrorCode::kIo, "report CSV row is malformed: " + line );
      }
   }
   return rows;
}

Json ReportJson( EvalReport const& report ) {
   Json rows = Json::array();
   for( auto const& r : report.rows ) {
      rows.push_back( Json{{ "model_variant", r.model_variant }, { "regime", r.regime }, { "w", r.w },
                           { "channel", r.channel }, { "metric", r.metric }, { "value", r.value },
                           { "std_error", r.std_error }, { "n_frames", r.n_frames }} );
   }
   Json summaries = Json::array();
   for( auto const& s : report.summaries ) {
      summaries.push_back( Json{{ "model_variant", s.model_variant }, { "regime", s.regime }, { "metric", s.metric },
                                { "value", s.value }} );
   }
   return Json{{ "columns", SplitCsvLine( kCsvHeader ) }, { "rows", rows }, { "regime_summaries", summaries },
               { "metadata", report.metadata }};
}

std::vector< std::filesystem::path > EmitReport( EvalReport const& report, std::filesystem::path const& dir,
                                                 EmitOptions const& options ) {
   Require( !report.rows.empty(), ErrorCode::kState, "cannot emit an empty report" );
   CreateDir( dir );
   std::vector< std::filesystem::path > written;
   if( options.csv ) {
      WriteFileAtomic( dir / "eval_report.csv", ReportCsv( report ));
      std::string summary = "model_variant,regime,metric,value\n";
      for( auto const& s : report.summaries ) {
         summary += s.model_variant + "," + s.regime + "," + s.metric + "," + Format( s.value ) + "\n";
      }
      WriteFileAtomic( dir / "eval_summary.csv", summary );
      written.push_back( dir / "eval_report.csv" );
      written.push_back( dir / "eval_summary.csv" );
   }
   if( options.json ) {
      WriteJsonFile( dir / "eval_report.json", ReportJson( report ));
      written.push_back( dir / "eval_report.json" );
   }
   if( options.plot_data ) {
      // Long format: one line per (variant, w, metric), channels averaged.
      std::string plot = "model_variant,regime,w,metric,value\n";
      std::map< std::tuple< std::string, double, std::string >, bool > done;
      for( auto const& r : report.rows ) {
         auto const key = std::make_tuple( r.model_variant, r.w, r.metric );
         if( done.emplace( key, true ).second ) {
            plot += r.model_variant + "," + r.regime + "," + Format( r.w ) + "," + r.metric + "," +
                    Format( report.CellMean( r.model_variant, r.w, r.metric )) + "\n";
         }
      }
      WriteFileAtomic( dir / "plot_data.csv", plot );
      written.push_back( dir / "plot_data.csv" );
   }
   return written;
}

std::vector< std::filesystem::path > EmitSweep( SweepTable const& table, std::filesystem::path const& dir,
                                                EmitOptions const& options ) {
   Require( !table.cells.empty(), ErrorCode::kState, "cannot emit an empty sweep" );
   CreateDir( dir );
   std::vector< std::filesystem::path > written;
   if( options.csv || options.plot_data ) {
      std::string csv = "actual_w,assumed_w,psnr,psnr_c0,psnr_c1\n";
      for( auto const& c : table.cells ) {
         csv += Format( c.actual_w ) + "," + Format( c.assumed_w ) + "," + Format( c.psnr ) + "," + Format( c.psnr_c0 ) +
                "," + Format( c.psnr_c1 ) + "\n";
      }
      WriteFileAtomic( dir / "sweep.csv", csv );
      written.push_back( dir / "sweep.csv" );
   }
   if( options.json ) {
      Json cells = Json::array();
      for( auto const& c : table.cells ) {
         cells.push_back( Json{{ "actual_w", c.actual_w }, { "assumed_w", c.assumed_w }, { "psnr", c.psnr },
                               { "psnr_c0", c.psnr_c0 }, { "psnr_c1", c.psnr_c1 }} );
      }
      Json argmax = Json::object();
      std::vector< double > seen;
      for( auto const& c : table.cells ) {
         if( std::find( seen.begin(), seen.end(), c.actual_w ) == seen.end()) {
            seen.push_back( c.actual_w );
            argmax[ Format( c.actual_w ) ] = table.ArgmaxAssumed( c.actual_w );
         }
      }
      WriteJsonFile( dir / "sweep.json", Json{{ "cells", cells }, { "argmax_assumed_w", argmax }, { "metadata", table.metadata }} );
      written.push_back( dir / "sweep.json" );
   }
   return written;
}

} // namespace scsplit
