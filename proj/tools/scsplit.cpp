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

// scsplit command-line front end. Talks to the library through the C API only.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scsplit/scsplit.h"

using Json = nlohmann::json;

namespace {

struct Globals {
   std::string config;
   std::uint64_t seed = 0;
   std::string out;
   int jobs = 0;
   std::string format;
   std::string policy;
   bool quiet = false;
};

void PrintProgress( char const* event_json, void* user ) {
   if( !*static_cast< bool* >( user )) {
      std::cerr << event_json << '\n';
   }
}

int Fail( scs_status status ) {
   Json err{{ "error", {{ "status", scs_status_name( status ) }, { "code", static_cast< int >( status ) },
                        { "message", scs_last_error() }} }};
   std::cerr << err.dump( 2 ) << '\n';
   return static_cast< int >( status );
}

} // namespace

int main( int argc, char** argv ) {
   CLI::App app{ "scsplit: severity-cognizant two-channel image unmixing" };
   app.require_subcommand( 1 );
   app.set_version_flag( "--version", std::string( scs_version()));

   Globals g;
   app.add_option( "--config", g.config, "Run config (JSON)" )->check( CLI::ExistingFile );
   auto* seed_opt = app.add_option( "--seed", g.seed, "Top-level seed" );
   app.add_option( "--out", g.out, "Output directory" );
   app.add_option( "--jobs", g.jobs, "Worker threads" )->check( CLI::PositiveNumber );
   app.add_option( "--format", g.format, "Report formats" )->check( CLI::IsMember( { "csv", "json", "both" } ));
   app.add_option( "--policy", g.policy, "Reuse identical earlier results or recompute" )
         ->check( CLI::IsMember( { "reproduce", "reuse" } ));
   app.add_flag( "-q,--quiet", g.quiet, "No progress output" );

   std::string bundle, acquisitions;
   std::vector< std::string > variants;

   auto* synth = app.add_subcommand( "synth", "Write the synthetic dataset and demo acquisitions" );
   auto* build = app.add_subcommand( "build-scin", "Build the SCIN statistics table" );
   auto* train = app.add_subcommand( "train", "Train both generators and the regressor into a bundle" );
   auto* infer = app.add_subcommand( "infer", "Unmix the acquisitions of a manifest" );
   infer->add_option( "--bundle", bundle, "Model bundle directory" );
   infer->add_option( "--acquisitions", acquisitions, "Acquisition manifest" )->check( CLI::ExistingFile );
   infer->add_option( "--variant", variants, "Aggregation variant (scsplit, fixed:<t>, median, ...)" )->expected( 1 );
   auto* eval = app.add_subcommand( "eval", "Regime evaluation report" );
   eval->add_option( "--bundle", bundle, "Model bundle directory" );
   eval->add_option( "--variant", variants, "Variants to evaluate (repeatable)" );
   auto* sweep = app.add_subcommand( "sweep", "Degradation sweep over assumed w" );
   sweep->add_option( "--bundle", bundle, "Model bundle directory" );
   auto* run = app.add_subcommand( "run", "synth, build-scin, train, eval and sweep in one go" );
   auto* config = app.add_subcommand( "config", "Print the effective config" );
   for( auto* sub : { synth, build, train, infer, eval, sweep, run, config } ) {
      sub->fallthrough();
   }

   CLI11_PARSE( app, argc, argv );

   Json overrides = Json::object();
   if( seed_opt->count()) {
      overrides[ "seed" ] = g.seed;
   }
   if( !g.out.empty()) {
      overrides[ "out" ] = g.out;
   }
   if( g.jobs > 0 ) {
      overrides[ "jobs" ] = g.jobs;
   }
   if( !g.format.empty()) {
      overrides[ "format" ] = g.format;
   }
   if( !g.policy.empty()) {
      overrides[ "policy" ] = g.policy;
   }
   if( !bundle.empty()) {
      overrides[ "paths" ][ "bundle" ] = bundle;
   }
   if( !acquisitions.empty()) {
      overrides[ "paths" ][ "acquisitions" ] = acquisitions;
   }
   if( !variants.empty()) {
      if( infer->parsed()) {
         overrides[ "infer" ][ "aggregation" ] = variants.front();
      } else {
         overrides[ "eval" ][ "variants" ] = variants;
      }
   }

   char const* config_path = g.config.empty() ? nullptr : g.config.c_str();
   std::string const patch = overrides.dump();
   char* result = nullptr;
   scs_status status = SCS_OK;
   if( config->parsed()) {
      status = scs_effective_config( config_path, patch.c_str(), &result );
   } else {
      std::string const command = app.get_subcommands().front()->get_name();
      status = scs_run_command( command.c_str(), config_path, patch.c_str(), PrintProgress, &g.quiet, &result );
   }
   if( status != SCS_OK ) {
      return Fail( status );
   }
   std::cout << Json::parse( result ).dump( 2 ) << '\n';
   scs_free_string( result );
   return 0;
}
