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

#pragma once

// Reads configuration sections while collecting every problem found, so a
// bad config file is reported in one go.

#include <string>
#include <vector>

#include "scsplit/common.hpp"
#include "scsplit/io.hpp"

namespace scsplit {

class Problems {
 public:
   void Add( std::string msg ) { list_.push_back( std::move( msg )); }
   void Check( bool cond, std::string const& msg ) {
      if( !cond ) {
         Add( msg );
      }
   }
   /// Runs `fn`, recording a thrown Error as a problem.
   template< typename F >
   void Capture( F&& fn ) {
      try {
         fn();
      } catch( Error const& e ) {
         Add( e.what());
      }
   }
   bool empty() const { return list_.empty(); }
   std::vector< std::string > const& list() const { return list_; }
   /// Throws kConfig listing every problem.
   void ThrowIfAny( std::string const& context ) const;

 private:
   std::vector< std::string > list_;
};

/// View on one JSON object of a config file.
class ConfigReader {
 public:
   ConfigReader( Json const& j, std::string path, Problems& problems );

   bool Has( char const* key ) const { return j_.is_object() && j_.contains( key ); }

   template< typename T >
   T Get( char const* key, T fallback ) {
      if( !Has( key ) || j_.at( key ).is_null()) {
         return fallback;
      }
      try {
         return j_.at( key ).get< T >();
      } catch( Json::exception const& ) {
         problems_.Add( Path( key ) + ": wrong type (" + std::string( j_.at( key ).type_name()) + ")" );
         return fallback;
      }
   }

   /// A nested object; absent keys read as an empty object.
   ConfigReader Child( char const* key );
   Json const& json() const { return j_; }
   std::string Path( char const* key ) const { return path_.empty() ? key : path_ + "." + key; }
   Problems& problems() { return problems_; }

 private:
   Json j_;
   std::string path_;
   Problems& problems_;
};

} // namespace scsplit
