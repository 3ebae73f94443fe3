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

#include "scsplit/config.hpp"

namespace scsplit {

void Problems::ThrowIfAny( std::string const& context ) const {
   if( list_.empty()) {
      return;
   }
   std::string msg = context + ": " + std::to_string( list_.size()) + " problem(s)";
   for( auto const& p : list_ ) {
      msg += "\n  - " + p;
   }
   Fail( ErrorCode::kConfig, msg );
}

ConfigReader::ConfigReader( Json const& j, std::string path, Problems& problems )
      : j_( j.is_null() ? Json::object() : j ), path_( std::move( path )), problems_( problems ) {
   if( !j_.is_object()) {
      problems_.Add(( path_.empty() ? std::string( "config" ) : path_ ) + ": expected an object" );
      j_ = Json::object();
   }
}

ConfigReader ConfigReader::Child( char const* key ) {
   return ConfigReader( Has( key ) ? j_.at( key ) : Json::object(), Path( key ), problems_ );
}

} // namespace scsplit
