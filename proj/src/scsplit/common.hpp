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

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace scsplit {

/// Error categories. The numeric values are part of the C API.
enum class ErrorCode : int {
   kConfig = 1,       // invalid configuration / parameters
   kIo = 2,           // file system or format errors
   kIngest = 3,       // data ingestion (bad pixels, channel mismatch)
   kShape = 4,        // array shape mismatch
   kFingerprint = 5,  // table / bundle fingerprint mismatch
   kDiverged = 6,     // non-finite loss during training
   kState = 7,        // object used before it was ready (unbuilt table, ...)
   kRange = 8,        // scalar argument out of its domain
};

class Error : public std::runtime_error {
 public:
   Error( ErrorCode code, std::string const& what ) : std::runtime_error( what ), code_( code ) {}
   ErrorCode code() const noexcept { return code_; }
 private:
   ErrorCode code_;
};

[[noreturn]] inline void Fail( ErrorCode code, std::string const& what ) {
   throw Error( code, what );
}

inline void Require( bool cond, ErrorCode code, std::string const& what ) {
   if( !cond ) {
      throw Error( code, what );
   }
}

using Rng = std::mt19937_64;

/// Derives an independent seed for sub-stream `stream` of `base` (splitmix64 finalizer).
inline std::uint64_t DeriveSeed( std::uint64_t base, std::uint64_t stream ) {
   std::uint64_t z = base + 0x9E3779B97F4A7C15ull * ( stream + 1 );
   z = ( z ^ ( z >> 30 )) * 0xBF58476D1CE4E5B9ull;
   z = ( z ^ ( z >> 27 )) * 0x94D049BB133111EBull;
   return z ^ ( z >> 31 );
}

inline Rng MakeRng( std::uint64_t base, std::uint64_t stream ) {
   return Rng( DeriveSeed( base, stream ));
}

} // namespace scsplit
