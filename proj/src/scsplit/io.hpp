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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "scsplit/image.hpp"

namespace scsplit {

using Json = nlohmann::json;

// --- Files ------------------------------------------------------------------

std::string ReadTextFile( std::filesystem::path const& path );
Json ReadJsonFile( std::filesystem::path const& path );

/// Writes via a temporary sibling and rename, so readers never see partial files.
void WriteFileAtomic( std::filesystem::path const& path, std::string_view contents );
void WriteJsonFile( std::filesystem::path const& path, Json const& value );

// --- Hashing ----------------------------------------------------------------

/// Lower-case hex SHA-256.
std::string Sha256Hex( std::string_view bytes );
std::string Sha256Hex( std::span< float const > values );

/// Hash of the canonical (sorted-key, compact) serialization.
std::string JsonHash( Json const& value );

// --- Image stacks -----------------------------------------------------------

/// Reads a C-ordered .npy array of shape (N, H, W) or (H, W) into frames.
/// Accepts little-endian float32/float64 and unsigned/signed 8/16/32-bit ints.
std::vector< Image > ReadNpyStack( std::filesystem::path const& path );
/// Writes frames (all the same shape) as a float32 (N, H, W) .npy array.
void WriteNpyStack( std::filesystem::path const& path, std::span< Image const > frames );

/// One TIFF page split into its samples (1 or more channels).
struct TiffPage {
   std::vector< Image > channels;
};

/// Reads every page of a (possibly multi-page) TIFF.
std::vector< TiffPage > ReadTiffPages( std::filesystem::path const& path );
/// Writes single-channel float32 pages.
void WriteTiffStack( std::filesystem::path const& path, std::span< Image const > frames );

} // namespace scsplit
