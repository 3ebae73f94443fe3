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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scsplit/image.hpp"
#include "scsplit/io.hpp"
#include "scsplit/mixing.hpp"
#include "scsplit/nn/networks.hpp"
#include "scsplit/scin.hpp"

namespace scsplit {

Json ToJson( GenSpec const& spec );
GenSpec GenSpecFromJson( Json const& j );
Json ToJson( RegSpec const& spec );
RegSpec RegSpecFromJson( Json const& j );

/// Severity fed to generator `channel` for an input mixed at ratio t:
/// t for channel 0 and 1 - t for channel 1.
MixingRatio ChannelSeverity( int channel, MixingRatio t );

/// A trained (or freshly initialized) generator for one channel.
class Generator {
 public:
   Generator() = default;
   /// Initialized parameters.
   Generator( GenSpec const& spec, std::uint64_t seed, std::string table_fingerprint );
   Generator( GenSpec const& spec, std::vector< float > params, std::string table_fingerprint );

   GenSpec const& spec() const { return net_->spec(); }
   nn::UNet< float > const& net() const { return *net_; }
   std::vector< float >& params() { return params_; }
   std::vector< float > const& params() const { return params_; }
   std::string const& table_fingerprint() const { return table_fingerprint_; }
   bool valid() const { return net_ != nullptr; }

   /// Normalized estimate of this generator's channel; `severity` in [0, 1].
   Image Forward( Image const& x, double severity ) const;
   /// Batched form; x is N x 1 x H x W.
   void Forward( nn::Tensor< float > const& x, std::span< float const > severity, nn::Tensor< float >& y ) const;

 private:
   std::shared_ptr< nn::UNet< float > const > net_;
   std::vector< float > params_;
   std::string table_fingerprint_;
};

class Regressor {
 public:
   Regressor() = default;
   Regressor( RegSpec const& spec, std::uint64_t seed, std::string table_fingerprint );
   Regressor( RegSpec const& spec, std::vector< float > params, std::string table_fingerprint );

   RegSpec const& spec() const { return net_->spec(); }
   nn::RegressorNet< float > const& net() const { return *net_; }
   std::vector< float >& params() { return params_; }
   std::vector< float > const& params() const { return params_; }
   std::string const& table_fingerprint() const { return table_fingerprint_; }
   bool valid() const { return net_ != nullptr; }

   /// Estimate of t in [0, 1] for a SCIN-normalized patch.
   double Forward( Image const& x ) const;
   std::vector< double > Forward( nn::Tensor< float > const& x ) const;

 private:
   std::shared_ptr< nn::RegressorNet< float > const > net_;
   std::vector< float > params_;
   std::string table_fingerprint_;
};

/// Everything needed to deploy the model on new acquisitions.
struct ModelBundle {
   static constexpr int kVersion = 1;

   Generator gen0;
   Generator gen1;
   Regressor reg;
   ScinTable table;
   TargetChannelStats target_stats;
   Json train_config = Json::object();
   Json metrics = Json::object();

   std::string scin_table_fingerprint() const { return table.Fingerprint(); }
   Generator const& generator( int channel ) const;
   /// Hash over the manifest (which itself hashes every parameter blob).
   std::string Fingerprint() const;
   Json Manifest() const;
};

/// Assembles a bundle; throws kFingerprint unless all three components were
/// trained against `table`.
ModelBundle MakeBundle( Generator gen0, Generator gen1, Regressor reg, ScinTable table,
                        TargetChannelStats const& target_stats, Json train_config, Json metrics = Json::object());

/// Writes manifest.json, gen0.bin, gen1.bin, reg.bin and scin_table.json into `dir`.
void SaveBundle( ModelBundle const& bundle, std::filesystem::path const& dir );
/// Loads and verifies blob hashes and table fingerprints.
ModelBundle LoadBundle( std::filesystem::path const& dir );

} // namespace scsplit
