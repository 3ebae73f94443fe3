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

#include "scsplit/common.hpp"
#include "scsplit/image.hpp"

namespace scsplit {

/// Weight of channel 1 in a superimposed image; 0 means pure channel 0.
class MixingRatio {
 public:
   MixingRatio() = default;
   explicit MixingRatio( double t );
   double value() const { return t_; }
   /// The weight of channel 0, i.e. 1 - t.
   MixingRatio Complement() const { return MixingRatio( 1.0 - t_ ); }
   friend bool operator==( MixingRatio, MixingRatio ) = default;
 private:
   double t_ = 0.5;
};

/// Training distribution over t: with probability a/(1+a) the atom, else U[0,1].
struct TSamplerConfig {
   double a = 1.0;
   double atom_location = 0.5;
   void Validate() const;
};

struct NoiseConfig {
   double epsilon = 0.01;
   bool enabled = true;
   void Validate() const;
};

/// (1 - t) * c0 + t * c1, pixel-wise.
Image Mix( Image const& c0, Image const& c1, MixingRatio t );

MixingRatio SampleT( TSamplerConfig const& cfg, Rng& rng );

/// Ratio t such that Mix(c0, c1, t) == w * c_wanted + (1 - w) * c_other.
MixingRatio ConvertWToT( double w, int wanted_channel );

/// x + t * epsilon * n with n ~ N(0, 1) per pixel; identity when disabled.
Image Perturb( Image const& x_norm, MixingRatio t, NoiseConfig const& cfg, Rng& rng );

} // namespace scsplit
