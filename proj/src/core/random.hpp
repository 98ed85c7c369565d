// Copyright 2026 The em2g Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EM2G_CORE_RANDOM_HPP_
#define EM2G_CORE_RANDOM_HPP_

#include <array>
#include <cstdint>

namespace em2g
{

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32-10 block function (Salmon et al., Random123).
PhiloxCounter philox4x32(PhiloxCounter counter, PhiloxKey key);

/// SplitMix64 finalizer, used to derive child seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Counter-based stream addressed by (seed, stream, item). Two generators with
/// the same address produce the same sequence; different addresses never share
/// counter blocks. Within an item, successive calls walk the low counter word.
///
/// Counter layout: {block, item_lo, item_hi, stream}, key = seed.
class CounterStream
{
public:
  CounterStream(std::uint64_t seed, std::uint32_t stream, std::uint64_t item);

  std::uint32_t next_u32();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by the Marsaglia polar method; the spare value is kept.
  double normal();

private:
  PhiloxKey key_;
  PhiloxCounter counter_;
  PhiloxCounter block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace em2g

#endif  // EM2G_CORE_RANDOM_HPP_
