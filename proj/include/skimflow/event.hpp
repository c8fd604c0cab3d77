/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SKIMFLOW_EVENT_HPP_
#define SKIMFLOW_EVENT_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace skimflow {

struct Particle {
  double pt = 0.0;    // GeV
  double eta = 0.0;
  double phi = 0.0;   // radians, [-pi, pi)
  double mass = 0.0;  // GeV
  std::int32_t id = 0;  // quality flag bitmask

  friend bool operator==(const Particle &, const Particle &) = default;
};

enum class Collection : std::uint8_t { Muons, Electrons, Taus, Photons, Jets };
inline constexpr std::size_t kCollectionCount = 5;
inline constexpr std::array<Collection, kCollectionCount> kAllCollections = {
    Collection::Muons, Collection::Electrons, Collection::Taus, Collection::Photons,
    Collection::Jets};

std::string_view collection_name(Collection c);
std::optional<Collection> parse_collection(std::string_view name);

/// One collision record in the layout described by event_schema().
/// The (run, lumi, event) triple is bookkeeping only.
struct Event {
  std::int64_t run = 0;
  std::int64_t lumi = 0;
  std::int64_t event = 0;
  double gen_weight = 1.0;
  double met_pt = 0.0;
  double met_phi = 0.0;
  std::array<std::vector<Particle>, kCollectionCount> collections;

  std::vector<Particle> &operator[](Collection c) { return collections[static_cast<std::size_t>(c)]; }
  const std::vector<Particle> &operator[](Collection c) const {
    return collections[static_cast<std::size_t>(c)];
  }

  /// Approximate resident size, used for cache accounting.
  std::size_t memory_footprint() const;

  friend bool operator==(const Event &, const Event &) = default;
};

/// Throws SchemaViolation unless every particle has pt >= 0, mass >= 0 and
/// phi in [-pi, pi), and met.phi is in [-pi, pi).
void validate_event(const Event &event);

}  // namespace skimflow

#endif  // SKIMFLOW_EVENT_HPP_
