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

#include "skimflow/event.hpp"

#include <numbers>
#include <string>

#include "skimflow/error.hpp"

namespace skimflow {

std::string_view collection_name(Collection c) {
  switch (c) {
    case Collection::Muons: return "muons";
    case Collection::Electrons: return "electrons";
    case Collection::Taus: return "taus";
    case Collection::Photons: return "photons";
    case Collection::Jets: return "jets";
  }
  return "?";
}

std::optional<Collection> parse_collection(std::string_view name) {
  for (auto c : kAllCollections) {
    if (collection_name(c) == name) return c;
  }
  return std::nullopt;
}

std::size_t Event::memory_footprint() const {
  std::size_t bytes = sizeof(Event);
  for (const auto &coll : collections) bytes += coll.capacity() * sizeof(Particle);
  return bytes;
}

namespace {

bool phi_in_range(double phi) { return phi >= -std::numbers::pi && phi < std::numbers::pi; }

}  // namespace

void validate_event(const Event &event) {
  if (!phi_in_range(event.met_phi)) {
    throw Error(Errc::SchemaViolation, "met.phi out of [-pi, pi) in event " + std::to_string(event.event));
  }
  if (!(event.met_pt >= 0.0)) {
    throw Error(Errc::SchemaViolation, "negative met.pt in event " + std::to_string(event.event));
  }
  for (auto c : kAllCollections) {
    for (const auto &p : event[c]) {
      if (!(p.pt >= 0.0) || !(p.mass >= 0.0) || !phi_in_range(p.phi)) {
        throw Error(Errc::SchemaViolation, std::string(collection_name(c)) +
                                               " particle violates pt/mass/phi range in event " +
                                               std::to_string(event.event));
      }
    }
  }
}

}  // namespace skimflow
