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

#ifndef SKIMFLOW_PHASE_HPP_
#define SKIMFLOW_PHASE_HPP_

#include <chrono>

namespace skimflow {

enum class Phase { Read, Decode, Compute, Write };

/// Wall seconds attributed to each phase.
struct PhaseTimes {
  double read = 0.0;
  double decode = 0.0;
  double compute = 0.0;
  double write = 0.0;

  double total() const { return read + decode + compute + write; }
  double &operator[](Phase p) {
    switch (p) {
      case Phase::Read: return read;
      case Phase::Decode: return decode;
      case Phase::Compute: return compute;
      case Phase::Write: return write;
    }
    return compute;
  }
  PhaseTimes &operator+=(const PhaseTimes &o) {
    read += o.read;
    decode += o.decode;
    compute += o.compute;
    write += o.write;
    return *this;
  }
};

/**
 * Attributes elapsed time to whichever phase is current. Switching phases
 * takes a single clock reading, so consecutive phases share boundaries and
 * nothing between start() and stop() goes unaccounted.
 */
class PhaseClock {
 public:
  using clock = std::chrono::steady_clock;

  void start(Phase p) {
    current_ = p;
    mark_ = clock::now();
    running_ = true;
  }

  void switch_to(Phase p) {
    if (!running_) {
      start(p);
      return;
    }
    const auto now = clock::now();
    times_[current_] += std::chrono::duration<double>(now - mark_).count();
    mark_ = now;
    current_ = p;
  }

  void stop() {
    if (!running_) return;
    times_[current_] += std::chrono::duration<double>(clock::now() - mark_).count();
    running_ = false;
  }

  const PhaseTimes &times() const { return times_; }

 private:
  PhaseTimes times_;
  Phase current_ = Phase::Compute;
  clock::time_point mark_{};
  bool running_ = false;
};

}  // namespace skimflow

#endif  // SKIMFLOW_PHASE_HPP_
