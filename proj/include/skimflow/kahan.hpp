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

#ifndef SKIMFLOW_KAHAN_HPP_
#define SKIMFLOW_KAHAN_HPP_

namespace skimflow {

/// Compensated summation. `comp` holds the low-order part lost by the
/// running sum, so the represented value is sum - comp.
struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }

  void merge(const KahanSum &other) {
    add(other.sum);
    add(-other.comp);
  }

  double value() const { return sum - comp; }
};

}  // namespace skimflow

#endif  // SKIMFLOW_KAHAN_HPP_
