// Copyright 2026 The dnq Authors.
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

#ifndef DNQ_CORE_HPP_
#define DNQ_CORE_HPP_

#include <Eigen/Core>

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dnq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using StateIndex = int;
using ActionIndex = int;

struct ActionProfile {
  ActionIndex a1 = 0;
  ActionIndex a2 = 0;
  friend bool operator==(const ActionProfile&, const ActionProfile&) = default;
};

// Error hierarchy. Everything derives from dnq::Error so callers at the CLI
// boundary can map categories to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidGame : public Error {
 public:
  using Error::Error;
};
class NoEquilibriumFound : public Error {
 public:
  using Error::Error;
};
class TerminalState : public Error {
 public:
  using Error::Error;
};
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};
class InvalidSpec : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class BoundViolation : public Error {
 public:
  using Error::Error;
};

// mt19937_64 with a fixed float conversion (top 53 bits), so streams are
// bit-reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  int index(int n) {
    int i = static_cast<int>(uniform() * n);
    return i < n ? i : n - 1;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Shortest text that reads back to the same double.
inline std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

// Draws an index from a probability vector. Zero-probability entries are never
// returned.
template <typename Derived>
int sample_index(const Eigen::DenseBase<Derived>& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  int last = -1;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = static_cast<int>(i);
    if (u < acc) return last;
  }
  return last;
}

}  // namespace dnq

#endif  // DNQ_CORE_HPP_
