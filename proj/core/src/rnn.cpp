// Copyright 2026 The covrnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "covrnn/rnn.h"

#include <cmath>
#include <numeric>
#include <sstream>
#include <iomanip>
#include <limits>

#include "covrnn/errors.h"
#include "covrnn/rng.h"

namespace covrnn {
namespace {

// Scales the majority-sign group of a row so it balances the minority group.
void modify_weights(double odd_modifier, double sum, std::span<double> row) {
  if (odd_modifier == 1.0) return;
  for (double& w : row) {
    if ((sum > 0 && w > 0) || (sum < 0 && w < 0)) w *= odd_modifier;
    if (w == 0.0) w = 0.0;  // no negative zeros in exported matrices
  }
}

}  // namespace

bool WeightMatrix::is_symmetric() const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) return false;
    }
  }
  return true;
}

WeightMatrix bipolar_weights(std::size_t n, SignCarry carry) {
  if (n < 2) throw InvalidSize("bipolar model needs at least 2 neurons, got " + std::to_string(n));
  WeightMatrix w(n);
  const double odd_modifier =
      (n - 1) % 2 == 1 ? static_cast<double>(n - 2) / static_cast<double>(n) : 1.0;
  double sign = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (carry == SignCarry::kResetPerRow) sign = 1.0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      sum += sign;
      w(i, j) = sign;
      sign = -sign;
    }
    modify_weights(odd_modifier, sum, w.row(i));
  }
  return w;
}

WeightMatrix acyclic_graph_weights(std::span<const InstancePair> pairs, SignCarry carry) {
  const std::size_t n = pairs.size();
  WeightMatrix w(n);
  double sign = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (carry == SignCarry::kResetPerRow) sign = 1.0;
    std::size_t connections = 0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) {
        ++connections;  // the diagonal counts, as in the construction
        continue;
      }
      const InstancePair& a = pairs[i];
      const InstancePair& b = pairs[j];
      if (a.member == b.set || a.set == b.member || a.set == b.set) {
        w(i, j) = sign;
        sum += sign;
        sign = -sign;
        ++connections;
      }
    }
    const double odd_modifier =
        (connections - 1) % 2 == 1
            ? (static_cast<double>(connections) - 2.0) / static_cast<double>(connections)
            : 1.0;
    modify_weights(odd_modifier, sum, w.row(i));
  }
  return w;
}

double sigmoid(double z, double lambda) { return 1.0 / (1.0 + std::exp(-z * lambda)); }

Network::Network(WeightMatrix weights, std::vector<double> state, double lambda,
                 std::vector<double> thetas)
    : weights_(std::move(weights)),
      thetas_(std::move(thetas)),
      state_(std::move(state)),
      lambda_(lambda) {
  if (weights_.size() != state_.size()) {
    throw InvalidSize("weight matrix is " + std::to_string(weights_.size()) +
                      " wide but state has " + std::to_string(state_.size()) + " entries");
  }
  if (thetas_.empty()) thetas_.assign(state_.size(), 0.0);
  if (thetas_.size() != state_.size()) throw InvalidSize("threshold vector size mismatch");
  if (!(lambda_ > 0.0)) throw ConfigError("sigmoid steepness must be positive");
}

void Network::check_index(std::size_t i) const {
  if (i >= state_.size()) {
    throw IndexError("neuron " + std::to_string(i) + " out of range [0, " +
                     std::to_string(state_.size()) + ")");
  }
}

double Network::output(std::size_t i) const {
  check_index(i);
  return state_[i];
}

double Network::net_input(std::size_t i) const {
  check_index(i);
  auto row = weights_.row(i);
  double z = 0.0;
  for (std::size_t k = 0; k < state_.size(); ++k) z += row[k] * state_[k];
  return z - thetas_[i];
}

double Network::activate(std::size_t i) {
  const double v = sigmoid(net_input(i), lambda_);
  state_[i] = v;
  ++time_;
  return v;
}

void Network::restore(std::size_t i, double value) {
  check_index(i);
  state_[i] = value;
}

Network activate(Network net, std::size_t i) {
  net.activate(i);
  return net;
}

std::vector<double> init_state(std::size_t n, std::uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

double mean_output(std::span<const double> state) {
  if (state.empty()) return 0.0;
  return std::accumulate(state.begin(), state.end(), 0.0) / static_cast<double>(state.size());
}

std::string weights_to_csv(const WeightMatrix& w) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (j) out << ',';
      out << w(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace covrnn
