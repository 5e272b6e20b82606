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
#ifndef COVRNN_RNN_H_
#define COVRNN_RNN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "covrnn/isa_model.h"

namespace covrnn {

/// Dense row-major n x n matrix of connection weights.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }

  bool is_symmetric() const;

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// How the alternating +1/-1 sign behaves across rows. The construction
/// initialises it once and lets it run on; resetting per row is kept for
/// experiments.
enum class SignCarry { kCarried, kResetPerRow };

/// Fully connected balanced weights: off-diagonal entries alternate +1/-1,
/// and when a row has an odd number of them the majority group is scaled by
/// (n-2)/n so that every row sums to zero. Throws InvalidSize for n < 2.
WeightMatrix bipolar_weights(std::size_t n, SignCarry carry = SignCarry::kCarried);

/// Sparse balanced weights following the ISA graph: neurons i and j are
/// connected when one's member is the other's set or they share a set.
/// Rows with a single connection end up all-zero (the odd-count factor is 0).
WeightMatrix acyclic_graph_weights(std::span<const InstancePair> pairs,
                                   SignCarry carry = SignCarry::kCarried);

/// Logistic function with steepness lambda: 1 / (1 + exp(-z * lambda)).
double sigmoid(double z, double lambda);

/// Hopfield-style recurrent network with sigmoid units and asynchronous
/// (one neuron per step) activation.
///
/// The net input of neuron i aggregates row i of W: sum_k W(i,k) v_k - theta_i.
/// Rows are what the constructions balance, so the all-0.5 state is a fixed
/// point whenever theta is zero.
class Network {
 public:
  Network(WeightMatrix weights, std::vector<double> state, double lambda,
          std::vector<double> thetas = {});

  std::size_t size() const { return state_.size(); }
  const WeightMatrix& weights() const { return weights_; }
  std::span<const double> thetas() const { return thetas_; }
  std::span<const double> state() const { return state_; }
  double output(std::size_t i) const;
  double lambda() const { return lambda_; }
  std::uint64_t time() const { return time_; }

  double net_input(std::size_t i) const;

  /// Updates neuron i from the current state, advances time, and returns the
  /// new output. Throws IndexError.
  double activate(std::size_t i);

  /// Puts a neuron back to a previously observed output (rejection revert).
  void restore(std::size_t i, double value);

 private:
  void check_index(std::size_t i) const;

  WeightMatrix weights_;
  std::vector<double> thetas_;
  std::vector<double> state_;
  double lambda_;
  std::uint64_t time_ = 0;
};

/// Value-semantics form of Network::activate.
Network activate(Network net, std::size_t i);

/// n independent uniform draws in [lo, hi].
std::vector<double> init_state(std::size_t n, std::uint64_t seed, double lo = 0.4,
                               double hi = 0.6);

double mean_output(std::span<const double> state);

/// Comma-separated rows, full round-trip precision.
std::string weights_to_csv(const WeightMatrix& w);

}  // namespace covrnn

#endif  // COVRNN_RNN_H_
