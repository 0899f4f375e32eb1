#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ticketforge/dataset.hpp"
#include "ticketforge/mask.hpp"
#include "ticketforge/network.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

/// Row-major batch_size × cols matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

/// Uniform bound of Kaiming-uniform with negative slope sqrt(5):
/// sqrt(6 / ((1 + 5) · fan_in)) = 1 / sqrt(fan_in).
double kaiming_uniform_bound(std::size_t fan_in);

/// Weights and biases uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)], drawn
/// layer by layer, weights before biases. fan_in of a convolution is
/// in_ch · kernel².
Parameters init_kaiming_uniform(const NetworkSpec& spec, RngState& rng);

/// Weights N(0, sigma_w² / fan_in), biases N(0, sigma_b²). Random-network
/// regime used by the expressivity probes.
Parameters init_gaussian(const NetworkSpec& spec, double sigma_w, double sigma_b,
                         RngState& rng);

/// Logits for `batch` rows of flattened inputs; weights enter as weight·mask.
Matrix forward(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
               std::span<const double> inputs, std::size_t batch);

struct LossAndGrads {
  double loss = 0.0;
  Parameters grads;
};

/// Mean softmax cross-entropy and its gradient. Gradients of pruned weights
/// are exactly zero. Throws NumericalError naming the first layer that
/// produced a non-finite value.
LossAndGrads loss_and_grads(const NetworkSpec& spec, const Parameters& params,
                            const MaskSet& mask, std::span<const double> inputs,
                            std::span<const int> labels);

/// Row-wise softmax.
Matrix softmax(const Matrix& logits);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

/// w -= lr · g on surviving weights and on all biases.
void sgd_update(Parameters& params, const Parameters& grads, const MaskSet& mask, double lr);
Parameters sgd_step(Parameters params, const Parameters& grads, const MaskSet& mask, double lr);

struct TrainConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  /// Epochs without improvement tolerated before stopping.
  std::size_t patience = 5;
  /// Improvement means val_acc > best + min_delta.
  double min_delta = 0.0;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainResult {
  Parameters params;  // from the best-validation epoch
  double val_acc = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

/// Minibatch SGD with per-epoch shuffling drawn from `rng`. Incoming pruned
/// weights are zeroed first and stay exactly zero.
TrainResult train_until_early_stop(const NetworkSpec& spec, const Parameters& params,
                                   const MaskSet& mask, const Split& train, const Split& val,
                                   const TrainConfig& cfg, RngState& rng);

double evaluate_accuracy(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                         const Split& split);

}  // namespace ticketforge
