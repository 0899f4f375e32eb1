#include "ticketforge/nn.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <numeric>

#include "ticketforge/error.hpp"
#include "ticketforge/pruning.hpp"

namespace ticketforge {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Activations of one forward pass, kept for the backward pass.
struct Trace {
  std::vector<Shape> shapes;
  std::vector<std::vector<double>> acts;  // acts[l] enters layer l
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  std::vector<std::vector<double>> eff_weights;   // per parameterized layer, weight·mask
  std::vector<std::vector<double>> dense_wt;      // transposed Dense weights [in][out]
  std::vector<std::size_t> param_slot;            // layer → parameter index, or npos
  std::size_t batch = 0;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

void dense_forward(const Dense& d, const std::vector<double>& wt, const std::vector<double>& bias,
                   const std::vector<double>& in, std::vector<double>& out, std::size_t batch) {
  const std::size_t I = d.fan_in, O = d.fan_out;
  out.assign(batch * O, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    double* o_row = out.data() + b * O;
    const double* x = in.data() + b * I;
    std::copy(bias.begin(), bias.end(), o_row);
    for (std::size_t i = 0; i < I; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* w = wt.data() + i * O;
      for (std::size_t o = 0; o < O; ++o) o_row[o] += w[o] * xi;
    }
  }
}

void conv_forward(const Conv2d& c, const Shape& in_shape, const Shape& out_shape,
                  const std::vector<double>& w, const std::vector<double>& bias,
                  const std::vector<double>& in, std::vector<double>& out, std::size_t batch) {
  const std::size_t C = c.in_ch, H = in_shape[1], W = in_shape[2];
  const std::size_t O = c.out_ch, Ho = out_shape[1], Wo = out_shape[2];
  const std::size_t k = c.kernel, s = c.stride;
  const std::size_t in_size = C * H * W, out_size = O * Ho * Wo;
  out.assign(batch * out_size, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* x = in.data() + b * in_size;
    double* y = out.data() + b * out_size;
    for (std::size_t o = 0; o < O; ++o) {
      double* yo = y + o * Ho * Wo;
      std::fill(yo, yo + Ho * Wo, bias[o]);
      for (std::size_t ch = 0; ch < C; ++ch) {
        const double* xc = x + ch * H * W;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double wv = w[((o * C + ch) * k + ky) * k + kx];
            if (wv == 0.0) continue;
            for (std::size_t oy = 0; oy < Ho; ++oy) {
              const double* xr = xc + (oy * s + ky) * W + kx;
              double* yr = yo + oy * Wo;
              for (std::size_t ox = 0; ox < Wo; ++ox) yr[ox] += wv * xr[ox * s];
            }
          }
        }
      }
    }
  }
}

void pool_forward(const MaxPool& p, const Shape& in_shape, const Shape& out_shape,
                  const std::vector<double>& in, std::vector<double>& out,
                  std::vector<std::uint32_t>& argmax_idx, std::size_t batch) {
  const std::size_t C = in_shape[0], H = in_shape[1], W = in_shape[2];
  const std::size_t Ho = out_shape[1], Wo = out_shape[2], win = p.window;
  const std::size_t in_size = C * H * W, out_size = C * Ho * Wo;
  out.assign(batch * out_size, 0.0);
  argmax_idx.assign(batch * out_size, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t ch = 0; ch < C; ++ch) {
      for (std::size_t oy = 0; oy < Ho; ++oy) {
        for (std::size_t ox = 0; ox < Wo; ++ox) {
          std::size_t best = b * in_size + (ch * H + oy * win) * W + ox * win;
          for (std::size_t dy = 0; dy < win; ++dy) {
            for (std::size_t dx = 0; dx < win; ++dx) {
              const std::size_t idx = b * in_size + (ch * H + oy * win + dy) * W + ox * win + dx;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const std::size_t o = b * out_size + (ch * Ho + oy) * Wo + ox;
          out[o] = in[best];
          argmax_idx[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
}

Trace run_forward(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                  std::span<const double> inputs, std::size_t batch) {
  Trace t;
  t.shapes = validate(spec);
  check_congruent(spec, params);
  check_congruent(mask, params);
  const std::size_t in_size = shape_size(spec.input_shape);
  if (inputs.size() != batch * in_size) {
    throw ShapeError(fmt::format("input has {} values, expected {} rows of {}", inputs.size(),
                                 batch, in_size));
  }
  t.batch = batch;

  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    const auto& w = params.layers[j].weights;
    const auto& m = mask.layers[j];
    std::vector<double> eff(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) eff[i] = m[i] ? w[i] : 0.0;
    t.eff_weights.push_back(std::move(eff));
  }

  const std::size_t L = spec.layers.size();
  t.acts.resize(L + 1);
  t.pool_argmax.resize(L);
  t.dense_wt.resize(L);
  t.param_slot.assign(L, kNone);
  t.acts[0].assign(inputs.begin(), inputs.end());

  std::size_t j = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const Layer& layer = spec.layers[l];
    const auto& in = t.acts[l];
    auto& out = t.acts[l + 1];
    if (const auto* d = std::get_if<Dense>(&layer)) {
      t.param_slot[l] = j;
      const auto& eff = t.eff_weights[j];
      auto& wt = t.dense_wt[l];
      wt.resize(eff.size());
      for (std::size_t o = 0; o < d->fan_out; ++o) {
        for (std::size_t i = 0; i < d->fan_in; ++i) wt[i * d->fan_out + o] = eff[o * d->fan_in + i];
      }
      dense_forward(*d, wt, params.layers[j].biases, in, out, batch);
      ++j;
    } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
      t.param_slot[l] = j;
      conv_forward(*c, t.shapes[l], t.shapes[l + 1], t.eff_weights[j], params.layers[j].biases,
                   in, out, batch);
      ++j;
    } else if (std::holds_alternative<ReLU>(layer)) {
      out.resize(in.size());
      std::transform(in.begin(), in.end(), out.begin(), [](double x) { return x > 0.0 ? x : 0.0; });
    } else if (const auto* p = std::get_if<MaxPool>(&layer)) {
      pool_forward(*p, t.shapes[l], t.shapes[l + 1], in, out, t.pool_argmax[l], batch);
    } else {
      out = in;
    }
    if (!all_finite(out)) {
      throw NumericalError(
          fmt::format("non-finite activation at layer {} {}", l, layer_name(layer)), l);
    }
  }
  return t;
}

Parameters run_backward(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                        Trace& t, std::vector<double> grad) {
  Parameters grads = zeros_like(params);
  const std::size_t B = t.batch;
  for (std::size_t l = spec.layers.size(); l-- > 0;) {
    const Layer& layer = spec.layers[l];
    const auto& in = t.acts[l];
    const bool need_input_grad = l > 0;
    std::vector<double> dx;
    if (const auto* d = std::get_if<Dense>(&layer)) {
      const std::size_t j = t.param_slot[l];
      const std::size_t I = d->fan_in, O = d->fan_out;
      auto& dW = grads.layers[j].weights;
      auto& db = grads.layers[j].biases;
      const auto& eff = t.eff_weights[j];
      if (need_input_grad) dx.assign(B * I, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        const double* g = grad.data() + b * O;
        const double* x = in.data() + b * I;
        for (std::size_t o = 0; o < O; ++o) {
          const double go = g[o];
          if (go == 0.0) continue;
          db[o] += go;
          double* dw = dW.data() + o * I;
          for (std::size_t i = 0; i < I; ++i) dw[i] += go * x[i];
          if (need_input_grad) {
            const double* w = eff.data() + o * I;
            double* dxr = dx.data() + b * I;
            for (std::size_t i = 0; i < I; ++i) dxr[i] += w[i] * go;
          }
        }
      }
    } else if (const auto* c = std::get_if<Conv2d>(&layer)) {
      const std::size_t j = t.param_slot[l];
      const Shape& is = t.shapes[l];
      const Shape& os = t.shapes[l + 1];
      const std::size_t C = c->in_ch, H = is[1], W = is[2];
      const std::size_t O = c->out_ch, Ho = os[1], Wo = os[2];
      const std::size_t k = c->kernel, s = c->stride;
      const std::size_t in_size = C * H * W, out_size = O * Ho * Wo;
      auto& dW = grads.layers[j].weights;
      auto& db = grads.layers[j].biases;
      const auto& eff = t.eff_weights[j];
      if (need_input_grad) dx.assign(B * in_size, 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        const double* x = in.data() + b * in_size;
        const double* g = grad.data() + b * out_size;
        double* dxb = need_input_grad ? dx.data() + b * in_size : nullptr;
        for (std::size_t o = 0; o < O; ++o) {
          const double* go = g + o * Ho * Wo;
          double bsum = 0.0;
          for (std::size_t q = 0; q < Ho * Wo; ++q) bsum += go[q];
          db[o] += bsum;
          for (std::size_t ch = 0; ch < C; ++ch) {
            const double* xc = x + ch * H * W;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const std::size_t widx = ((o * C + ch) * k + ky) * k + kx;
                double acc = 0.0;
                for (std::size_t oy = 0; oy < Ho; ++oy) {
                  const double* xr = xc + (oy * s + ky) * W + kx;
                  const double* gr = go + oy * Wo;
                  for (std::size_t ox = 0; ox < Wo; ++ox) acc += gr[ox] * xr[ox * s];
                }
                dW[widx] += acc;
                if (dxb != nullptr && eff[widx] != 0.0) {
                  const double wv = eff[widx];
                  double* dxc = dxb + ch * H * W;
                  for (std::size_t oy = 0; oy < Ho; ++oy) {
                    double* dr = dxc + (oy * s + ky) * W + kx;
                    const double* gr = go + oy * Wo;
                    for (std::size_t ox = 0; ox < Wo; ++ox) dr[ox * s] += wv * gr[ox];
                  }
                }
              }
            }
          }
        }
      }
    } else if (std::holds_alternative<ReLU>(layer)) {
      if (need_input_grad) {
        dx.resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) dx[i] = in[i] > 0.0 ? grad[i] : 0.0;
      }
    } else if (std::holds_alternative<MaxPool>(layer)) {
      if (need_input_grad) {
        dx.assign(in.size(), 0.0);
        const auto& idx = t.pool_argmax[l];
        for (std::size_t o = 0; o < idx.size(); ++o) dx[idx[o]] += grad[o];
      }
    } else {
      if (need_input_grad) dx = std::move(grad);
    }

    if (const std::size_t j = t.param_slot[l]; j != kNone) {
      auto& dW = grads.layers[j].weights;
      const auto& m = mask.layers[j];
      for (std::size_t i = 0; i < dW.size(); ++i) {
        if (!m[i]) dW[i] = 0.0;
      }
      if (!all_finite(dW) || !all_finite(grads.layers[j].biases)) {
        throw NumericalError(
            fmt::format("non-finite gradient at layer {} {}", l, layer_name(layer)), l);
      }
    }
    if (need_input_grad) {
      if (!all_finite(dx)) {
        throw NumericalError(
            fmt::format("non-finite gradient at layer {} {}", l, layer_name(layer)), l);
      }
      grad = std::move(dx);
    }
  }
  return grads;
}

void check_split(const NetworkSpec& spec, const Split& split, const char* name) {
  if (split.empty()) throw Error(fmt::format("{} split is empty", name));
  if (split.dim != shape_size(spec.input_shape) || split.x.size() != split.size() * split.dim) {
    throw ShapeError(fmt::format("{} split has dimension {}, network expects {}", name, split.dim,
                                 shape_size(spec.input_shape)));
  }
}

}  // namespace

double kaiming_uniform_bound(std::size_t fan_in) {
  if (fan_in == 0) throw InvalidSpecError("fan_in must be positive");
  const double a = std::sqrt(5.0);
  return std::sqrt(6.0 / ((1.0 + a * a) * static_cast<double>(fan_in)));
}

Parameters init_kaiming_uniform(const NetworkSpec& spec, RngState& rng) {
  validate(spec);
  Parameters p = zeros_like(spec);
  std::size_t j = 0;
  for (std::size_t l : parameterized_layers(spec)) {
    const std::size_t fi = fan_in(spec.layers[l]);
    const double w_bound = kaiming_uniform_bound(fi);
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(fi));
    for (double& w : p.layers[j].weights) w = rng.uniform(-w_bound, w_bound);
    for (double& b : p.layers[j].biases) b = rng.uniform(-b_bound, b_bound);
    ++j;
  }
  return p;
}

Parameters init_gaussian(const NetworkSpec& spec, double sigma_w, double sigma_b,
                         RngState& rng) {
  validate(spec);
  Parameters p = zeros_like(spec);
  std::size_t j = 0;
  for (std::size_t l : parameterized_layers(spec)) {
    const double scale = sigma_w / std::sqrt(static_cast<double>(fan_in(spec.layers[l])));
    for (double& w : p.layers[j].weights) w = scale * rng.normal();
    for (double& b : p.layers[j].biases) b = sigma_b * rng.normal();
    ++j;
  }
  return p;
}

Matrix forward(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
               std::span<const double> inputs, std::size_t batch) {
  Trace t = run_forward(spec, params, mask, inputs, batch);
  return Matrix{batch, spec.num_classes, std::move(t.acts.back())};
}

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (std::size_t r = 0; r < p.rows; ++r) {
    double* row = p.data.data() + r * p.cols;
    const double m = *std::max_element(row, row + p.cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < p.cols; ++c) {
      row[c] = std::exp(row[c] - m);
      sum += row[c];
    }
    for (std::size_t c = 0; c < p.cols; ++c) row[c] /= sum;
  }
  return p;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

LossAndGrads loss_and_grads(const NetworkSpec& spec, const Parameters& params,
                            const MaskSet& mask, std::span<const double> inputs,
                            std::span<const int> labels) {
  const std::size_t B = labels.size();
  if (B == 0) throw Error("loss_and_grads on an empty batch");
  Trace t = run_forward(spec, params, mask, inputs, B);
  const std::size_t C = spec.num_classes;
  const auto& z = t.acts.back();
  std::vector<double> dz(B * C);
  double loss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    const int y = labels[b];
    if (y < 0 || static_cast<std::size_t>(y) >= C) {
      throw Error(fmt::format("label {} out of range [0, {})", y, C));
    }
    const double* zr = z.data() + b * C;
    const double m = *std::max_element(zr, zr + C);
    double sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) sum += std::exp(zr[c] - m);
    loss += (m + std::log(sum)) - zr[y];
    for (std::size_t c = 0; c < C; ++c) {
      const double p = std::exp(zr[c] - m) / sum;
      dz[b * C + c] = (p - (static_cast<std::size_t>(y) == c ? 1.0 : 0.0)) / static_cast<double>(B);
    }
  }
  loss /= static_cast<double>(B);
  if (!std::isfinite(loss)) {
    const std::size_t last = spec.layers.size() - 1;
    throw NumericalError(fmt::format("non-finite loss after layer {} {}", last,
                                     layer_name(spec.layers[last])),
                         last);
  }
  return {loss, run_backward(spec, params, mask, t, std::move(dz))};
}

void sgd_update(Parameters& params, const Parameters& grads, const MaskSet& mask, double lr) {
  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    auto& w = params.layers[j].weights;
    const auto& g = grads.layers[j].weights;
    const auto& m = mask.layers[j];
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (m[i]) w[i] -= lr * g[i];
    }
    auto& b = params.layers[j].biases;
    const auto& gb = grads.layers[j].biases;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }
}

Parameters sgd_step(Parameters params, const Parameters& grads, const MaskSet& mask, double lr) {
  check_congruent(mask, params);
  if (grads.layers.size() != params.layers.size()) throw ShapeError("gradient layer count mismatch");
  for (std::size_t j = 0; j < params.layers.size(); ++j) {
    if (grads.layers[j].weights.size() != params.layers[j].weights.size() ||
        grads.layers[j].biases.size() != params.layers[j].biases.size()) {
      throw ShapeError(fmt::format("gradient layer {} shape mismatch", j));
    }
  }
  sgd_update(params, grads, mask, lr);
  return params;
}

double evaluate_accuracy(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                         const Split& split) {
  check_split(spec, split, "evaluation");
  constexpr std::size_t kChunk = 512;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < split.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, split.size() - start);
    const Matrix logits =
        forward(spec, params, mask, {split.x.data() + start * split.dim, n * split.dim}, n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t pred = argmax({logits.data.data() + r * logits.cols, logits.cols});
      if (static_cast<int>(pred) == split.y[start + r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

TrainResult train_until_early_stop(const NetworkSpec& spec, const Parameters& params,
                                   const MaskSet& mask, const Split& train, const Split& val,
                                   const TrainConfig& cfg, RngState& rng) {
  check_split(spec, train, "training");
  check_split(spec, val, "validation");
  if (!(cfg.learning_rate > 0.0)) throw Error("learning_rate must be positive");
  if (cfg.batch_size == 0 || cfg.batch_size > train.size()) {
    throw Error(fmt::format("batch_size must lie in [1, {}], got {}", train.size(),
                            cfg.batch_size));
  }
  if (cfg.max_epochs == 0) throw Error("max_epochs must be positive");
  if (cfg.min_delta < 0.0) throw Error("min_delta must be non-negative");

  Parameters current = apply_mask(params, mask);
  TrainResult result{current, -std::numeric_limits<double>::infinity(), 0, 0};

  const std::size_t n = train.size();
  const std::size_t dim = train.dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> xb;
  std::vector<int> yb;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - start);
      xb.resize(count * dim);
      yb.resize(count);
      for (std::size_t r = 0; r < count; ++r) {
        const std::size_t src = order[start + r];
        std::copy_n(train.x.data() + src * dim, dim, xb.data() + r * dim);
        yb[r] = train.y[src];
      }
      const LossAndGrads lg = loss_and_grads(spec, current, mask, xb, yb);
      sgd_update(current, lg.grads, mask, cfg.learning_rate);
    }
    const double acc = evaluate_accuracy(spec, current, mask, val);
    result.epochs_run = epoch;
    if (acc > result.val_acc + cfg.min_delta) {
      result.val_acc = acc;
      result.params = current;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace ticketforge
