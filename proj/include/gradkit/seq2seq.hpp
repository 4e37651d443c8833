#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gradkit/model.hpp"

namespace gradkit {

// Multiplies chosen trace rows at chosen time steps by a constant, after the
// encoder has finished.  Dimensions are 1-based: 1..n is the forward half of
// the trace, n+1..2n the backward half.  Positions are 0-based code point
// indices.  The scaled trace feeds attention as-is; the encoder is not rerun.
struct intervention_hook {
  std::vector<int> dims;
  std::vector<int> positions;
  float factor = 1.0f;
};

// Top-layer encoder states, one column per input position.
struct encoder_trace {
  word input;
  mat_t<float> states;  // trace_dim x |input|
};

encoder_trace encode(const model_state<float>& m, const word& input,
                     const intervention_hook* hook = nullptr);
std::vector<encoder_trace> encode(const model_state<float>& m, const std::vector<word>& inputs);

word decode_greedy(const model_state<float>& m, const encoder_trace& trace);
std::vector<word> decode_greedy(const model_state<float>& m,
                                const std::vector<encoder_trace>& traces);

// Teacher-forced mean cross entropy per target token over one batch, with
// gradients for every parameter.  The double instantiation backs the finite
// difference check.
template <class S>
double loss_and_grads(const model_state<S>& m, std::span<const inflection_example> batch,
                      param_set<S>& grads);

struct train_config {
  int steps = 3000;
  int batch_size = 64;
  double learning_rate = 1.0;
  int schedule_start = 1500;   // halve the rate every schedule_period steps past this
  int schedule_period = 500;
  double clip_norm = 5.0;
  int eval_every = 500;
};

double learning_rate_at(const train_config& c, int step);

struct train_curve_point {
  int step;
  double dev_accuracy;
};

using train_progress =
    std::function<void(int step, double loss, const std::optional<double>& dev_accuracy)>;

// Plain SGD with gradient norm clipping; batches are drawn by reshuffling the
// training set each epoch under the model's seed.  Dev accuracy is recorded
// every eval_every steps and returned as the learning curve.
std::vector<train_curve_point> train(model_state<float>& m,
                                     const std::vector<inflection_example>& train_set,
                                     const std::vector<inflection_example>& dev_set,
                                     const train_config& config,
                                     const train_progress& progress = nullptr);

struct eval_result {
  double overall = 0;
  double gradating = 0;
  double non_gradating = 0;
  int total = 0;
  int gradating_total = 0;
};

// Exact-match accuracy of greedy decoding, split by gradation status.
// Examples must be annotated.
eval_result evaluate(const model_state<float>& m, const std::vector<inflection_example>& examples);

}  // namespace gradkit
