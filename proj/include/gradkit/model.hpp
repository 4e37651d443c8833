#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gradkit/dataset.hpp"

namespace gradkit {

template <class S>
using mat_t = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

struct model_config {
  int embed_dim = 500;
  int encoder_layers = 2;
  int encoder_hidden = 250;  // per direction; the trace carries 2x this
  int decoder_hidden = 250;
  int attention_dim = 250;
  int max_decode_len = 40;

  int trace_dim() const { return 2 * encoder_hidden; }
  bool operator==(const model_config&) const = default;
};

// One LSTM direction: wx takes the layer input, wh the recurrent state.
// Rows hold the four gates stacked [input; forget; cell; output].
template <class S>
struct lstm_params {
  mat_t<S> wx;
  mat_t<S> wh;
  mat_t<S> b;  // 4H x 1
};

template <class S>
struct param_set {
  mat_t<S> enc_embed;  // E x V, one column per symbol id
  std::vector<std::array<lstm_params<S>, 2>> encoder;  // [layer][0 fwd, 1 bwd]
  mat_t<S> dec_embed;  // E x V
  lstm_params<S> decoder;  // input is [embedding; context]
  mat_t<S> att_dec;   // A x H, projects the decoder state
  mat_t<S> att_enc;   // A x 2H, projects encoder trace columns
  mat_t<S> att_bias;  // A x 1
  mat_t<S> att_v;     // A x 1
  mat_t<S> out_w;     // V x (H + 2H), consumes [state; context]
  mat_t<S> out_b;     // V x 1
};

template <class S>
struct model_state {
  model_config config;
  vocabulary vocab;
  std::uint64_t seed = 0;
  long trained_steps = 0;
  param_set<S> params;
};

// Stable-order walk over every weight tensor; the same order backs
// initialization, the checkpoint layout, gradient clipping and updates.
template <class S, class F>
void for_each_tensor(param_set<S>& p, F&& f) {
  f("enc_embed", p.enc_embed);
  for (std::size_t l = 0; l < p.encoder.size(); ++l) {
    for (int d = 0; d < 2; ++d) {
      std::string base = "enc.l" + std::to_string(l) + (d == 0 ? ".fwd" : ".bwd");
      f((base + ".wx").c_str(), p.encoder[l][d].wx);
      f((base + ".wh").c_str(), p.encoder[l][d].wh);
      f((base + ".b").c_str(), p.encoder[l][d].b);
    }
  }
  f("dec_embed", p.dec_embed);
  f("dec.wx", p.decoder.wx);
  f("dec.wh", p.decoder.wh);
  f("dec.b", p.decoder.b);
  f("att_dec", p.att_dec);
  f("att_enc", p.att_enc);
  f("att_bias", p.att_bias);
  f("att_v", p.att_v);
  f("out_w", p.out_w);
  f("out_b", p.out_b);
}

template <class S, class F>
void for_each_tensor(const param_set<S>& p, F&& f) {
  for_each_tensor(const_cast<param_set<S>&>(p),
                  [&](const char* n, mat_t<S>& m) { f(n, static_cast<const mat_t<S>&>(m)); });
}

// Gradient holder with the same shapes as the parameters.
template <class S>
param_set<S> zero_like(const param_set<S>& p);

// Weights drawn uniformly from [-0.1, 0.1], reproducible from the seed.
template <class S>
model_state<S> init_model(const model_config& config, const vocabulary& vocab,
                          std::uint64_t seed);

long parameter_count(const param_set<float>& p);

// Versioned binary snapshot: config, vocabulary, every tensor as little
// endian float32, and a trailing checksum of the payload.
void save_checkpoint(const std::filesystem::path& path, const model_state<float>& m);
model_state<float> load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the serialized payload; equal digests mean equal models.
std::uint64_t model_digest(const model_state<float>& m);
std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed = 14695981039346656037ull);

}  // namespace gradkit
