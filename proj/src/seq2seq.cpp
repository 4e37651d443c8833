#include "gradkit/seq2seq.hpp"

#include <algorithm>
#include <cmath>

#include "gradkit/errors.hpp"
#include "gradkit/rng.hpp"

namespace gradkit {

namespace {

template <class S>
using arr_row = Eigen::Array<S, 1, Eigen::Dynamic>;

// columns [t*b, (t+1)*b) of a time-major batch matrix
template <class S>
auto slot(mat_t<S>& m, int t, int b) {
  return m.middleCols(t * b, b);
}
template <class S>
auto slot(const mat_t<S>& m, int t, int b) {
  return m.middleCols(t * b, b);
}

template <class S>
void sigmoid_inplace(Eigen::Ref<mat_t<S>> m) {
  m = ((-m.array()).exp() + S(1)).inverse().matrix();
}

struct token_batch {
  int b = 0;
  int t_in = 0;
  int t_out = 0;
  std::vector<std::vector<int>> in_ids;
  std::vector<std::vector<int>> dec_in;   // BOS, target[0..n-1)
  std::vector<std::vector<int>> dec_tgt;  // target: genitive ids then EOS
};

token_batch tokenize(const vocabulary& vocab, std::span<const inflection_example> batch) {
  token_batch tb;
  tb.b = static_cast<int>(batch.size());
  for (const auto& ex : batch) {
    if (ex.nominative.empty() || ex.genitive.empty()) {
      throw std::invalid_argument("examples must have non-empty forms");
    }
    std::vector<int> in = vocab.encode(ex.nominative);
    std::vector<int> tgt = vocab.encode(ex.genitive);
    tgt.push_back(vocabulary::eos_id);
    std::vector<int> din;
    din.push_back(vocabulary::bos_id);
    din.insert(din.end(), tgt.begin(), tgt.end() - 1);
    tb.t_in = std::max(tb.t_in, static_cast<int>(in.size()));
    tb.t_out = std::max(tb.t_out, static_cast<int>(tgt.size()));
    tb.in_ids.push_back(std::move(in));
    tb.dec_in.push_back(std::move(din));
    tb.dec_tgt.push_back(std::move(tgt));
  }
  return tb;
}

int padded_id(const std::vector<int>& ids, int t) {
  return t < static_cast<int>(ids.size()) ? ids[t] : vocabulary::pad_id;
}

template <class S>
mat_t<S> build_mask(const std::vector<std::vector<int>>& ids, int b, int t_max) {
  mat_t<S> mask(b, t_max);
  for (int i = 0; i < b; ++i) {
    for (int t = 0; t < t_max; ++t) {
      mask(i, t) = t < static_cast<int>(ids[i].size()) ? S(1) : S(0);
    }
  }
  return mask;
}

template <class S>
mat_t<S> gather_embeddings(const mat_t<S>& table, const std::vector<std::vector<int>>& ids,
                           int b, int t_max) {
  mat_t<S> out(table.rows(), b * t_max);
  for (int t = 0; t < t_max; ++t) {
    for (int i = 0; i < b; ++i) {
      out.col(t * b + i) = table.col(padded_id(ids[i], t));
    }
  }
  return out;
}

// Stored activations of one LSTM direction over a padded batch.
template <class S>
struct cell_store {
  mat_t<S> i, f, g, o, c, tanhc, h;  // H x (B*T)

  void resize(int h_dim, int cols) {
    for (mat_t<S>* m : {&i, &f, &g, &o, &c, &tanhc, &h}) m->setZero(h_dim, cols);
  }
};

// One LSTM step.  z arrives as wx*x + wh*h_prev + b and leaves its pieces in
// the store at slot t; masked columns end as zero state.
template <class S>
void lstm_step(mat_t<S>& z, const mat_t<S>& c_prev, const arr_row<S>& mask_t, int t, int b,
               cell_store<S>& st) {
  const int h = static_cast<int>(z.rows()) / 4;
  auto zi = z.middleRows(0, h);
  auto zf = z.middleRows(h, h);
  auto zg = z.middleRows(2 * h, h);
  auto zo = z.middleRows(3 * h, h);
  sigmoid_inplace<S>(zi);
  sigmoid_inplace<S>(zf);
  zg = zg.array().tanh().matrix();
  sigmoid_inplace<S>(zo);

  slot(st.i, t, b) = zi;
  slot(st.f, t, b) = zf;
  slot(st.g, t, b) = zg;
  slot(st.o, t, b) = zo;

  mat_t<S> c_new = (zf.array() * c_prev.array() + zi.array() * zg.array()).matrix();
  mat_t<S> tanh_c = c_new.array().tanh().matrix();
  slot(st.tanhc, t, b) = tanh_c;
  slot(st.c, t, b) = (c_new.array().rowwise() * mask_t).matrix();
  slot(st.h, t, b) =
      ((zo.array() * tanh_c.array()).rowwise() * mask_t).matrix();
}

// Reverse of lstm_step.  dh and dc are the gradients flowing into the stored
// (masked) h and c at slot t; returns via out-params the gradient for the
// previous state and fills dz.
template <class S>
void lstm_step_back(const cell_store<S>& st, int t, int b, const mat_t<S>& c_prev,
                    const arr_row<S>& mask_t, mat_t<S>& dh, mat_t<S>& dc,
                    mat_t<S>& dz, mat_t<S>& dc_prev_out) {
  const int h = static_cast<int>(st.h.rows());
  auto i = slot(st.i, t, b).array();
  auto f = slot(st.f, t, b).array();
  auto g = slot(st.g, t, b).array();
  auto o = slot(st.o, t, b).array();
  auto tanhc = slot(st.tanhc, t, b).array();

  arr_row<S> m = mask_t;
  auto dha = (dh.array().rowwise() * m).eval();
  auto dca = (dc.array().rowwise() * m).eval();

  auto do_ = dha * tanhc;
  auto dct = dca + dha * o * (S(1) - tanhc.square());
  auto di = dct * g;
  auto df = dct * c_prev.array();
  auto dg = dct * i;
  dc_prev_out = (dct * f).matrix();

  dz.resize(4 * h, b);
  dz.middleRows(0, h) = (di * i * (S(1) - i)).matrix();
  dz.middleRows(h, h) = (df * f * (S(1) - f)).matrix();
  dz.middleRows(2 * h, h) = (dg * (S(1) - g.square())).matrix();
  dz.middleRows(3 * h, h) = (do_ * o * (S(1) - o)).matrix();
}

template <class S>
struct encoder_pass {
  std::vector<std::array<cell_store<S>, 2>> layers;
  std::vector<mat_t<S>> inputs;  // per layer, in_dim x (B*T)
  mat_t<S> trace;                // 2H x (B*T)
  mat_t<S> in_mask;              // B x T
};

template <class S>
void run_encoder(const model_state<S>& m, const token_batch& tb, encoder_pass<S>& ep) {
  const int b = tb.b;
  const int t_in = tb.t_in;
  const int h = m.config.encoder_hidden;
  const int layers = m.config.encoder_layers;

  ep.in_mask = build_mask<S>(tb.in_ids, b, t_in);
  ep.layers.resize(layers);
  ep.inputs.resize(layers);
  ep.inputs[0] = gather_embeddings(m.params.enc_embed, tb.in_ids, b, t_in);

  for (int l = 0; l < layers; ++l) {
    if (l > 0) {
      ep.inputs[l].resize(2 * h, b * t_in);
      for (int t = 0; t < t_in; ++t) {
        slot(ep.inputs[l], t, b).topRows(h) = slot(ep.layers[l - 1][0].h, t, b);
        slot(ep.inputs[l], t, b).bottomRows(h) = slot(ep.layers[l - 1][1].h, t, b);
      }
    }
    for (int d = 0; d < 2; ++d) {
      const lstm_params<S>& par = m.params.encoder[l][d];
      cell_store<S>& st = ep.layers[l][d];
      st.resize(h, b * t_in);
      mat_t<S> wxx = par.wx * ep.inputs[l];
      mat_t<S> h_prev = mat_t<S>::Zero(h, b);
      mat_t<S> c_prev = mat_t<S>::Zero(h, b);
      for (int k = 0; k < t_in; ++k) {
        int t = d == 0 ? k : t_in - 1 - k;
        mat_t<S> z = slot(wxx, t, b);
        z.noalias() += par.wh * h_prev;
        z.colwise() += par.b.col(0);
        arr_row<S> mask_t = ep.in_mask.col(t).transpose().array();
        lstm_step(z, c_prev, mask_t, t, b, st);
        h_prev = slot(st.h, t, b);
        c_prev = slot(st.c, t, b);
      }
    }
  }

  ep.trace.resize(2 * h, b * t_in);
  for (int t = 0; t < t_in; ++t) {
    slot(ep.trace, t, b).topRows(h) = slot(ep.layers[layers - 1][0].h, t, b);
    slot(ep.trace, t, b).bottomRows(h) = slot(ep.layers[layers - 1][1].h, t, b);
  }
}

// Additive attention for one decoder step: alpha = softmax over positions of
// v . tanh(enc_proj + att_dec s + bias), context = trace · alpha.
template <class S>
void attention_step(const param_set<S>& p, const mat_t<S>& trace, const mat_t<S>& enc_proj,
                    const mat_t<S>& in_mask, const mat_t<S>& s, int t_in, int b,
                    mat_t<S>& alpha, mat_t<S>& ctx, mat_t<S>* u_store) {
  mat_t<S> q = p.att_dec * s;
  q.colwise() += p.att_bias.col(0);

  mat_t<S> scores(t_in, b);
  for (int t = 0; t < t_in; ++t) {
    mat_t<S> u = (slot(enc_proj, t, b) + q).array().tanh().matrix();
    scores.row(t) = p.att_v.col(0).transpose() * u;
    if (u_store) slot(*u_store, t, b) = u;
  }
  scores += ((in_mask.transpose().array() - S(1)) * S(1e30)).matrix();

  arr_row<S> col_max = scores.colwise().maxCoeff().array();
  mat_t<S> ex = (scores.array().rowwise() - col_max).exp().matrix();
  arr_row<S> denom = ex.colwise().sum().array();
  alpha = (ex.array().rowwise() / denom).matrix();

  ctx.setZero(trace.rows(), b);
  for (int t = 0; t < t_in; ++t) {
    ctx.array() += slot(trace, t, b).array().rowwise() * alpha.row(t).array();
  }
}

template <class S>
struct decoder_pass {
  cell_store<S> cell;            // Hd x (B*Tout)
  mat_t<S> emb;                  // E x (B*Tout)
  mat_t<S> ctx;                  // 2H x (B*Tout)
  mat_t<S> enc_proj;             // A x (B*Tin)
  std::vector<mat_t<S>> alpha;   // per step: Tin x B
  std::vector<mat_t<S>> u;       // per step: A x (B*Tin)
  mat_t<S> out_mask;             // B x Tout
  mat_t<S> probs;                // V x (B*Tout)
  double loss = 0;
  double tokens = 0;
};

template <class S>
void run_decoder(const model_state<S>& m, const token_batch& tb, const encoder_pass<S>& ep,
                 decoder_pass<S>& dp) {
  const int b = tb.b;
  const int t_in = tb.t_in;
  const int t_out = tb.t_out;
  const int hd = m.config.decoder_hidden;
  const int e = m.config.embed_dim;
  const param_set<S>& p = m.params;

  dp.out_mask = build_mask<S>(tb.dec_tgt, b, t_out);
  dp.emb = gather_embeddings(p.dec_embed, tb.dec_in, b, t_out);
  dp.enc_proj = p.att_enc * ep.trace;
  dp.cell.resize(hd, b * t_out);
  dp.ctx.resize(2 * m.config.encoder_hidden, b * t_out);
  dp.alpha.resize(t_out);
  dp.u.resize(t_out);

  mat_t<S> wxe = p.decoder.wx.leftCols(e) * dp.emb;

  mat_t<S> s = mat_t<S>::Zero(hd, b);
  mat_t<S> c_prev = mat_t<S>::Zero(hd, b);
  for (int t = 0; t < t_out; ++t) {
    dp.u[t].resize(m.config.attention_dim, b * t_in);
    mat_t<S> ctx_t;
    attention_step(p, ep.trace, dp.enc_proj, ep.in_mask, s, t_in, b, dp.alpha[t], ctx_t,
                   &dp.u[t]);
    slot(dp.ctx, t, b) = ctx_t;

    mat_t<S> z = slot(wxe, t, b);
    z.noalias() += p.decoder.wx.rightCols(ctx_t.rows()) * ctx_t;
    z.noalias() += p.decoder.wh * s;
    z.colwise() += p.decoder.b.col(0);
    arr_row<S> mask_t = dp.out_mask.col(t).transpose().array();
    lstm_step(z, c_prev, mask_t, t, b, dp.cell);
    s = slot(dp.cell.h, t, b);
    c_prev = slot(dp.cell.c, t, b);
  }

  // output layer over all steps at once
  mat_t<S> readout(hd + dp.ctx.rows(), b * t_out);
  readout.topRows(hd) = dp.cell.h;
  readout.bottomRows(dp.ctx.rows()) = dp.ctx;
  mat_t<S> logits = p.out_w * readout;
  logits.colwise() += p.out_b.col(0);

  arr_row<S> col_max = logits.colwise().maxCoeff().array();
  mat_t<S> shifted = (logits.array().rowwise() - col_max).matrix();
  mat_t<S> ex = shifted.array().exp().matrix();
  arr_row<S> denom = ex.colwise().sum().array();
  dp.probs = (ex.array().rowwise() / denom).matrix();

  double loss_sum = 0;
  double tokens = 0;
  for (int t = 0; t < t_out; ++t) {
    for (int i = 0; i < b; ++i) {
      if (t >= static_cast<int>(tb.dec_tgt[i].size())) continue;
      int col = t * b + i;
      int tgt = tb.dec_tgt[i][t];
      double logp = static_cast<double>(shifted(tgt, col)) -
                    std::log(static_cast<double>(denom(col)));
      loss_sum -= logp;
      tokens += 1;
    }
  }
  dp.loss = loss_sum / tokens;
  dp.tokens = tokens;
}

template <class S>
void backward(const model_state<S>& m, const token_batch& tb, const encoder_pass<S>& ep,
              const decoder_pass<S>& dp, param_set<S>& g) {
  const int b = tb.b;
  const int t_in = tb.t_in;
  const int t_out = tb.t_out;
  const int h = m.config.encoder_hidden;
  const int hd = m.config.decoder_hidden;
  const int e = m.config.embed_dim;
  const int tw = 2 * h;
  const param_set<S>& p = m.params;

  for_each_tensor(g, [&](const char*, mat_t<S>& t) { t.setZero(); });

  // ---- output layer ----
  mat_t<S> dlogits = dp.probs;
  const S inv_tokens = static_cast<S>(1.0 / dp.tokens);
  for (int t = 0; t < t_out; ++t) {
    for (int i = 0; i < b; ++i) {
      int col = t * b + i;
      if (t >= static_cast<int>(tb.dec_tgt[i].size())) {
        dlogits.col(col).setZero();
        continue;
      }
      dlogits(tb.dec_tgt[i][t], col) -= S(1);
      dlogits.col(col) *= inv_tokens;
    }
  }
  mat_t<S> readout(hd + tw, b * t_out);
  readout.topRows(hd) = dp.cell.h;
  readout.bottomRows(tw) = dp.ctx;
  g.out_w.noalias() = dlogits * readout.transpose();
  g.out_b.col(0) = dlogits.rowwise().sum();
  mat_t<S> dreadout = p.out_w.transpose() * dlogits;  // (Hd+2H) x (B*Tout)

  // ---- decoder loop, latest step first ----
  mat_t<S> dz_all(4 * hd, b * t_out);
  mat_t<S> dq_all = mat_t<S>::Zero(m.config.attention_dim, b * t_out);
  mat_t<S> dtrace = mat_t<S>::Zero(tw, b * t_in);
  mat_t<S> denc_proj = mat_t<S>::Zero(m.config.attention_dim, b * t_in);

  mat_t<S> dh_next = mat_t<S>::Zero(hd, b);
  mat_t<S> dc_next = mat_t<S>::Zero(hd, b);
  const auto wx_ctx = p.decoder.wx.rightCols(tw);

  for (int t = t_out - 1; t >= 0; --t) {
    mat_t<S> dh = dh_next + slot(dreadout, t, b).topRows(hd);
    mat_t<S> dc = dc_next;
    mat_t<S> c_prev = t > 0 ? mat_t<S>(slot(dp.cell.c, t - 1, b)) : mat_t<S>::Zero(hd, b);
    arr_row<S> mask_t = dp.out_mask.col(t).transpose().array();

    mat_t<S> dz, dc_prev;
    lstm_step_back(dp.cell, t, b, c_prev, mask_t, dh, dc, dz, dc_prev);
    slot(dz_all, t, b) = dz;

    mat_t<S> dctx = slot(dreadout, t, b).bottomRows(tw);
    dctx.noalias() += wx_ctx.transpose() * dz;

    // attention backward for this step
    const mat_t<S>& alpha = dp.alpha[t];
    mat_t<S> dalpha(t_in, b);
    for (int ti = 0; ti < t_in; ++ti) {
      dalpha.row(ti) = (slot(ep.trace, ti, b).array() * dctx.array()).colwise().sum().matrix();
      slot(dtrace, ti, b).array() += dctx.array().rowwise() * alpha.row(ti).array();
    }
    arr_row<S> dot = (alpha.array() * dalpha.array()).colwise().sum();
    mat_t<S> descore = (alpha.array() * (dalpha.array().rowwise() - dot)).matrix();

    mat_t<S> dq = mat_t<S>::Zero(m.config.attention_dim, b);
    for (int ti = 0; ti < t_in; ++ti) {
      auto u = slot(dp.u[t], ti, b);
      g.att_v.col(0).noalias() += u * descore.row(ti).transpose();
      mat_t<S> dpre =
          ((p.att_v.col(0) * descore.row(ti)).array() * (S(1) - u.array().square())).matrix();
      dq += dpre;
      slot(denc_proj, ti, b) += dpre;
    }
    slot(dq_all, t, b) = dq;

    dh_next.noalias() = p.decoder.wh.transpose() * dz;
    dh_next.noalias() += p.att_dec.transpose() * dq;
    dc_next = dc_prev;
  }

  // batched decoder parameter gradients
  mat_t<S> s_prev_all = mat_t<S>::Zero(hd, b * t_out);
  for (int t = 1; t < t_out; ++t) slot(s_prev_all, t, b) = slot(dp.cell.h, t - 1, b);
  mat_t<S> dec_in_all(e + tw, b * t_out);
  dec_in_all.topRows(e) = dp.emb;
  dec_in_all.bottomRows(tw) = dp.ctx;
  g.decoder.wx.noalias() = dz_all * dec_in_all.transpose();
  g.decoder.wh.noalias() = dz_all * s_prev_all.transpose();
  g.decoder.b.col(0) = dz_all.rowwise().sum();
  g.att_dec.noalias() = dq_all * s_prev_all.transpose();
  g.att_bias.col(0) = dq_all.rowwise().sum();
  g.att_enc.noalias() = denc_proj * ep.trace.transpose();
  dtrace.noalias() += p.att_enc.transpose() * denc_proj;

  mat_t<S> demb_dec = p.decoder.wx.leftCols(e).transpose() * dz_all;
  for (int t = 0; t < t_out; ++t) {
    for (int i = 0; i < b; ++i) {
      if (t >= static_cast<int>(tb.dec_in[i].size())) continue;
      g.dec_embed.col(tb.dec_in[i][t]) += demb_dec.col(t * b + i);
    }
  }

  // ---- encoder, top layer down ----
  const int layers = m.config.encoder_layers;
  std::vector<std::array<mat_t<S>, 2>> dh_layer(layers);
  for (int l = 0; l < layers; ++l) {
    for (int d = 0; d < 2; ++d) dh_layer[l][d] = mat_t<S>::Zero(h, b * t_in);
  }
  for (int t = 0; t < t_in; ++t) {
    slot(dh_layer[layers - 1][0], t, b) += slot(dtrace, t, b).topRows(h);
    slot(dh_layer[layers - 1][1], t, b) += slot(dtrace, t, b).bottomRows(h);
  }

  for (int l = layers - 1; l >= 0; --l) {
    mat_t<S> dx_all = mat_t<S>::Zero(ep.inputs[l].rows(), b * t_in);
    for (int d = 0; d < 2; ++d) {
      const lstm_params<S>& par = p.encoder[l][d];
      const cell_store<S>& st = ep.layers[l][d];
      mat_t<S> dz_enc(4 * h, b * t_in);

      mat_t<S> dh_carry = mat_t<S>::Zero(h, b);
      mat_t<S> dc_carry = mat_t<S>::Zero(h, b);
      for (int k = t_in - 1; k >= 0; --k) {
        int t = d == 0 ? k : t_in - 1 - k;
        int t_prev = d == 0 ? t - 1 : t + 1;
        mat_t<S> dh = dh_carry + slot(dh_layer[l][d], t, b);
        mat_t<S> dc = dc_carry;
        mat_t<S> c_prev = (t_prev >= 0 && t_prev < t_in)
                              ? mat_t<S>(slot(st.c, t_prev, b))
                              : mat_t<S>::Zero(h, b);
        arr_row<S> mask_t = ep.in_mask.col(t).transpose().array();
        mat_t<S> dz, dc_prev;
        lstm_step_back(st, t, b, c_prev, mask_t, dh, dc, dz, dc_prev);
        slot(dz_enc, t, b) = dz;
        dh_carry.noalias() = par.wh.transpose() * dz;
        dc_carry = dc_prev;
      }

      mat_t<S> h_prev_all = mat_t<S>::Zero(h, b * t_in);
      for (int t = 0; t < t_in; ++t) {
        int t_prev = d == 0 ? t - 1 : t + 1;
        if (t_prev >= 0 && t_prev < t_in) slot(h_prev_all, t, b) = slot(st.h, t_prev, b);
      }
      g.encoder[l][d].wx.noalias() = dz_enc * ep.inputs[l].transpose();
      g.encoder[l][d].wh.noalias() = dz_enc * h_prev_all.transpose();
      g.encoder[l][d].b.col(0) = dz_enc.rowwise().sum();
      dx_all.noalias() += par.wx.transpose() * dz_enc;
    }
    if (l > 0) {
      for (int t = 0; t < t_in; ++t) {
        slot(dh_layer[l - 1][0], t, b) += slot(dx_all, t, b).topRows(h);
        slot(dh_layer[l - 1][1], t, b) += slot(dx_all, t, b).bottomRows(h);
      }
    } else {
      for (int t = 0; t < t_in; ++t) {
        for (int i = 0; i < b; ++i) {
          if (t >= static_cast<int>(tb.in_ids[i].size())) continue;
          g.enc_embed.col(tb.in_ids[i][t]) += dx_all.col(t * b + i);
        }
      }
    }
  }
}

void apply_hook(const model_config& config, const intervention_hook& hook, int t_len,
                Eigen::Ref<mat_t<float>> states) {
  for (int d : hook.dims) {
    if (d < 1 || d > config.trace_dim()) {
      throw std::invalid_argument("hook dimension " + std::to_string(d) + " outside 1.." +
                                  std::to_string(config.trace_dim()));
    }
  }
  for (int pos : hook.positions) {
    if (pos < 0 || pos >= t_len) {
      throw std::invalid_argument("hook position " + std::to_string(pos) +
                                  " outside the input");
    }
  }
  for (int d : hook.dims) {
    for (int pos : hook.positions) {
      states(d - 1, pos) *= hook.factor;
    }
  }
}

word ids_to_word(const model_state<float>& m, const std::vector<int>& ids) {
  word out;
  for (int id : ids) {
    out.push_back(id >= 4 ? m.vocab.symbol(id) : U'?');
  }
  return out;
}

// greedy decoding over pre-encoded traces, batched and padded
std::vector<word> decode_traces(const model_state<float>& m,
                                std::span<const encoder_trace> traces) {
  const int b = static_cast<int>(traces.size());
  const int hd = m.config.decoder_hidden;
  const int tw = m.config.trace_dim();
  const param_set<float>& p = m.params;

  int t_in = 0;
  for (const auto& tr : traces) {
    if (tr.states.rows() != tw || tr.states.cols() != static_cast<long>(tr.input.size()) ||
        tr.input.empty()) {
      throw std::invalid_argument("trace shape does not fit the model");
    }
    t_in = std::max(t_in, static_cast<int>(tr.states.cols()));
  }

  mat_t<float> trace_all = mat_t<float>::Zero(tw, b * t_in);
  mat_t<float> in_mask = mat_t<float>::Zero(b, t_in);
  for (int i = 0; i < b; ++i) {
    for (int t = 0; t < traces[i].states.cols(); ++t) {
      trace_all.col(t * b + i) = traces[i].states.col(t);
      in_mask(i, t) = 1.0f;
    }
  }
  mat_t<float> enc_proj = p.att_enc * trace_all;

  std::vector<std::vector<int>> out_ids(b);
  std::vector<char> done(b, 0);
  mat_t<float> s = mat_t<float>::Zero(hd, b);
  mat_t<float> c = mat_t<float>::Zero(hd, b);
  std::vector<int> cur(b, vocabulary::bos_id);
  cell_store<float> scratch;
  scratch.resize(hd, b);

  for (int step = 0; step < m.config.max_decode_len; ++step) {
    mat_t<float> alpha, ctx;
    attention_step<float>(p, trace_all, enc_proj, in_mask, s, t_in, b, alpha, ctx, nullptr);

    mat_t<float> emb(m.config.embed_dim, b);
    for (int i = 0; i < b; ++i) emb.col(i) = p.dec_embed.col(cur[i]);
    mat_t<float> z = p.decoder.wx.leftCols(m.config.embed_dim) * emb;
    z.noalias() += p.decoder.wx.rightCols(tw) * ctx;
    z.noalias() += p.decoder.wh * s;
    z.colwise() += p.decoder.b.col(0);
    arr_row<float> ones = arr_row<float>::Ones(b);
    lstm_step<float>(z, c, ones, 0, b, scratch);
    s = scratch.h.leftCols(b);
    c = scratch.c.leftCols(b);

    mat_t<float> readout(hd + tw, b);
    readout.topRows(hd) = s;
    readout.bottomRows(tw) = ctx;
    mat_t<float> logits = p.out_w * readout;
    logits.colwise() += p.out_b.col(0);

    bool all_done = true;
    for (int i = 0; i < b; ++i) {
      if (done[i]) continue;
      int best = 0;
      float best_v = logits(0, i);
      for (int v = 1; v < logits.rows(); ++v) {
        if (logits(v, i) > best_v) {
          best_v = logits(v, i);
          best = v;
        }
      }
      if (best == vocabulary::eos_id) {
        done[i] = 1;
      } else {
        out_ids[i].push_back(best);
        cur[i] = best;
        all_done = false;
      }
    }
    if (all_done) break;
  }

  std::vector<word> out;
  out.reserve(b);
  for (int i = 0; i < b; ++i) out.push_back(ids_to_word(m, out_ids[i]));
  return out;
}

}  // namespace

encoder_trace encode(const model_state<float>& m, const word& input,
                     const intervention_hook* hook) {
  encoder_trace tr = std::move(encode(m, std::vector<word>{input}).front());
  if (hook) apply_hook(m.config, *hook, static_cast<int>(input.size()), tr.states);
  return tr;
}

std::vector<encoder_trace> encode(const model_state<float>& m, const std::vector<word>& inputs) {
  if (inputs.empty()) throw empty_input("encode: no inputs");
  token_batch tb;
  tb.b = static_cast<int>(inputs.size());
  for (const word& w : inputs) {
    if (w.empty()) throw empty_input("encode: empty input");
    std::vector<int> ids = m.vocab.encode(w);
    tb.t_in = std::max(tb.t_in, static_cast<int>(ids.size()));
    tb.in_ids.push_back(std::move(ids));
  }
  encoder_pass<float> ep;
  run_encoder(m, tb, ep);

  std::vector<encoder_trace> out(inputs.size());
  for (int i = 0; i < tb.b; ++i) {
    out[i].input = inputs[i];
    out[i].states.resize(m.config.trace_dim(), inputs[i].size());
    for (int t = 0; t < static_cast<int>(inputs[i].size()); ++t) {
      out[i].states.col(t) = ep.trace.col(t * tb.b + i);
    }
  }
  return out;
}

word decode_greedy(const model_state<float>& m, const encoder_trace& trace) {
  return decode_traces(m, std::span<const encoder_trace>(&trace, 1)).front();
}

std::vector<word> decode_greedy(const model_state<float>& m,
                                const std::vector<encoder_trace>& traces) {
  if (traces.empty()) return {};
  return decode_traces(m, traces);
}

template <class S>
double loss_and_grads(const model_state<S>& m, std::span<const inflection_example> batch,
                      param_set<S>& grads) {
  if (batch.empty()) throw empty_input("loss_and_grads: empty batch");
  if (grads.encoder.size() != m.params.encoder.size() ||
      grads.out_w.size() != m.params.out_w.size()) {
    grads = zero_like(m.params);
  }
  token_batch tb = tokenize(m.vocab, batch);
  encoder_pass<S> ep;
  run_encoder(m, tb, ep);
  decoder_pass<S> dp;
  run_decoder(m, tb, ep, dp);
  backward(m, tb, ep, dp, grads);
  return dp.loss;
}

template double loss_and_grads<float>(const model_state<float>&,
                                      std::span<const inflection_example>, param_set<float>&);
template double loss_and_grads<double>(const model_state<double>&,
                                       std::span<const inflection_example>, param_set<double>&);

double learning_rate_at(const train_config& c, int step) {
  int halvings = 0;
  if (step > c.schedule_start) {
    halvings = (step - c.schedule_start - 1) / c.schedule_period + 1;
  }
  return c.learning_rate * std::pow(0.5, halvings);
}

std::vector<train_curve_point> train(model_state<float>& m,
                                     const std::vector<inflection_example>& train_set,
                                     const std::vector<inflection_example>& dev_set,
                                     const train_config& config, const train_progress& progress) {
  if (train_set.empty()) throw empty_input("train: empty training set");
  if (dev_set.empty()) throw empty_eval_set("train: empty dev set");
  if (config.steps < 0 || config.batch_size <= 0) {
    throw std::invalid_argument("train_config: bad steps or batch size");
  }

  const int n = static_cast<int>(train_set.size());
  const int bs = std::min(config.batch_size, n);
  rng order_rng(mix_seed(m.seed, 0xBA7C4));
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  order_rng.shuffle(order);
  int pos = 0;

  param_set<float> grads = zero_like(m.params);
  std::vector<inflection_example> batch(bs);
  std::vector<train_curve_point> curve;

  for (int step = 1; step <= config.steps; ++step) {
    if (pos + bs > n) {
      order_rng.shuffle(order);
      pos = 0;
    }
    for (int i = 0; i < bs; ++i) batch[i] = train_set[order[pos + i]];
    pos += bs;

    double loss = loss_and_grads<float>(m, batch, grads);
    if (!std::isfinite(loss)) {
      throw non_finite_loss("loss became non-finite", step);
    }

    double norm_sq = 0;
    for_each_tensor(grads, [&](const char*, const mat_t<float>& t) {
      norm_sq += static_cast<double>(t.squaredNorm());
    });
    double scale = 1.0;
    if (config.clip_norm > 0 && norm_sq > config.clip_norm * config.clip_norm) {
      scale = config.clip_norm / std::sqrt(norm_sq);
    }
    const float update = static_cast<float>(learning_rate_at(config, step) * scale);

    std::vector<mat_t<float>*> dst;
    for_each_tensor(m.params, [&](const char*, mat_t<float>& t) { dst.push_back(&t); });
    std::size_t k = 0;
    for_each_tensor(grads, [&](const char*, const mat_t<float>& t) {
      *dst[k] -= update * t;
      ++k;
    });
    m.trained_steps += 1;

    std::optional<double> acc;
    if (config.eval_every > 0 && step % config.eval_every == 0) {
      acc = evaluate(m, dev_set).overall;
      curve.push_back({step, *acc});
    }
    if (progress) progress(step, loss, acc);
  }
  return curve;
}

eval_result evaluate(const model_state<float>& m,
                     const std::vector<inflection_example>& examples) {
  if (examples.empty()) throw empty_eval_set("evaluate: no examples");
  for (const auto& ex : examples) {
    if (!ex.note) throw std::invalid_argument("evaluate needs annotated examples");
  }

  eval_result res;
  res.total = static_cast<int>(examples.size());
  int correct = 0, grad_correct = 0, grad_total = 0;

  constexpr int kChunk = 256;
  for (std::size_t base = 0; base < examples.size(); base += kChunk) {
    std::size_t end = std::min(examples.size(), base + kChunk);
    std::vector<word> inputs;
    inputs.reserve(end - base);
    for (std::size_t i = base; i < end; ++i) inputs.push_back(examples[i].nominative);
    std::vector<encoder_trace> traces = encode(m, inputs);
    std::vector<word> preds = decode_greedy(m, traces);
    for (std::size_t i = base; i < end; ++i) {
      bool hit = preds[i - base] == examples[i].genitive;
      correct += hit;
      if (examples[i].note->gradating) {
        grad_total += 1;
        grad_correct += hit;
      }
    }
  }

  res.gradating_total = grad_total;
  res.overall = static_cast<double>(correct) / res.total;
  res.gradating = grad_total ? static_cast<double>(grad_correct) / grad_total : 0.0;
  int plain_total = res.total - grad_total;
  int plain_correct = correct - grad_correct;
  res.non_gradating = plain_total ? static_cast<double>(plain_correct) / plain_total : 0.0;
  return res;
}

}  // namespace gradkit
