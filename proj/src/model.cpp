#include "gradkit/model.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "gradkit/errors.hpp"
#include "gradkit/rng.hpp"

namespace gradkit {

namespace {

template <class S>
param_set<S> make_shapes(const model_config& c, int vocab_size) {
  param_set<S> p;
  const int e = c.embed_dim;
  const int h = c.encoder_hidden;
  const int hd = c.decoder_hidden;
  const int a = c.attention_dim;
  const int v = vocab_size;

  p.enc_embed.resize(e, v);
  p.encoder.resize(c.encoder_layers);
  for (int l = 0; l < c.encoder_layers; ++l) {
    int in = (l == 0) ? e : 2 * h;
    for (int d = 0; d < 2; ++d) {
      p.encoder[l][d].wx.resize(4 * h, in);
      p.encoder[l][d].wh.resize(4 * h, h);
      p.encoder[l][d].b.resize(4 * h, 1);
    }
  }
  p.dec_embed.resize(e, v);
  p.decoder.wx.resize(4 * hd, e + 2 * h);
  p.decoder.wh.resize(4 * hd, hd);
  p.decoder.b.resize(4 * hd, 1);
  p.att_dec.resize(a, hd);
  p.att_enc.resize(a, 2 * h);
  p.att_bias.resize(a, 1);
  p.att_v.resize(a, 1);
  p.out_w.resize(v, hd + 2 * h);
  p.out_b.resize(v, 1);
  return p;
}

}  // namespace

template <class S>
param_set<S> zero_like(const param_set<S>& p) {
  param_set<S> z;
  z.encoder.resize(p.encoder.size());
  auto* src = const_cast<param_set<S>*>(&p);
  std::vector<const mat_t<S>*> srcs;
  for_each_tensor(*src, [&](const char*, mat_t<S>& m) { srcs.push_back(&m); });
  std::size_t i = 0;
  for_each_tensor(z, [&](const char*, mat_t<S>& m) {
    m.setZero(srcs[i]->rows(), srcs[i]->cols());
    ++i;
  });
  return z;
}

template param_set<float> zero_like(const param_set<float>&);
template param_set<double> zero_like(const param_set<double>&);

template <class S>
model_state<S> init_model(const model_config& config, const vocabulary& vocab,
                          std::uint64_t seed) {
  if (config.embed_dim <= 0 || config.encoder_layers <= 0 || config.encoder_hidden <= 0 ||
      config.decoder_hidden <= 0 || config.attention_dim <= 0 || config.max_decode_len <= 0) {
    throw std::invalid_argument("model_config: all sizes must be positive");
  }
  model_state<S> m;
  m.config = config;
  m.vocab = vocab;
  m.seed = seed;
  m.trained_steps = 0;
  m.params = make_shapes<S>(config, vocab.size());
  rng r(mix_seed(seed, 0));
  for_each_tensor(m.params, [&](const char*, mat_t<S>& t) {
    S* data = t.data();
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      data[i] = static_cast<S>(r.next_double(-0.1, 0.1));
    }
  });
  return m;
}

template model_state<float> init_model(const model_config&, const vocabulary&, std::uint64_t);
template model_state<double> init_model(const model_config&, const vocabulary&, std::uint64_t);

long parameter_count(const param_set<float>& p) {
  long n = 0;
  for_each_tensor(p, [&](const char*, const mat_t<float>& m) { n += m.size(); });
  return n;
}

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const unsigned char* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

constexpr char kMagic[8] = {'G', 'K', 'C', 'K', 'P', 'T', '0', '\n'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw corrupt_file("checkpoint truncated");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

std::string serialize_payload(const model_state<float>& m) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kVersion);
  const model_config& c = m.config;
  for (int v : {c.embed_dim, c.encoder_layers, c.encoder_hidden, c.decoder_hidden,
                c.attention_dim, c.max_decode_len}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u64(out, m.seed);
  put_u64(out, static_cast<std::uint64_t>(m.trained_steps));
  put_u32(out, static_cast<std::uint32_t>(m.vocab.symbols().size()));
  for (char32_t s : m.vocab.symbols()) put_u32(out, static_cast<std::uint32_t>(s));

  std::uint32_t tensor_count = 0;
  for_each_tensor(m.params, [&](const char*, const mat_t<float>&) { ++tensor_count; });
  put_u32(out, tensor_count);
  for_each_tensor(m.params, [&](const char* name, const mat_t<float>& t) {
    std::uint32_t len = static_cast<std::uint32_t>(std::strlen(name));
    put_u32(out, len);
    out.append(name, len);
    put_u32(out, static_cast<std::uint32_t>(t.rows()));
    put_u32(out, static_cast<std::uint32_t>(t.cols()));
    static_assert(sizeof(float) == 4);
    // float32 little endian; x86 keeps the raw bytes in that layout
    out.append(reinterpret_cast<const char*>(t.data()), sizeof(float) * t.size());
  });
  return out;
}

}  // namespace

std::uint64_t model_digest(const model_state<float>& m) {
  std::string payload = serialize_payload(m);
  return fnv1a64(payload.data(), payload.size());
}

void save_checkpoint(const std::filesystem::path& path, const model_state<float>& m) {
  std::string payload = serialize_payload(m);
  std::uint64_t digest = fnv1a64(payload.data(), payload.size());
  put_u64(payload, digest);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot open " + path.string() + " for writing");
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw error("write failed for " + path.string());
}

model_state<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corrupt_file("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string buf = ss.str();
  if (buf.size() < sizeof(kMagic) + 12) throw corrupt_file("checkpoint too short");

  std::string payload = buf.substr(0, buf.size() - 8);
  reader tail{buf, buf.size() - 8};
  std::uint64_t stored = tail.u64();
  if (fnv1a64(payload.data(), payload.size()) != stored) {
    throw corrupt_file("checkpoint checksum mismatch in " + path.string());
  }

  reader r{payload};
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw corrupt_file("not a checkpoint file: " + path.string());
  }
  std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw version_mismatch("checkpoint version " + std::to_string(version) + ", expected " +
                           std::to_string(kVersion));
  }

  model_state<float> m;
  m.config.embed_dim = static_cast<int>(r.u32());
  m.config.encoder_layers = static_cast<int>(r.u32());
  m.config.encoder_hidden = static_cast<int>(r.u32());
  m.config.decoder_hidden = static_cast<int>(r.u32());
  m.config.attention_dim = static_cast<int>(r.u32());
  m.config.max_decode_len = static_cast<int>(r.u32());
  m.seed = r.u64();
  m.trained_steps = static_cast<long>(r.u64());

  std::uint32_t n_symbols = r.u32();
  std::vector<char32_t> symbols;
  symbols.reserve(n_symbols);
  for (std::uint32_t i = 0; i < n_symbols; ++i) symbols.push_back(static_cast<char32_t>(r.u32()));
  try {
    m.vocab = vocabulary::from_symbols(symbols);
  } catch (const std::invalid_argument& e) {
    throw corrupt_file(std::string("checkpoint vocabulary: ") + e.what());
  }

  m.params = make_shapes<float>(m.config, m.vocab.size());
  std::uint32_t tensor_count = r.u32();
  std::uint32_t expected = 0;
  for_each_tensor(m.params, [&](const char*, const mat_t<float>&) { ++expected; });
  if (tensor_count != expected) throw corrupt_file("checkpoint tensor count mismatch");

  for_each_tensor(m.params, [&](const char* name, mat_t<float>& t) {
    std::uint32_t len = r.u32();
    std::string stored_name = r.bytes(len);
    if (stored_name != name) {
      throw corrupt_file("checkpoint tensor order: expected " + std::string(name) + ", found " +
                         stored_name);
    }
    std::uint32_t rows = r.u32();
    std::uint32_t cols = r.u32();
    if (rows != static_cast<std::uint32_t>(t.rows()) ||
        cols != static_cast<std::uint32_t>(t.cols())) {
      throw corrupt_file("checkpoint tensor " + stored_name + " has unexpected shape");
    }
    std::string data = r.bytes(sizeof(float) * t.size());
    std::memcpy(t.data(), data.data(), data.size());
  });
  if (r.pos != payload.size()) throw corrupt_file("checkpoint holds trailing bytes");
  return m;
}

}  // namespace gradkit
