#include "morphdis/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "morphdis/checksum.hpp"
#include "morphdis/errors.hpp"
#include "morphdis/rng.hpp"

namespace morphdis {

using json = nlohmann::json;

std::size_t Hyper::dim_for(Slot s) const {
  switch (s) {
    case Slot::kRoot:
      return root_dim;
    case Slot::kMainPos:
    case Slot::kMinorPos:
      return pos_dim;
    default:
      return feat_dim;
  }
}

void Hyper::validate() const {
  if (window < 2) throw ConfigError("window length must be at least 2");
  if (root_dim == 0 || pos_dim == 0 || feat_dim == 0 || h1 == 0 || h2 == 0)
    throw ConfigError("all layer and embedding sizes must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (!(adagrad_epsilon > 0.0)) throw ConfigError("AdaGrad epsilon must be positive");
}

std::vector<Slot> ModelState::active_slots() const {
  std::vector<Slot> out;
  for (Slot s : kSlotOrder)
    if (tagset.is_active(s)) out.push_back(s);
  return out;
}

std::size_t ModelState::input_dim() const {
  std::size_t d = 0;
  for (Slot s : active_slots()) d += hyper.dim_for(s);
  return d;
}

namespace {

constexpr double kEmbeddingInitRange = 0.1;

void fill_uniform(Matrix& m, double r, Rng& rng) {
  for (double& x : m.flat()) x = uniform_symmetric(rng, r);
}

double glorot_range(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

Parameters zeros_like(const Parameters& p) {
  Parameters z;
  for (std::size_t i = 0; i < kNumSlots; ++i)
    z.embeddings[i] = Matrix(p.embeddings[i].rows(), p.embeddings[i].cols());
  z.w1 = Matrix(p.w1.rows(), p.w1.cols());
  z.b1 = Matrix(p.b1.rows(), 1);
  z.w2 = Matrix(p.w2.rows(), p.w2.cols());
  z.b2 = Matrix(p.b2.rows(), 1);
  z.w3 = Matrix(p.w3.rows(), p.w3.cols());
  z.b3 = Matrix(p.b3.rows(), 1);
  return z;
}

void check_window(std::span<const IdBundle> ws, const ModelState& s) {
  if (ws.size() != s.hyper.window)
    throw WindowLenMismatch("window has " + std::to_string(ws.size()) +
                            " words, model expects " +
                            std::to_string(s.hyper.window));
}

// Numerically stable two-way softmax.
WindowProbs softmax2(const std::array<double, 2>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  return {e0 / z, e1 / z};
}

double log_softmax2(const std::array<double, 2>& logits, int label) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return logits[label] - lse;
}

void hidden_and_logits(std::span<const double> concat, const ModelState& s,
                       std::span<double> hidden, std::array<double, 2>& logits) {
  const Parameters& p = s.params;
  affine(p.w2, concat, p.b2.flat(), hidden);
  for (double& h : hidden) h = std::tanh(h);
  affine(p.w3, hidden, p.b3.flat(), logits);
}

// Little-endian helpers for the model file.
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}
std::uint64_t get_u64(std::string_view in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

json hyper_to_json(const Hyper& h) {
  return json{{"window", h.window},       {"root_dim", h.root_dim},
              {"pos_dim", h.pos_dim},     {"feat_dim", h.feat_dim},
              {"h1", h.h1},               {"h2", h.h2},
              {"learning_rate", h.learning_rate},
              {"adagrad_epsilon", h.adagrad_epsilon},
              {"seed", h.seed}};
}

Hyper hyper_from_json(const json& j) {
  Hyper h;
  h.window = j.at("window").get<std::size_t>();
  h.root_dim = j.at("root_dim").get<std::size_t>();
  h.pos_dim = j.at("pos_dim").get<std::size_t>();
  h.feat_dim = j.at("feat_dim").get<std::size_t>();
  h.h1 = j.at("h1").get<std::size_t>();
  h.h2 = j.at("h2").get<std::size_t>();
  h.learning_rate = j.at("learning_rate").get<double>();
  h.adagrad_epsilon = j.at("adagrad_epsilon").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

// Header + matrices, without the outer framing.
std::string build_payload(const ModelState& s) {
  json header;
  header["format"] = "morphdis-model";
  header["hyper"] = hyper_to_json(s.hyper);
  header["tagset"] = write_tagset_config(s.tagset);
  json order = json::array();
  for (Slot slot : kSlotOrder) order.push_back(std::string(slot_name(slot)));
  header["slot_order"] = order;

  json vocab = json::object();
  for (Slot slot : kSlotOrder) {
    const SlotVocab& sv = s.vocab[slot];
    json entries = json::array();
    for (std::uint32_t id = 0; id < sv.size(); ++id)
      entries.push_back(json::array({sv.value(id), sv.count(id)}));
    vocab[std::string(slot_name(slot))] = entries;
  }
  header["vocab"] = vocab;
  header["vocab_fingerprint"] = s.vocab.fingerprint();

  json matrices = json::array();
  auto declare = [&](const std::string& prefix) {
    return [&matrices, prefix](const std::string& name, const Matrix& m) {
      matrices.push_back({{"name", prefix + name}, {"rows", m.rows()}, {"cols", m.cols()}});
    };
  };
  s.params.for_each(declare(""));
  s.accum.for_each(declare("acc."));
  header["matrices"] = matrices;

  const std::string header_text = header.dump();
  std::string payload;
  put_u64(payload, header_text.size());
  payload += header_text;
  auto write_values = [&payload](const std::string&, const Matrix& m) {
    for (double x : m.flat()) put_u64(payload, std::bit_cast<std::uint64_t>(x));
  };
  s.params.for_each(write_values);
  s.accum.for_each(write_values);
  return payload;
}

// Validates framing and checksum; returns the payload.
std::string_view unframe(std::string_view file) {
  constexpr std::size_t kPrefix = sizeof(kModelMagic) + 4 + 8;
  if (file.size() < sizeof(kModelMagic))
    throw TruncatedFile("model file is shorter than its magic");
  if (!std::equal(std::begin(kModelMagic), std::end(kModelMagic), file.begin()))
    throw FormatError("not a model file (bad magic)", 0);
  if (file.size() < kPrefix) throw TruncatedFile("model file header is truncated");
  const std::uint32_t version = get_u32(file, sizeof(kModelMagic));
  if (version != kModelVersion)
    throw VersionMismatch("model file version " + std::to_string(version) +
                          ", expected " + std::to_string(kModelVersion));
  const std::uint64_t payload_len = get_u64(file, sizeof(kModelMagic) + 4);
  if (file.size() < kPrefix + payload_len + 4 || payload_len > file.size())
    throw TruncatedFile("model file is truncated");
  if (file.size() != kPrefix + payload_len + 4)
    throw FormatError("trailing bytes after model payload", 0);
  std::string_view payload = file.substr(kPrefix, payload_len);
  const std::uint32_t stored = get_u32(file, kPrefix + payload_len);
  if (crc32c(payload) != stored) throw ChecksumMismatch("model payload checksum mismatch");
  return payload;
}

json parse_header(std::string_view payload, std::size_t& offset) {
  if (payload.size() < 8) throw TruncatedFile("model payload is truncated");
  const std::uint64_t header_len = get_u64(payload, 0);
  if (header_len > payload.size() - 8) throw TruncatedFile("model header is truncated");
  offset = 8 + header_len;
  try {
    return json::parse(payload.substr(8, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model header: ") + e.what(), 0);
  }
}

}  // namespace

ModelState init_params(const Vocabularies& v, const Hyper& h,
                       const TagsetConfig& cfg) {
  h.validate();
  cfg.validate();
  ModelState s;
  s.hyper = h;
  s.tagset = cfg;
  s.vocab = v;

  Rng rng(h.seed);
  Parameters& p = s.params;
  for (Slot slot : s.active_slots()) {
    Matrix& e = p.embeddings[slot_index(slot)];
    e = Matrix(v[slot].size(), h.dim_for(slot));
    fill_uniform(e, kEmbeddingInitRange, rng);
  }
  const std::size_t d = s.input_dim();
  p.w1 = Matrix(h.h1, d);
  fill_uniform(p.w1, glorot_range(d, h.h1), rng);
  p.b1 = Matrix(h.h1, 1);
  p.w2 = Matrix(h.h2, h.window * h.h1);
  fill_uniform(p.w2, glorot_range(h.window * h.h1, h.h2), rng);
  p.b2 = Matrix(h.h2, 1);
  p.w3 = Matrix(2, h.h2);
  fill_uniform(p.w3, glorot_range(h.h2, 2), rng);
  p.b3 = Matrix(2, 1);

  s.accum = zeros_like(p);
  return s;
}

WordVec forward_word(const IdBundle& w, const ModelState& s) {
  WordVec out;
  out.input.reserve(s.input_dim());
  for (Slot slot : s.active_slots()) {
    const Matrix& e = s.params.embeddings[slot_index(slot)];
    auto row = e.row(w[slot_index(slot)]);
    out.input.insert(out.input.end(), row.begin(), row.end());
  }
  out.pre.assign(s.hyper.h1, 0.0);
  affine(s.params.w1, out.input, s.params.b1.flat(), out.pre);
  out.out.resize(out.pre.size());
  std::transform(out.pre.begin(), out.pre.end(), out.out.begin(),
                 [](double x) { return std::tanh(x); });
  return out;
}

WindowActivations forward_window_full(std::span<const IdBundle> ws,
                                      const ModelState& s) {
  check_window(ws, s);
  WindowActivations a;
  a.words.reserve(ws.size());
  a.concat.reserve(ws.size() * s.hyper.h1);
  for (const IdBundle& w : ws) {
    a.words.push_back(forward_word(w, s));
    a.concat.insert(a.concat.end(), a.words.back().out.begin(),
                    a.words.back().out.end());
  }
  a.hidden.assign(s.hyper.h2, 0.0);
  hidden_and_logits(a.concat, s, a.hidden, a.logits);
  a.probs = softmax2(a.logits);
  return a;
}

WindowProbs forward_window(std::span<const IdBundle> ws, const ModelState& s) {
  return forward_window_full(ws, s).probs;
}

double window_log_pos(std::span<const std::span<const double>> word_outputs,
                      const ModelState& s, WindowScratch& scratch) {
  if (word_outputs.size() != s.hyper.window)
    throw WindowLenMismatch("window_log_pos: wrong number of words");
  const std::size_t h1 = s.hyper.h1;
  scratch.concat.resize(word_outputs.size() * h1);
  for (std::size_t k = 0; k < word_outputs.size(); ++k)
    std::copy(word_outputs[k].begin(), word_outputs[k].end(),
              scratch.concat.begin() + static_cast<std::ptrdiff_t>(k * h1));
  scratch.hidden.resize(s.hyper.h2);
  std::array<double, 2> logits{};
  hidden_and_logits(scratch.concat, s, scratch.hidden, logits);
  return log_softmax2(logits, 1);
}

const EmbeddingGrad* Gradients::find(Slot slot, std::uint32_t id) const {
  for (const auto& r : rows)
    if (r.slot == slot && r.id == id) return &r;
  return nullptr;
}

BackwardResult backward(std::span<const IdBundle> ws, int label,
                        const ModelState& s) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
  const WindowActivations a = forward_window_full(ws, s);
  const Parameters& p = s.params;
  const Hyper& h = s.hyper;

  BackwardResult r;
  r.loss = -log_softmax2(a.logits, label);
  Gradients& g = r.grads;

  // Softmax + cross-entropy: dL/dlogits = p - onehot(label).
  std::array<double, 2> dlogits = {a.probs.p_neg, a.probs.p_pos};
  dlogits[static_cast<std::size_t>(label)] -= 1.0;

  g.w3 = Matrix(2, h.h2);
  outer_acc(g.w3, dlogits, a.hidden);
  g.b3 = Matrix(2, 1);
  std::copy(dlogits.begin(), dlogits.end(), g.b3.flat().begin());

  std::vector<double> dhidden(h.h2, 0.0);
  affine_transpose_acc(p.w3, dlogits, dhidden);
  for (std::size_t i = 0; i < h.h2; ++i) dhidden[i] *= 1.0 - a.hidden[i] * a.hidden[i];

  g.w2 = Matrix(h.h2, h.window * h.h1);
  outer_acc(g.w2, dhidden, a.concat);
  g.b2 = Matrix(h.h2, 1);
  std::copy(dhidden.begin(), dhidden.end(), g.b2.flat().begin());

  std::vector<double> dconcat(h.window * h.h1, 0.0);
  affine_transpose_acc(p.w2, dhidden, dconcat);

  g.w1 = Matrix(h.h1, p.w1.cols());
  g.b1 = Matrix(h.h1, 1);
  const std::vector<Slot> slots = s.active_slots();
  std::vector<double> dpre(h.h1);
  std::vector<double> dinput(p.w1.cols());
  for (std::size_t k = 0; k < ws.size(); ++k) {
    const WordVec& wv = a.words[k];
    for (std::size_t i = 0; i < h.h1; ++i)
      dpre[i] = dconcat[k * h.h1 + i] * (1.0 - wv.out[i] * wv.out[i]);
    outer_acc(g.w1, dpre, wv.input);
    for (std::size_t i = 0; i < h.h1; ++i) g.b1.flat()[i] += dpre[i];

    std::fill(dinput.begin(), dinput.end(), 0.0);
    affine_transpose_acc(p.w1, dpre, dinput);
    std::size_t offset = 0;
    for (Slot slot : slots) {
      const std::size_t dim = h.dim_for(slot);
      const std::uint32_t id = ws[k][slot_index(slot)];
      EmbeddingGrad* row = nullptr;
      for (auto& existing : g.rows)
        if (existing.slot == slot && existing.id == id) row = &existing;
      if (!row) {
        g.rows.push_back({slot, id, std::vector<double>(dim, 0.0)});
        row = &g.rows.back();
      }
      for (std::size_t c = 0; c < dim; ++c) row->grad[c] += dinput[offset + c];
      offset += dim;
    }
  }
  return r;
}

namespace {

void adagrad_update(std::span<double> theta, std::span<double> acc,
                    std::span<const double> grad, double lr, double eps) {
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = grad[i];
    if (gi == 0.0) continue;
    acc[i] += gi * gi;
    theta[i] -= lr * gi / (std::sqrt(acc[i]) + eps);
  }
}

}  // namespace

void adagrad_step(ModelState& s, const Gradients& g) {
  const double lr = s.hyper.learning_rate;
  const double eps = s.hyper.adagrad_epsilon;
  Parameters& p = s.params;
  Parameters& a = s.accum;
  adagrad_update(p.w1.flat(), a.w1.flat(), g.w1.flat(), lr, eps);
  adagrad_update(p.b1.flat(), a.b1.flat(), g.b1.flat(), lr, eps);
  adagrad_update(p.w2.flat(), a.w2.flat(), g.w2.flat(), lr, eps);
  adagrad_update(p.b2.flat(), a.b2.flat(), g.b2.flat(), lr, eps);
  adagrad_update(p.w3.flat(), a.w3.flat(), g.w3.flat(), lr, eps);
  adagrad_update(p.b3.flat(), a.b3.flat(), g.b3.flat(), lr, eps);
  for (const auto& row : g.rows) {
    const std::size_t si = slot_index(row.slot);
    adagrad_update(p.embeddings[si].row(row.id), a.embeddings[si].row(row.id),
                   row.grad, lr, eps);
  }
}

void save_model(const ModelState& s, std::ostream& out) {
  const std::string payload = build_payload(s);
  std::string file(kModelMagic, sizeof(kModelMagic));
  put_u32(file, kModelVersion);
  put_u64(file, payload.size());
  file += payload;
  put_u32(file, crc32c(payload));
  out.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!out) throw Error("failed to write model");
}

ModelState load_model(std::istream& in) {
  const std::string file((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  const std::string_view payload = unframe(file);
  std::size_t offset = 0;
  const json header = parse_header(payload, offset);

  ModelState s;
  try {
    s.hyper = hyper_from_json(header.at("hyper"));
    std::istringstream tagset_text(header.at("tagset").get<std::string>());
    s.tagset = parse_tagset_config(tagset_text);
    for (Slot slot : kSlotOrder) {
      const json& entries = header.at("vocab").at(std::string(slot_name(slot)));
      SlotVocab& sv = s.vocab[slot];
      for (std::size_t id = 0; id < entries.size(); ++id) {
        const auto value = entries[id].at(0).get<std::string>();
        const auto count = entries[id].at(1).get<std::uint64_t>();
        if (id < SlotVocab::kNumReserved) {
          if (sv.value(static_cast<std::uint32_t>(id)) != value)
            throw FormatError("reserved vocabulary entry mismatch", 0);
          continue;
        }
        sv.add(value, count);
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model header: ") + e.what(), 0);
  }
  if (header.value("vocab_fingerprint", std::uint32_t{0}) != s.vocab.fingerprint())
    throw FormatError("vocabulary fingerprint mismatch", 0);

  // Shapes come from the hyperparameters; the header must agree with them.
  ModelState shaped = init_params(s.vocab, s.hyper, s.tagset);
  s.params = std::move(shaped.params);
  s.accum = std::move(shaped.accum);

  const json& declared = header.at("matrices");
  std::size_t index = 0;
  auto read_values = [&](const std::string& prefix) {
    return [&, prefix](const std::string& name, Matrix& m) {
      if (index >= declared.size()) throw FormatError("missing matrix " + prefix + name, 0);
      const json& d = declared[index++];
      if (d.at("name").get<std::string>() != prefix + name ||
          d.at("rows").get<std::size_t>() != m.rows() ||
          d.at("cols").get<std::size_t>() != m.cols())
        throw FormatError("matrix " + prefix + name + " does not match header", 0);
      if (payload.size() - offset < m.size() * 8)
        throw TruncatedFile("matrix data is truncated");
      for (double& x : m.flat()) {
        x = std::bit_cast<double>(get_u64(payload, offset));
        offset += 8;
      }
    };
  };
  s.params.for_each(read_values(""));
  s.accum.for_each(read_values("acc."));
  if (index != declared.size() || offset != payload.size())
    throw FormatError("model payload has unexpected extra data", 0);
  return s;
}

void save_model_file(const ModelState& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  save_model(s, out);
}

ModelState load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model: " + path);
  return load_model(in);
}

std::string read_model_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model: " + path);
  const std::string file((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  std::size_t offset = 0;
  return parse_header(unframe(file), offset).dump(2);
}

std::size_t set_pretrained_roots(ModelState& s, const RootTable& table) {
  const std::size_t dim = s.hyper.root_dim;
  for (const auto& [root, vec] : table)
    if (vec.size() != dim)
      throw DimMismatch("pretrained vector for '" + root + "' has length " +
                        std::to_string(vec.size()) + ", expected " +
                        std::to_string(dim));
  Matrix& emb = s.params.embeddings[slot_index(Slot::kRoot)];
  Matrix& acc = s.accum.embeddings[slot_index(Slot::kRoot)];
  const SlotVocab& roots = s.vocab[Slot::kRoot];
  std::size_t written = 0;
  for (std::uint32_t id = SlotVocab::kNumReserved; id < roots.size(); ++id) {
    auto it = table.find(roots.value(id));
    if (it == table.end()) continue;
    std::copy(it->second.begin(), it->second.end(), emb.row(id).begin());
    std::fill(acc.row(id).begin(), acc.row(id).end(), 0.0);
    ++written;
  }
  return written;
}

}  // namespace morphdis
