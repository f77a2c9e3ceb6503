#include <cmath>
#include <cstring>
#include <sstream>

#include "doctest.h"

#include "morphdis/errors.hpp"
#include "morphdis/model.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace morphdis;
using testing::ToyDims;

namespace {

// Root + mainPos only, two roots and two POS values.
TagsetConfig two_slot_tagset() {
  TagsetConfig cfg;
  cfg.language = "toy";
  cfg.set_active(Slot::kRoot);
  cfg.set_active(Slot::kMainPos);
  cfg.map("N", Slot::kMainPos);
  cfg.map("V", Slot::kMainPos);
  return cfg;
}

ModelState hand_model() {
  const TagsetConfig cfg = two_slot_tagset();
  const auto sents = testing::read_string("<S>\na\tx+N\tx+V\nb\ty+N\ty+V\n</S>\n", cfg);
  Hyper h;
  h.window = 2;
  h.root_dim = 2;
  h.pos_dim = 2;
  h.h1 = 2;
  h.h2 = 2;
  ModelState s = init_params(build_vocabularies(sents, cfg, 1), h, cfg);
  // Root ids: x = 3, y = 4. POS ids: N = 3, V = 4.
  Matrix& root = s.params.embeddings[slot_index(Slot::kRoot)];
  Matrix& pos = s.params.embeddings[slot_index(Slot::kMainPos)];
  root.fill(0.0);
  pos.fill(0.0);
  root(3, 0) = 0.5;
  root(3, 1) = -0.25;
  pos(3, 0) = 1.0;
  pos(3, 1) = 0.5;
  root(4, 0) = -1.0;
  root(4, 1) = 0.75;
  pos(4, 0) = 0.0;
  pos(4, 1) = -0.5;
  const double w1[2][4] = {{0.1, -0.2, 0.3, 0.4}, {-0.5, 0.6, 0.0, 0.2}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) s.params.w1(r, c) = w1[r][c];
  s.params.b1(0, 0) = 0.05;
  s.params.b1(1, 0) = -0.1;
  const double w2[2][4] = {{0.3, -0.1, 0.2, 0.5}, {-0.4, 0.25, 0.1, -0.3}};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) s.params.w2(r, c) = w2[r][c];
  s.params.b2(0, 0) = 0.0;
  s.params.b2(1, 0) = 0.2;
  s.params.w3(0, 0) = 0.7;
  s.params.w3(0, 1) = -0.6;
  s.params.w3(1, 0) = -0.2;
  s.params.w3(1, 1) = 0.9;
  s.params.b3(0, 0) = 0.1;
  s.params.b3(1, 0) = -0.1;
  return s;
}

IdBundle ids(std::uint32_t root, std::uint32_t pos) {
  IdBundle b{};
  b[slot_index(Slot::kRoot)] = root;
  b[slot_index(Slot::kMainPos)] = pos;
  return b;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::string saved(const ModelState& s) {
  std::ostringstream out;
  save_model(s, out);
  return out.str();
}

ModelState loaded(const std::string& bytes) {
  std::istringstream in(bytes);
  return load_model(in);
}

}  // namespace

TEST_CASE("init_params shapes, ranges and determinism") {
  const TagsetConfig cfg = turkish_tagset();
  SyntheticOptions so;
  so.sentences = 20;
  const Vocabularies v = build_vocabularies(synthetic_corpus(so, cfg), cfg);
  Hyper h;
  const ModelState a = init_params(v, h, cfg);
  CHECK(a.input_dim() == 125);
  CHECK(a.params.w1.rows() == 30);
  CHECK(a.params.w1.cols() == 125);
  CHECK(a.params.w2.rows() == 40);
  CHECK(a.params.w2.cols() == 150);
  CHECK(a.params.w3.rows() == 2);
  CHECK(a.params.embeddings[slot_index(Slot::kGender)].empty());
  CHECK(a.params.embeddings[slot_index(Slot::kRoot)].cols() == 50);
  CHECK(a.params.embeddings[slot_index(Slot::kMinorPos)].cols() == 20);
  CHECK(a.params.embeddings[slot_index(Slot::kTense)].cols() == 5);

  for (Slot s : a.active_slots())
    for (double x : a.params.embeddings[slot_index(s)].flat()) CHECK(std::fabs(x) <= 0.1);
  const double r1 = std::sqrt(6.0 / (125 + 30));
  for (double x : a.params.w1.flat()) CHECK(std::fabs(x) <= r1);
  for (double x : a.params.b1.flat()) CHECK(x == 0.0);
  a.accum.for_each([](const std::string&, const Matrix& m) {
    for (double x : m.flat()) CHECK(x == 0.0);
  });

  CHECK(init_params(v, h, cfg).params == a.params);
  Hyper h2 = h;
  h2.seed = h.seed + 1;
  CHECK_FALSE(init_params(v, h2, cfg).params == a.params);

  Hyper bad = h;
  bad.window = 1;
  CHECK_THROWS_AS(init_params(v, bad, cfg), ConfigError);
}

TEST_CASE("forward_word matches a hand computation") {
  const ModelState s = hand_model();
  const WordVec w = forward_word(ids(3, 3), s);
  // x = [0.5, -0.25, 1.0, 0.5]
  const double pre0 = 0.05 + 0.1 * 0.5 + (-0.2) * (-0.25) + 0.3 * 1.0 + 0.4 * 0.5;
  const double pre1 = -0.1 + (-0.5) * 0.5 + 0.6 * (-0.25) + 0.0 * 1.0 + 0.2 * 0.5;
  CHECK(w.input == std::vector<double>{0.5, -0.25, 1.0, 0.5});
  CHECK(w.pre[0] == doctest::Approx(pre0).epsilon(1e-15));
  CHECK(w.pre[1] == doctest::Approx(pre1).epsilon(1e-15));
  CHECK(w.out[0] == doctest::Approx(std::tanh(0.65)).epsilon(1e-15));
  CHECK(w.out[1] == doctest::Approx(std::tanh(-0.4)).epsilon(1e-15));

  ModelState z = s;
  z.params.w1.fill(0.0);
  z.params.b1.fill(0.0);
  for (double x : forward_word(ids(4, 4), z).out) CHECK(x == 0.0);

  const WordVec again = forward_word(ids(3, 3), s);
  CHECK(again.out == w.out);
}

TEST_CASE("forward_window agrees with the independent oracle") {
  const ModelState s = hand_model();
  const std::vector<IdBundle> ws = {ids(3, 3), ids(4, 4)};
  const WindowProbs p = forward_window(ws, s);
  const double expect_pos = std::exp(-testing::oracle_loss(ws, 1, s));
  const double expect_neg = std::exp(-testing::oracle_loss(ws, 0, s));
  CHECK(std::fabs(p.p_pos - expect_pos) < 1e-9);
  CHECK(std::fabs(p.p_neg - expect_neg) < 1e-9);
  CHECK(std::fabs(p.p_pos + p.p_neg - 1.0) < 1e-12);

  ModelState z = s;
  z.params.w3.fill(0.0);
  z.params.b3.fill(0.0);
  const WindowProbs u = forward_window(ws, z);
  CHECK(u.p_neg == 0.5);
  CHECK(u.p_pos == 0.5);

  const std::vector<IdBundle> wrong = {ids(3, 3)};
  CHECK_THROWS_AS(forward_window(wrong, s), WindowLenMismatch);
  CHECK_THROWS_AS(backward(wrong, 1, s), WindowLenMismatch);
}

TEST_CASE("window_log_pos equals log p_pos of the full forward pass") {
  const ModelState s = testing::toy_model(5, ToyDims{});
  Rng rng(5);
  WindowScratch scratch;
  for (int k = 0; k < 50; ++k) {
    const auto ws = testing::random_window(s, rng);
    const WindowActivations a = forward_window_full(ws, s);
    std::vector<std::span<const double>> outs;
    for (const auto& w : a.words) outs.emplace_back(w.out);
    const double lp = window_log_pos(outs, s, scratch);
    CHECK(lp == doctest::Approx(std::log(a.probs.p_pos)).epsilon(1e-12));
  }
}

TEST_CASE("backward: loss value and finite differences") {
  ModelState s = hand_model();
  s.params.w3.fill(0.0);
  s.params.b3.fill(0.0);
  const std::vector<IdBundle> ws = {ids(3, 3), ids(4, 4)};
  CHECK(backward(ws, 1, s).loss == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS(backward(ws, 2, s));

  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    ToyDims d;
    d.window = seed % 2 ? 2 : 3;
    const ModelState m = testing::toy_model(seed, d);
    Rng rng(seed);
    const auto gc = testing::check_gradients(m, testing::random_window(m, rng), 1);
    CAPTURE(gc.worst);
    CHECK(gc.max_rel < 1e-4);
  }
}

TEST_CASE("backward: a repeated root accumulates both positions") {
  const ModelState s = hand_model();
  // Give root y the same vector as x so both windows share one forward pass.
  ModelState twin = s;
  Matrix& root = twin.params.embeddings[slot_index(Slot::kRoot)];
  root(4, 0) = root(3, 0);
  root(4, 1) = root(3, 1);

  const std::vector<IdBundle> same = {ids(3, 3), ids(3, 4)};
  const std::vector<IdBundle> split = {ids(3, 3), ids(4, 4)};
  const BackwardResult a = backward(same, 0, twin);
  const BackwardResult b = backward(split, 0, twin);
  CHECK(a.loss == b.loss);
  const EmbeddingGrad* both = a.grads.find(Slot::kRoot, 3);
  const EmbeddingGrad* first = b.grads.find(Slot::kRoot, 3);
  const EmbeddingGrad* second = b.grads.find(Slot::kRoot, 4);
  REQUIRE(both);
  REQUIRE(first);
  REQUIRE(second);
  for (std::size_t c = 0; c < 2; ++c)
    CHECK(both->grad[c] == doctest::Approx(first->grad[c] + second->grad[c]).epsilon(1e-14));
  CHECK(a.grads.find(Slot::kRoot, 4) == nullptr);
}

TEST_CASE("adagrad_step update rule") {
  ModelState s = hand_model();
  const ModelState before = s;
  const std::vector<IdBundle> ws = {ids(3, 3), ids(3, 3)};

  Gradients zero = backward(ws, 1, s).grads;
  zero.w1.fill(0.0);
  zero.b1.fill(0.0);
  zero.w2.fill(0.0);
  zero.b2.fill(0.0);
  zero.w3.fill(0.0);
  zero.b3.fill(0.0);
  for (auto& r : zero.rows) std::fill(r.grad.begin(), r.grad.end(), 0.0);
  adagrad_step(s, zero);
  CHECK(s.params == before.params);
  CHECK(s.accum == before.accum);

  Gradients g = zero;
  g.b3(0, 0) = 3.0;
  const double theta0 = s.params.b3(0, 0);
  adagrad_step(s, g);
  const double d1 = s.params.b3(0, 0) - theta0;
  CHECK(d1 == doctest::Approx(-0.05 * 3.0 / (3.0 + 1e-8)).epsilon(1e-14));
  CHECK(s.accum.b3(0, 0) == 9.0);
  adagrad_step(s, g);
  const double d2 = s.params.b3(0, 0) - theta0 - d1;
  CHECK(std::fabs(d2) < std::fabs(d1));
  CHECK(d2 == doctest::Approx(-0.05 * 3.0 / (std::sqrt(18.0) + 1e-8)).epsilon(1e-14));
}

TEST_CASE("property: updates touch only rows referenced by the window") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ModelState s = testing::toy_model(seed, ToyDims{});
    const ModelState before = s;
    Rng rng(seed);
    const auto ws = testing::random_window(s, rng);
    adagrad_step(s, backward(ws, static_cast<int>(seed % 2), s).grads);
    for (Slot slot : s.active_slots()) {
      const Matrix& m = s.params.embeddings[slot_index(slot)];
      for (std::uint32_t id = 0; id < m.rows(); ++id) {
        bool used = false;
        for (const auto& w : ws) used = used || w[slot_index(slot)] == id;
        if (used) continue;
        const auto now = m.row(id);
        const auto old = before.params.embeddings[slot_index(slot)].row(id);
        CHECK(std::equal(now.begin(), now.end(), old.begin()));
      }
    }
    s.accum.for_each([](const std::string&, const Matrix& m) {
      for (double x : m.flat()) CHECK(x >= 0.0);
    });
  }
}

TEST_CASE("save and load round-trip") {
  ModelState s = testing::toy_model(3, ToyDims{});
  Rng rng(3);
  for (int k = 0; k < 5; ++k) {
    const auto ws = testing::random_window(s, rng);
    adagrad_step(s, backward(ws, k % 2, s).grads);
  }
  const std::string bytes = saved(s);
  CHECK(bytes.compare(0, 8, std::string(kModelMagic, 8)) == 0);
  const ModelState back = loaded(bytes);
  CHECK(back.params == s.params);
  CHECK(back.accum == s.accum);
  CHECK(back.hyper == s.hyper);
  CHECK(back.tagset == s.tagset);
  CHECK(back.vocab == s.vocab);
  CHECK(saved(back) == bytes);

  for (int k = 0; k < 100; ++k) {
    const auto ws = testing::random_window(s, rng);
    const WindowProbs p = forward_window(ws, s);
    const WindowProbs q = forward_window(ws, back);
    CHECK(same_bits(p.p_pos, q.p_pos));
    CHECK(same_bits(p.p_neg, q.p_neg));
  }
}

TEST_CASE("model file integrity checks") {
  const std::string bytes = saved(testing::toy_model(4, ToyDims{}));

  for (std::size_t pos : {std::size_t{20}, bytes.size() / 2, bytes.size() - 5}) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 1);
    CHECK_THROWS_AS(loaded(bad), ChecksumMismatch);
  }
  std::string bad_crc = bytes;
  bad_crc.back() = static_cast<char>(bad_crc.back() ^ 1);
  CHECK_THROWS_AS(loaded(bad_crc), ChecksumMismatch);

  std::string version = bytes;
  version[8] = static_cast<char>(version[8] + 1);
  CHECK_THROWS_AS(loaded(version), VersionMismatch);

  CHECK_THROWS_AS(loaded(bytes.substr(0, bytes.size() - 1)), TruncatedFile);
  CHECK_THROWS_AS(loaded(bytes.substr(0, 10)), TruncatedFile);
  CHECK_THROWS_AS(loaded(bytes + "x"), Error);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(loaded(magic), Error);
}

TEST_CASE("set_pretrained_roots") {
  ModelState s = testing::toy_model(6, ToyDims{});
  const ModelState before = s;
  CHECK(set_pretrained_roots(s, {}) == 0);
  CHECK(s.params == before.params);

  Rng rng(1);
  for (int k = 0; k < 3; ++k) {
    const auto ws = testing::random_window(s, rng);
    adagrad_step(s, backward(ws, 1, s).grads);
  }
  const SlotVocab& roots = s.vocab[Slot::kRoot];
  const std::string name = roots.value(SlotVocab::kNumReserved);
  const std::vector<double> vec(s.hyper.root_dim, 0.25);
  const ModelState trained = s;
  CHECK(set_pretrained_roots(s, {{name, vec}, {"not-a-root", vec}}) == 1);
  const Matrix& now = s.params.embeddings[slot_index(Slot::kRoot)];
  const Matrix& old = trained.params.embeddings[slot_index(Slot::kRoot)];
  std::size_t changed = 0;
  for (std::size_t r = 0; r < now.rows(); ++r) {
    const auto a = now.row(r);
    const auto b = old.row(r);
    if (!std::equal(a.begin(), a.end(), b.begin())) ++changed;
  }
  CHECK(changed == 1);
  for (double x : now.row(SlotVocab::kNumReserved)) CHECK(x == 0.25);
  for (double x : s.accum.embeddings[slot_index(Slot::kRoot)].row(SlotVocab::kNumReserved))
    CHECK(x == 0.0);

  CHECK_THROWS_AS(set_pretrained_roots(s, {{name, std::vector<double>(2, 0.0)}}),
                  DimMismatch);
}
