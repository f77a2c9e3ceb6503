#include "morphdis/pretrain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "morphdis/errors.hpp"
#include "morphdis/rng.hpp"

namespace morphdis {

RootStream extract_roots(const std::vector<Sentence>& sents,
                         const std::vector<DecodeResult>& decoded) {
  if (sents.size() != decoded.size())
    throw AlignmentError("sentence and decode counts differ");
  RootStream out;
  out.reserve(sents.size());
  for (std::size_t i = 0; i < sents.size(); ++i) {
    const auto& toks = sents[i].tokens;
    const auto& choice = decoded[i].choice;
    if (toks.size() != choice.size())
      throw AlignmentError("sentence " + sents[i].id + ": token counts differ");
    std::vector<std::string> line;
    for (std::size_t t = 0; t < toks.size(); ++t)
      line.push_back(toks[t].candidates.at(choice[t]).root);
    out.push_back(std::move(line));
  }
  return out;
}

RootStream extract_roots(const std::vector<Sentence>& sents) {
  RootStream out;
  out.reserve(sents.size());
  for (const auto& s : sents) {
    std::vector<std::string> line;
    for (const auto& tok : s.tokens) {
      if (!tok.gold)
        throw MissingGold("sentence " + s.id + ": token '" + tok.surface +
                          "' has no gold analysis");
      line.push_back(tok.candidates[*tok.gold].root);
    }
    out.push_back(std::move(line));
  }
  return out;
}

void write_root_stream(std::ostream& out, const RootStream& stream) {
  for (const auto& line : stream) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i) out << ' ';
      out << line[i];
    }
    out << '\n';
  }
}

RootStream read_root_stream(std::istream& in) {
  RootStream out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::vector<std::string> words;
    for (std::string w; ss >> w;) words.push_back(std::move(w));
    if (!words.empty()) out.push_back(std::move(words));
  }
  return out;
}

void SkipgramOptions::validate() const {
  if (dim == 0) throw ConfigError("embedding dimension must be positive");
  if (context_window == 0) throw ConfigError("context window must be positive");
  if (negatives == 0) throw ConfigError("negative sample count must be at least 1");
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (!(start_learning_rate > 0.0) || !(end_learning_rate >= 0.0))
    throw ConfigError("learning rates must be positive");
  if (subsample_threshold < 0.0) throw ConfigError("subsample threshold must be >= 0");
}

RootTable RootEmbeddings::to_table() const {
  RootTable t;
  for (std::size_t i = 0; i < roots.size(); ++i) {
    auto r = vectors.row(i);
    t.emplace(roots[i], std::vector<double>(r.begin(), r.end()));
  }
  return t;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

RootEmbeddings train_skipgram(const RootStream& stream, const SkipgramOptions& opt) {
  opt.validate();

  std::map<std::string, std::uint64_t> counts;
  for (const auto& line : stream)
    for (const auto& w : line) ++counts[w];

  RootEmbeddings emb;
  std::vector<std::pair<std::string, std::uint64_t>> vocab;
  for (const auto& [w, c] : counts)
    if (c >= opt.min_count) vocab.emplace_back(w, c);
  if (vocab.empty())
    throw EmptyStream("no root occurs at least " + std::to_string(opt.min_count) +
                      " times");
  std::stable_sort(vocab.begin(), vocab.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  std::unordered_map<std::string, std::uint32_t> index;
  for (const auto& [w, c] : vocab) {
    index.emplace(w, static_cast<std::uint32_t>(emb.roots.size()));
    emb.roots.push_back(w);
    emb.counts.push_back(c);
  }

  std::vector<std::vector<std::uint32_t>> sentences;
  std::uint64_t total = 0;
  for (const auto& line : stream) {
    std::vector<std::uint32_t> ids;
    for (const auto& w : line)
      if (auto it = index.find(w); it != index.end()) ids.push_back(it->second);
    total += ids.size();
    if (!ids.empty()) sentences.push_back(std::move(ids));
  }

  const std::size_t V = emb.roots.size();
  const std::size_t dim = opt.dim;

  std::vector<double> cdf(V);
  double z = 0.0;
  for (std::size_t i = 0; i < V; ++i) {
    z += std::pow(static_cast<double>(emb.counts[i]), 0.75);
    cdf[i] = z;
  }
  for (auto& c : cdf) c /= z;

  std::vector<double> keep(V, 1.0);
  if (opt.subsample_threshold > 0.0) {
    const double t = opt.subsample_threshold * static_cast<double>(total);
    for (std::size_t i = 0; i < V; ++i) {
      const double f = static_cast<double>(emb.counts[i]);
      keep[i] = std::min(1.0, (std::sqrt(f / t) + 1.0) * t / f);
    }
  }

  Rng rng(opt.seed);
  emb.vectors = Matrix(V, dim);
  Matrix out(V, dim);
  for (double& x : emb.vectors.flat())
    x = uniform_symmetric(rng, 0.5 / static_cast<double>(dim));

  std::vector<double> grad(dim);
  const double planned = static_cast<double>(total) * static_cast<double>(opt.epochs);
  std::uint64_t processed = 0;
  auto update = [&](std::uint32_t center, std::uint32_t target, double label,
                    double lr) {
    auto in = emb.vectors.row(center);
    auto o = out.row(target);
    double dot = 0.0;
    for (std::size_t d = 0; d < dim; ++d) dot += in[d] * o[d];
    const double g = (label - sigmoid(dot)) * lr;
    for (std::size_t d = 0; d < dim; ++d) {
      grad[d] += g * o[d];
      o[d] += g * in[d];
    }
  };

  std::vector<std::uint32_t> kept;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (const auto& sent : sentences) {
      kept.clear();
      for (std::uint32_t id : sent)
        if (keep[id] >= 1.0 || uniform01(rng) < keep[id]) kept.push_back(id);

      for (std::size_t pos = 0; pos < kept.size(); ++pos) {
        const double progress = std::min(1.0, static_cast<double>(processed) / planned);
        const double lr = opt.start_learning_rate +
                          (opt.end_learning_rate - opt.start_learning_rate) * progress;
        const std::size_t b = 1 + uniform_index(rng, opt.context_window);
        const std::size_t lo = pos >= b ? pos - b : 0;
        const std::size_t hi = std::min(kept.size() - 1, pos + b);
        const std::uint32_t center = kept[pos];
        for (std::size_t c = lo; c <= hi; ++c) {
          if (c == pos) continue;
          std::fill(grad.begin(), grad.end(), 0.0);
          update(center, kept[c], 1.0, lr);
          for (std::size_t k = 0; k < opt.negatives; ++k) {
            const double u = uniform01(rng);
            auto neg = static_cast<std::uint32_t>(
                std::min<std::size_t>(V - 1, std::upper_bound(cdf.begin(), cdf.end(), u) -
                                                   cdf.begin()));
            if (neg == kept[c]) continue;
            update(center, neg, 0.0, lr);
          }
          auto in = emb.vectors.row(center);
          for (std::size_t d = 0; d < dim; ++d) in[d] += grad[d];
        }
      }
      // Progress counts the pre-subsampling stream so the schedule does not
      // depend on how many tokens were dropped.
      processed += sent.size();
    }
  }
  emb.tokens_seen = total;
  emb.epochs = opt.epochs;
  return emb;
}

namespace {

void append_double(std::string& s, double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  s.append(buf, p);
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size() || !std::isfinite(v))
    throw FormatError("bad number '" + std::string(tok) + "'", line);
  return v;
}

std::size_t parse_size(std::string_view tok, std::size_t line) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw FormatError("bad integer '" + std::string(tok) + "'", line);
  return v;
}

}  // namespace

void write_embeddings(std::ostream& out, const RootEmbeddings& e) {
  out << e.roots.size() << ' ' << e.dim() << '\n';
  std::string line;
  for (std::size_t i = 0; i < e.roots.size(); ++i) {
    line = e.roots[i];
    for (double v : e.vectors.row(i)) {
      line.push_back(' ');
      append_double(line, v);
    }
    line.push_back('\n');
    out << line;
  }
}

RootEmbeddings read_embeddings(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty embedding file", 1);
  std::istringstream hs(line);
  std::string a, b, extra;
  if (!(hs >> a >> b) || (hs >> extra)) throw FormatError("expected '<count> <dim>'", 1);
  const std::size_t n = parse_size(a, 1);
  const std::size_t dim = parse_size(b, 1);
  if (dim == 0) throw FormatError("dimension must be positive", 1);

  RootEmbeddings e;
  e.vectors = Matrix(n, dim);
  std::unordered_map<std::string, bool> seen;
  std::size_t lineno = 1;
  while (e.roots.size() < n) {
    if (!std::getline(in, line))
      throw FormatError("expected " + std::to_string(n) + " vectors, found " +
                            std::to_string(e.roots.size()),
                        lineno);
    ++lineno;
    std::istringstream ss(line);
    std::string root;
    if (!(ss >> root)) throw FormatError("empty line", lineno);
    if (!seen.emplace(root, true).second)
      throw FormatError("duplicate root '" + root + "'", lineno);
    auto row = e.vectors.row(e.roots.size());
    std::size_t d = 0;
    for (std::string tok; ss >> tok; ++d) {
      if (d >= dim) throw FormatError("too many values", lineno);
      row[d] = parse_double(tok, lineno);
    }
    if (d != dim) throw FormatError("too few values", lineno);
    e.roots.push_back(std::move(root));
    e.counts.push_back(0);
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw FormatError("trailing data after " + std::to_string(n) + " vectors", lineno);
  }
  return e;
}

void write_embeddings_file(const std::string& path, const RootEmbeddings& e) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_embeddings(out, e);
  if (!out) throw Error("write to '" + path + "' failed");
}

RootEmbeddings read_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return read_embeddings(in);
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const std::vector<std::string>& names, const Matrix& vectors,
    const std::string& query, std::size_t k) {
  auto it = std::find(names.begin(), names.end(), query);
  if (it == names.end()) throw Error("unknown root '" + query + "'");
  const auto q = static_cast<std::size_t>(it - names.begin());
  std::vector<std::pair<std::string, double>> all;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (i != q) all.emplace_back(names[i], cosine(vectors.row(q), vectors.row(i)));
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (all.size() > k) all.resize(k);
  return all;
}

}  // namespace morphdis
