#pragma once

// Skip-gram with negative sampling over root sequences.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "morphdis/corpus.hpp"
#include "morphdis/decoder.hpp"
#include "morphdis/linalg.hpp"
#include "morphdis/model.hpp"

namespace morphdis {

// One sentence per entry, roots in token order.
using RootStream = std::vector<std::vector<std::string>>;

// Roots of the decoder's choices.
RootStream extract_roots(const std::vector<Sentence>& sents,
                         const std::vector<DecodeResult>& decoded);
// Roots of the gold analyses.
RootStream extract_roots(const std::vector<Sentence>& sents);

void write_root_stream(std::ostream& out, const RootStream& stream);
RootStream read_root_stream(std::istream& in);

struct SkipgramOptions {
  std::size_t dim = 50;
  std::size_t context_window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double start_learning_rate = 0.025;
  double end_learning_rate = 1e-4;
  double subsample_threshold = 1e-4;
  std::uint64_t min_count = 5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct RootEmbeddings {
  std::vector<std::string> roots;  // count descending, then byte order
  std::vector<std::uint64_t> counts;
  Matrix vectors;                  // roots.size() x dim

  std::size_t tokens_seen = 0;  // after min-count filtering, per epoch
  std::size_t epochs = 0;

  std::size_t dim() const { return vectors.cols(); }
  RootTable to_table() const;
};

RootEmbeddings train_skipgram(const RootStream& stream, const SkipgramOptions& opt);

// `<vocabSize> <dim>` then `root v1 .. vdim` per line.
void write_embeddings(std::ostream& out, const RootEmbeddings& e);
RootEmbeddings read_embeddings(std::istream& in);
void write_embeddings_file(const std::string& path, const RootEmbeddings& e);
RootEmbeddings read_embeddings_file(const std::string& path);

double cosine(std::span<const double> a, std::span<const double> b);

// The k rows closest to `query` by cosine, excluding the query itself.
// Ties keep row order. Throws Error if `query` is not in `names`.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const std::vector<std::string>& names, const Matrix& vectors,
    const std::string& query, std::size_t k);

}  // namespace morphdis
