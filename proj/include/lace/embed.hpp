#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "lace/cellgraph.hpp"
#include "lace/matrix.hpp"

namespace lace {

struct ContrastiveConfig {
  double alpha = 1.0 / 50.0;   // batch fraction b / n
  double alpha_p = 1.0 / 10.0; // positives per anchor, as a fraction of b
  double alpha_n = 6.0 / 10.0; // negatives per anchor, as a fraction of b
  double tau = 0.1;
  double lambda2 = 0.1;
  int epochs = 1000;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  int hidden = 64;
  int output = 20;

  void validate() const;
};

// Two-layer mean-aggregation GCN plus the bilinear discriminator.
// Layer 1 is followed by a PReLU, layer 2 is linear.
struct GcnParams {
  Matrix omega1;          // d x hidden
  Matrix omega2;          // hidden x output
  double prelu_slope = 0.25;
  Matrix disc;            // output x output

  Eigen::Index size() const { return omega1.size() + omega2.size() + 1 + disc.size(); }
  Vector flatten() const;
  void assign(const Vector& flat);
  static GcnParams zeros_like(const GcnParams& shape);
};

// Glorot-uniform weights, slope 0.25.
GcnParams init_params(int input, int hidden, int output, Rng& rng);

// Row-normalized closed-neighborhood averaging operator of a graph.
class MeanAggregator {
 public:
  explicit MeanAggregator(const CellGraph& graph);

  Eigen::Index size() const { return forward_.rows(); }
  Matrix apply(const Matrix& m) const { return forward_ * m; }
  Matrix apply_transpose(const Matrix& m) const { return transpose_ * m; }

 private:
  Eigen::SparseMatrix<double, Eigen::RowMajor> forward_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> transpose_;
};

struct EncoderCache {
  Matrix agg_x;
  Matrix z1;
  Matrix h1;
  Matrix agg_h1;
};

Matrix gcn_forward(const GcnParams& params, const Matrix& x, const MeanAggregator& agg,
                   EncoderCache* cache = nullptr);

// Accumulates encoder parameter gradients for dLoss/dH = grad_h.
void gcn_backward(const GcnParams& params, const MeanAggregator& agg,
                  const EncoderCache& cache, const Matrix& grad_h, GcnParams& grads);

// Uniform non-identity permutation (Fisher-Yates, redrawn on identity).
std::vector<std::uint32_t> corruption_permutation(size_t n, Rng& rng);
Matrix permute_rows(const Matrix& x, std::span<const std::uint32_t> perm);
Matrix corrupt(const Matrix& x, Rng& rng);

// Logistic of the column mean.
Vector readout(const Matrix& h);

struct LossGrad {
  double loss = 0.0;
  GcnParams grad;
};

// Binary cross-entropy of the bilinear discriminator on clean vs corrupted
// node embeddings against the clean summary vector.
LossGrad dgi_loss(const GcnParams& params, const Matrix& x, const Matrix& x_corrupt,
                  const MeanAggregator& agg);
LossGrad dgi_loss(const GcnParams& params, const Matrix& x, const MeanAggregator& agg,
                  Rng& rng);

struct Batch {
  std::vector<std::uint32_t> anchors;                  // b cells, with replacement
  std::vector<std::vector<std::uint32_t>> positives;   // per anchor position
  std::vector<std::vector<std::uint32_t>> negatives;   // per anchor position
  size_t n_p = 0;
  size_t n_n = 0;
  std::vector<std::string> warnings;

  size_t pair_count() const;
};

struct BatchSizes {
  size_t b;
  size_t n_p;
  size_t n_n;
};
BatchSizes batch_sizes(size_t n, const ContrastiveConfig& cfg);

// Positives are the batch members with the closest Laplace coordinates to
// the anchor; negatives are drawn with replacement from the remainder.
Batch sample_batch(std::span<const double> ell, const ContrastiveConfig& cfg, Rng& rng);

struct NtXentResult {
  double loss = 0.0;
  Matrix grad_h;  // same shape as H
};

double cosine_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& u,
                         const Eigen::Ref<const Eigen::RowVectorXd>& v);

NtXentResult ntxent_loss(const Matrix& h, const Batch& batch, double tau);

struct TotalLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  GcnParams grad;
};

// L = L1 + lambda2 * L2 with gradients for every parameter block.
TotalLoss total_loss(const GcnParams& params, const Matrix& x, const Matrix& x_corrupt,
                     const MeanAggregator& agg, const Batch& batch, double tau,
                     double lambda2);

struct EpochLoss {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
};

struct EmbeddingSet {
  Matrix h;
  std::vector<EpochLoss> epoch_losses;
  GcnParams params;
};

// Transductive training with Adam (0.9, 0.999, 1e-8). The corruption and
// the contrastive batch are redrawn every epoch.
EmbeddingSet train(const Matrix& x, const CellGraph& graph, std::span<const double> ell,
                   const ContrastiveConfig& cfg);

std::string loss_trace_csv(const std::vector<EpochLoss>& losses);

}  // namespace lace
