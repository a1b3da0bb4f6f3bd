#include "lace/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lace/csv.hpp"
#include "lace/error.hpp"

namespace lace {

namespace {

constexpr double kNormEpsilon = 1e-12;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Rng stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return Rng(seq);
}

}  // namespace

void ContrastiveConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  if (!(alpha_p > 0.0 && alpha_p < 1.0)) throw ArgumentError("alpha_p must lie in (0, 1)");
  if (!(alpha_n > 0.0 && alpha_n < 1.0)) throw ArgumentError("alpha_n must lie in (0, 1)");
  if (!(tau > 0.0)) throw ArgumentError("tau must be positive");
  if (!(lambda2 >= 0.0 && lambda2 < 1.0)) throw ArgumentError("lambda2 must lie in [0, 1)");
  if (epochs < 0) throw ArgumentError("epochs must be non-negative");
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (hidden < 1 || output < 1) throw ArgumentError("layer widths must be positive");
}

// ---------------------------------------------------------------------------
// Parameters

Vector GcnParams::flatten() const {
  Vector flat(size());
  Eigen::Index pos = 0;
  for (const Matrix* m : {&omega1, &omega2}) {
    flat.segment(pos, m->size()) = Eigen::Map<const Vector>(m->data(), m->size());
    pos += m->size();
  }
  flat[pos++] = prelu_slope;
  flat.segment(pos, disc.size()) = Eigen::Map<const Vector>(disc.data(), disc.size());
  return flat;
}

void GcnParams::assign(const Vector& flat) {
  if (flat.size() != size()) throw ArgumentError("parameter vector has wrong length");
  Eigen::Index pos = 0;
  for (Matrix* m : {&omega1, &omega2}) {
    Eigen::Map<Vector>(m->data(), m->size()) = flat.segment(pos, m->size());
    pos += m->size();
  }
  prelu_slope = flat[pos++];
  Eigen::Map<Vector>(disc.data(), disc.size()) = flat.segment(pos, disc.size());
}

GcnParams GcnParams::zeros_like(const GcnParams& shape) {
  GcnParams z;
  z.omega1 = Matrix::Zero(shape.omega1.rows(), shape.omega1.cols());
  z.omega2 = Matrix::Zero(shape.omega2.rows(), shape.omega2.cols());
  z.prelu_slope = 0.0;
  z.disc = Matrix::Zero(shape.disc.rows(), shape.disc.cols());
  return z;
}

GcnParams init_params(int input, int hidden, int output, Rng& rng) {
  auto glorot = [&rng](int fan_in, int fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(fan_in, fan_out);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };
  GcnParams p;
  p.omega1 = glorot(input, hidden);
  p.omega2 = glorot(hidden, output);
  p.prelu_slope = 0.25;
  p.disc = glorot(output, output);
  return p;
}

// ---------------------------------------------------------------------------
// Encoder

MeanAggregator::MeanAggregator(const CellGraph& graph) {
  const auto n = static_cast<Eigen::Index>(graph.node_count());
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<size_t>(n) + 2 * graph.edge_count());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto nbs = graph.neighbors(static_cast<size_t>(i));
    const double w = 1.0 / static_cast<double>(nbs.size() + 1);
    triplets.emplace_back(i, i, w);
    for (std::uint32_t j : nbs) triplets.emplace_back(i, static_cast<Eigen::Index>(j), w);
  }
  forward_.resize(n, n);
  forward_.setFromTriplets(triplets.begin(), triplets.end());
  transpose_ = forward_.transpose();
}

Matrix gcn_forward(const GcnParams& params, const Matrix& x, const MeanAggregator& agg,
                   EncoderCache* cache) {
  if (x.rows() != agg.size()) {
    throw ArgumentError("gcn: feature rows (" + std::to_string(x.rows()) +
                        ") do not match graph nodes (" + std::to_string(agg.size()) + ")");
  }
  if (x.cols() != params.omega1.rows()) {
    throw ArgumentError("gcn: feature width does not match first layer");
  }
  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.agg_x = agg.apply(x);
  c.z1 = c.agg_x * params.omega1;
  const double a = params.prelu_slope;
  c.h1 = c.z1.unaryExpr([a](double v) { return v > 0.0 ? v : a * v; });
  c.agg_h1 = agg.apply(c.h1);
  return c.agg_h1 * params.omega2;
}

void gcn_backward(const GcnParams& params, const MeanAggregator& agg,
                  const EncoderCache& cache, const Matrix& grad_h, GcnParams& grads) {
  grads.omega2.noalias() += cache.agg_h1.transpose() * grad_h;
  const Matrix grad_h1 = agg.apply_transpose(grad_h * params.omega2.transpose());
  const double a = params.prelu_slope;
  Matrix grad_z1(grad_h1.rows(), grad_h1.cols());
  double grad_slope = 0.0;
  for (Eigen::Index i = 0; i < grad_h1.size(); ++i) {
    const double z = cache.z1.data()[i];
    const double g = grad_h1.data()[i];
    if (z > 0.0) {
      grad_z1.data()[i] = g;
    } else {
      grad_z1.data()[i] = a * g;
      grad_slope += g * z;
    }
  }
  grads.prelu_slope += grad_slope;
  grads.omega1.noalias() += cache.agg_x.transpose() * grad_z1;
}

// ---------------------------------------------------------------------------
// Corruption and readout

std::vector<std::uint32_t> corruption_permutation(size_t n, Rng& rng) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  if (n < 2) return perm;
  while (true) {
    for (size_t i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<size_t> pick(0, i);
      std::swap(perm[i], perm[pick(rng)]);
    }
    bool identity = true;
    for (size_t i = 0; i < n && identity; ++i) identity = perm[i] == i;
    if (!identity) return perm;
  }
}

Matrix permute_rows(const Matrix& x, std::span<const std::uint32_t> perm) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = x.row(perm[static_cast<size_t>(i)]);
  return out;
}

Matrix corrupt(const Matrix& x, Rng& rng) {
  return permute_rows(x, corruption_permutation(static_cast<size_t>(x.rows()), rng));
}

Vector readout(const Matrix& h) {
  Vector mean = h.colwise().mean().transpose();
  return mean.unaryExpr([](double v) { return logistic(v); });
}

// ---------------------------------------------------------------------------
// DGI

namespace {

// Loss and dL/dH, dL/dH~ for fixed embeddings; adds dL/dW into grads.disc.
double dgi_head(const GcnParams& params, const Matrix& h, const Matrix& h_corrupt,
                Matrix& grad_h, Matrix& grad_hc, GcnParams& grads) {
  const auto n = static_cast<double>(h.rows());
  const Vector s = readout(h);
  const Vector ws = params.disc * s;
  const Vector logits = h * ws;
  const Vector logits_c = h_corrupt * ws;
  double loss = 0.0;
  Vector g_a(h.rows());
  Vector g_c(h.rows());
  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    loss += softplus(-logits[i]) + softplus(logits_c[i]);
    g_a[i] = -logistic(-logits[i]) / n;
    g_c[i] = logistic(logits_c[i]) / n;
  }
  loss /= n;
  const Vector pooled = h.transpose() * g_a + h_corrupt.transpose() * g_c;
  grads.disc.noalias() += pooled * s.transpose();
  const Vector grad_s = params.disc.transpose() * pooled;
  const Vector grad_mean = grad_s.cwiseProduct(s.cwiseProduct(Vector::Ones(s.size()) - s));
  grad_h = g_a * ws.transpose();
  grad_h.rowwise() += grad_mean.transpose() / n;
  grad_hc = g_c * ws.transpose();
  return loss;
}

}  // namespace

LossGrad dgi_loss(const GcnParams& params, const Matrix& x, const Matrix& x_corrupt,
                  const MeanAggregator& agg) {
  EncoderCache clean;
  EncoderCache corrupted;
  const Matrix h = gcn_forward(params, x, agg, &clean);
  const Matrix hc = gcn_forward(params, x_corrupt, agg, &corrupted);
  LossGrad out{0.0, GcnParams::zeros_like(params)};
  Matrix grad_h;
  Matrix grad_hc;
  out.loss = dgi_head(params, h, hc, grad_h, grad_hc, out.grad);
  gcn_backward(params, agg, clean, grad_h, out.grad);
  gcn_backward(params, agg, corrupted, grad_hc, out.grad);
  return out;
}

LossGrad dgi_loss(const GcnParams& params, const Matrix& x, const MeanAggregator& agg,
                  Rng& rng) {
  return dgi_loss(params, x, corrupt(x, rng), agg);
}

// ---------------------------------------------------------------------------
// NT-Xent

size_t Batch::pair_count() const {
  size_t total = 0;
  for (const auto& p : positives) total += p.size();
  return total;
}

BatchSizes batch_sizes(size_t n, const ContrastiveConfig& cfg) {
  BatchSizes s{};
  s.b = std::max<size_t>(2, static_cast<size_t>(std::llround(cfg.alpha * static_cast<double>(n))));
  s.n_p = std::max<size_t>(1, static_cast<size_t>(std::llround(cfg.alpha_p * static_cast<double>(s.b))));
  s.n_n = std::max<size_t>(1, static_cast<size_t>(std::llround(cfg.alpha_n * static_cast<double>(s.b))));
  return s;
}

Batch sample_batch(std::span<const double> ell, const ContrastiveConfig& cfg, Rng& rng) {
  const size_t n = ell.size();
  if (n < 2) throw ArgumentError("contrastive batch: need at least 2 cells");
  const BatchSizes sizes = batch_sizes(n, cfg);
  Batch batch;
  batch.n_p = sizes.n_p;
  batch.n_n = sizes.n_n;
  std::uniform_int_distribution<std::uint32_t> pick_cell(0, static_cast<std::uint32_t>(n - 1));
  batch.anchors.resize(sizes.b);
  for (auto& a : batch.anchors) a = pick_cell(rng);

  std::vector<std::uint32_t> members(batch.anchors);
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());

  for (size_t pos = 0; pos < sizes.b; ++pos) {
    const std::uint32_t anchor = batch.anchors[pos];
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t m : members) {
      if (m != anchor) candidates.push_back(m);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double da = std::abs(ell[anchor] - ell[a]);
      const double db = std::abs(ell[anchor] - ell[b]);
      return da < db || (da == db && a < b);
    });
    size_t n_p = std::min(sizes.n_p, candidates.size());
    // Negatives come from batch positions outside P_i and the anchor.
    auto negative_pool = [&](size_t count) {
      std::vector<std::uint32_t> pool;
      for (std::uint32_t c : batch.anchors) {
        if (c == anchor) continue;
        if (std::find(candidates.begin(), candidates.begin() + count, c) !=
            candidates.begin() + count) {
          continue;
        }
        pool.push_back(c);
      }
      return pool;
    };
    std::vector<std::uint32_t> pool = negative_pool(n_p);
    while (pool.empty() && n_p > 0) {
      --n_p;
      pool = negative_pool(n_p);
    }
    if (n_p < sizes.n_p) {
      batch.warnings.push_back("anchor " + std::to_string(anchor) + ": positives reduced to " +
                               std::to_string(n_p) + " to leave room for negatives");
    }
    std::vector<std::uint32_t> negatives;
    if (!pool.empty() && n_p > 0) {
      std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
      for (size_t k = 0; k < sizes.n_n; ++k) negatives.push_back(pool[pick(rng)]);
    } else {
      n_p = 0;
    }
    batch.positives.emplace_back(candidates.begin(), candidates.begin() + n_p);
    batch.negatives.push_back(std::move(negatives));
  }
  return batch;
}

double cosine_similarity(const Eigen::Ref<const Eigen::RowVectorXd>& u,
                         const Eigen::Ref<const Eigen::RowVectorXd>& v) {
  const double nu = std::max(u.norm(), kNormEpsilon);
  const double nv = std::max(v.norm(), kNormEpsilon);
  return u.dot(v) / (nu * nv);
}

NtXentResult ntxent_loss(const Matrix& h, const Batch& batch, double tau) {
  NtXentResult out;
  out.grad_h = Matrix::Zero(h.rows(), h.cols());
  const size_t pairs = batch.pair_count();
  if (pairs == 0) return out;
  const double scale = 1.0 / static_cast<double>(pairs);

  const Vector norms = h.rowwise().norm();
  // d sim(u, v) / du for the guarded cosine.
  auto add_cos_grad = [&](std::uint32_t u, std::uint32_t v, double weight) {
    const double nu_raw = norms[u];
    const double nu = std::max(nu_raw, kNormEpsilon);
    const double nv = std::max(norms[v], kNormEpsilon);
    const double c = h.row(u).dot(h.row(v)) / (nu * nv);
    out.grad_h.row(u) += weight * h.row(v) / (nu * nv);
    if (nu_raw >= kNormEpsilon) out.grad_h.row(u) -= weight * c * h.row(u) / (nu * nu);
  };

  std::vector<double> logits;
  for (size_t pos = 0; pos < batch.anchors.size(); ++pos) {
    const std::uint32_t i = batch.anchors[pos];
    const auto& negs = batch.negatives[pos];
    for (std::uint32_t j : batch.positives[pos]) {
      logits.clear();
      logits.push_back(cosine_similarity(h.row(i), h.row(j)) / tau);
      for (std::uint32_t k : negs) logits.push_back(cosine_similarity(h.row(i), h.row(k)) / tau);
      const double top = *std::max_element(logits.begin(), logits.end());
      double z = 0.0;
      for (double l : logits) z += std::exp(l - top);
      const double lse = top + std::log(z);
      out.loss += scale * (lse - logits[0]);
      // d/dlogit: softmax - onehot(positive).
      const double g_pos = scale * (std::exp(logits[0] - lse) - 1.0) / tau;
      add_cos_grad(i, j, g_pos);
      add_cos_grad(j, i, g_pos);
      for (size_t k = 0; k < negs.size(); ++k) {
        const double g_neg = scale * std::exp(logits[k + 1] - lse) / tau;
        add_cos_grad(i, negs[k], g_neg);
        add_cos_grad(negs[k], i, g_neg);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Combined objective and training

TotalLoss total_loss(const GcnParams& params, const Matrix& x, const Matrix& x_corrupt,
                     const MeanAggregator& agg, const Batch& batch, double tau,
                     double lambda2) {
  EncoderCache clean;
  EncoderCache corrupted;
  const Matrix h = gcn_forward(params, x, agg, &clean);
  const Matrix hc = gcn_forward(params, x_corrupt, agg, &corrupted);
  TotalLoss out;
  out.grad = GcnParams::zeros_like(params);
  Matrix grad_h;
  Matrix grad_hc;
  out.l1 = dgi_head(params, h, hc, grad_h, grad_hc, out.grad);
  const NtXentResult nt = ntxent_loss(h, batch, tau);
  out.l2 = nt.loss;
  out.total = out.l1 + lambda2 * out.l2;
  if (lambda2 != 0.0) grad_h += lambda2 * nt.grad_h;
  gcn_backward(params, agg, clean, grad_h, out.grad);
  gcn_backward(params, agg, corrupted, grad_hc, out.grad);
  return out;
}

EmbeddingSet train(const Matrix& x, const CellGraph& graph, std::span<const double> ell,
                   const ContrastiveConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<size_t>(x.rows());
  if (graph.node_count() != n || ell.size() != n) {
    throw ArgumentError("train: features, graph and Laplace coordinates disagree on n");
  }
  Rng init_rng = stream(cfg.seed, 1);
  Rng corrupt_rng = stream(cfg.seed, 2);
  Rng batch_rng = stream(cfg.seed, 3);

  const MeanAggregator agg(graph);
  EmbeddingSet out;
  GcnParams params = init_params(static_cast<int>(x.cols()), cfg.hidden, cfg.output, init_rng);
  Vector theta = params.flatten();
  Vector m1 = Vector::Zero(theta.size());
  Vector m2 = Vector::Zero(theta.size());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double beta1_t = 1.0;
  double beta2_t = 1.0;
  double last_finite = std::numeric_limits<double>::quiet_NaN();

  out.epoch_losses.reserve(static_cast<size_t>(cfg.epochs));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Matrix xc = corrupt(x, corrupt_rng);
    const Batch batch = sample_batch(ell, cfg, batch_rng);
    TotalLoss step = total_loss(params, x, xc, agg, batch, cfg.tau, cfg.lambda2);
    const Vector grad = step.grad.flatten();
    if (!std::isfinite(step.total) || !grad.allFinite()) {
      throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                               " (last finite loss " + format_double(last_finite) + ")",
                           epoch, last_finite);
    }
    last_finite = step.total;
    out.epoch_losses.push_back({step.l1, step.l2, step.total});

    beta1_t *= kBeta1;
    beta2_t *= kBeta2;
    m1 = kBeta1 * m1 + (1.0 - kBeta1) * grad;
    m2 = kBeta2 * m2 + (1.0 - kBeta2) * grad.cwiseProduct(grad);
    const Vector m1_hat = m1 / (1.0 - beta1_t);
    const Vector m2_hat = m2 / (1.0 - beta2_t);
    theta -= cfg.learning_rate * m1_hat.cwiseQuotient((m2_hat.cwiseSqrt().array() + kEps).matrix());
    params.assign(theta);
  }
  out.h = gcn_forward(params, x, agg);
  out.params = std::move(params);
  return out;
}

std::string loss_trace_csv(const std::vector<EpochLoss>& losses) {
  std::string out = "epoch,L1,L2,total\n";
  for (size_t e = 0; e < losses.size(); ++e) {
    out += std::to_string(e) + "," + format_double(losses[e].l1) + "," +
           format_double(losses[e].l2) + "," + format_double(losses[e].total) + "\n";
  }
  return out;
}

}  // namespace lace
