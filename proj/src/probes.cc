#include "compprobe/probes.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "compprobe/errors.h"
#include "compprobe/random.h"
#include "compprobe/tsv.h"
#include "bytes.h"

namespace compprobe {
namespace {

constexpr char kCheckpointMagic[4] = {'C', 'T', 'P', '1'};
constexpr double kImprovementThreshold = 1e-6;
constexpr Eigen::Index kApplyChunk = 4096;

// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate)
      : lr_(learning_rate),
        m_(Eigen::VectorXf::Zero(size)),
        v_(Eigen::VectorXf::Zero(size)) {}

  void Step(Eigen::VectorXf& params, const Eigen::VectorXf& grad) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0f - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0f - kBeta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(double{kBeta1}, t_);
    const double bc2 = 1.0 - std::pow(double{kBeta2}, t_);
    const float step = static_cast<float>(lr_ / bc1);
    const float scale = static_cast<float>(1.0 / std::sqrt(bc2));
    params.array() -=
        step * m_.array() / (v_.array().sqrt() * scale + kEps);
  }

 private:
  static constexpr float kBeta1 = 0.9f;
  static constexpr float kBeta2 = 0.999f;
  static constexpr float kEps = 1e-8f;

  double lr_;
  Eigen::VectorXf m_;
  Eigen::VectorXf v_;
  int t_ = 0;
};

Eigen::Index ParamCount(const ProbeModel& p) {
  switch (p.kind) {
    case ProbeKind::kLin:
      return 2;
    case ProbeKind::kAff:
      return 2 + p.beta.size();
    case ProbeKind::kMlp: {
      const auto& w = *p.mlp;
      return w.w1.size() + w.b1.size() + w.w2.size() + w.b2.size() +
             w.w3.size() + w.b3.size();
    }
    default:
      return 0;
  }
}

template <typename Weights, typename Fn>
void ForEachMlpBlock(Weights& w, Fn&& fn) {
  fn(w.w1.data(), w.w1.size());
  fn(w.b1.data(), w.b1.size());
  fn(w.w2.data(), w.w2.size());
  fn(w.b2.data(), w.b2.size());
  fn(w.w3.data(), w.w3.size());
  fn(w.b3.data(), w.b3.size());
}

Eigen::VectorXf Flatten(const ProbeModel& p) {
  Eigen::VectorXf theta(ParamCount(p));
  if (p.kind == ProbeKind::kMlp) {
    Eigen::Index at = 0;
    ForEachMlpBlock(*p.mlp, [&](const float* data, Eigen::Index n) {
      theta.segment(at, n) = Eigen::Map<const Eigen::VectorXf>(data, n);
      at += n;
    });
    return theta;
  }
  theta(0) = p.alpha1;
  theta(1) = p.alpha2;
  if (p.kind == ProbeKind::kAff) theta.tail(p.beta.size()) = p.beta;
  return theta;
}

void Unflatten(const Eigen::VectorXf& theta, ProbeModel& p) {
  if (p.kind == ProbeKind::kMlp) {
    Eigen::Index at = 0;
    ForEachMlpBlock(*p.mlp, [&](float* data, Eigen::Index n) {
      Eigen::Map<Eigen::VectorXf>(data, n) = theta.segment(at, n);
      at += n;
    });
    return;
  }
  p.alpha1 = theta(0);
  p.alpha2 = theta(1);
  if (p.kind == ProbeKind::kAff) p.beta = theta.tail(p.beta.size());
}

// dL/dp for L = mean over rows of (1 - cos(p, x)). Rows with a zero vector
// contribute no gradient. Returns the summed loss.
double CosineLossGrad(const Matrix& pred, const Matrix& target, Matrix& grad) {
  const auto n = pred.rows();
  grad.setZero(n, pred.cols());
  double loss = 0.0;
  const float inv_n = 1.0f / static_cast<float>(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const float np = pred.row(i).norm();
    const float nx = target.row(i).norm();
    if (np == 0.0f || nx == 0.0f) {
      loss += 1.0;
      continue;
    }
    const float cos = pred.row(i).dot(target.row(i)) / (np * nx);
    loss += 1.0 - cos;
    grad.row(i) = -inv_n * (target.row(i) / (np * nx) -
                            (cos / (np * np)) * pred.row(i));
  }
  return loss;
}

struct Batch {
  Matrix parent, left, right;
};

Batch Gather(const TripleMatrix& t, std::span<const std::size_t> rows) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(rows.size());
  b.parent.resize(n, t.parent.cols());
  b.left.resize(n, t.parent.cols());
  b.right.resize(n, t.parent.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[i]);
    b.parent.row(i) = t.parent.row(r);
    b.left.row(i) = t.left.row(r);
    b.right.row(i) = t.right.row(r);
  }
  return b;
}

Eigen::VectorXf LinearGradient(const ProbeModel& p, const Batch& b,
                               double& loss) {
  const Matrix pred = ApplyProbe(p, b.left, b.right);
  Matrix g;
  loss = CosineLossGrad(pred, b.parent, g);
  Eigen::VectorXf grad(ParamCount(p));
  grad(0) = g.cwiseProduct(b.left).sum();
  grad(1) = g.cwiseProduct(b.right).sum();
  if (p.kind == ProbeKind::kAff) {
    grad.tail(p.beta.size()) = g.colwise().sum().transpose();
  }
  return grad;
}

Eigen::VectorXf MlpGradient(const ProbeModel& p, const Batch& b,
                            double& loss) {
  const MlpWeights& w = *p.mlp;
  const auto d = b.left.cols();
  // Column-per-example layout.
  Eigen::MatrixXf x(2 * d, b.left.rows());
  x.topRows(d) = b.left.transpose();
  x.bottomRows(d) = b.right.transpose();
  const Eigen::MatrixXf z1 = (w.w1 * x).colwise() + w.b1;
  const Eigen::MatrixXf h1 = z1.cwiseMax(0.0f);
  const Eigen::MatrixXf z2 = (w.w2 * h1).colwise() + w.b2;
  const Eigen::MatrixXf h2 = z2.cwiseMax(0.0f);
  const Matrix pred = ((w.w3 * h2).colwise() + w.b3).transpose();

  Matrix g_rows;
  loss = CosineLossGrad(pred, b.parent, g_rows);
  const Eigen::MatrixXf g_out = g_rows.transpose();
  const Eigen::MatrixXf g_h2 =
      (w.w3.transpose() * g_out).cwiseProduct((z2.array() > 0.0f).cast<float>().matrix());
  const Eigen::MatrixXf g_h1 =
      (w.w2.transpose() * g_h2).cwiseProduct((z1.array() > 0.0f).cast<float>().matrix());

  MlpWeights grad;
  grad.w3 = g_out * h2.transpose();
  grad.b3 = g_out.rowwise().sum();
  grad.w2 = g_h2 * h1.transpose();
  grad.b2 = g_h2.rowwise().sum();
  grad.w1 = g_h1 * x.transpose();
  grad.b1 = g_h1.rowwise().sum();

  ProbeModel shape = p;
  shape.mlp = std::move(grad);
  return Flatten(shape);
}

void WriteBlob(std::string& out, std::string_view name,
               const Eigen::MatrixXf& m) {
  bytes::PutString(out, name);
  bytes::PutU32(out, static_cast<std::uint32_t>(m.rows()));
  bytes::PutU32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) bytes::PutFloat(out, m.data()[i]);
}

Eigen::MatrixXf ReadBlob(bytes::Reader& in, std::string_view expected) {
  const std::string name = in.String("blob name");
  if (name != expected) {
    throw FormatError("checkpoint: expected blob '" + std::string(expected) +
                      "', found '" + name + "'");
  }
  const std::uint32_t rows = in.U32("blob rows");
  const std::uint32_t cols = in.U32("blob cols");
  if (std::uint64_t{rows} * cols * 4 > in.remaining()) {
    throw FormatError("checkpoint: truncated blob '" + name + "'");
  }
  Eigen::MatrixXf m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = in.Float("blob");
  return m;
}

// Cosine loss fixes LIN/AFF only up to a positive scale. Pick the scale
// with least squared error to the training targets; the loss is unchanged.
void RescaleToTargets(ProbeModel& probe, const TripleMatrix& train) {
  const Matrix pred = ApplyProbe(probe, train.left, train.right);
  const double num = (pred.cast<double>().array() *
                      train.parent.cast<double>().array()).sum();
  const double den = pred.cast<double>().squaredNorm();
  if (!(den > 0.0) || !(num > 0.0) || !std::isfinite(num / den)) return;
  const auto c = static_cast<float>(num / den);
  probe.alpha1 *= c;
  probe.alpha2 *= c;
  if (probe.beta.size() != 0) probe.beta *= c;
}

}  // namespace

std::string_view ProbeKindName(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::kAdd:
      return "ADD";
    case ProbeKind::kW1:
      return "W1";
    case ProbeKind::kW2:
      return "W2";
    case ProbeKind::kLin:
      return "LIN";
    case ProbeKind::kAff:
      return "AFF";
    case ProbeKind::kMlp:
      return "MLP";
  }
  return "?";
}

ProbeKind ParseProbeKind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  for (ProbeKind k : kAllProbeKinds) {
    if (ProbeKindName(k) == upper) return k;
  }
  throw FormatError("unknown probe kind '" + std::string(name) + "'");
}

bool IsTrainable(ProbeKind kind) {
  return kind == ProbeKind::kLin || kind == ProbeKind::kAff ||
         kind == ProbeKind::kMlp;
}

ProbeModel ProbeModel::Arithmetic(ProbeKind kind, std::size_t dim) {
  if (IsTrainable(kind)) {
    throw FormatError(std::string(ProbeKindName(kind)) +
                      " is not an arithmetic probe");
  }
  ProbeModel p;
  p.kind = kind;
  p.dim = dim;
  return p;
}

ProbeModel ProbeModel::Linear(std::size_t dim, float alpha1, float alpha2) {
  ProbeModel p;
  p.kind = ProbeKind::kLin;
  p.dim = dim;
  p.alpha1 = alpha1;
  p.alpha2 = alpha2;
  return p;
}

ProbeModel ProbeModel::Affine(float alpha1, float alpha2,
                              Eigen::VectorXf beta) {
  ProbeModel p;
  p.kind = ProbeKind::kAff;
  p.dim = static_cast<std::size_t>(beta.size());
  p.alpha1 = alpha1;
  p.alpha2 = alpha2;
  p.beta = std::move(beta);
  return p;
}

ProbeModel ProbeModel::Mlp(MlpWeights weights) {
  ProbeModel p;
  p.kind = ProbeKind::kMlp;
  p.dim = static_cast<std::size_t>(weights.b3.size());
  p.mlp = std::move(weights);
  p.Validate();
  return p;
}

void ProbeModel::Validate() const {
  if (dim == 0) throw DimError("probe dimension is zero");
  const bool finite_alphas = std::isfinite(alpha1) && std::isfinite(alpha2);
  switch (kind) {
    case ProbeKind::kAdd:
    case ProbeKind::kW1:
    case ProbeKind::kW2:
      if (beta.size() != 0 || mlp) {
        throw FormatError("arithmetic probe carries parameters");
      }
      return;
    case ProbeKind::kLin:
      if (beta.size() != 0 || mlp) throw FormatError("LIN carries extra parameters");
      if (!finite_alphas) throw DomainError("non-finite LIN coefficient");
      return;
    case ProbeKind::kAff:
      if (mlp) throw FormatError("AFF carries MLP weights");
      if (static_cast<std::size_t>(beta.size()) != dim) {
        throw DimError("AFF bias has wrong dimension");
      }
      if (!finite_alphas || !beta.allFinite()) {
        throw DomainError("non-finite AFF parameter");
      }
      return;
    case ProbeKind::kMlp: {
      if (!mlp) throw FormatError("MLP probe without weights");
      const auto& w = *mlp;
      const auto d = static_cast<Eigen::Index>(dim);
      const auto h1 = w.w1.rows();
      const auto h2 = w.w2.rows();
      if (w.w1.cols() != 2 * d || w.b1.size() != h1 || w.w2.cols() != h1 ||
          w.b2.size() != h2 || w.w3.rows() != d || w.w3.cols() != h2 ||
          w.b3.size() != d) {
        throw DimError("MLP weight shapes do not match");
      }
      if (!w.w1.allFinite() || !w.b1.allFinite() || !w.w2.allFinite() ||
          !w.b2.allFinite() || !w.w3.allFinite() || !w.b3.allFinite()) {
        throw DomainError("non-finite MLP weight");
      }
      return;
    }
  }
}

Vector ApplyProbeToPair(const ProbeModel& probe, const Eigen::Ref<const Vector>& a,
                        const Eigen::Ref<const Vector>& b) {
  const auto d = static_cast<Eigen::Index>(probe.dim);
  if (a.size() != d || b.size() != d) {
    throw DimError("child vectors must have dimension " +
                   std::to_string(probe.dim));
  }
  switch (probe.kind) {
    case ProbeKind::kAdd:
      return a + b;
    case ProbeKind::kW1:
      return a;
    case ProbeKind::kW2:
      return b;
    case ProbeKind::kLin:
      return probe.alpha1 * a + probe.alpha2 * b;
    case ProbeKind::kAff:
      return probe.alpha1 * a + probe.alpha2 * b + probe.beta;
    case ProbeKind::kMlp: {
      const auto& w = *probe.mlp;
      Vector x(2 * d);
      x << a, b;
      const Vector h1 = (w.w1 * x + w.b1).cwiseMax(0.0f);
      const Vector h2 = (w.w2 * h1 + w.b2).cwiseMax(0.0f);
      return w.w3 * h2 + w.b3;
    }
  }
  return {};
}

Matrix ApplyProbe(const ProbeModel& probe, const Matrix& left,
                  const Matrix& right) {
  const auto d = static_cast<Eigen::Index>(probe.dim);
  if (left.cols() != d || right.cols() != d || left.rows() != right.rows()) {
    throw DimError("child matrices do not match probe dimension " +
                   std::to_string(probe.dim));
  }
  switch (probe.kind) {
    case ProbeKind::kAdd:
      return left + right;
    case ProbeKind::kW1:
      return left;
    case ProbeKind::kW2:
      return right;
    case ProbeKind::kLin:
      return probe.alpha1 * left + probe.alpha2 * right;
    case ProbeKind::kAff: {
      Matrix out = probe.alpha1 * left + probe.alpha2 * right;
      out.rowwise() += probe.beta.transpose();
      return out;
    }
    case ProbeKind::kMlp: {
      const auto& w = *probe.mlp;
      Matrix out(left.rows(), d);
      for (Eigen::Index start = 0; start < left.rows(); start += kApplyChunk) {
        const auto n = std::min(kApplyChunk, left.rows() - start);
        Eigen::MatrixXf x(2 * d, n);
        x.topRows(d) = left.middleRows(start, n).transpose();
        x.bottomRows(d) = right.middleRows(start, n).transpose();
        const Eigen::MatrixXf h1 = ((w.w1 * x).colwise() + w.b1).cwiseMax(0.0f);
        const Eigen::MatrixXf h2 = ((w.w2 * h1).colwise() + w.b2).cwiseMax(0.0f);
        out.middleRows(start, n) = ((w.w3 * h2).colwise() + w.b3).transpose();
      }
      return out;
    }
  }
  return {};
}

void TrainConfig::Validate() const {
  if (batch_size == 0) throw DomainError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw DomainError("learning_rate must be positive");
  if (max_epochs == 0) throw DomainError("max_epochs must be positive");
  if (patience == 0) throw DomainError("patience must be positive");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw DomainError("train_fraction must be in (0, 1]");
  }
}

double MeanCosineDistance(const Matrix& predictions, const Matrix& targets) {
  if (predictions.rows() != targets.rows() ||
      predictions.cols() != targets.cols()) {
    throw DimError("prediction and target shapes differ");
  }
  if (predictions.rows() == 0) throw EmptyDataset("no rows to score");
  double total = 0.0;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    const double np = predictions.row(i).cast<double>().norm();
    const double nx = targets.row(i).cast<double>().norm();
    if (np == 0.0 || nx == 0.0) {
      total += 1.0;
      continue;
    }
    const double c = predictions.row(i).cast<double>().dot(
                         targets.row(i).cast<double>()) /
                     (np * nx);
    total += 1.0 - std::clamp(c, -1.0, 1.0);
  }
  return total / static_cast<double>(predictions.rows());
}

ProbeModel InitialProbe(ProbeKind kind, std::size_t dim, std::uint64_t seed) {
  switch (kind) {
    case ProbeKind::kLin:
      return ProbeModel::Linear(dim, 0.5f, 0.5f);
    case ProbeKind::kAff:
      return ProbeModel::Affine(0.5f, 0.5f,
                                Eigen::VectorXf::Zero(static_cast<Eigen::Index>(dim)));
    case ProbeKind::kMlp: {
      Rng rng(DeriveSeed(seed, "probe-init"));
      const auto d = static_cast<Eigen::Index>(dim);
      const auto h1 = static_cast<Eigen::Index>(kMlpHidden1);
      const auto h2 = static_cast<Eigen::Index>(kMlpHidden2);
      auto uniform = [&](Eigen::Index rows, Eigen::Index cols,
                         Eigen::Index fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXf m(rows, cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) {
          m.data()[i] = static_cast<float>(rng.Uniform(-bound, bound));
        }
        return m;
      };
      MlpWeights w;
      w.w1 = uniform(h1, 2 * d, 2 * d);
      w.b1 = uniform(h1, 1, 2 * d);
      w.w2 = uniform(h2, h1, h1);
      w.b2 = uniform(h2, 1, h1);
      w.w3 = uniform(d, h2, h2);
      w.b3 = uniform(d, 1, h2);
      return ProbeModel::Mlp(std::move(w));
    }
    default:
      throw NotTrainable(std::string(ProbeKindName(kind)) +
                         " has no trainable parameters");
  }
}

TrainResult TrainProbeDetailed(ProbeKind kind, const TripleMatrix& train,
                               const TripleMatrix& dev,
                               const TrainConfig& config) {
  if (!IsTrainable(kind)) {
    throw NotTrainable(std::string(ProbeKindName(kind)) +
                       " has no trainable parameters");
  }
  config.Validate();
  if (train.rows() == 0) throw EmptyDataset("empty training set");
  if (dev.rows() != 0 && dev.dim() != train.dim()) {
    throw DimError("train and dev dimensions differ");
  }

  TrainResult result;
  ProbeModel probe = InitialProbe(kind, train.dim(), config.seed);
  Eigen::VectorXf theta = Flatten(probe);
  Adam adam(theta.size(), config.learning_rate);
  Rng order_rng(DeriveSeed(config.seed, "probe-shuffle"));

  auto dev_loss = [&](const ProbeModel& p) {
    return MeanCosineDistance(ApplyProbe(p, dev.left, dev.right), dev.parent);
  };
  const bool use_dev = dev.rows() != 0;
  double best = use_dev ? dev_loss(probe) : 0.0;
  result.probe = probe;
  std::size_t stale = 0;

  std::vector<std::size_t> order(train.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const Batch batch = Gather(
          train, std::span<const std::size_t>(order).subspan(start, end - start));
      double loss = 0.0;
      const Eigen::VectorXf grad = kind == ProbeKind::kMlp
                                       ? MlpGradient(probe, batch, loss)
                                       : LinearGradient(probe, batch, loss);
      epoch_loss += loss;
      adam.Step(theta, grad);
      Unflatten(theta, probe);
    }
    result.train_curve.push_back(epoch_loss / static_cast<double>(order.size()));

    if (!use_dev) {
      result.probe = probe;
      result.best_epoch = epoch;
      continue;
    }
    const double loss = dev_loss(probe);
    result.dev_curve.push_back(loss);
    if (std::isfinite(loss) && loss < best - kImprovementThreshold) {
      best = loss;
      result.probe = probe;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  if (kind != ProbeKind::kMlp) RescaleToTargets(result.probe, train);
  return result;
}

Eigen::VectorXf LossGradient(const ProbeModel& probe, const TripleMatrix& batch,
                             double* mean_loss) {
  if (!IsTrainable(probe.kind)) {
    throw NotTrainable(std::string(ProbeKindName(probe.kind)) +
                       " has no trainable parameters");
  }
  if (batch.rows() == 0) throw EmptyDataset("empty batch");
  Batch b{batch.parent, batch.left, batch.right};
  double loss = 0.0;
  Eigen::VectorXf grad = probe.kind == ProbeKind::kMlp
                             ? MlpGradient(probe, b, loss)
                             : LinearGradient(probe, b, loss);
  if (mean_loss) *mean_loss = loss / static_cast<double>(batch.rows());
  return grad;
}

ProbeModel TrainProbe(ProbeKind kind, const TripleMatrix& train,
                      const TripleMatrix& dev, const TrainConfig& config) {
  return TrainProbeDetailed(kind, train, dev, config).probe;
}

std::vector<FoldSplit> MakeFolds(std::size_t n, std::size_t folds,
                                 std::uint64_t seed) {
  if (folds < 2) throw DomainError("need at least 2 folds");
  if (n < 2 * folds) {
    throw TooSmall("need at least " + std::to_string(2 * folds) +
                   " rows for " + std::to_string(folds) + "-fold splits");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(DeriveSeed(seed, "folds"));
  rng.Shuffle(order);

  std::vector<FoldSplit> splits(folds);
  for (std::size_t k = 0; k < folds; ++k) {
    const std::size_t lo = k * n / folds;
    const std::size_t hi = (k + 1) * n / folds;
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    auto& s = splits[k];
    s.test.assign(order.begin() + lo, order.begin() + mid);
    s.dev.assign(order.begin() + mid, order.begin() + hi);
    s.train.assign(order.begin(), order.begin() + lo);
    s.train.insert(s.train.end(), order.begin() + hi, order.end());
  }
  return splits;
}

FoldResult TrainFold(ProbeKind kind, const TripleMatrix& triples,
                     const FoldSplit& split, std::size_t fold_index,
                     const TrainConfig& config) {
  config.Validate();
  FoldResult r;
  r.fold_index = fold_index;
  r.split = split;
  const TripleMatrix test = triples.Subset(r.split.test);
  if (IsTrainable(kind)) {
    const std::size_t used = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.train_fraction *
                                    static_cast<double>(r.split.train.size())));
    const TripleMatrix train = triples.Subset(
        std::span<const std::size_t>(r.split.train).first(used));
    const TripleMatrix dev = triples.Subset(r.split.dev);
    TrainResult trained = TrainProbeDetailed(kind, train, dev, config);
    r.probe = std::move(trained.probe);
    r.dev_curve = std::move(trained.dev_curve);
  } else {
    r.probe = ProbeModel::Arithmetic(kind, triples.dim());
  }
  r.test_mean_cosine =
      1.0 - MeanCosineDistance(ApplyProbe(r.probe, test.left, test.right),
                               test.parent);
  return r;
}

std::vector<FoldResult> CrossValidate(ProbeKind kind,
                                      const TripleMatrix& triples,
                                      const TrainConfig& config,
                                      std::size_t folds) {
  config.Validate();
  const auto splits = MakeFolds(triples.rows(), folds, config.seed);
  std::vector<FoldResult> results;
  results.reserve(splits.size());
  for (std::size_t k = 0; k < splits.size(); ++k) {
    results.push_back(TrainFold(kind, triples, splits[k], k, config));
  }
  return results;
}

Matrix HeldOutPredictions(const std::vector<FoldResult>& folds,
                          const TripleMatrix& triples) {
  Matrix out = Matrix::Zero(triples.parent.rows(), triples.parent.cols());
  for (const auto& f : folds) {
    for (const auto* rows : {&f.split.test, &f.split.dev}) {
      const TripleMatrix held = triples.Subset(*rows);
      const Matrix pred = ApplyProbe(f.probe, held.left, held.right);
      for (std::size_t i = 0; i < rows->size(); ++i) {
        out.row(static_cast<Eigen::Index>((*rows)[i])) =
            pred.row(static_cast<Eigen::Index>(i));
      }
    }
  }
  return out;
}

void WriteProbe(const ProbeCheckpoint& checkpoint,
                const std::filesystem::path& path) {
  const ProbeModel& p = checkpoint.probe;
  const TrainConfig& c = checkpoint.config;
  p.Validate();
  std::string out(kCheckpointMagic, 4);
  bytes::PutString(out, ProbeKindName(p.kind));
  bytes::PutU32(out, static_cast<std::uint32_t>(p.dim));
  bytes::PutU64(out, c.seed);
  bytes::PutU32(out, static_cast<std::uint32_t>(c.batch_size));
  bytes::PutDouble(out, c.learning_rate);
  bytes::PutU32(out, static_cast<std::uint32_t>(c.max_epochs));
  bytes::PutU32(out, static_cast<std::uint32_t>(c.patience));
  bytes::PutDouble(out, c.train_fraction);
  switch (p.kind) {
    case ProbeKind::kLin:
    case ProbeKind::kAff: {
      Eigen::MatrixXf alphas(1, 2);
      alphas << p.alpha1, p.alpha2;
      bytes::PutU32(out, p.kind == ProbeKind::kAff ? 2 : 1);
      WriteBlob(out, "alpha", alphas);
      if (p.kind == ProbeKind::kAff) WriteBlob(out, "beta", p.beta);
      break;
    }
    case ProbeKind::kMlp: {
      const auto& w = *p.mlp;
      bytes::PutU32(out, 6);
      WriteBlob(out, "w1", w.w1);
      WriteBlob(out, "b1", w.b1);
      WriteBlob(out, "w2", w.w2);
      WriteBlob(out, "b2", w.b2);
      WriteBlob(out, "w3", w.w3);
      WriteBlob(out, "b3", w.b3);
      break;
    }
    default:
      bytes::PutU32(out, 0);
  }
  std::ofstream file = OpenForWrite(path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error("write failed: " + path.string());
}

ProbeCheckpoint ReadProbe(const std::filesystem::path& path) {
  std::ifstream file = OpenForRead(path, true);
  std::stringstream buffer;
  buffer << file.rdbuf();
  const std::string data = buffer.str();
  if (data.size() < 4 || data.compare(0, 4, kCheckpointMagic, 4) != 0) {
    throw FormatError("not a probe checkpoint: " + path.string());
  }
  bytes::Reader in(std::string_view(data).substr(4));
  ProbeCheckpoint cp;
  ProbeModel& p = cp.probe;
  p.kind = ParseProbeKind(in.String("kind"));
  p.dim = in.U32("dim");
  cp.config.seed = in.U64("seed");
  cp.config.batch_size = in.U32("batch size");
  cp.config.learning_rate = in.Double("learning rate");
  cp.config.max_epochs = in.U32("max epochs");
  cp.config.patience = in.U32("patience");
  cp.config.train_fraction = in.Double("train fraction");
  const std::uint32_t blobs = in.U32("blob count");
  switch (p.kind) {
    case ProbeKind::kLin:
    case ProbeKind::kAff: {
      if (blobs != (p.kind == ProbeKind::kAff ? 2u : 1u)) {
        throw FormatError("checkpoint: wrong blob count");
      }
      const Eigen::MatrixXf alphas = ReadBlob(in, "alpha");
      if (alphas.size() != 2) throw FormatError("checkpoint: bad alpha blob");
      p.alpha1 = alphas(0);
      p.alpha2 = alphas(1);
      if (p.kind == ProbeKind::kAff) p.beta = ReadBlob(in, "beta");
      break;
    }
    case ProbeKind::kMlp: {
      if (blobs != 6) throw FormatError("checkpoint: wrong blob count");
      MlpWeights w;
      w.w1 = ReadBlob(in, "w1");
      w.b1 = ReadBlob(in, "b1");
      w.w2 = ReadBlob(in, "w2");
      w.b2 = ReadBlob(in, "b2");
      w.w3 = ReadBlob(in, "w3");
      w.b3 = ReadBlob(in, "b3");
      p.mlp = std::move(w);
      break;
    }
    default:
      if (blobs != 0) throw FormatError("checkpoint: arithmetic probe with blobs");
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes");
  p.Validate();
  return cp;
}

}  // namespace compprobe
