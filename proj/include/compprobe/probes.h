#ifndef COMPPROBE_PROBES_H_
#define COMPPROBE_PROBES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "compprobe/embedding_store.h"

namespace compprobe {

// Composition functions predicting a parent vector from its two children.
//   ADD  a + b          W1  a            W2  b
//   LIN  α1·a + α2·b    AFF α1·a + α2·b + β
//   MLP  W3·relu(W2·relu(W1·[a;b] + b1) + b2) + b3
enum class ProbeKind { kAdd, kW1, kW2, kLin, kAff, kMlp };

inline constexpr ProbeKind kAllProbeKinds[] = {
    ProbeKind::kAdd, ProbeKind::kW1,  ProbeKind::kW2,
    ProbeKind::kLin, ProbeKind::kAff, ProbeKind::kMlp};

std::string_view ProbeKindName(ProbeKind kind);
ProbeKind ParseProbeKind(std::string_view name);  // FormatError if unknown
bool IsTrainable(ProbeKind kind);

inline constexpr std::size_t kMlpHidden1 = 300;
inline constexpr std::size_t kMlpHidden2 = 768;

struct MlpWeights {
  Eigen::MatrixXf w1;  // h1 x 2d
  Eigen::VectorXf b1;
  Eigen::MatrixXf w2;  // h2 x h1
  Eigen::VectorXf b2;
  Eigen::MatrixXf w3;  // d x h2
  Eigen::VectorXf b3;

  friend bool operator==(const MlpWeights&, const MlpWeights&) = default;
};

struct ProbeModel {
  ProbeKind kind = ProbeKind::kAdd;
  std::size_t dim = 0;
  float alpha1 = 0.0f;
  float alpha2 = 0.0f;
  Eigen::VectorXf beta;  // AFF only
  std::optional<MlpWeights> mlp;

  static ProbeModel Arithmetic(ProbeKind kind, std::size_t dim);
  static ProbeModel Linear(std::size_t dim, float alpha1, float alpha2);
  static ProbeModel Affine(float alpha1, float alpha2, Eigen::VectorXf beta);
  static ProbeModel Mlp(MlpWeights weights);

  // Throws DimError / FormatError if parameters do not match the kind.
  void Validate() const;

  friend bool operator==(const ProbeModel&, const ProbeModel&) = default;
};

// Throws DimError if a or b does not have the probe dimension.
Vector ApplyProbeToPair(const ProbeModel& probe, const Eigen::Ref<const Vector>& a,
                        const Eigen::Ref<const Vector>& b);

// Row-wise application over aligned child matrices.
Matrix ApplyProbe(const ProbeModel& probe, const Matrix& left,
                  const Matrix& right);

struct TrainConfig {
  std::size_t batch_size = 512;
  double learning_rate = 0.512;
  std::size_t max_epochs = 20;
  std::size_t patience = 2;
  std::uint64_t seed = 0;
  double train_fraction = 1.0;

  void Validate() const;  // DomainError on out-of-range values
};

// Mean cosine distance between predictions and targets; a row with a zero
// vector on either side counts as distance 1.
double MeanCosineDistance(const Matrix& predictions, const Matrix& targets);

struct TrainResult {
  ProbeModel probe;
  std::vector<double> train_curve;  // mean train loss per epoch
  std::vector<double> dev_curve;    // dev loss per epoch
  std::size_t best_epoch = 0;       // 0 means the initial parameters
};

// Mini-batch Adam on mean cosine distance with early stopping on the dev
// set. The returned probe is the snapshot with the lowest dev loss. LIN and
// AFF snapshots are then rescaled by the positive factor minimizing squared
// error to the training targets, which leaves the cosine loss unchanged.
// Throws NotTrainable for arithmetic kinds and EmptyDataset if train is empty.
TrainResult TrainProbeDetailed(ProbeKind kind, const TripleMatrix& train,
                               const TripleMatrix& dev,
                               const TrainConfig& config);

ProbeModel TrainProbe(ProbeKind kind, const TripleMatrix& train,
                      const TripleMatrix& dev, const TrainConfig& config);

// Gradient of the mean cosine distance over `batch` with respect to the
// parameters: (α1, α2) for LIN, (α1, α2, β) for AFF, and for MLP the blocks
// w1, b1, w2, b2, w3, b3, each in column-major order.
Eigen::VectorXf LossGradient(const ProbeModel& probe, const TripleMatrix& batch,
                             double* mean_loss = nullptr);

// Initial parameters used by training (deterministic in the seed).
ProbeModel InitialProbe(ProbeKind kind, std::size_t dim, std::uint64_t seed);

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

// Seeded shuffle, then `folds` contiguous held-out blocks. Each held-out
// block is halved into test (first half, rounded up) and dev.
std::vector<FoldSplit> MakeFolds(std::size_t n, std::size_t folds,
                                 std::uint64_t seed);

struct FoldResult {
  std::size_t fold_index = 0;
  ProbeModel probe;
  double test_mean_cosine = 0.0;
  std::vector<double> dev_curve;
  FoldSplit split;
};

// Trains (or, for arithmetic kinds, builds) the probe of one split and
// scores it on the split's test rows.
FoldResult TrainFold(ProbeKind kind, const TripleMatrix& triples,
                     const FoldSplit& split, std::size_t fold_index,
                     const TrainConfig& config);

// k-fold cross-validation (90/5/5 at k = 10). Arithmetic probes are
// evaluated without training. Only the first train_fraction of each
// training split is used. Throws TooSmall if n < 2k.
std::vector<FoldResult> CrossValidate(ProbeKind kind,
                                      const TripleMatrix& triples,
                                      const TrainConfig& config,
                                      std::size_t folds = 10);

// Each row predicted by the probe of the fold holding it out (test or dev),
// so no row is predicted by a probe trained on it.
Matrix HeldOutPredictions(const std::vector<FoldResult>& folds,
                          const TripleMatrix& triples);

struct ProbeCheckpoint {
  ProbeModel probe;
  TrainConfig config;
};

void WriteProbe(const ProbeCheckpoint& checkpoint,
                const std::filesystem::path& path);
ProbeCheckpoint ReadProbe(const std::filesystem::path& path);

}  // namespace compprobe

#endif  // COMPPROBE_PROBES_H_
