#include "biofuse/losses.hpp"

#include <cmath>

namespace biofuse {

CenterBank::CenterBank(int num_classes, int feat_dim, double alpha)
    : centers_(Matrix::Zero(num_classes, feat_dim)), alpha_(alpha) {
  if (num_classes < 1 || feat_dim < 1) {
    throw DimensionError("CenterBank: need at least one class and one feature");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("CenterBank: alpha must lie in (0,1], got " +
                      std::to_string(alpha));
  }
}

double softmax_cross_entropy(const Vector& logits, int label) {
  const int n = static_cast<int>(logits.size());
  if (n < 2) throw DimensionError("softmax_cross_entropy: need at least 2 classes");
  if (label < 0 || label >= n) {
    throw ConfigError("softmax_cross_entropy: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(n) + ")");
  }
  const double m = logits.maxCoeff();
  double sum = 0.0;
  for (int j = 0; j < n; ++j) sum += std::exp(logits[j] - m);
  return std::log(sum) - (logits[label] - m);
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j) {
      probs(i, j) = std::exp(logits(i, j) - m);
      sum += probs(i, j);
    }
    probs.row(i) /= sum;
  }
  return probs;
}

namespace {

void check_batch(const Matrix& features, const std::vector<int>& labels,
                 const CenterBank& bank) {
  if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw DimensionError("batch size mismatch between features and labels");
  }
  if (features.rows() < 1) throw DimensionError("empty batch");
  if (features.cols() != bank.feat_dim()) {
    throw DimensionError("feature dim " + std::to_string(features.cols()) +
                         " does not match center bank dim " +
                         std::to_string(bank.feat_dim()));
  }
  for (int y : labels) {
    if (y < 0 || y >= bank.num_classes()) {
      throw ConfigError("label " + std::to_string(y) + " outside bank range");
    }
  }
}

}  // namespace

double center_term(const Matrix& features, const std::vector<int>& labels,
                   const CenterBank& bank, double lambda) {
  check_batch(features, labels, bank);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    sum += (features.row(i) - bank.centers().row(labels[i])).squaredNorm();
  }
  return 0.5 * lambda * sum;
}

void update_centers(CenterBank& bank, const Matrix& features,
                    const std::vector<int>& labels) {
  check_batch(features, labels, bank);
  Matrix residual = Matrix::Zero(bank.num_classes(), bank.feat_dim());
  std::vector<int> count(bank.num_classes(), 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    residual.row(labels[i]) += features.row(i) - bank.centers().row(labels[i]);
    count[labels[i]]++;
  }
  for (int j = 0; j < bank.num_classes(); ++j) {
    if (count[j] == 0) continue;  // absent classes stay bit-identical
    bank.centers().row(j) += bank.alpha() * residual.row(j) / (1.0 + count[j]);
  }
}

LossBreakdown task_loss(const Matrix& logits, const Matrix& features,
                        const std::vector<int>& labels, const CenterBank& bank,
                        double lambda) {
  if (logits.rows() != features.rows()) {
    throw DimensionError("task_loss: logits/features batch size mismatch");
  }
  double ce = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    ce += softmax_cross_entropy(logits.row(i).transpose(), labels[i]);
  }
  LossBreakdown out;
  out.lambda = lambda;
  out.softmax_term = ce / static_cast<double>(logits.rows());
  out.center_term = center_term(features, labels, bank, lambda);
  out.total = out.softmax_term + out.center_term;
  return out;
}

TaskLossGradients task_loss_gradients(const Matrix& logits,
                                      const Matrix& features,
                                      const std::vector<int>& labels,
                                      const CenterBank& bank, double lambda) {
  check_batch(features, labels, bank);
  if (logits.rows() != features.rows()) {
    throw DimensionError("task_loss_gradients: batch size mismatch");
  }
  const double inv_m = 1.0 / static_cast<double>(logits.rows());
  TaskLossGradients g;
  g.d_logits = softmax_rows(logits);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    g.d_logits(i, labels[i]) -= 1.0;
  }
  g.d_logits *= inv_m;
  g.d_features.resizeLike(features);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    g.d_features.row(i) =
        lambda * (features.row(i) - bank.centers().row(labels[i]));
  }
  return g;
}

double multitask_loss(double age_total, double gender_total, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("multitask beta must lie in [0,1], got " +
                      std::to_string(beta));
  }
  if (beta == 1.0) return age_total;
  if (beta == 0.0) return gender_total;
  return beta * age_total + (1.0 - beta) * gender_total;
}

}  // namespace biofuse
