#pragma once

#include <Eigen/Core>

#include <vector>

#include "biofuse/common.hpp"

namespace biofuse {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-class feature centers for the center loss, one bank per task.
// alpha is the center learning rate used by update_centers.
class CenterBank {
 public:
  CenterBank() = default;
  CenterBank(int num_classes, int feat_dim, double alpha = 0.5);

  int num_classes() const { return static_cast<int>(centers_.rows()); }
  int feat_dim() const { return static_cast<int>(centers_.cols()); }
  double alpha() const { return alpha_; }

  const Matrix& centers() const { return centers_; }
  Matrix& centers() { return centers_; }

 private:
  Matrix centers_;  // num_classes x feat_dim
  double alpha_ = 0.5;
};

// Softmax and center summands of a task loss. total = softmax_term +
// center_term always holds.
struct LossBreakdown {
  double softmax_term = 0.0;
  double center_term = 0.0;
  double total = 0.0;
  double lambda = 0.1;
};

// Numerically stable -log softmax probability of the true class.
double softmax_cross_entropy(const Vector& logits, int label);

// Row-wise softmax of a batch of logits.
Matrix softmax_rows(const Matrix& logits);

// (lambda/2) * sum_i ||x_i - c_{y_i}||^2 over the batch.
double center_term(const Matrix& features, const std::vector<int>& labels,
                   const CenterBank& bank, double lambda);

// Moves each class center toward the mean of that class's batch features:
// c_j += alpha * sum_{i: y_i=j} (x_i - c_j) / (1 + count_j). Classes absent
// from the batch stay bit-identical.
void update_centers(CenterBank& bank, const Matrix& features,
                    const std::vector<int>& labels);

// Batch-mean cross entropy plus the lambda-scaled center term.
LossBreakdown task_loss(const Matrix& logits, const Matrix& features,
                        const std::vector<int>& labels, const CenterBank& bank,
                        double lambda);

struct TaskLossGradients {
  Matrix d_logits;    // same shape as logits
  Matrix d_features;  // same shape as features
};

// Analytic gradients of task_loss with respect to logits and features
// (centers held fixed, as in the alternating center update scheme).
TaskLossGradients task_loss_gradients(const Matrix& logits,
                                      const Matrix& features,
                                      const std::vector<int>& labels,
                                      const CenterBank& bank, double lambda);

// beta * age_total + (1 - beta) * gender_total. beta must lie in [0,1].
double multitask_loss(double age_total, double gender_total, double beta);

}  // namespace biofuse
