#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biofuse/dataset.hpp"
#include "biofuse/losses.hpp"
#include "biofuse/nn.hpp"

namespace biofuse {

enum class BackboneFamily { vgg_like, residual_like };
enum class FusionMode { none, intensity, spatial, channel, feature };
enum class Modality { profile, ear };

std::string to_string(BackboneFamily f);
std::string to_string(FusionMode m);
std::string to_string(Modality m);
BackboneFamily backbone_family_from_string(const std::string& s);
FusionMode fusion_mode_from_string(const std::string& s);
Modality modality_from_string(const std::string& s);

struct TaskSet {
  bool age = false;
  bool gender = false;
  bool any() const { return age || gender; }
  bool both() const { return age && gender; }
};

std::string to_string(const TaskSet& t);
TaskSet tasks_from_string(const std::string& s);  // "age", "gender", "age,gender"

// Architecture recipe. width_scale multiplies convolutional channel counts;
// at scale 1 the vgg_like family is the 13-conv + 3-FC layout (the third FC
// being the classification head) and residual_like ends in global average
// pooling followed by the head only. For residual_like the realized
// embedding width is width_scale * embedding_dim, since that family has no
// FC layer to impose the dimension.
struct BackboneSpec {
  BackboneFamily family = BackboneFamily::vgg_like;
  double width_scale = 1.0;
  int input_channels = 3;
  int embedding_dim = 4096;
  double dropout_rate = 0.75;
  std::string pretrained_weights_ref;  // optional checkpoint; empty = random init

  void validate() const;
};

struct LayerPlan {
  enum class Kind { conv, pool, relu, dropout, dense, gap, resblock };
  Kind kind;
  std::string name;
  int out_channels = 0;  // conv / resblock
  int ksize = 0;
  int stride = 1;
  int out_dim = 0;  // dense
  double rate = 0.0;  // dropout
};

struct BackbonePlan {
  std::vector<LayerPlan> layers;
  // One past the last per-modality layer: feature fusion keeps [0, stream_end)
  // per stream and shares the rest.
  std::size_t stream_end = 0;
  int embedding_dim = 0;
};

// Pure layout computation; lets tests check the scale-1 architecture without
// allocating full-size parameter tensors.
BackbonePlan plan_backbone(const BackboneSpec& spec);

class Backbone {
 public:
  Backbone(const BackboneSpec& spec, int input_h, int input_w,
           std::uint64_t seed);

  // N x (h*w*c) image rows -> N x embedding_dim feature rows.
  Matrix forward(const Matrix& x, bool training);
  Matrix backward(const Matrix& d_embedding);

  int embedding_dim() const { return embedding_dim_; }
  nn::TensorShape input_shape() const { return input_shape_; }
  const BackboneSpec& spec() const { return spec_; }
  nn::Sequential& layers() { return net_; }
  const nn::Sequential& layers() const { return net_; }
  void collect_params(const std::string& prefix,
                      std::vector<nn::ParamRef>& out) const;
  void set_rng(Rng* rng) { net_.set_rng(rng); }

  // First-layer activations for a batch of image rows (used to verify the
  // channel-adaptation identity).
  Matrix first_layer_activations(const Matrix& x);

 private:
  friend void adapt_input_channels(Backbone& backbone, int new_channels);
  BackboneSpec spec_;
  nn::TensorShape input_shape_;
  nn::Sequential net_;
  int embedding_dim_ = 0;
};

// Widens the first convolution from 3 to new_channels input channels by
// tiling the RGB filters and halving all first-layer kernel weights, so a
// 6-channel input made of a duplicated image reproduces the original
// first-layer activations. Calling it on an already-adapted backbone is a
// warning no-op.
void adapt_input_channels(Backbone& backbone, int new_channels = 6);

// Batch head outputs. The trunk embedding is shared: both center banks and
// both heads consume the same feature rows.
struct HeadOutputs {
  std::optional<Matrix> age_logits;     // N x 5
  std::optional<Matrix> gender_logits;  // N x 2
  Matrix embedding;                     // N x embedding_dim
  const Matrix& age_embedding() const { return embedding; }
  const Matrix& gender_embedding() const { return embedding; }
};

struct HeadGradients {
  std::optional<Matrix> d_age_logits;
  std::optional<Matrix> d_gender_logits;
  Matrix d_embedding_extra;  // e.g. center-loss pull; empty = zero
};

// A trunk (single stream, or two streams joined by a shared tail for feature
// fusion) plus per-task linear heads. Heads start at zero so the first
// optimizer steps act like class-mean templates.
class MultitaskModel {
 public:
  MultitaskModel(const BackboneSpec& spec, int input_h, int input_w,
                 FusionMode fusion, Modality modality, TaskSet tasks,
                 std::uint64_t seed);

  HeadOutputs forward(const std::vector<Matrix>& inputs, bool training);
  void backward(const HeadGradients& grads);

  // Flattens a pair into this model's input rows (two rows for feature
  // fusion, one otherwise), applying the configured data fusion.
  std::vector<Eigen::RowVectorXd> prepare_input(const ModalPair& pair) const;

  std::vector<nn::ParamRef> params();
  void zero_grad();
  std::vector<Matrix> snapshot_params();
  void restore_params(const std::vector<Matrix>& snapshot);
  void set_rng(Rng* rng);

  int embedding_dim() const { return embedding_dim_; }
  int num_streams() const { return fusion_ == FusionMode::feature ? 2 : 1; }
  FusionMode fusion() const { return fusion_; }
  Modality modality() const { return modality_; }
  TaskSet tasks() const { return tasks_; }
  const BackboneSpec& spec() const { return spec_; }
  int input_h() const { return input_h_; }
  int input_w() const { return input_w_; }

  Backbone& stream(int i);
  nn::Dense& age_head();
  nn::Dense& gender_head();

 private:
  BackboneSpec spec_;
  int input_h_;
  int input_w_;
  FusionMode fusion_;
  Modality modality_;
  TaskSet tasks_;
  std::vector<Backbone> streams_;
  nn::Sequential shared_;  // fused tail; empty for single-stream models
  std::unique_ptr<nn::Dense> age_head_;
  std::unique_ptr<nn::Dense> gender_head_;
  int embedding_dim_ = 0;
  int stream_dim_ = 0;  // per-stream width entering the shared tail
};

}  // namespace biofuse
