#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <vector>

#include "biofuse/common.hpp"

namespace biofuse::nn {

using Matrix = Eigen::MatrixXd;

struct TensorShape {
  int h = 0;
  int w = 0;
  int c = 0;
  int flat() const { return h * w * c; }
};

// Named view of one parameter tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Matrix* value;
  Matrix* grad;
};

// Activations travel as N x D matrices; spatial tensors are flattened rows in
// HWC order with the shape carried by the layers.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  virtual Matrix forward(const Matrix& x, bool training) = 0;
  // Consumes the gradient w.r.t. this layer's output, accumulates parameter
  // gradients, returns the gradient w.r.t. the input. Requires a prior
  // forward(training=true).
  virtual Matrix backward(const Matrix& gy) = 0;
  virtual void collect_params(const std::string& prefix,
                              std::vector<ParamRef>& out) {}
  virtual void set_rng(Rng* rng) {}

  TensorShape in_shape;
  TensorShape out_shape;

 private:
  std::string name_;
};

enum class Init { he, zero };

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, TensorShape in, int out_channels, int ksize,
         int stride, int pad, Rng& init_rng, Init init = Init::he);

  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;

  Matrix weight;  // (k*k*c_in) x c_out, rows ordered (ky, kx, c_in)
  Matrix bias;    // 1 x c_out
  Matrix dweight;
  Matrix dbias;

  int ksize() const { return k_; }
  int stride() const { return stride_; }
  int pad() const { return pad_; }

 private:
  Matrix im2col(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  void col2im(const Matrix& dcols, Eigen::Ref<Eigen::RowVectorXd> dx) const;

  int k_;
  int stride_;
  int pad_;
  std::vector<Matrix> cols_cache_;
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in_dim, int out_dim, Rng& init_rng,
        Init init = Init::he);

  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;

  Matrix weight;  // in_dim x out_dim
  Matrix bias;    // 1 x out_dim
  Matrix dweight;
  Matrix dbias;

 private:
  Matrix x_cache_;
};

class ReLU : public Layer {
 public:
  ReLU(std::string name, TensorShape in);
  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;

 private:
  Matrix mask_;
};

// 2x2 stride-2 max pooling; degenerates to identity once a spatial dimension
// is below 2 so tiny desk-scale inputs can still traverse deep stacks.
class MaxPool2d : public Layer {
 public:
  MaxPool2d(std::string name, TensorShape in);
  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
  bool passthrough() const { return passthrough_; }

 private:
  bool passthrough_;
  std::vector<std::vector<int>> argmax_;  // per sample, per output element
};

class GlobalAvgPool : public Layer {
 public:
  GlobalAvgPool(std::string name, TensorShape in);
  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
};

// Inverted dropout: scales surviving units by 1/(1-rate) during training,
// identity in evaluation mode.
class Dropout : public Layer {
 public:
  Dropout(std::string name, TensorShape in, double rate);
  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
  void set_rng(Rng* rng) override { rng_ = rng; }

 private:
  double rate_;
  Rng* rng_ = nullptr;
  Matrix mask_;
};

// conv3x3(stride) -> relu -> conv3x3 plus an identity or 1x1-projection
// shortcut, relu after the sum.
class ResidualBlock : public Layer {
 public:
  ResidualBlock(std::string name, TensorShape in, int out_channels, int stride,
                Rng& init_rng);
  Matrix forward(const Matrix& x, bool training) override;
  Matrix backward(const Matrix& gy) override;
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) override;

 private:
  std::unique_ptr<Conv2d> conv1_;
  std::unique_ptr<ReLU> relu1_;
  std::unique_ptr<Conv2d> conv2_;
  std::unique_ptr<Conv2d> proj_;  // null -> identity shortcut
  Matrix sum_mask_;               // relu mask on (main + shortcut)
};

class Sequential {
 public:
  Sequential() = default;
  Sequential(Sequential&&) = default;
  Sequential& operator=(Sequential&&) = default;

  void add(std::unique_ptr<Layer> layer);
  Matrix forward(const Matrix& x, bool training);
  Matrix backward(const Matrix& gy);
  void collect_params(const std::string& prefix,
                      std::vector<ParamRef>& out) const;
  void set_rng(Rng* rng);

  std::size_t size() const { return layers_.size(); }
  bool empty() const { return layers_.empty(); }
  Layer& layer(std::size_t i) { return *layers_[i]; }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }
  Layer* find(const std::string& name);

  TensorShape out_shape() const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace biofuse::nn
