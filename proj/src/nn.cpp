#include "biofuse/nn.hpp"

#include <cmath>

namespace biofuse::nn {

namespace {

int conv_out(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

void fill_he(Matrix& m, int fan_in, Rng& rng) {
  const double stddev = std::sqrt(2.0 / fan_in);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rng.normal(0.0, stddev);
    }
  }
}

void check_cols(const Matrix& x, int expected, const std::string& who) {
  if (x.cols() != expected) {
    throw DimensionError(who + ": expected input width " +
                         std::to_string(expected) + ", got " +
                         std::to_string(x.cols()));
  }
}

}  // namespace

// ---- Conv2d ----

Conv2d::Conv2d(std::string name, TensorShape in, int out_channels, int ksize,
               int stride, int pad, Rng& init_rng, Init init)
    : Layer(std::move(name)), k_(ksize), stride_(stride), pad_(pad) {
  if (in.h <= 0 || in.w <= 0 || in.c <= 0 || out_channels <= 0) {
    throw DimensionError("Conv2d: bad shape");
  }
  in_shape = in;
  out_shape = {conv_out(in.h, k_, stride_, pad_), conv_out(in.w, k_, stride_, pad_),
               out_channels};
  if (out_shape.h <= 0 || out_shape.w <= 0) {
    throw DimensionError("Conv2d " + this->name() + ": input " +
                         std::to_string(in.h) + "x" + std::to_string(in.w) +
                         " too small for kernel");
  }
  weight.resize(k_ * k_ * in.c, out_channels);
  bias = Matrix::Zero(1, out_channels);
  if (init == Init::he) {
    fill_he(weight, k_ * k_ * in.c, init_rng);
  } else {
    weight.setZero();
  }
  dweight = Matrix::Zero(weight.rows(), weight.cols());
  dbias = Matrix::Zero(1, out_channels);
}

Matrix Conv2d::im2col(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  Matrix cols = Matrix::Zero(out_shape.h * out_shape.w, k_ * k_ * in_shape.c);
  for (int oy = 0; oy < out_shape.h; ++oy) {
    for (int ox = 0; ox < out_shape.w; ++ox) {
      const int row = oy * out_shape.w + ox;
      for (int ky = 0; ky < k_; ++ky) {
        const int sy = oy * stride_ - pad_ + ky;
        if (sy < 0 || sy >= in_shape.h) continue;
        for (int kx = 0; kx < k_; ++kx) {
          const int sx = ox * stride_ - pad_ + kx;
          if (sx < 0 || sx >= in_shape.w) continue;
          const int src = (sy * in_shape.w + sx) * in_shape.c;
          const int dst = (ky * k_ + kx) * in_shape.c;
          for (int ic = 0; ic < in_shape.c; ++ic) {
            cols(row, dst + ic) = x(src + ic);
          }
        }
      }
    }
  }
  return cols;
}

void Conv2d::col2im(const Matrix& dcols, Eigen::Ref<Eigen::RowVectorXd> dx) const {
  for (int oy = 0; oy < out_shape.h; ++oy) {
    for (int ox = 0; ox < out_shape.w; ++ox) {
      const int row = oy * out_shape.w + ox;
      for (int ky = 0; ky < k_; ++ky) {
        const int sy = oy * stride_ - pad_ + ky;
        if (sy < 0 || sy >= in_shape.h) continue;
        for (int kx = 0; kx < k_; ++kx) {
          const int sx = ox * stride_ - pad_ + kx;
          if (sx < 0 || sx >= in_shape.w) continue;
          const int src = (sy * in_shape.w + sx) * in_shape.c;
          const int col = (ky * k_ + kx) * in_shape.c;
          for (int ic = 0; ic < in_shape.c; ++ic) {
            dx(src + ic) += dcols(row, col + ic);
          }
        }
      }
    }
  }
}

Matrix Conv2d::forward(const Matrix& x, bool training) {
  check_cols(x, in_shape.flat(), "Conv2d " + name());
  const int n = static_cast<int>(x.rows());
  const int positions = out_shape.h * out_shape.w;
  Matrix y(n, out_shape.flat());
  if (training) cols_cache_.assign(n, Matrix());
  for (int i = 0; i < n; ++i) {
    Matrix cols = im2col(x.row(i));
    Matrix yi = cols * weight;  // positions x c_out
    yi.rowwise() += bias.row(0);
    for (int p = 0; p < positions; ++p) {
      for (int oc = 0; oc < out_shape.c; ++oc) {
        y(i, p * out_shape.c + oc) = yi(p, oc);
      }
    }
    if (training) cols_cache_[i] = std::move(cols);
  }
  return y;
}

Matrix Conv2d::backward(const Matrix& gy) {
  if (cols_cache_.empty()) {
    throw Error("Conv2d " + name() + ": backward without training forward");
  }
  const int n = static_cast<int>(gy.rows());
  const int positions = out_shape.h * out_shape.w;
  Matrix dx = Matrix::Zero(n, in_shape.flat());
  for (int i = 0; i < n; ++i) {
    Matrix gyi(positions, out_shape.c);
    for (int p = 0; p < positions; ++p) {
      for (int oc = 0; oc < out_shape.c; ++oc) {
        gyi(p, oc) = gy(i, p * out_shape.c + oc);
      }
    }
    dweight.noalias() += cols_cache_[i].transpose() * gyi;
    dbias.row(0) += gyi.colwise().sum();
    Matrix dcols = gyi * weight.transpose();
    col2im(dcols, dx.row(i));
  }
  return dx;
}

void Conv2d::collect_params(const std::string& prefix,
                            std::vector<ParamRef>& out) {
  out.push_back({prefix + name() + ".w", &weight, &dweight});
  out.push_back({prefix + name() + ".b", &bias, &dbias});
}

// ---- Dense ----

Dense::Dense(std::string name, int in_dim, int out_dim, Rng& init_rng, Init init)
    : Layer(std::move(name)) {
  if (in_dim <= 0 || out_dim <= 0) throw DimensionError("Dense: bad dims");
  in_shape = {1, 1, in_dim};
  out_shape = {1, 1, out_dim};
  weight.resize(in_dim, out_dim);
  bias = Matrix::Zero(1, out_dim);
  if (init == Init::he) {
    fill_he(weight, in_dim, init_rng);
  } else {
    weight.setZero();
  }
  dweight = Matrix::Zero(in_dim, out_dim);
  dbias = Matrix::Zero(1, out_dim);
}

Matrix Dense::forward(const Matrix& x, bool training) {
  check_cols(x, in_shape.flat(), "Dense " + name());
  if (training) x_cache_ = x;
  Matrix y = x * weight;
  y.rowwise() += bias.row(0);
  return y;
}

Matrix Dense::backward(const Matrix& gy) {
  if (x_cache_.rows() != gy.rows()) {
    throw Error("Dense " + name() + ": backward without training forward");
  }
  dweight.noalias() += x_cache_.transpose() * gy;
  dbias.row(0) += gy.colwise().sum();
  return gy * weight.transpose();
}

void Dense::collect_params(const std::string& prefix,
                           std::vector<ParamRef>& out) {
  out.push_back({prefix + name() + ".w", &weight, &dweight});
  out.push_back({prefix + name() + ".b", &bias, &dbias});
}

// ---- ReLU ----

ReLU::ReLU(std::string name, TensorShape in) : Layer(std::move(name)) {
  in_shape = in;
  out_shape = in;
}

Matrix ReLU::forward(const Matrix& x, bool training) {
  if (training) mask_ = (x.array() > 0.0).cast<double>();
  return x.cwiseMax(0.0);
}

Matrix ReLU::backward(const Matrix& gy) {
  return gy.cwiseProduct(mask_);
}

// ---- MaxPool2d ----

MaxPool2d::MaxPool2d(std::string name, TensorShape in) : Layer(std::move(name)) {
  in_shape = in;
  passthrough_ = (in.h < 2 || in.w < 2);
  out_shape = passthrough_ ? in : TensorShape{in.h / 2, in.w / 2, in.c};
}

Matrix MaxPool2d::forward(const Matrix& x, bool training) {
  check_cols(x, in_shape.flat(), "MaxPool2d " + name());
  if (passthrough_) {
    if (training) argmax_.assign(x.rows(), {});
    return x;
  }
  const int n = static_cast<int>(x.rows());
  Matrix y(n, out_shape.flat());
  if (training) argmax_.assign(n, std::vector<int>(out_shape.flat()));
  for (int i = 0; i < n; ++i) {
    for (int oy = 0; oy < out_shape.h; ++oy) {
      for (int ox = 0; ox < out_shape.w; ++ox) {
        for (int c = 0; c < in_shape.c; ++c) {
          int best = -1;
          double best_v = 0.0;
          for (int dy = 0; dy < 2; ++dy) {
            for (int dx = 0; dx < 2; ++dx) {
              const int idx = ((oy * 2 + dy) * in_shape.w + (ox * 2 + dx)) *
                                  in_shape.c + c;
              const double v = x(i, idx);
              if (best < 0 || v > best_v) {
                best = idx;
                best_v = v;
              }
            }
          }
          const int oidx = (oy * out_shape.w + ox) * in_shape.c + c;
          y(i, oidx) = best_v;
          if (training) argmax_[i][oidx] = best;
        }
      }
    }
  }
  return y;
}

Matrix MaxPool2d::backward(const Matrix& gy) {
  if (passthrough_) return gy;
  if (argmax_.empty()) {
    throw Error("MaxPool2d " + name() + ": backward without training forward");
  }
  Matrix dx = Matrix::Zero(gy.rows(), in_shape.flat());
  for (Eigen::Index i = 0; i < gy.rows(); ++i) {
    for (int o = 0; o < out_shape.flat(); ++o) {
      dx(i, argmax_[i][o]) += gy(i, o);
    }
  }
  return dx;
}

// ---- GlobalAvgPool ----

GlobalAvgPool::GlobalAvgPool(std::string name, TensorShape in)
    : Layer(std::move(name)) {
  in_shape = in;
  out_shape = {1, 1, in.c};
}

Matrix GlobalAvgPool::forward(const Matrix& x, bool training) {
  check_cols(x, in_shape.flat(), "GlobalAvgPool " + name());
  const int positions = in_shape.h * in_shape.w;
  Matrix y = Matrix::Zero(x.rows(), in_shape.c);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (int p = 0; p < positions; ++p) {
      for (int c = 0; c < in_shape.c; ++c) {
        y(i, c) += x(i, p * in_shape.c + c);
      }
    }
  }
  return y / static_cast<double>(positions);
}

Matrix GlobalAvgPool::backward(const Matrix& gy) {
  const int positions = in_shape.h * in_shape.w;
  Matrix dx(gy.rows(), in_shape.flat());
  const double scale = 1.0 / positions;
  for (Eigen::Index i = 0; i < gy.rows(); ++i) {
    for (int p = 0; p < positions; ++p) {
      for (int c = 0; c < in_shape.c; ++c) {
        dx(i, p * in_shape.c + c) = gy(i, c) * scale;
      }
    }
  }
  return dx;
}

// ---- Dropout ----

Dropout::Dropout(std::string name, TensorShape in, double rate)
    : Layer(std::move(name)), rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("Dropout rate must lie in [0,1), got " +
                      std::to_string(rate));
  }
  in_shape = in;
  out_shape = in;
}

Matrix Dropout::forward(const Matrix& x, bool training) {
  if (!training || rate_ == 0.0) {
    mask_.resize(0, 0);
    return x;
  }
  if (!rng_) throw Error("Dropout " + name() + ": no rng attached");
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_.resize(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      mask_(i, j) = rng_->uniform() >= rate_ ? keep_scale : 0.0;
    }
  }
  return x.cwiseProduct(mask_);
}

Matrix Dropout::backward(const Matrix& gy) {
  if (mask_.size() == 0) return gy;
  return gy.cwiseProduct(mask_);
}

// ---- ResidualBlock ----

ResidualBlock::ResidualBlock(std::string name, TensorShape in, int out_channels,
                             int stride, Rng& init_rng)
    : Layer(std::move(name)) {
  in_shape = in;
  conv1_ = std::make_unique<Conv2d>("conv1", in, out_channels, 3, stride, 1,
                                    init_rng);
  relu1_ = std::make_unique<ReLU>("relu1", conv1_->out_shape);
  conv2_ = std::make_unique<Conv2d>("conv2", conv1_->out_shape, out_channels, 3,
                                    1, 1, init_rng);
  if (stride != 1 || in.c != out_channels) {
    proj_ = std::make_unique<Conv2d>("proj", in, out_channels, 1, stride, 0,
                                     init_rng);
  }
  out_shape = conv2_->out_shape;
}

Matrix ResidualBlock::forward(const Matrix& x, bool training) {
  Matrix main = conv2_->forward(
      relu1_->forward(conv1_->forward(x, training), training), training);
  Matrix shortcut = proj_ ? proj_->forward(x, training) : x;
  Matrix sum = main + shortcut;
  if (training) sum_mask_ = (sum.array() > 0.0).cast<double>();
  return sum.cwiseMax(0.0);
}

Matrix ResidualBlock::backward(const Matrix& gy) {
  Matrix g = gy.cwiseProduct(sum_mask_);
  Matrix d_main = conv1_->backward(relu1_->backward(conv2_->backward(g)));
  Matrix d_short = proj_ ? proj_->backward(g) : g;
  return d_main + d_short;
}

void ResidualBlock::collect_params(const std::string& prefix,
                                   std::vector<ParamRef>& out) {
  const std::string base = prefix + name() + ".";
  conv1_->collect_params(base, out);
  conv2_->collect_params(base, out);
  if (proj_) proj_->collect_params(base, out);
}

// ---- Sequential ----

void Sequential::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() &&
      layers_.back()->out_shape.flat() != layer->in_shape.flat()) {
    throw DimensionError("Sequential: layer " + layer->name() +
                         " input does not match previous output");
  }
  layers_.push_back(std::move(layer));
}

Matrix Sequential::forward(const Matrix& x, bool training) {
  Matrix cur = x;
  for (auto& l : layers_) cur = l->forward(cur, training);
  return cur;
}

Matrix Sequential::backward(const Matrix& gy) {
  Matrix cur = gy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    cur = (*it)->backward(cur);
  }
  return cur;
}

void Sequential::collect_params(const std::string& prefix,
                                std::vector<ParamRef>& out) const {
  for (const auto& l : layers_) l->collect_params(prefix, out);
}

void Sequential::set_rng(Rng* rng) {
  for (auto& l : layers_) l->set_rng(rng);
}

Layer* Sequential::find(const std::string& name) {
  for (auto& l : layers_) {
    if (l->name() == name) return l.get();
  }
  return nullptr;
}

TensorShape Sequential::out_shape() const {
  if (layers_.empty()) return {};
  return layers_.back()->out_shape;
}

}  // namespace biofuse::nn
