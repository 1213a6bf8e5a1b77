#include "sisl/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Core>

#include "sisl/error.hpp"

namespace sisl::nn {

std::string shape_string(const Shape3& s) {
    return std::to_string(s.c) + "x" + std::to_string(s.h) + "x" + std::to_string(s.w);
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::size_t product(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
}

}  // namespace

template <typename T>
Parameter<T>::Parameter(std::string name_, std::vector<int> shape_, bool trainable_)
    : name(std::move(name_)), shape(std::move(shape_)), value(product(shape), T(0)),
      grad(product(shape), T(0)), trainable(trainable_) {}

// ---------------------------------------------------------------------------
// Conv2d

template <typename T>
Conv2d<T>::Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride,
                  int padding)
    : in_(in_channels), out_(out_channels), k_(kernel), stride_(stride), pad_(padding),
      weight_(name + ".weight", {out_channels, in_channels, kernel, kernel}) {}

template <typename T>
Shape3 Conv2d<T>::output_shape(const Shape3& in) const {
    return {out_, (in.h + 2 * pad_ - k_) / stride_ + 1, (in.w + 2 * pad_ - k_) / stride_ + 1};
}

template <typename T>
void Conv2d<T>::initialize(std::mt19937_64& rng) {
    std::normal_distribution<T> dist(T(0), static_cast<T>(std::sqrt(2.0 / (out_ * k_ * k_))));
    for (auto& v : weight_.value) v = dist(rng);
}

template <typename T>
void Conv2d<T>::im2col(const T* x, int h, int w, int ho, int wo, T* col) const {
    const int plane = ho * wo;
    for (int ci = 0; ci < in_; ++ci) {
        const T* xc = x + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k_; ++ky) {
            for (int kx = 0; kx < k_; ++kx) {
                T* dst = col + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride_ - pad_ + ky;
                    T* drow = dst + oy * wo;
                    if (iy < 0 || iy >= h) {
                        std::fill(drow, drow + wo, T(0));
                        continue;
                    }
                    const T* srow = xc + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride_ - pad_ + kx;
                        drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : T(0);
                    }
                }
            }
        }
    }
}

template <typename T>
void Conv2d<T>::col2im(const T* col, int h, int w, int ho, int wo, T* x) const {
    const int plane = ho * wo;
    for (int ci = 0; ci < in_; ++ci) {
        T* xc = x + static_cast<std::size_t>(ci) * h * w;
        for (int ky = 0; ky < k_; ++ky) {
            for (int kx = 0; kx < k_; ++kx) {
                const T* src = col + static_cast<std::size_t>((ci * k_ + ky) * k_ + kx) * plane;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride_ - pad_ + ky;
                    if (iy < 0 || iy >= h) continue;
                    const T* srow = src + oy * wo;
                    T* drow = xc + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride_ - pad_ + kx;
                        if (ix >= 0 && ix < w) drow[ix] += srow[ox];
                    }
                }
            }
        }
    }
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, bool training) {
    if (x.c != in_) {
        throw UsageError("conv " + weight_.name + ": expected " + std::to_string(in_) + " channels, got " +
                         std::to_string(x.c));
    }
    const Shape3 os = output_shape({x.c, x.h, x.w});
    if (os.h < 1 || os.w < 1) throw UsageError("conv " + weight_.name + ": input too small");
    Tensor<T> y(x.n, os.c, os.h, os.w);
    const int K = in_ * k_ * k_;
    const int P = os.h * os.w;
    const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;
    Eigen::Map<const RowMat<T>> W(weight_.value.data(), out_, K);
    if (!direct) col_.resize(static_cast<std::size_t>(K) * P);
    for (int i = 0; i < x.n; ++i) {
        const T* colp = x.sample(i);
        if (!direct) {
            im2col(x.sample(i), x.h, x.w, os.h, os.w, col_.data());
            colp = col_.data();
        }
        Eigen::Map<const RowMat<T>> col(colp, K, P);
        Eigen::Map<RowMat<T>> out(y.sample(i), out_, P);
        out.noalias() = W * col;
    }
    if (training) input_ = x;
    return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Tensor<T>& grad_out) {
    const Tensor<T>& x = input_;
    Tensor<T> dx(x.n, x.c, x.h, x.w);
    const int K = in_ * k_ * k_;
    const int P = grad_out.h * grad_out.w;
    const bool direct = k_ == 1 && stride_ == 1 && pad_ == 0;
    Eigen::Map<const RowMat<T>> W(weight_.value.data(), out_, K);
    Eigen::Map<RowMat<T>> dW(weight_.grad.data(), out_, K);
    std::vector<T> dcol(direct ? 0 : static_cast<std::size_t>(K) * P);
    if (!direct) col_.resize(static_cast<std::size_t>(K) * P);
    for (int i = 0; i < x.n; ++i) {
        Eigen::Map<const RowMat<T>> dy(grad_out.sample(i), out_, P);
        const T* colp = x.sample(i);
        if (!direct) {
            im2col(x.sample(i), x.h, x.w, grad_out.h, grad_out.w, col_.data());
            colp = col_.data();
        }
        Eigen::Map<const RowMat<T>> col(colp, K, P);
        dW.noalias() += dy * col.transpose();
        if (direct) {
            Eigen::Map<RowMat<T>> dxi(dx.sample(i), K, P);
            dxi.noalias() = W.transpose() * dy;
        } else {
            Eigen::Map<RowMat<T>> dc(dcol.data(), K, P);
            dc.noalias() = W.transpose() * dy;
            col2im(dcol.data(), x.h, x.w, grad_out.h, grad_out.w, dx.sample(i));
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm2d

template <typename T>
BatchNorm2d<T>::BatchNorm2d(const std::string& name, int channels, T momentum, T eps)
    : channels_(channels), momentum_(momentum), eps_(eps), gamma_(name + ".weight", {channels}),
      beta_(name + ".bias", {channels}), running_mean_(name + ".running_mean", {channels}, false),
      running_var_(name + ".running_var", {channels}, false) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

template <typename T>
void BatchNorm2d<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
}

template <typename T>
void BatchNorm2d<T>::initialize(std::mt19937_64&) {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
    std::fill(beta_.value.begin(), beta_.value.end(), T(0));
    std::fill(running_mean_.value.begin(), running_mean_.value.end(), T(0));
    std::fill(running_var_.value.begin(), running_var_.value.end(), T(1));
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, bool training) {
    if (x.c != channels_) throw UsageError("batch norm " + gamma_.name + ": channel mismatch");
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    const std::size_t count = plane * x.n;
    if (!training) {
        for (int ch = 0; ch < x.c; ++ch) {
            const T scale = gamma_.value[ch] / std::sqrt(running_var_.value[ch] + eps_);
            const T shift = beta_.value[ch] - running_mean_.value[ch] * scale;
            for (int i = 0; i < x.n; ++i) {
                const T* src = x.sample(i) + ch * plane;
                T* dst = y.sample(i) + ch * plane;
                for (std::size_t p = 0; p < plane; ++p) dst[p] = src[p] * scale + shift;
            }
        }
        return y;
    }
    normalized_ = Tensor<T>(x.n, x.c, x.h, x.w);
    inv_std_.assign(channels_, T(0));
    for (int ch = 0; ch < x.c; ++ch) {
        double sum = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const T* src = x.sample(i) + ch * plane;
            for (std::size_t p = 0; p < plane; ++p) sum += src[p];
        }
        const double mean = sum / static_cast<double>(count);
        double sq = 0.0;
        for (int i = 0; i < x.n; ++i) {
            const T* src = x.sample(i) + ch * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = src[p] - mean;
                sq += d * d;
            }
        }
        const double var = sq / static_cast<double>(count);
        const T inv = static_cast<T>(1.0 / std::sqrt(var + eps_));
        inv_std_[ch] = inv;
        const T g = gamma_.value[ch];
        const T b = beta_.value[ch];
        for (int i = 0; i < x.n; ++i) {
            const T* src = x.sample(i) + ch * plane;
            T* xn = normalized_.sample(i) + ch * plane;
            T* dst = y.sample(i) + ch * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                xn[p] = static_cast<T>((src[p] - mean)) * inv;
                dst[p] = g * xn[p] + b;
            }
        }
        const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
        running_mean_.value[ch] = static_cast<T>((1 - momentum_) * running_mean_.value[ch] + momentum_ * mean);
        running_var_.value[ch] = static_cast<T>((1 - momentum_) * running_var_.value[ch] + momentum_ * unbiased);
    }
    return y;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::backward(const Tensor<T>& grad_out) {
    const Tensor<T>& xn = normalized_;
    Tensor<T> dx(xn.n, xn.c, xn.h, xn.w);
    const std::size_t plane = static_cast<std::size_t>(xn.h) * xn.w;
    const double count = static_cast<double>(plane * xn.n);
    for (int ch = 0; ch < xn.c; ++ch) {
        double sum_dy = 0.0, sum_dy_xn = 0.0;
        for (int i = 0; i < xn.n; ++i) {
            const T* dy = grad_out.sample(i) + ch * plane;
            const T* xv = xn.sample(i) + ch * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                sum_dy += dy[p];
                sum_dy_xn += static_cast<double>(dy[p]) * xv[p];
            }
        }
        gamma_.grad[ch] += static_cast<T>(sum_dy_xn);
        beta_.grad[ch] += static_cast<T>(sum_dy);
        const double k = static_cast<double>(gamma_.value[ch]) * inv_std_[ch] / count;
        const double mean_dy = sum_dy;
        for (int i = 0; i < xn.n; ++i) {
            const T* dy = grad_out.sample(i) + ch * plane;
            const T* xv = xn.sample(i) + ch * plane;
            T* d = dx.sample(i) + ch * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                d[p] = static_cast<T>(k * (count * dy[p] - mean_dy - xv[p] * sum_dy_xn));
            }
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// ReLU, pooling

template <typename T>
Tensor<T> ReLU<T>::forward(const Tensor<T>& x, bool training) {
    Tensor<T> y = x;
    for (auto& v : y.data) v = v > T(0) ? v : T(0);
    if (training) output_ = y;
    return y;
}

template <typename T>
Tensor<T> ReLU<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx = grad_out;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (!(output_.data[i] > T(0))) dx.data[i] = T(0);
    }
    return dx;
}

template <typename T>
Shape3 MaxPool2d<T>::output_shape(const Shape3& in) const {
    return {in.c, (in.h + 2 * pad_ - k_) / stride_ + 1, (in.w + 2 * pad_ - k_) / stride_ + 1};
}

template <typename T>
Tensor<T> MaxPool2d<T>::forward(const Tensor<T>& x, bool training) {
    const Shape3 os = output_shape({x.c, x.h, x.w});
    Tensor<T> y(x.n, os.c, os.h, os.w);
    if (training) {
        in_shape_ = {x.c, x.h, x.w};
        argmax_.assign(y.size(), -1);
    }
    std::size_t o = 0;
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const T* src = x.sample(i) + static_cast<std::size_t>(ch) * x.h * x.w;
            for (int oy = 0; oy < os.h; ++oy) {
                for (int ox = 0; ox < os.w; ++ox, ++o) {
                    T best = -std::numeric_limits<T>::infinity();
                    int best_idx = -1;
                    for (int ky = 0; ky < k_; ++ky) {
                        const int iy = oy * stride_ - pad_ + ky;
                        if (iy < 0 || iy >= x.h) continue;
                        for (int kx = 0; kx < k_; ++kx) {
                            const int ix = ox * stride_ - pad_ + kx;
                            if (ix < 0 || ix >= x.w) continue;
                            const T v = src[iy * x.w + ix];
                            if (v > best) {
                                best = v;
                                best_idx = ch * x.h * x.w + iy * x.w + ix;
                            }
                        }
                    }
                    y.data[o] = best;
                    if (training) argmax_[o] = best_idx;
                }
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> MaxPool2d<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx(grad_out.n, in_shape_.c, in_shape_.h, in_shape_.w);
    const std::size_t per_sample = grad_out.sample_size();
    for (int i = 0; i < grad_out.n; ++i) {
        T* d = dx.sample(i);
        for (std::size_t p = 0; p < per_sample; ++p) {
            const std::size_t o = i * per_sample + p;
            if (argmax_[o] >= 0) d[argmax_[o]] += grad_out.data[o];
        }
    }
    return dx;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::forward(const Tensor<T>& x, bool training) {
    Tensor<T> y(x.n, x.c, 1, 1);
    const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
    for (int i = 0; i < x.n; ++i) {
        for (int ch = 0; ch < x.c; ++ch) {
            const T* src = x.sample(i) + ch * plane;
            double s = 0.0;
            for (std::size_t p = 0; p < plane; ++p) s += src[p];
            y.at(i, ch, 0, 0) = static_cast<T>(s / static_cast<double>(plane));
        }
    }
    if (training) in_shape_ = {x.c, x.h, x.w};
    return y;
}

template <typename T>
Tensor<T> GlobalAvgPool<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx(grad_out.n, in_shape_.c, in_shape_.h, in_shape_.w);
    const std::size_t plane = static_cast<std::size_t>(in_shape_.h) * in_shape_.w;
    const T inv = T(1) / static_cast<T>(plane);
    for (int i = 0; i < grad_out.n; ++i) {
        for (int ch = 0; ch < in_shape_.c; ++ch) {
            T* d = dx.sample(i) + ch * plane;
            std::fill(d, d + plane, grad_out.at(i, ch, 0, 0) * inv);
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Linear

template <typename T>
Linear<T>::Linear(const std::string& name, int in_features, int out_features)
    : in_(in_features), out_(out_features), weight_(name + ".weight", {out_features, in_features}),
      bias_(name + ".bias", {out_features}) {}

template <typename T>
Shape3 Linear<T>::output_shape(const Shape3& in) const {
    (void)in;
    return {out_, 1, 1};
}

template <typename T>
void Linear<T>::collect(std::vector<Parameter<T>*>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
}

template <typename T>
void Linear<T>::initialize(std::mt19937_64& rng) {
    const T bound = static_cast<T>(1.0 / std::sqrt(static_cast<double>(in_)));
    std::uniform_real_distribution<T> dist(-bound, bound);
    for (auto& v : weight_.value) v = dist(rng);
    for (auto& v : bias_.value) v = dist(rng);
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, bool training) {
    if (static_cast<int>(x.sample_size()) != in_) {
        throw UsageError("linear " + weight_.name + ": expected " + std::to_string(in_) + " features, got " +
                         std::to_string(x.sample_size()));
    }
    Tensor<T> y(x.n, out_, 1, 1);
    Eigen::Map<const RowMat<T>> X(x.data.data(), x.n, in_);
    Eigen::Map<const RowMat<T>> W(weight_.value.data(), out_, in_);
    Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> b(bias_.value.data(), out_);
    Eigen::Map<RowMat<T>> Y(y.data.data(), x.n, out_);
    Y.noalias() = X * W.transpose();
    Y.rowwise() += b;
    if (training) input_ = x;
    return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> dx(input_.n, input_.c, input_.h, input_.w);
    Eigen::Map<const RowMat<T>> X(input_.data.data(), input_.n, in_);
    Eigen::Map<const RowMat<T>> W(weight_.value.data(), out_, in_);
    Eigen::Map<const RowMat<T>> dY(grad_out.data.data(), grad_out.n, out_);
    Eigen::Map<RowMat<T>> dW(weight_.grad.data(), out_, in_);
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> db(bias_.grad.data(), out_);
    Eigen::Map<RowMat<T>> dX(dx.data.data(), input_.n, in_);
    dW.noalias() += dY.transpose() * X;
    db += dY.colwise().sum();
    dX.noalias() = dY * W;
    return dx;
}

// ---------------------------------------------------------------------------
// Containers and residual blocks

template <typename T>
Tensor<T> Sequential<T>::forward(const Tensor<T>& x, bool training) {
    Tensor<T> h = x;
    for (auto& layer : layers_) h = layer->forward(h, training);
    return h;
}

template <typename T>
Tensor<T> Sequential<T>::backward(const Tensor<T>& grad_out) {
    Tensor<T> g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

template <typename T>
Shape3 Sequential<T>::output_shape(const Shape3& in) const {
    Shape3 s = in;
    for (const auto& layer : layers_) s = layer->output_shape(s);
    return s;
}

template <typename T>
void Sequential<T>::collect(std::vector<Parameter<T>*>& out) {
    for (auto& layer : layers_) layer->collect(out);
}

template <typename T>
void Sequential<T>::initialize(std::mt19937_64& rng) {
    for (auto& layer : layers_) layer->initialize(rng);
}

namespace {

template <typename T>
std::unique_ptr<Sequential<T>> projection(const std::string& name, int in, int out, int stride) {
    auto s = std::make_unique<Sequential<T>>();
    s->add(std::make_unique<Conv2d<T>>(name + ".0", in, out, 1, stride, 0));
    s->add(std::make_unique<BatchNorm2d<T>>(name + ".1", out));
    return s;
}

template <typename T>
Tensor<T> add_shortcut(Sequential<T>& main, Sequential<T>* shortcut, ReLU<T>& relu, const Tensor<T>& x,
                       bool training) {
    Tensor<T> y = main.forward(x, training);
    if (shortcut) {
        const Tensor<T> s = shortcut->forward(x, training);
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += s.data[i];
    } else {
        for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += x.data[i];
    }
    return relu.forward(y, training);
}

template <typename T>
Tensor<T> split_shortcut(Sequential<T>& main, Sequential<T>* shortcut, ReLU<T>& relu, const Tensor<T>& grad) {
    const Tensor<T> g = relu.backward(grad);
    Tensor<T> dx = main.backward(g);
    if (shortcut) {
        const Tensor<T> ds = shortcut->backward(g);
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += ds.data[i];
    } else {
        for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
    }
    return dx;
}

}  // namespace

template <typename T>
BasicBlock<T>::BasicBlock(const std::string& name, int in_channels, int out_channels, int stride) {
    main_.add(std::make_unique<Conv2d<T>>(name + ".conv1", in_channels, out_channels, 3, stride, 1));
    main_.add(std::make_unique<BatchNorm2d<T>>(name + ".bn1", out_channels));
    main_.add(std::make_unique<ReLU<T>>());
    main_.add(std::make_unique<Conv2d<T>>(name + ".conv2", out_channels, out_channels, 3, 1, 1));
    main_.add(std::make_unique<BatchNorm2d<T>>(name + ".bn2", out_channels));
    if (stride != 1 || in_channels != out_channels) {
        shortcut_ = projection<T>(name + ".downsample", in_channels, out_channels, stride);
    }
}

template <typename T>
Tensor<T> BasicBlock<T>::forward(const Tensor<T>& x, bool training) {
    return add_shortcut(main_, shortcut_.get(), out_relu_, x, training);
}

template <typename T>
Tensor<T> BasicBlock<T>::backward(const Tensor<T>& grad_out) {
    return split_shortcut(main_, shortcut_.get(), out_relu_, grad_out);
}

template <typename T>
Shape3 BasicBlock<T>::output_shape(const Shape3& in) const {
    return main_.output_shape(in);
}

template <typename T>
void BasicBlock<T>::collect(std::vector<Parameter<T>*>& out) {
    main_.collect(out);
    if (shortcut_) shortcut_->collect(out);
}

template <typename T>
void BasicBlock<T>::initialize(std::mt19937_64& rng) {
    main_.initialize(rng);
    if (shortcut_) shortcut_->initialize(rng);
}

template <typename T>
Bottleneck<T>::Bottleneck(const std::string& name, int in_channels, int width, int stride) {
    const int out_channels = width * kExpansion;
    main_.add(std::make_unique<Conv2d<T>>(name + ".conv1", in_channels, width, 1, 1, 0));
    main_.add(std::make_unique<BatchNorm2d<T>>(name + ".bn1", width));
    main_.add(std::make_unique<ReLU<T>>());
    main_.add(std::make_unique<Conv2d<T>>(name + ".conv2", width, width, 3, stride, 1));
    main_.add(std::make_unique<BatchNorm2d<T>>(name + ".bn2", width));
    main_.add(std::make_unique<ReLU<T>>());
    main_.add(std::make_unique<Conv2d<T>>(name + ".conv3", width, out_channels, 1, 1, 0));
    main_.add(std::make_unique<BatchNorm2d<T>>(name + ".bn3", out_channels));
    if (stride != 1 || in_channels != out_channels) {
        shortcut_ = projection<T>(name + ".downsample", in_channels, out_channels, stride);
    }
}

template <typename T>
Tensor<T> Bottleneck<T>::forward(const Tensor<T>& x, bool training) {
    return add_shortcut(main_, shortcut_.get(), out_relu_, x, training);
}

template <typename T>
Tensor<T> Bottleneck<T>::backward(const Tensor<T>& grad_out) {
    return split_shortcut(main_, shortcut_.get(), out_relu_, grad_out);
}

template <typename T>
Shape3 Bottleneck<T>::output_shape(const Shape3& in) const {
    return main_.output_shape(in);
}

template <typename T>
void Bottleneck<T>::collect(std::vector<Parameter<T>*>& out) {
    main_.collect(out);
    if (shortcut_) shortcut_->collect(out);
}

template <typename T>
void Bottleneck<T>::initialize(std::mt19937_64& rng) {
    main_.initialize(rng);
    if (shortcut_) shortcut_->initialize(rng);
}

#define SISL_INSTANTIATE(T)          \
    template struct Parameter<T>;    \
    template class Conv2d<T>;        \
    template class BatchNorm2d<T>;   \
    template class ReLU<T>;          \
    template class MaxPool2d<T>;     \
    template class GlobalAvgPool<T>; \
    template class Linear<T>;        \
    template class Sequential<T>;    \
    template class BasicBlock<T>;    \
    template class Bottleneck<T>;

SISL_INSTANTIATE(float)
SISL_INSTANTIATE(double)

#undef SISL_INSTANTIATE

}  // namespace sisl::nn
