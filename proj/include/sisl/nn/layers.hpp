#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sisl/nn/tensor.hpp"

namespace sisl::nn {

/// A named parameter array with its gradient. Non-trainable entries (batch-norm
/// running statistics) are serialized but never touched by the optimizer.
template <typename T>
struct Parameter {
    std::string name;
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool trainable = true;

    Parameter(std::string name_, std::vector<int> shape_, bool trainable_ = true);
    std::size_t size() const { return value.size(); }
};

/// Layer interface with explicit reverse-mode differentiation. `forward` in
/// training mode caches what `backward` needs; `backward` accumulates parameter
/// gradients and returns the gradient with respect to the input.
template <typename T>
class Module {
public:
    virtual ~Module() = default;
    virtual Tensor<T> forward(const Tensor<T>& x, bool training) = 0;
    virtual Tensor<T> backward(const Tensor<T>& grad_out) = 0;
    virtual Shape3 output_shape(const Shape3& in) const = 0;
    virtual void collect(std::vector<Parameter<T>*>& out) { (void)out; }
    virtual void initialize(std::mt19937_64& rng) { (void)rng; }
};

template <typename T>
using ModulePtr = std::unique_ptr<Module<T>>;

/// 2-D convolution without bias (every convolution here feeds a batch norm).
template <typename T>
class Conv2d final : public Module<T> {
public:
    Conv2d(const std::string& name, int in_channels, int out_channels, int kernel, int stride, int padding);
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;
    void collect(std::vector<Parameter<T>*>& out) override { out.push_back(&weight_); }
    void initialize(std::mt19937_64& rng) override;

private:
    void im2col(const T* x, int h, int w, int ho, int wo, T* col) const;
    void col2im(const T* col, int h, int w, int ho, int wo, T* x) const;

    int in_, out_, k_, stride_, pad_;
    Parameter<T> weight_;  // out x in x k x k
    Tensor<T> input_;
    std::vector<T> col_;
};

template <typename T>
class BatchNorm2d final : public Module<T> {
public:
    BatchNorm2d(const std::string& name, int channels, T momentum = T(0.1), T eps = T(1e-5));
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override { return in; }
    void collect(std::vector<Parameter<T>*>& out) override;
    void initialize(std::mt19937_64& rng) override;

private:
    int channels_;
    T momentum_, eps_;
    Parameter<T> gamma_, beta_, running_mean_, running_var_;
    Tensor<T> normalized_;
    std::vector<T> inv_std_;
};

template <typename T>
class ReLU final : public Module<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override { return in; }

private:
    Tensor<T> output_;
};

template <typename T>
class MaxPool2d final : public Module<T> {
public:
    MaxPool2d(int kernel, int stride, int padding) : k_(kernel), stride_(stride), pad_(padding) {}
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;

private:
    int k_, stride_, pad_;
    Shape3 in_shape_;
    std::vector<std::int32_t> argmax_;
};

/// N x C x H x W -> N x C x 1 x 1.
template <typename T>
class GlobalAvgPool final : public Module<T> {
public:
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override { return {in.c, 1, 1}; }

private:
    Shape3 in_shape_;
};

/// Affine map on N x F x 1 x 1 inputs.
template <typename T>
class Linear final : public Module<T> {
public:
    Linear(const std::string& name, int in_features, int out_features);
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;
    void collect(std::vector<Parameter<T>*>& out) override;
    void initialize(std::mt19937_64& rng) override;

private:
    int in_, out_;
    Parameter<T> weight_;  // out x in
    Parameter<T> bias_;
    Tensor<T> input_;
};

template <typename T>
class Sequential final : public Module<T> {
public:
    void add(ModulePtr<T> m) { layers_.push_back(std::move(m)); }
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;
    void collect(std::vector<Parameter<T>*>& out) override;
    void initialize(std::mt19937_64& rng) override;
    std::size_t size() const { return layers_.size(); }

private:
    std::vector<ModulePtr<T>> layers_;
};

/// Two 3x3 convolutions with an identity or projected shortcut.
template <typename T>
class BasicBlock final : public Module<T> {
public:
    BasicBlock(const std::string& name, int in_channels, int out_channels, int stride);
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;
    void collect(std::vector<Parameter<T>*>& out) override;
    void initialize(std::mt19937_64& rng) override;

private:
    Sequential<T> main_;
    std::unique_ptr<Sequential<T>> shortcut_;
    ReLU<T> out_relu_;
};

/// 1x1 reduce, 3x3, 1x1 expand (x4) with shortcut.
template <typename T>
class Bottleneck final : public Module<T> {
public:
    static constexpr int kExpansion = 4;
    Bottleneck(const std::string& name, int in_channels, int width, int stride);
    Tensor<T> forward(const Tensor<T>& x, bool training) override;
    Tensor<T> backward(const Tensor<T>& grad_out) override;
    Shape3 output_shape(const Shape3& in) const override;
    void collect(std::vector<Parameter<T>*>& out) override;
    void initialize(std::mt19937_64& rng) override;

private:
    Sequential<T> main_;
    std::unique_ptr<Sequential<T>> shortcut_;
    ReLU<T> out_relu_;
};

}  // namespace sisl::nn
