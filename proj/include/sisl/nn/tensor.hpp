#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sisl::nn {

/// Dense N x C x H x W activation block, contiguous in that order.
template <typename T>
struct Tensor {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
        : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

    std::size_t size() const { return data.size(); }
    std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
    bool empty() const { return data.empty(); }
    T* sample(int i) { return data.data() + i * sample_size(); }
    const T* sample(int i) const { return data.data() + i * sample_size(); }

    T& at(int in, int ic, int y, int x) {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + y) * w + x];
    }
    T at(int in, int ic, int y, int x) const {
        return data[((static_cast<std::size_t>(in) * c + ic) * h + y) * w + x];
    }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
};

struct Shape3 {
    int c = 0;
    int h = 0;
    int w = 0;
    bool operator==(const Shape3&) const = default;
};

std::string shape_string(const Shape3& s);

}  // namespace sisl::nn
