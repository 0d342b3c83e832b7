#include "scanet/tensor.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace scanet {

std::string to_string(const Shape4& s) {
    return "(" + std::to_string(s.n) + ", " + std::to_string(s.c) + ", " + std::to_string(s.h) +
           ", " + std::to_string(s.w) + ")";
}

Tensor::Tensor(Shape4 shape, bool requires_grad) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
        throw std::invalid_argument("tensor shape must be nonnegative, got " + to_string(shape));
    }
    impl_ = std::make_shared<Impl>();
    impl_->shape = shape;
    impl_->data.assign(static_cast<size_t>(shape.numel()), 0.0f);
    impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape4 shape, bool requires_grad) { return Tensor(shape, requires_grad); }

Tensor Tensor::full(Shape4 shape, float value, bool requires_grad) {
    Tensor t(shape, requires_grad);
    std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
    return t;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
    return full({1, 1, 1, 1}, value, requires_grad);
}

Tensor Tensor::from_data(Shape4 shape, std::vector<float> data, bool requires_grad) {
    Tensor t;
    if (static_cast<long long>(data.size()) != shape.numel()) {
        throw std::invalid_argument("data length " + std::to_string(data.size()) +
                                    " does not match shape " + to_string(shape));
    }
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = shape;
    t.impl_->data = std::move(data);
    t.impl_->requires_grad = requires_grad;
    return t;
}

float Tensor::item() const {
    if (size() != 1) {
        throw std::invalid_argument("item() requires a scalar tensor, got shape " +
                                    to_string(shape()));
    }
    return impl_->data[0];
}

void Tensor::set_requires_grad(bool v) { impl_->requires_grad = v; }

float* Tensor::grad() {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), 0.0f);
    return impl_->grad.data();
}

const float* Tensor::grad() const {
    return impl_->grad.empty() ? nullptr : impl_->grad.data();
}

std::span<const float> Tensor::grad_values() const { return impl_->grad; }

void Tensor::zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0f);
}

Tensor Tensor::clone() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = impl_->shape;
    t.impl_->data = impl_->data;
    t.impl_->requires_grad = impl_->requires_grad;
    return t;
}

bool Tensor::all_finite() const {
    for (float v : impl_->data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor slice_channels(const Tensor& t, int c0, int c1) {
    if (c0 < 0 || c1 < c0 || c1 > t.c()) {
        throw std::invalid_argument("channel slice [" + std::to_string(c0) + ", " +
                                    std::to_string(c1) + ") out of range for " +
                                    to_string(t.shape()));
    }
    Tensor out({t.n(), c1 - c0, t.h(), t.w()});
    const long long plane = static_cast<long long>(t.h()) * t.w();
    for (int in = 0; in < t.n(); ++in) {
        for (int ic = c0; ic < c1; ++ic) {
            std::memcpy(out.data() + (static_cast<long long>(in) * out.c() + (ic - c0)) * plane,
                        t.data() + (static_cast<long long>(in) * t.c() + ic) * plane,
                        sizeof(float) * static_cast<size_t>(plane));
        }
    }
    return out;
}

Tensor flip_horizontal(const Tensor& t) {
    Tensor out(t.shape());
    for (int in = 0; in < t.n(); ++in)
        for (int ic = 0; ic < t.c(); ++ic)
            for (int y = 0; y < t.h(); ++y)
                for (int x = 0; x < t.w(); ++x)
                    out.at(in, ic, y, x) = t.at(in, ic, y, t.w() - 1 - x);
    return out;
}

Tensor flip_vertical(const Tensor& t) {
    Tensor out(t.shape());
    for (int in = 0; in < t.n(); ++in)
        for (int ic = 0; ic < t.c(); ++ic)
            for (int y = 0; y < t.h(); ++y)
                for (int x = 0; x < t.w(); ++x)
                    out.at(in, ic, y, x) = t.at(in, ic, t.h() - 1 - y, x);
    return out;
}

}  // namespace scanet
