#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace scanet {

// Rank-4 shape, row-major n -> c -> h -> w.
struct Shape4 {
    int n = 0, c = 0, h = 0, w = 0;

    long long numel() const { return static_cast<long long>(n) * c * h * w; }
    bool operator==(const Shape4&) const = default;
};

std::string to_string(const Shape4& s);

// Rank-4 float32 tensor with an optional gradient slot.
//
// Tensor is a cheap handle: copies share storage (so a parameter held by a
// ParamStore and referenced from a recorded graph are the same object);
// clone() deep-copies. Gradients accumulate across backward passes; callers
// zero them explicitly between optimizer steps.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape4 shape, bool requires_grad = false);

    static Tensor zeros(Shape4 shape, bool requires_grad = false);
    static Tensor full(Shape4 shape, float value, bool requires_grad = false);
    static Tensor scalar(float value, bool requires_grad = false);
    static Tensor from_data(Shape4 shape, std::vector<float> data, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }

    const Shape4& shape() const { return impl_->shape; }
    int n() const { return impl_->shape.n; }
    int c() const { return impl_->shape.c; }
    int h() const { return impl_->shape.h; }
    int w() const { return impl_->shape.w; }
    size_t size() const { return impl_->data.size(); }

    float* data() { return impl_->data.data(); }
    const float* data() const { return impl_->data.data(); }
    std::span<float> values() { return impl_->data; }
    std::span<const float> values() const { return impl_->data; }

    long long index(int in, int ic, int iy, int ix) const {
        const Shape4& s = impl_->shape;
        return ((static_cast<long long>(in) * s.c + ic) * s.h + iy) * s.w + ix;
    }
    float& at(int in, int ic, int iy, int ix) { return impl_->data[index(in, ic, iy, ix)]; }
    float at(int in, int ic, int iy, int ix) const { return impl_->data[index(in, ic, iy, ix)]; }

    // Scalar access for 1x1x1x1 tensors.
    float item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool v);

    bool has_grad() const { return impl_ && !impl_->grad.empty(); }
    // Lazily allocates a zeroed gradient buffer of the same length as data.
    float* grad();
    const float* grad() const;
    std::span<const float> grad_values() const;
    void zero_grad();

    Tensor clone() const;          // deep copy of data, no grad, same requires_grad
    bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

    bool all_finite() const;

private:
    struct Impl {
        Shape4 shape;
        std::vector<float> data;
        std::vector<float> grad;   // empty until first use
        bool requires_grad = false;
    };
    std::shared_ptr<Impl> impl_;
};

// Non-differentiable helpers used by tests, the data pipeline and the CLI.
Tensor slice_channels(const Tensor& t, int c0, int c1);
Tensor flip_horizontal(const Tensor& t);
Tensor flip_vertical(const Tensor& t);

}  // namespace scanet
