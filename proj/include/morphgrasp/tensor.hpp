#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "morphgrasp/errors.hpp"

namespace mg::nn {

// Dense row-major tensor of 64-bit floats, rank 0..2. All kernels below use a
// fixed summation order so results are reproducible and padding with zero
// rows/columns never perturbs existing entries.
class Tensor {
  public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, double v);
    static Tensor scalar(double v) { return Tensor({}, {v}); }
    static Tensor row(std::vector<double> v);  // shape [1, n]

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int rows() const;
    int cols() const;
    std::size_t numel() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& at(int r, int c);
    double at(int r, int c) const;
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double scalar_value() const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    std::string shape_str() const;

  private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

// ---- kernels (deterministic accumulation order) ----

// C = A * B for rank-2 operands.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// X [s, d] + b (shape [d] or [1, d]) broadcast over rows.
Tensor add_rowvec(const Tensor& x, const Tensor& b);

void check_rank2(const Tensor& t, const char* who);

}  // namespace mg::nn
