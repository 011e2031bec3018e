#include "morphgrasp/tensor.hpp"

#include <sstream>

namespace mg::nn {

namespace {
std::size_t shape_numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw ShapeMismatch("negative tensor dimension");
        n *= static_cast<std::size_t>(d);
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
        throw ShapeMismatch("tensor data length does not match shape");
}

Tensor Tensor::full(std::vector<int> shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.data_) x = v;
    return t;
}

Tensor Tensor::row(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({1, n}, std::move(v));
}

int Tensor::rows() const {
    check_rank2(*this, "rows()");
    return shape_[0];
}

int Tensor::cols() const {
    check_rank2(*this, "cols()");
    return shape_[1];
}

double& Tensor::at(int r, int c) {
    return data_[static_cast<std::size_t>(r) * shape_[1] + c];
}

double Tensor::at(int r, int c) const {
    return data_[static_cast<std::size_t>(r) * shape_[1] + c];
}

double Tensor::scalar_value() const {
    if (numel() != 1) throw ShapeMismatch("scalar_value() on tensor with " + shape_str());
    return data_[0];
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << "]";
    return os.str();
}

void check_rank2(const Tensor& t, const char* who) {
    if (t.rank() != 2) throw ShapeMismatch(std::string(who) + ": expected rank-2 tensor, got " + t.shape_str());
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    check_rank2(a, "matmul lhs");
    check_rank2(b, "matmul rhs");
    int m = a.shape()[0], k = a.shape()[1];
    int k2 = b.shape()[0], n = b.shape()[1];
    if (k != k2)
        throw ShapeMismatch("matmul: inner dimensions " + a.shape_str() + " x " + b.shape_str());
    Tensor c({m, n});
    const double* pa = a.data();
    const double* pb = b.data();
    double* pc = c.data();
    // C[i,:] += A[i,j] * B[j,:], j ascending. Contiguous inner loop, and the
    // accumulation order for each output entry is fixed by j.
    for (int i = 0; i < m; ++i) {
        double* crow = pc + static_cast<std::size_t>(i) * n;
        const double* arow = pa + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < k; ++j) {
            double aij = arow[j];
            if (aij == 0.0) continue;
            const double* brow = pb + static_cast<std::size_t>(j) * n;
            for (int t = 0; t < n; ++t) crow[t] += aij * brow[t];
        }
    }
    return c;
}

Tensor transpose(const Tensor& a) {
    check_rank2(a, "transpose");
    int m = a.shape()[0], n = a.shape()[1];
    Tensor r({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) r.at(j, i) = a.at(i, j);
    return r;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("add: " + a.shape_str() + " vs " + b.shape_str());
    Tensor r = a;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] += b[i];
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("sub: " + a.shape_str() + " vs " + b.shape_str());
    Tensor r = a;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] -= b[i];
    return r;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw ShapeMismatch("hadamard: " + a.shape_str() + " vs " + b.shape_str());
    Tensor r = a;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] *= b[i];
    return r;
}

Tensor scale(const Tensor& a, double s) {
    Tensor r = a;
    for (std::size_t i = 0; i < r.numel(); ++i) r[i] *= s;
    return r;
}

Tensor add_rowvec(const Tensor& x, const Tensor& b) {
    check_rank2(x, "add_rowvec");
    int s = x.shape()[0], d = x.shape()[1];
    if (static_cast<int>(b.numel()) != d)
        throw ShapeMismatch("add_rowvec: bias " + b.shape_str() + " for width " + std::to_string(d));
    Tensor r = x;
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < d; ++j) r.at(i, j) += b[j];
    return r;
}

}  // namespace mg::nn
