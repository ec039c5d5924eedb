#pragma once

// minimal dense linear algebra, stable nonlinearities, and a pinned
// deterministic RNG. everything is 64-bit: the gradient checks need
// ~1e-4 relative agreement with finite differences, which 32-bit
// arithmetic cannot sustain over long sequences.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gruwe/errors.hpp"

namespace gruwe {

struct DenseVector {
    std::vector<double> data;

    DenseVector() = default;
    explicit DenseVector(std::size_t n, double fill = 0.0) : data(n, fill) {}

    // rejects NaN/Inf entries; use for values that cross an external boundary
    static DenseVector checked(std::vector<double> values);

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    bool operator==(const DenseVector& o) const { return data == o.data; }
};

// row-major
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    // rejects NaN/Inf entries and size mismatches
    static DenseMatrix checked(std::size_t r, std::size_t c, std::vector<double> values);

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    bool operator==(const DenseMatrix& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

// learnable tensor paired with its gradient accumulator.
// vectors are stored as single-column matrices so optimizer/serialization
// code can treat every parameter uniformly.
struct Parameter {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;

    Parameter() = default;
    Parameter(std::string n, std::size_t r, std::size_t c)
        : name(std::move(n)), value(r, c), grad(r, c) {}

    std::size_t count() const { return value.data.size(); }
    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

// y = M x
DenseVector matvec(const DenseMatrix& m, const DenseVector& x);
// y = M^T x
DenseVector matvec_t(const DenseMatrix& m, const DenseVector& x);
// acc += a b^T
void add_outer(DenseMatrix& acc, const DenseVector& a, const DenseVector& b);

double sigmoid(double x);
double softplus(double x);
// derivative of sigmoid given its output s
inline double sigmoid_grad_from_value(double s) { return s * (1.0 - s); }
// derivative of tanh given its output t
inline double tanh_grad_from_value(double t) { return 1.0 - t * t; }
// derivative of softplus at x
inline double softplus_grad(double x) { return sigmoid(x); }

// splitmix64-seeded xoshiro256**. the algorithm is pinned so that identical
// seeds give identical streams on every platform, which the determinism
// guarantees (and golden tests) rely on.
struct RngState {
    std::array<std::uint64_t, 4> s{};

    explicit RngState(std::uint64_t seed);

    std::uint64_t next_u64();
    // uniform on [0, 1), 53-bit resolution
    double next_unit();
    double uniform(double lo, double hi);
    // inter-arrival draw for a rate-`rate` Poisson process; rate > 0
    double exponential(double rate);
    // unbiased uniform integer in [0, n)
    std::uint64_t next_below(std::uint64_t n);
};

std::uint64_t splitmix64_next(std::uint64_t& state);

// deterministic child-stream seed; independent of evaluation order, so
// per-sequence streams do not depend on worker scheduling
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

// fills p.value with i.i.d. uniform draws on [-scale, +scale]
void uniform_init(RngState& rng, Parameter& p, double scale);
Parameter uniform_init(RngState& rng, const std::string& name, std::size_t rows,
                       std::size_t cols, double scale);
// default initialization scale 1/sqrt(fan_in)
double fan_in_scale(std::size_t fan_in);

} // namespace gruwe
