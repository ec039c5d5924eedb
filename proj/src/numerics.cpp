#include "gruwe/numerics.hpp"

#include <cmath>

namespace gruwe {

DenseVector DenseVector::checked(std::vector<double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw DataError("non-finite value at vector index " + std::to_string(i));
    }
    DenseVector v;
    v.data = std::move(values);
    return v;
}

DenseMatrix DenseMatrix::checked(std::size_t r, std::size_t c, std::vector<double> values) {
    if (values.size() != r * c)
        throw ShapeError("matrix payload size " + std::to_string(values.size()) +
                         " does not match " + std::to_string(r) + "x" + std::to_string(c));
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]))
            throw DataError("non-finite value at matrix index " + std::to_string(i));
    }
    DenseMatrix m;
    m.rows = r;
    m.cols = c;
    m.data = std::move(values);
    return m;
}

DenseVector matvec(const DenseMatrix& m, const DenseVector& x) {
    if (m.cols != x.size())
        throw ShapeError("matvec: matrix cols " + std::to_string(m.cols) +
                         " vs vector size " + std::to_string(x.size()));
    DenseVector y(m.rows);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double acc = 0.0;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * x.data[j];
        y.data[i] = acc;
    }
    return y;
}

DenseVector matvec_t(const DenseMatrix& m, const DenseVector& x) {
    if (m.rows != x.size())
        throw ShapeError("matvec_t: matrix rows " + std::to_string(m.rows) +
                         " vs vector size " + std::to_string(x.size()));
    DenseVector y(m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        const double xi = x.data[i];
        for (std::size_t j = 0; j < m.cols; ++j) y.data[j] += row[j] * xi;
    }
    return y;
}

void add_outer(DenseMatrix& acc, const DenseVector& a, const DenseVector& b) {
    if (acc.rows != a.size() || acc.cols != b.size())
        throw ShapeError("add_outer: accumulator " + std::to_string(acc.rows) + "x" +
                         std::to_string(acc.cols) + " vs vectors " +
                         std::to_string(a.size()) + "," + std::to_string(b.size()));
    for (std::size_t i = 0; i < acc.rows; ++i) {
        double* row = acc.data.data() + i * acc.cols;
        const double ai = a.data[i];
        for (std::size_t j = 0; j < acc.cols; ++j) row[j] += ai * b.data[j];
    }
}

double sigmoid(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) {
    // stable branch: never overflows, never negative
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// --- RNG -------------------------------------------------------------------

std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t s = base + (index + 1) * 0x9e3779b97f4a7c15ULL;
    return splitmix64_next(s);
}

RngState::RngState(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s) word = splitmix64_next(sm);
    // xoshiro256** must not start from the all-zero state
    if (s[0] == 0 && s[1] == 0 && s[2] == 0 && s[3] == 0) s[0] = 1;
}

static inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

std::uint64_t RngState::next_u64() {
    const std::uint64_t result = rotl64(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl64(s[3], 45);
    return result;
}

double RngState::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_unit();
}

double RngState::exponential(double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential draw requires rate > 0");
    // next_unit() < 1 strictly, so log1p(-u) is finite
    return -std::log1p(-next_unit()) / rate;
}

std::uint64_t RngState::next_below(std::uint64_t n) {
    if (n == 0) throw DomainError("next_below requires n > 0");
    const std::uint64_t threshold = (~n + 1) % n; // 2^64 mod n
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) return x % n;
    }
}

// --- initialization ---------------------------------------------------------

void uniform_init(RngState& rng, Parameter& p, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale))
        throw ConfigError("uniform_init requires a positive finite scale, got " +
                          std::to_string(scale));
    for (auto& v : p.value.data) v = rng.uniform(-scale, scale);
}

Parameter uniform_init(RngState& rng, const std::string& name, std::size_t rows,
                       std::size_t cols, double scale) {
    Parameter p(name, rows, cols);
    uniform_init(rng, p, scale);
    return p;
}

double fan_in_scale(std::size_t fan_in) {
    if (fan_in == 0) throw DomainError("fan_in must be positive");
    return 1.0 / std::sqrt(static_cast<double>(fan_in));
}

} // namespace gruwe
