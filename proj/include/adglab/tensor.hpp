#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "adglab/common.hpp"

namespace adglab {

// Dense row-major matrix of 64-bit reals. Scalars are 1x1, row vectors 1xN.
// Values are expected to stay finite; the tape enforces this after every
// primitive.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
        if (v.size() != static_cast<std::size_t>(r) * c)
            throw ValidationError("Tensor: data length does not match shape");
    }

    static Tensor scalar(double x) { return Tensor(1, 1, {x}); }
    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double x) {
        Tensor t(r, c);
        for (double& e : t.v) e = x;
        return t;
    }
    static Tensor row(std::vector<double> data) {
        const int n = static_cast<int>(data.size());
        return Tensor(1, n, std::move(data));
    }

    std::size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    double item() const {
        if (rows != 1 || cols != 1) throw ValidationError("Tensor::item: tensor is not scalar");
        return v[0];
    }

    bool all_finite() const {
        for (double e : v)
            if (!std::isfinite(e)) return false;
        return true;
    }

    std::string shape_str() const {
        return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
    }
};

}  // namespace adglab
