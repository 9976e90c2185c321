#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ednig/error.hpp"

namespace ednig {

// Named view of one parameter tensor. Networks expose their parameters as an
// ordered list; that order is canonical for gradients, Adam state, and
// checkpoints.
struct ParamRef {
    std::string name;
    std::vector<std::int64_t> shape;
    std::vector<float>* data = nullptr;
};

struct ConstParamRef {
    std::string name;
    std::vector<std::int64_t> shape;
    const std::vector<float>* data = nullptr;
};

using ParamList = std::vector<ParamRef>;
using ConstParamList = std::vector<ConstParamRef>;

// Gradient storage aligned index-for-index with a ParamList.
struct GradBuffer {
    std::vector<std::vector<float>> g;

    static GradBuffer like(const ParamList& params) {
        GradBuffer out;
        out.g.reserve(params.size());
        for (const auto& p : params) out.g.emplace_back(p.data->size(), 0.f);
        return out;
    }

    void zero() {
        for (auto& v : g) std::fill(v.begin(), v.end(), 0.f);
    }

    void scale(float s) {
        for (auto& v : g)
            for (float& x : v) x *= s;
    }
};

inline std::size_t total_size(const ConstParamList& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p.data->size();
    return n;
}

}  // namespace ednig
