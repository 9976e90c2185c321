#pragma once

#include <cstdint>

#include <nlohmann/json_fwd.hpp>

#include "ednig/archive.hpp"
#include "ednig/params.hpp"

namespace ednig {

struct AdamConfig {
    double beta1 = 0.5;  // GAN-stable default
    double beta2 = 0.999;
    double epsilon = 1e-8;

    nlohmann::json to_json() const;
    static AdamConfig from_json(const nlohmann::json& j);
};

class Adam {
public:
    Adam(const ParamList& params, AdamConfig cfg);

    // theta -= lr * m_hat / (sqrt(v_hat) + eps); increments the step count.
    void step(const ParamList& params, const GradBuffer& grads, double lr);

    std::int64_t step_count() const { return t_; }

    // Moments and step count under `prefix` in the archive.
    void save_state(TensorArchive& archive, const std::string& prefix) const;
    void load_state(const TensorArchive& archive, const std::string& prefix);

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

}  // namespace ednig
