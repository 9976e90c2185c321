#include "ednig/adam.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace ednig {

nlohmann::json AdamConfig::to_json() const {
    return {{"beta1", beta1}, {"beta2", beta2}, {"epsilon", epsilon}};
}

AdamConfig AdamConfig::from_json(const nlohmann::json& j) {
    AdamConfig c;
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    return c;
}

Adam::Adam(const ParamList& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.data->size(), 0.f);
        v_.emplace_back(p.data->size(), 0.f);
    }
}

void Adam::step(const ParamList& params, const GradBuffer& grads, double lr) {
    if (params.size() != m_.size() || grads.g.size() != m_.size())
        throw ContractError("adam: parameter/gradient list size mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    const float b1 = float(cfg_.beta1), b2 = float(cfg_.beta2);

    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& theta = *params[i].data;
        const auto& g = grads.g[i];
        auto& m = m_[i];
        auto& v = v_[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = b1 * m[k] + (1.f - b1) * g[k];
            v[k] = b2 * v[k] + (1.f - b2) * g[k] * g[k];
            const double m_hat = double(m[k]) / bc1;
            const double v_hat = double(v[k]) / bc2;
            theta[k] = float(double(theta[k]) - lr * m_hat / (std::sqrt(v_hat) + cfg_.epsilon));
        }
    }
}

void Adam::save_state(TensorArchive& archive, const std::string& prefix) const {
    for (std::size_t i = 0; i < m_.size(); ++i) {
        archive.add(prefix + "/m/" + std::to_string(i), {std::int64_t(m_[i].size())}, m_[i]);
        archive.add(prefix + "/v/" + std::to_string(i), {std::int64_t(v_[i].size())}, v_[i]);
    }
    archive.meta()[prefix + "_step_count"] = t_;
}

void Adam::load_state(const TensorArchive& archive, const std::string& prefix) {
    for (std::size_t i = 0; i < m_.size(); ++i) {
        const auto& m = archive.data(prefix + "/m/" + std::to_string(i));
        const auto& v = archive.data(prefix + "/v/" + std::to_string(i));
        if (m.size() != m_[i].size() || v.size() != v_[i].size())
            throw ArchiveError("adam: moment size mismatch while loading " + prefix);
        m_[i] = m;
        v_[i] = v;
    }
    t_ = archive.meta().at(prefix + "_step_count").get<std::int64_t>();
}

}  // namespace ednig
