#include "sscap/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace sscap {

void adam_update(const std::vector<std::pair<std::string, Array2*>>& params, const GradMap& grads,
                 AdamState& state) {
    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.b2, static_cast<double>(state.t));
    for (const auto& [name, param] : params) {
        const auto git = grads.find(name);
        if (git == grads.end())
            throw std::invalid_argument("adam_update: missing gradient for parameter '" + name +
                                        "'");
        const Array2& g = git->second;
        if (!g.same_shape(*param))
            throw std::invalid_argument("adam_update: gradient shape " + g.shape_str() +
                                        " does not match parameter '" + name + "' " +
                                        param->shape_str());
        Array2& m = state.m.try_emplace(name, param->rows, param->cols, 0.0).first->second;
        Array2& v = state.v.try_emplace(name, param->rows, param->cols, 0.0).first->second;
        for (size_t i = 0; i < param->data.size(); ++i) {
            m.data[i] = state.b1 * m.data[i] + (1.0 - state.b1) * g.data[i];
            v.data[i] = state.b2 * v.data[i] + (1.0 - state.b2) * g.data[i] * g.data[i];
            const double mhat = m.data[i] / bc1;
            const double vhat = v.data[i] / bc2;
            param->data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

}  // namespace sscap
