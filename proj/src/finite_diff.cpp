#include "sscap/finite_diff.hpp"

#include <cmath>
#include <stdexcept>

namespace sscap {

double finite_diff_check(const std::function<double()>& f, const std::vector<FdParam>& params,
                         double eps,
                         const std::function<bool(int, int)>& skip) {
    if (eps <= 0.0) throw std::invalid_argument("finite_diff_check: eps must be positive");
    double worst = 0.0;
    for (size_t p = 0; p < params.size(); ++p) {
        Array2& w = *params[p].values;
        const Array2& g = *params[p].analytic;
        if (!w.same_shape(g))
            throw std::invalid_argument("finite_diff_check: analytic gradient shape " +
                                        g.shape_str() + " does not match parameter " +
                                        w.shape_str());
        for (size_t i = 0; i < w.data.size(); ++i) {
            if (skip && skip(static_cast<int>(p), static_cast<int>(i))) continue;
            const double saved = w.data[i];
            w.data[i] = saved + eps;
            const double fp = f();
            w.data[i] = saved - eps;
            const double fm = f();
            w.data[i] = saved;
            const double central = (fp - fm) / (2.0 * eps);
            const double analytic = g.data[i];
            const double rel =
                std::fabs(analytic - central) / (std::fabs(analytic) + std::fabs(central) + 1e-12);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace sscap
