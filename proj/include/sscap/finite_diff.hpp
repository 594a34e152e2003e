#pragma once

#include <functional>
#include <vector>

#include "sscap/array.hpp"

namespace sscap {

// One parameter block under check: the live values (perturbed in place and
// restored) and the analytic gradient to compare against.
struct FdParam {
    Array2* values = nullptr;
    const Array2* analytic = nullptr;
};

// Central-difference gradient check. Returns the max over all coordinates of
// |analytic - central| / (|analytic| + |central| + 1e-12). skip(param, coord)
// excludes coordinates sitting on kinks (relu inputs at exactly 0).
double finite_diff_check(const std::function<double()>& f, const std::vector<FdParam>& params,
                         double eps,
                         const std::function<bool(int, int)>& skip = nullptr);

}  // namespace sscap
