// Copyright 2026  The rnntcl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference oracle shared by the gradient tests. It only
// evaluates the scalar objective; it never looks at analytic gradients.

#ifndef RNNTCL_TESTS_GRADCHECK_HPP
#define RNNTCL_TESTS_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace rnntcl::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst;
  int checked = 0;
};

/// Relative error |a - n| / max(|a|, |n|), with the denominator floored so
/// that entries whose true gradient is essentially zero are judged on an
/// absolute scale.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Perturbs every entry of `m` in place and compares against `analytic`.
inline void check_matrix(Eigen::MatrixXd& m, const Eigen::MatrixXd& analytic,
                         const std::function<double()>& objective, const std::string& label,
                         GradCheckResult& res, double step = 1e-5, double floor = 1e-6) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double orig = m(i, j);
      m(i, j) = orig + step;
      const double up = objective();
      m(i, j) = orig - step;
      const double down = objective();
      m(i, j) = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double rel = relative_error(analytic(i, j), numeric, floor);
      const double abs = std::abs(analytic(i, j) - numeric);
      ++res.checked;
      res.max_abs_error = std::max(res.max_abs_error, abs);
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst = label + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      }
    }
  }
}

}  // namespace rnntcl::testing

#endif  // RNNTCL_TESTS_GRADCHECK_HPP
