// sotkit/hungarian.cc

// Copyright 2026  The sotkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "sotkit/hungarian.h"

#include <cmath>
#include <limits>

#include "sotkit/common.h"

namespace sotkit {

AssignmentResult SolveAssignment(const Eigen::MatrixXd& cost) {
  const long n = cost.rows();
  if (n == 0 || cost.cols() != n)
    throw ContractError("SolveAssignment: cost matrix must be square and nonempty");
  if (!cost.allFinite())
    throw ContractError("SolveAssignment: cost matrix must be finite");

  const double inf = std::numeric_limits<double>::infinity();
  // 1-indexed potentials over rows (u) and columns (v); p[j] is the row
  // currently matched to column j, with column 0 as the virtual start.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<long> p(n + 1, 0), way(n + 1, 0);
  for (long i = 1; i <= n; ++i) {
    p[0] = i;
    long j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const long i0 = p[j0];
      long j1 = -1;
      double delta = inf;
      for (long j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (long j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const long j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  AssignmentResult res;
  res.row_to_col.assign(n, -1);
  for (long j = 1; j <= n; ++j) res.row_to_col[p[j] - 1] = static_cast<int>(j - 1);
  for (long i = 0; i < n; ++i) res.value += cost(i, res.row_to_col[i]);
  return res;
}

}  // namespace sotkit
