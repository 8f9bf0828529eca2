// sotkit/hungarian.h

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

#ifndef SOTKIT_HUNGARIAN_H_
#define SOTKIT_HUNGARIAN_H_

#include <Eigen/Dense>
#include <vector>

namespace sotkit {

struct AssignmentResult {
  double value = 0.0;
  std::vector<int> row_to_col;
};

// Optimal linear assignment minimizing sum_i cost(i, assign[i]) via the
// O(n^3) shortest-augmenting-path Hungarian method with potentials.
// Throws ContractError for non-square or non-finite matrices.
AssignmentResult SolveAssignment(const Eigen::MatrixXd& cost);

}  // namespace sotkit

#endif  // SOTKIT_HUNGARIAN_H_
