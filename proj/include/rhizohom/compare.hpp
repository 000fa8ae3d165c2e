#pragma once

#include <span>
#include <vector>

#include "rhizohom/errors.hpp"

namespace rhizohom {

struct FieldNorms {
  double l2 = 0;
  double linf = 0;
};

// Cell-volume-weighted root-sum-square and max-norm of the difference.
FieldNorms diff_norms(std::span<const double> a, std::span<const double> b,
                      double cell_volume);

struct ErrorRow {
  double eps = 0;
  double t = 0;
  FieldNorms h_S, h_P;
  double runtime_s = 0;
};

struct ConvergenceReport {
  std::vector<double> eps_list;       // descending in refinement order
  std::vector<ErrorRow> rows;         // grouped by eps, then time
  bool monotone = false;              // strict decrease in eps at every time

  void compute_verdict();
};

}  // namespace rhizohom
