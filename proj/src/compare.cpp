#include "rhizohom/compare.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace rhizohom {

FieldNorms diff_norms(std::span<const double> a, std::span<const double> b,
                      double cell_volume) {
  if (a.size() != b.size()) throw AlignmentError("diff_norms: mismatched field sizes");
  FieldNorms n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    ss += cell_volume * d * d;
    n.linf = std::max(n.linf, std::abs(d));
  }
  n.l2 = std::sqrt(ss);
  return n;
}

void ConvergenceReport::compute_verdict() {
  // group rows by snapshot time, require strict decrease along eps_list order
  std::map<double, std::map<double, const ErrorRow*>> by_time;
  for (const auto& r : rows) by_time[r.t][r.eps] = &r;
  monotone = !rows.empty();
  for (const auto& [t, per_eps] : by_time) {
    for (std::size_t i = 0; i + 1 < eps_list.size(); ++i) {
      auto coarse = per_eps.find(eps_list[i]);
      auto fine = per_eps.find(eps_list[i + 1]);
      if (coarse == per_eps.end() || fine == per_eps.end()) {
        monotone = false;
        return;
      }
      if (!(fine->second->h_S.l2 < coarse->second->h_S.l2 &&
            fine->second->h_P.l2 < coarse->second->h_P.l2)) {
        monotone = false;
        return;
      }
    }
  }
}

}  // namespace rhizohom
