#ifndef CWS_FINITE_DIFF_HPP
#define CWS_FINITE_DIFF_HPP

#include <vector>

namespace cws {

/// Finite-difference weights for the m-th derivative at 0 on the given
/// stencil offsets (Fornberg's recurrence). Offsets are in step units; the
/// caller divides by h^m.
inline std::vector<double> fd_weights(int m, const std::vector<double>& offsets) {
  const int n = static_cast<int>(offsets.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  c[0][0] = 1.0;
  double c1 = 1.0;
  double c4 = offsets[0];
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = offsets[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = offsets[i] - offsets[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k)
          c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k)
        c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

/// Symmetric integer offsets -half..half.
inline std::vector<double> central_offsets(int half) {
  std::vector<double> off;
  off.reserve(2 * half + 1);
  for (int i = -half; i <= half; ++i) off.push_back(static_cast<double>(i));
  return off;
}

} // namespace cws

#endif
