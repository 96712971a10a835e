#pragma once

#include <array>
#include <cassert>

namespace chiralfilm {

/// Second-order first-derivative stencil on a uniform 1D line of nodes.
///
/// Interior nodes (and all nodes of a periodic line) use central differences.
/// The two end nodes of a non-periodic line use the one-sided second-order
/// formulas (-3f0 + 4f1 - f2)/2h and (3f_{n-1} - 4f_{n-2} + f_{n-3})/2h.
/// The same taps drive the forward operator and its transpose, so gradients
/// obtained by scattering through `taps` are exact adjoints.
struct Stencil1D {
  struct Tap {
    int index;
    double weight;
  };

  int n = 0;
  double spacing = 1.0;
  bool periodic = false;

  int count(int i) const {
    (void)i;
    return (periodic || (i > 0 && i < n - 1)) ? 2 : 3;
  }

  /// Taps for node i, already divided by the spacing.
  std::array<Tap, 3> taps(int i) const {
    const double c = 0.5 / spacing;
    if (periodic) {
      const int ip = (i + 1) % n;
      const int im = (i + n - 1) % n;
      return {Tap{ip, c}, Tap{im, -c}, Tap{i, 0.0}};
    }
    if (i == 0) return {Tap{0, -3.0 * c}, Tap{1, 4.0 * c}, Tap{2, -c}};
    if (i == n - 1) return {Tap{n - 1, 3.0 * c}, Tap{n - 2, -4.0 * c}, Tap{n - 3, c}};
    return {Tap{i + 1, c}, Tap{i - 1, -c}, Tap{i, 0.0}};
  }

  template <class T, class Get>
  T apply(int i, Get&& get) const {
    const auto t = taps(i);
    T acc = t[0].weight * get(t[0].index);
    acc += t[1].weight * get(t[1].index);
    if (count(i) == 3) acc += t[2].weight * get(t[2].index);
    return acc;
  }
};

}  // namespace chiralfilm
