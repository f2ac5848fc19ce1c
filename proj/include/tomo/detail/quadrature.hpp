#ifndef TOMO_DETAIL_QUADRATURE_HPP
#define TOMO_DETAIL_QUADRATURE_HPP

#include <boost/math/quadrature/gauss.hpp>

#include <cstddef>

namespace tomo::detail {

// Composite 20-point Gauss-Legendre over [lo, hi] split into `panels` pieces.
// Works for any integrand whose result supports + and scalar *.
template <class F>
auto composite_gauss(F&& f, double lo, double hi, std::size_t panels) {
  using rule = boost::math::quadrature::gauss<double, 20>;
  const auto& x = rule::abscissa();
  const auto& w = rule::weights();
  const double h = (hi - lo) / static_cast<double>(panels);
  decltype(f(lo)) total{};
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = lo + (static_cast<double>(p) + 0.5) * h;
    const double half = 0.5 * h;
    // Even-order rule: every stored abscissa is strictly positive.
    decltype(f(lo)) panel{};
    for (std::size_t i = 0; i < x.size(); ++i) panel += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
    total += half * panel;
  }
  return total;
}

}  // namespace tomo::detail

#endif  // TOMO_DETAIL_QUADRATURE_HPP
