#include "mmv/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace mmv {
namespace {

// Gauss 7 / Kronrod 15 nodes and weights on [-1, 1] (symmetric half, x >= 0).
// The odd-indexed Kronrod abscissae are the embedded Gauss-7 nodes.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, err;
};

Panel eval_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double resk = kWgk[7] * fc;
  double resg = kWg[3] * fc;
  for (int i = 0; i < 7; ++i) {
    const double f1 = f(c - h * kXgk[i]);
    const double f2 = f(c + h * kXgk[i]);
    resk += kWgk[i] * (f1 + f2);
    if (i & 1) resg += kWg[i / 2] * (f1 + f2);
  }
  return {a, b, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                    const QuadratureOptions& opts,
                                    std::span<const double> breakpoints) {
  if (!(b > a)) throw std::invalid_argument("integrate_adaptive: requires b > a");
  if (opts.initial_panels < 1 || opts.max_panels < opts.initial_panels)
    throw std::invalid_argument("integrate_adaptive: bad panel budget");

  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(opts.initial_panels) + breakpoints.size() + 1);
  for (int k = 0; k <= opts.initial_panels; ++k)
    edges.push_back(a + (b - a) * k / opts.initial_panels);
  for (double x : breakpoints)
    if (x > a && x < b) edges.push_back(x);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [&](double u, double v) { return v - u < (b - a) * 1e-12; }),
              edges.end());
  edges.front() = a;
  edges.back() = b;

  const auto by_err = [](const Panel& x, const Panel& y) { return x.err < y.err; };
  std::vector<Panel> heap;
  heap.reserve(static_cast<std::size_t>(opts.max_panels));
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    heap.push_back(eval_panel(f, edges[i], edges[i + 1]));
  std::make_heap(heap.begin(), heap.end(), by_err);

  double total = 0.0, toterr = 0.0;
  for (const Panel& p : heap) {
    total += p.value;
    toterr += p.err;
  }
  std::vector<Panel> frozen;  // panels at machine width that cannot be split
  double stuck_err = 0.0;
  const auto target = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::abs(total)); };

  while (!heap.empty() && toterr + stuck_err > target() &&
         static_cast<int>(heap.size() + frozen.size()) < opts.max_panels) {
    std::pop_heap(heap.begin(), heap.end(), by_err);
    const Panel worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      frozen.push_back(worst);
      stuck_err += worst.err;
      toterr -= worst.err;
      continue;
    }
    const Panel left = eval_panel(f, worst.a, mid);
    const Panel right = eval_panel(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    toterr += left.err + right.err - worst.err;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end(), by_err);
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end(), by_err);
  }

  // Exact resummation over the final panel set for the reported value.
  QuadratureResult res;
  for (const Panel& p : heap) {
    res.value += p.value;
    res.error += p.err;
  }
  for (const Panel& p : frozen) {
    res.value += p.value;
    res.error += p.err;
  }
  res.panels = static_cast<int>(heap.size() + frozen.size());
  res.converged = res.error <= std::max(opts.abs_tol, opts.rel_tol * std::abs(res.value));
  return res;
}

double radial_gaussian_expectation(const std::function<double(double)>& g, int J,
                                   const QuadratureOptions& opts,
                                   std::span<const double> x_hints) {
  if (J < 1) throw std::invalid_argument("radial_gaussian_expectation: J must be >= 1");
  const double r_hi = std::sqrt(200.0 + 20.0 * static_cast<double>(J));
  const double log_norm = (1.0 - 0.5 * J) * std::numbers::ln2 - std::lgamma(0.5 * J);
  auto integrand = [&](double r) {
    double lw = log_norm - 0.5 * r * r;
    if (J > 1) lw += (J - 1) * std::log(r);
    return std::exp(lw) * g(r * r);
  };
  std::vector<double> r_hints;
  r_hints.reserve(x_hints.size());
  for (double x : x_hints)
    if (x > 0.0 && std::isfinite(x)) r_hints.push_back(std::sqrt(x));
  const QuadratureResult q = integrate_adaptive(integrand, 0.0, r_hi, opts, r_hints);
  if (!q.converged) {
    std::ostringstream msg;
    msg << "radial_gaussian_expectation: adaptive refinement did not converge (J=" << J
        << ", panels=" << q.panels << ", err=" << q.error << ", value=" << q.value << ")";
    throw NumericalError(msg.str());
  }
  return q.value;
}

}  // namespace mmv
