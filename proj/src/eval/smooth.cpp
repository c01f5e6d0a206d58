#include <algorithm>
#include <cmath>
#include <numeric>

#include "snowfuse/error.hpp"
#include "snowfuse/eval.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::eval {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ArgumentError("gaussian_smooth: sigma must be > 0");
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace {

// One 1-D pass along rows (horizontal) or columns. Out-of-range taps are
// dropped (Renormalize) or wrapped (Periodic).
std::vector<double> pass(const std::vector<double>& in, std::size_t rows, std::size_t cols, const std::vector<double>& k,
                         bool horizontal, bool periodic) {
  const long radius = static_cast<long>(k.size() / 2);
  const long n = static_cast<long>(horizontal ? cols : rows);
  std::vector<double> out(in.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const long pos = static_cast<long>(horizontal ? c : r);
      double acc = 0.0;
      for (long t = -radius; t <= radius; ++t) {
        long q = pos + t;
        if (periodic) {
          q = ((q % n) + n) % n;
        } else if (q < 0 || q >= n) {
          continue;
        }
        const std::size_t idx = horizontal ? r * cols + static_cast<std::size_t>(q) : static_cast<std::size_t>(q) * cols + c;
        acc += k[static_cast<std::size_t>(t + radius)] * in[idx];
      }
      out[r * cols + c] = acc;
    }
  }
  return out;
}

}  // namespace

std::vector<double> gaussian_smooth_values(const Raster& pred, double sigma, SmoothBoundary boundary) {
  const auto k = gaussian_kernel(sigma);
  if (pred.bands() != 1) throw ArgumentError("gaussian_smooth: single-band raster required");
  const std::size_t rows = pred.rows(), cols = pred.cols();
  std::vector<double> value(rows * cols), weight(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const bool ok = !pred.is_nodata(r, c);
      weight[r * cols + c] = ok ? 1.0 : 0.0;
      value[r * cols + c] = ok ? static_cast<double>(pred.at(r, c)) : 0.0;
    }
  }
  const bool periodic = boundary == SmoothBoundary::Periodic;
  const auto num = pass(pass(value, rows, cols, k, true, periodic), rows, cols, k, false, periodic);
  const auto den = pass(pass(weight, rows, cols, k, true, periodic), rows, cols, k, false, periodic);

  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = weight[i] > 0.0 ? num[i] / den[i] : std::nan("");
  return out;
}

Raster gaussian_smooth(const Raster& pred, double sigma, SmoothBoundary boundary) {
  const auto v = gaussian_smooth_values(pred, sigma, boundary);
  Raster out(pred.spec(), 1);
  for (std::size_t r = 0; r < pred.rows(); ++r) {
    for (std::size_t c = 0; c < pred.cols(); ++c) {
      if (pred.is_nodata(r, c)) {
        out.set_nodata(r, c);
      } else {
        out.set(r, c, static_cast<float>(v[r * pred.cols() + c]));
      }
    }
  }
  return out;
}

std::vector<CurvePoint> loess_error_curve(std::span<const double> truth, std::span<const double> errors, double span,
                                          std::size_t points) {
  const std::size_t n = truth.size();
  if (errors.size() != n) throw ArgumentError("loess: truth and errors differ in length");
  if (n < 10) throw ArgumentError("loess: at least 10 points required");
  if (!(span > 0.0 && span <= 1.0)) throw ArgumentError("loess: span must lie in (0, 1]");
  if (points < 2) throw ArgumentError("loess: at least 2 evaluation points required");
  const auto [lo_it, hi_it] = std::minmax_element(truth.begin(), truth.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) throw ArgumentError("loess: truth values are all equal");

  const auto q = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(span * static_cast<double>(n))));
  std::vector<std::size_t> order(n);
  std::vector<double> dist(n);
  std::vector<CurvePoint> curve;
  curve.reserve(points);
  for (std::size_t p = 0; p < points; ++p) {
    const double x0 = p + 1 == points ? hi : lo + (hi - lo) * static_cast<double>(p) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(truth[i] - x0);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    double h = dist[order[q - 1]];
    // all q neighbours share x0: widen to the next distinct distance
    for (std::size_t i = q; h == 0.0 && i < n; ++i) h = dist[order[i]];

    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::vector<double> w(q);
    for (std::size_t j = 0; j < q; ++j) {
      const double u = dist[order[j]] / h;
      const double t = u < 1.0 ? 1.0 - u * u * u : 0.0;
      w[j] = t * t * t;
      sw += w[j];
      swx += w[j] * truth[order[j]];
      swy += w[j] * errors[order[j]];
    }
    if (!(sw > 0.0)) {  // only boundary points at distance h: fall back to equal weights
      std::fill(w.begin(), w.end(), 1.0);
      sw = static_cast<double>(q);
      swx = swy = 0.0;
      for (std::size_t j = 0; j < q; ++j) {
        swx += truth[order[j]];
        swy += errors[order[j]];
      }
    }
    const double xm = swx / sw, ym = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double dx = truth[order[j]] - xm;
      sxx += w[j] * dx * dx;
      sxy += w[j] * dx * (errors[order[j]] - ym);
    }
    const double slope = sxx > 1e-12 * sw * (hi - lo) * (hi - lo) ? sxy / sxx : 0.0;
    curve.push_back({x0, ym + slope * (x0 - xm)});
  }
  return curve;
}

std::string format_curve_csv(std::span<const CurvePoint> curve) {
  std::string s = "x,fitted_error\n";
  for (const auto& p : curve) s += text::format_double(p.x) + "," + text::format_double(p.fitted) + "\n";
  return s;
}

std::vector<CurvePoint> parse_curve_csv(const std::vector<std::string>& lines, const std::string& source) {
  if (lines.empty() || text::trim(lines[0]) != "x,fitted_error") {
    throw ParseError(source + ": expected header 'x,fitted_error'");
  }
  std::vector<CurvePoint> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split(lines[i], ',');
    if (f.size() != 2) throw ParseError(source + " line " + std::to_string(i + 1) + ": expected 2 fields");
    out.push_back({text::parse_double(f[0], "x"), text::parse_double(f[1], "fitted_error")});
  }
  return out;
}

}  // namespace snowfuse::eval
