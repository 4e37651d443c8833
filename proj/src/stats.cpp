#include "gradkit/stats.hpp"

#include <cmath>
#include <stdexcept>

#include "gradkit/errors.hpp"

namespace gradkit {

double mean_activation(std::span<const double> values) {
  if (values.empty()) throw empty_group("mean over an empty sample");
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double sample_variance(std::span<const double> values) {
  if (values.size() < 2) throw empty_group("variance needs at least two values");
  double m = mean_activation(values);
  double acc = 0;
  for (double v : values) acc += (v - m) * (v - m);
  return acc / static_cast<double>(values.size() - 1);
}

namespace {

// continued fraction for the incomplete beta (Lentz's method)
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  double qab = a + b;
  double qap = a + 1.0;
  double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double betainc_regularized(double a, double b, double x) {
  if (!(a > 0) || !(b > 0)) throw std::invalid_argument("betainc: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("betainc: x outside [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  // the continued fraction converges fast only below the distribution mode
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0)) throw std::invalid_argument("t test: df must be positive");
  double x = df / (df + t * t);
  return betainc_regularized(df / 2.0, 0.5, x);
}

welch_result welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw empty_group("welch test needs at least two values per sample");
  }
  double ma = mean_activation(a);
  double mb = mean_activation(b);
  double va = sample_variance(a);
  double vb = sample_variance(b);
  double na = static_cast<double>(a.size());
  double nb = static_cast<double>(b.size());

  double sa = va / na;
  double sb = vb / nb;
  if (sa + sb == 0.0) {
    throw degenerate_variance("both samples have zero variance; t is undefined");
  }
  double t = (ma - mb) / std::sqrt(sa + sb);
  double df = (sa + sb) * (sa + sb) /
              (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  return {t, df, student_t_two_sided_p(t, df)};
}

}  // namespace gradkit
