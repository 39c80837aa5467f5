#include "listk/costmodel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace listk {

namespace {

void check_basics(double n, double l) {
  if (n < 1) throw std::invalid_argument("cost model: N must be >= 1");
  if (l < 2) throw std::invalid_argument("cost model: L must be >= 2");
}

void check_pivots(double p, double l) {
  if (p < 1 || p >= l) throw std::invalid_argument("cost model: P must be in [1, L-1]");
}

/// P(M <= s) for M ~ Poisson(lambda), computed by accumulating the pmf.
double poisson_cdf(long long s, double lambda) {
  if (s < 0) return 0.0;
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  for (long long m = 1; m <= s; ++m) {
    pmf *= lambda / static_cast<double>(m);
    cdf += pmf;
  }
  return std::min(1.0, cdf);
}

/// E[min(M, s)] for M ~ Poisson(lambda).
double poisson_expected_min(long long s, double lambda) {
  double pmf = std::exp(-lambda);
  double acc = 0.0;
  double cdf = pmf;  // P(M <= 0)
  for (long long m = 1; m < s; ++m) {
    pmf *= lambda / static_cast<double>(m);
    cdf += pmf;
    acc += static_cast<double>(m) * pmf;
  }
  acc += static_cast<double>(s) * (1.0 - std::min(1.0, cdf));
  return acc;
}

/// Leading coefficient of the quickselect model (the per-element call rate);
/// the argmin over P of the full model is the argmin of this.
double select_coefficient(double p, double l, double psi) {
  double denom = (l - p) * (p - 1.0 + std::pow(psi, p + 1.0) + std::pow(1.0 - psi, p + 1.0));
  return (p + 1.0) / denom;
}

double sort_coefficient(double p, double l) { return 1.0 / ((l - p) * std::log(p + 1.0)); }

}  // namespace

double cost_lt_topk(double n, double k, double l) {
  check_basics(n, l);
  if (k < 1 || k > n) throw std::invalid_argument("cost_lt_topk: K must be in [1, N]");
  return (n + (k - 1.0) * (std::log(n) / std::log(l))) / (l - 1.0);
}

double cost_lmpq_sort(double n, double l, double p, const CostModelParams& params) {
  if (n <= 1) return 0.0;
  check_basics(n, l);
  check_pivots(p, l);
  return n * std::log(n) / ((l - p) * std::log(p + 1.0)) + params.beta_sort * n;
}

double cost_lmpq_select(double n, double k, double l, double p, const CostModelParams& params) {
  check_basics(n, l);
  check_pivots(p, l);
  if (k < 1 || k > n) throw std::invalid_argument("cost_lmpq_select: K must be in [1, N]");
  const double psi = k / n;
  return n * select_coefficient(p, l, psi) + params.c_select;
}

double cost_lt_filter(double n, double l) {
  check_basics(n, l);
  return std::ceil(n / l);
}

double recall_lt_filter(double n, double k, double l, double s, FilterRecallMode mode) {
  check_basics(n, l);
  if (k < 1 || k > n) throw std::invalid_argument("recall_lt_filter: K must be in [1, N]");
  if (s < 1) throw std::invalid_argument("recall_lt_filter: S must be >= 1");
  const double lambda = k * l / n;
  const long long si = static_cast<long long>(s);
  if (mode == FilterRecallMode::expected_min)
    return poisson_expected_min(si, lambda) / lambda;
  const double tail = 1.0 - poisson_cdf(si - 1, lambda);
  return std::min(1.0, poisson_cdf(si - 1, lambda) + (s / lambda) * tail);
}

double expected_containing_bucket(double n, double psi, double p) {
  if (n < 1) throw std::invalid_argument("expected_containing_bucket: N must be >= 1");
  if (psi < 0.0 || psi > 1.0)
    throw std::invalid_argument("expected_containing_bucket: psi must be in [0, 1]");
  if (p < 1) throw std::invalid_argument("expected_containing_bucket: P must be >= 1");
  return n * (2.0 - std::pow(psi, p + 1.0) - std::pow(1.0 - psi, p + 1.0)) / (p + 1.0);
}

int optimal_pivot_sort(int l) {
  if (l < 2) throw std::invalid_argument("optimal_pivot_sort: L must be >= 2");
  if (l == 2) return 1;
  // Stationarity of 1/((L-P) ln(P+1)): (L-P) = (P+1) ln(P+1). The left side
  // falls and the right side grows in P, so bisection applies.
  auto f = [l](double p) { return (l - p) - (p + 1.0) * std::log(p + 1.0); };
  double lo = 1.0, hi = static_cast<double>(l - 1);
  if (f(lo) <= 0.0) return 1;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  int below = std::max(1, std::min(l - 1, static_cast<int>(std::floor(root))));
  int above = std::max(1, std::min(l - 1, static_cast<int>(std::ceil(root))));
  return sort_coefficient(below, l) <= sort_coefficient(above, l) ? below : above;
}

int optimal_pivot_select_search(int l, double psi) {
  if (l < 2) throw std::invalid_argument("optimal_pivot_select: L must be >= 2");
  if (psi <= 0.0 || psi > 1.0)
    throw std::invalid_argument("optimal_pivot_select: psi must be in (0, 1]");
  int best = 1;
  double best_cost = select_coefficient(1, l, psi);
  for (int p = 2; p <= l - 1; ++p) {
    double c = select_coefficient(p, l, psi);
    if (c < best_cost) {
      best_cost = c;
      best = p;
    }
  }
  return best;
}

int optimal_pivot_select(int l, double psi) {
  if (l < 2) throw std::invalid_argument("optimal_pivot_select: L must be >= 2");
  if (psi <= 0.0 || psi > 1.0)
    throw std::invalid_argument("optimal_pivot_select: psi must be in (0, 1]");
  if (l == 2) return 1;
  if (psi > 0.01) return optimal_pivot_select_search(l, psi);
  const double root = -1.0 + std::sqrt(1.0 + l);
  int below = std::max(1, std::min(l - 1, static_cast<int>(std::floor(root))));
  int above = std::max(1, std::min(l - 1, static_cast<int>(std::ceil(root))));
  return select_coefficient(below, l, psi) <= select_coefficient(above, l, psi) ? below : above;
}

namespace {

void check_fit_samples(const std::vector<FitSample>& samples) {
  std::set<long long> distinct;
  for (const auto& s : samples) {
    if (s.n < 2) throw std::invalid_argument("fit: every sample needs N >= 2");
    distinct.insert(s.n);
  }
  if (distinct.size() < 2)
    throw std::invalid_argument("fit: needs samples at >= 2 distinct N (singular fit)");
}

}  // namespace

double fit_beta_sort(const std::vector<FitSample>& samples, int l, int p) {
  check_fit_samples(samples);
  check_basics(2, l);
  check_pivots(p, l);
  // calls - N lnN/((L-P)ln(P+1)) = beta * N: one-parameter least squares.
  double num = 0.0, den = 0.0;
  for (const auto& s : samples) {
    double n = static_cast<double>(s.n);
    double residual = s.mean_calls - n * std::log(n) / ((l - p) * std::log(p + 1.0));
    num += residual * n;
    den += n * n;
  }
  return num / den;
}

double fit_c_select(const std::vector<FitSample>& samples, int l, int p, double psi) {
  check_fit_samples(samples);
  check_basics(2, l);
  check_pivots(p, l);
  if (psi <= 0.0 || psi > 1.0) throw std::invalid_argument("fit: psi must be in (0, 1]");
  double acc = 0.0;
  for (const auto& s : samples)
    acc += s.mean_calls - static_cast<double>(s.n) * select_coefficient(p, l, psi);
  return acc / static_cast<double>(samples.size());
}

std::string coefficients_to_json(const FittedCoefficients& coeffs) {
  nlohmann::json j;
  j["beta_sort"] = coeffs.params.beta_sort;
  j["c_select"] = coeffs.params.c_select;
  j["fitted_from"] = nlohmann::json::array();
  for (const auto& s : coeffs.fitted_from)
    j["fitted_from"].push_back({{"N", s.n}, {"mean_calls", s.mean_calls}});
  return j.dump(2);
}

FittedCoefficients coefficients_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object() || !j.contains("beta_sort") || !j.contains("c_select"))
    throw std::runtime_error("coefficients: malformed JSON (needs beta_sort, c_select)");
  FittedCoefficients out;
  out.params.beta_sort = j["beta_sort"].get<double>();
  out.params.c_select = j["c_select"].get<double>();
  if (j.contains("fitted_from"))
    for (const auto& s : j["fitted_from"])
      out.fitted_from.push_back({s.at("N").get<long long>(), s.at("mean_calls").get<double>()});
  return out;
}

void save_coefficients(const std::string& path, const FittedCoefficients& coeffs) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << coefficients_to_json(coeffs) << "\n";
}

FittedCoefficients load_coefficients(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return coefficients_from_json(text);
}

}  // namespace listk
