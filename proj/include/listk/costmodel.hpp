#pragma once

#include <string>
#include <vector>

namespace listk {

/// Fitted constants of the call-count models. beta_sort is the linear
/// overhead coefficient of the quicksort model; c_select is the additive
/// constant of the quickselect model (zero fits the data well).
struct CostModelParams {
  double beta_sort = 0.1;
  double c_select = 0.0;
};

/// One simulator measurement used for fitting: corpus size and the observed
/// mean oracle calls.
struct FitSample {
  long long n = 0;
  double mean_calls = 0.0;
};

struct FittedCoefficients {
  CostModelParams params;
  std::vector<FitSample> fitted_from;
};

/// Expected oracle calls of tournament top-K: (N + (K-1) log_L N) / (L-1).
double cost_lt_topk(double n, double k, double l);

/// Expected oracle calls of multi-pivot quicksort:
/// N ln N / ((L-P) ln(P+1)) + beta_sort * N.  N <= 1 costs nothing.
double cost_lmpq_sort(double n, double l, double p, const CostModelParams& params = {});

/// Expected oracle calls of multi-pivot quickselect with psi = K/N:
/// N (P+1) / ((L-P) (P-1 + psi^{P+1} + (1-psi)^{P+1})) + c_select.
double cost_lmpq_select(double n, double k, double l, double p,
                        const CostModelParams& params = {});

/// Oracle calls of one filter round: ceil(N / L).
double cost_lt_filter(double n, double l);

/// Two published ways to model filter recall from the Poisson bin load
/// lambda = K L / N and survivor budget S.
enum class FilterRecallMode {
  expected_min,  // E[min(M, S)] / lambda, M ~ Poisson(lambda); strictly < 1
  paper,         // min(1, P(M <= S-1) + (S/lambda) P(M >= S))
};

double recall_lt_filter(double n, double k, double l, double s, FilterRecallMode mode);

/// Expected size of the bucket containing the element at quantile psi after
/// partitioning N elements with P uniform pivots:
/// N (2 - psi^{P+1} - (1-psi)^{P+1}) / (P+1).
double expected_containing_bucket(double n, double psi, double p);

/// Sort pivot count minimizing the quicksort model at list size L: solves
/// (L-P) = (P+1) ln(P+1), then picks the cheaper of floor/ceil. L=20 -> 6.
int optimal_pivot_sort(int l);

/// Select pivot count at list size L and ratio psi: closed form
/// -1 + sqrt(1+L) (rounded by cost) when psi <= 0.01, otherwise the argmin
/// of the model coefficient over P in [1, L-1]. L=20, psi->0 -> 4.
int optimal_pivot_select(int l, double psi);

/// Brute-force argmin used as a cross-check of the closed form.
int optimal_pivot_select_search(int l, double psi);

/// Least-squares fit of beta_sort in calls = N lnN/((L-P)ln(P+1)) + beta*N.
/// Needs samples at >= 2 distinct N.
double fit_beta_sort(const std::vector<FitSample>& samples, int l, int p);

/// Least-squares fit of the additive constant of the select model, at a
/// fixed psi. Needs samples at >= 2 distinct N.
double fit_c_select(const std::vector<FitSample>& samples, int l, int p, double psi);

/// JSON round trip: {"beta_sort": ..., "c_select": ..., "fitted_from":
/// [{"N": ..., "mean_calls": ...}, ...]}.
std::string coefficients_to_json(const FittedCoefficients& coeffs);
FittedCoefficients coefficients_from_json(const std::string& text);
void save_coefficients(const std::string& path, const FittedCoefficients& coeffs);
FittedCoefficients load_coefficients(const std::string& path);

}  // namespace listk
