#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <specrisk/problem.hpp>
#include <specrisk/solver.hpp>
#include <specrisk/types.hpp>

namespace specrisk {

/// Random spectral-risk instance family. Returns and losses are in percent.
struct RandomInstanceSpec
{
   Index n = 10;
   Index N = 100;
   Index m = 5;
   Index d = 3;
   std::uint64_t seed = 1;
   double budget_slack = 0.1;
   double beta_low = 0.9;
   double beta_high = 1.0; ///< exclusive
   double leverage = 1.0;
   bool sparse = true;      ///< lambda = lambda*, else 0
   double mu_high = 0.2;     ///< mu_i ~ U[0, mu_high]
   /// Per-asset loss volatility sigma_i ~ U[vol_low, vol_high].
   double vol_low = 1.0;
   double vol_high = 5.0;

   void validate() const;
};

ProblemSpec generate_random_instance( const RandomInstanceSpec& spec );

/// Budgets alpha_k = hat_alpha_k - slack |hat_alpha_k| with hat_alpha_k the
/// risk of the uniform portfolio.
Vector uniform_portfolio_budgets( const RiskConstraintSet& risk, double slack );

/// Multiplicative noise l + t |l| eps on every loss entry.
ProblemSpec perturb_instance( const ProblemSpec& problem, double t,
                              std::uint64_t seed );

struct HedgingSpec
{
   Index assets = 4;
   double spot = 1.0;
   double rate = 0.01;
   /// Drift of the log-normal prices; empty means risk-neutral (rate).
   Vector drift;
   Vector sigma0;          ///< empty means 0.2 for every asset
   Matrix correlation;     ///< empty means unit diagonal, 0.3 elsewhere
   std::vector<Vector> factors;  ///< empty means the two default factors
   std::vector<double> binary_maturities{ 4, 6, 8, 10 }; ///< months
   std::vector<double> strikes{ 0.9, 0.95, 1.0, 1.05, 1.1 }; ///< times spot
   std::vector<double> call_maturities{ 2, 3, 4, 6 };        ///< months
   double horizon = 1.0;   ///< months
   Index samples = 5000;
   double es_level = 0.95;
   double risk_reduction = 0.5;
   double leverage = 1.0;
   /// Losses are reported in percent of spot.
   double loss_scale = 100.0;

   /// Fills every empty field with its default.
   HedgingSpec resolved() const;
   void validate() const;

   Index instruments() const;
   std::vector<std::string> instrument_names() const;
};

/// Volatility-factor weights omega; nominal = {0}, robust = {-1, 1}^q.
struct WorstCaseModelSet
{
   std::vector<Vector> omegas;

   static WorstCaseModelSet nominal( Index q );
   static WorstCaseModelSet robust( Index q );
   static WorstCaseModelSet from_mode( const std::string& mode, Index q );
};

struct HedgingModel
{
   Vector omega;
   Vector sigma_horizon;
   Vector initial_losses; ///< l_0(omega)
   LossMatrix losses;     ///< L(omega)
   Vector mu;             ///< -(1/N) L' 1
   double mu0 = 0.0;      ///< -(1/N) l_0' 1
};

/// Simulates the horizon prices once and reprices under every omega (common
/// random numbers).
std::vector<HedgingModel> generate_hedging_models( const HedgingSpec& spec,
                                                   const WorstCaseModelSet& set,
                                                   std::uint64_t seed );

/// Box-mode problem over [x, mu+, mu-] with mean epigraph and risk rows for
/// every model.
ProblemSpec build_hedging_problem( const std::vector<HedgingModel>& models,
                                   const HedgingSpec& spec, double lambda );

/// lambda = theta 2 mu(0)'x* / |x*|_1 with x* the lambda = 0 nominal solution.
double hedging_lambda( const HedgingSpec& spec, double theta,
                       std::uint64_t seed, const SolverConfig& config );

struct HedgeEvaluation
{
   Vector omega;
   double es = 0.0;
   double es_stderr = 0.0;
   double mean_return = 0.0;
   double initial_es = 0.0;
   double initial_es_stderr = 0.0;
   double initial_mean_return = 0.0;
};

/// Standard error of the sample expected shortfall.
double shortfall_stderr( const VectorRef& y, double beta );

/// Out-of-sample risk and return of hedge x on each omega.
std::vector<HedgeEvaluation> evaluate_hedge( const HedgingSpec& spec,
                                             const VectorRef& hedge,
                                             const std::vector<Vector>& omegas,
                                             std::uint64_t seed );

/// omega_1 on an even grid of [-1, 1], omega_2 in {-1, 0, 1}.
std::vector<Vector> hedge_grid( Index omega1_points );

} // namespace specrisk
