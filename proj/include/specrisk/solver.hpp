#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include <specrisk/problem.hpp>
#include <specrisk/smoothing.hpp>
#include <specrisk/types.hpp>

namespace specrisk {

/// Raised when backtracking drives the curvature estimate past its limit.
class NumericalFailure : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

struct SolverConfig
{
   double eta0 = 10.0;  ///< initial objective scale
   double c_eta = 0.99; ///< scale decrease factor
   double tau0 = 1e-4;  ///< initial inner tolerance
   double c_tau = 0.95; ///< inner tolerance decrease factor
   /// Shortfall smoothing; defaults to 0.01 min |alpha_k| (see smoothing_for).
   std::optional<double> nu;
   double delta = 1e-2;
   double varsigma = 1e-2; ///< outer tolerance
   double zeta = 1.5;      ///< backtracking growth factor
   Index max_outer = 2000;
   Index max_inner = 5000;
   double curvature0 = 1.0;
   /// Continuation gives up once eta < eta_floor * eta0.
   double eta_floor = 1e-12;
   /// Upper limit on the curvature estimate.
   double curvature_limit = 1e16;

   void validate() const;

   /// Resolves nu: explicit value, else 0.01 min over nonzero |alpha_k|
   /// (constrained) or over nonzero |rho_k| at the starting point.
   SmoothingParams smoothing_for( const ProblemSpec& problem ) const;
};

/// Portfolio losses offset_k + L_k x of every risk model at one point.
struct LossState
{
   std::vector<Vector> losses;
};

/// Differentiable part of a composite objective; the l1 term and the simple
/// constraints are handled by the prox step. The objective depends on x only
/// through mu'x and the losses, which are affine in x, so FISTA can form the
/// losses at extrapolated points without another product with L.
class SmoothObjective
{
public:
   explicit SmoothObjective( const ProblemSpec& problem ) : problem_( problem ) {}
   virtual ~SmoothObjective() = default;

   LossState losses( const Vector& x ) const;

   /// Losses at a + w (a - b) from the losses at a and b.
   static LossState extrapolate( const LossState& a, const LossState& b,
                                 double w );

   /// Value at x given its losses; fills grad when non-null.
   virtual double evaluate( const Vector& x, const LossState& state,
                            Vector* grad ) const = 0;

   double value( const Vector& x ) const;
   double value_and_gradient( const Vector& x, Vector& grad ) const;

protected:
   const ProblemSpec& problem_;
};

/// -eta mu'x + g_{nu,delta}(x)
class PenalizedObjective final : public SmoothObjective
{
public:
   PenalizedObjective( const ProblemSpec& problem, SmoothingParams smoothing,
                       double eta );
   double evaluate( const Vector& x, const LossState& state,
                    Vector* grad ) const override;

private:
   SmoothingParams smoothing_;
   double eta_;
};

/// -mu'x + sum_k theta_k rho_k^(nu)(x)
class WeightedRiskObjective final : public SmoothObjective
{
public:
   WeightedRiskObjective( const ProblemSpec& problem, double nu );
   double evaluate( const Vector& x, const LossState& state,
                    Vector* grad ) const override;

private:
   double nu_;
};

/// -mu'x + theta Psi^(delta)(rho_1^(nu)(x), ..., rho_m^(nu)(x))
class MaxRiskObjective final : public SmoothObjective
{
public:
   MaxRiskObjective( const ProblemSpec& problem, SmoothingParams smoothing );
   double evaluate( const Vector& x, const LossState& state,
                    Vector* grad ) const override;

private:
   SmoothingParams smoothing_;
};

/// Prox of l1_weight |x|_1 + gradient'(x - anchor) + C/2 |x - anchor|^2 over
/// the simple region.
Vector prox_step( const FeasibleRegion& region, double l1_weight,
                  const Vector& gradient, const Vector& anchor,
                  double curvature );

struct FistaResult
{
   Vector x;
   double curvature = 1.0;
   Index iterations = 0;
   Index backtracks = 0;
   /// Inner iteration cap reached before the tolerance test passed.
   bool capped = false;
   double last_change = 0.0;
};

/// Accelerated proximal gradient with the backtracking scheme that only
/// grows C within a call. Stops when |x - x_prev| / |x_prev| <= tau.
FistaResult fista( const Vector& start, double curvature, double l1_weight,
                   double tau, const SmoothObjective& smooth,
                   const FeasibleRegion& region, Index max_inner,
                   double growth = 1.5, double curvature_limit = 1e16 );

/// One FISTA run on the problem's own objective at scale eta.
FistaResult fista( const Vector& start, double curvature, double eta,
                   double tau, const SmoothingParams& smoothing,
                   const ProblemSpec& problem, const SolverConfig& config );

enum class SolveStatus
{
   converged,
   infeasible_at_tolerance, ///< outer cap or eta floor hit before feasibility
   numerical_failure,
};

std::string to_string( SolveStatus s );

struct OuterRecord
{
   Index outer = 0;
   double eta = 0.0;
   double tau = 0.0;
   Index inner_iterations = 0;
   Index backtracks = 0;
   double curvature = 0.0;
   double relative_change = 0.0;
   double max_violation = 0.0;
   double objective = 0.0;
   bool inner_capped = false;
   /// The inner run returned its start point while still infeasible.
   bool stalled = false;
};

struct SolveReport
{
   Vector x;
   double objective = 0.0;
   Vector risk_values;
   double max_violation = 0.0;
   Index outer_iterations = 0;
   Index inner_iterations = 0;
   Index backtracks = 0;
   double eta_final = 0.0;
   double curvature_final = 0.0;
   SolveStatus status = SolveStatus::converged;
   std::string message;
   double nu = 0.0;
   double delta = 0.0;
   Variant variant = Variant::constrained;
   std::vector<OuterRecord> trace;
   double wall_time = 0.0;
};

/// Continuation driver: repeated FISTA runs with decreasing eta and tau until
/// the iterate settles and is varsigma-feasible. Dispatches on the variant.
SolveReport spec_risk_allocate( const ProblemSpec& problem,
                                const SolverConfig& config );

/// Optional per-outer-iteration hook; returning false stops the driver.
using OuterCallback = std::function<bool( const OuterRecord&, const Vector& )>;

SolveReport spec_risk_allocate( const ProblemSpec& problem,
                                const SolverConfig& config,
                                const OuterCallback& callback );

SolveReport solve_weighted( const ProblemSpec& problem,
                            const SolverConfig& config );

SolveReport solve_max( const ProblemSpec& problem, const SolverConfig& config );

/// Mixes x_bar with a strictly feasible z so that the result is feasible:
/// theta = max{g_max(x_bar) / |g_max(z)|, 0}, x = (x_bar + theta z)/(1 + theta).
Vector recover_feasible( const VectorRef& x_bar, const VectorRef& z_strict,
                         const ProblemSpec& problem );

/// Penalty level |g_max(z)| / (P_u - (mu'z - lambda |z|_1)).
double eta_star( const VectorRef& z_strict, double upper_bound,
                 const ProblemSpec& problem );

/// Valid upper bound on the optimal value: max mu'x over the simple region.
double objective_upper_bound( const ProblemSpec& problem );

} // namespace specrisk
