#pragma once

#include <string>
#include <variant>

#include <specrisk/smoothing.hpp>
#include <specrisk/types.hpp>

namespace specrisk {

/// Which objective the solver maximizes.
enum class Variant
{
   constrained, ///< mu'x - lambda |x|_1 subject to rho_k <= alpha_k
   weighted,    ///< mu'x - lambda |x|_1 - sum_k theta_k rho_k
   max,         ///< mu'x - lambda |x|_1 - theta max_k rho_k
};

std::string to_string( Variant v );
Variant variant_from_string( const std::string& name );

/// Budget and leverage: 1'x = 1, |x|_inf <= leverage.
struct SimplexRegion
{
   double leverage = 1.0;
};

/// Box lower <= x <= upper; upper entries may be kUnbounded.
struct BoxRegion
{
   Vector lower;
   Vector upper;
};

using FeasibleRegion = std::variant<SimplexRegion, BoxRegion>;

struct ProblemSpec
{
   Vector mu;
   double lambda = 0.0;
   /// Risk models; budgets are only binding for Variant::constrained.
   RiskConstraintSet risk;
   Variant variant = Variant::constrained;
   /// Per-model weights theta_k for Variant::weighted.
   Vector weights;
   /// Multiplier theta for Variant::max.
   double theta = 0.0;
   FeasibleRegion region = SimplexRegion{};

   Index assets() const { return mu.size(); }
   bool box_mode() const { return std::holds_alternative<BoxRegion>( region ); }

   void validate() const;

   /// mu'x - lambda |x|_1
   double objective( const VectorRef& x ) const;

   /// Objective of the configured variant with exact risk measures:
   /// constrained -> objective(x), weighted -> minus sum theta_k rho_k,
   /// max -> minus theta max_k rho_k.
   double variant_objective( const VectorRef& x ) const;

   /// Largest violation of the simple constraints (0 when feasible).
   double region_violation( const VectorRef& x ) const;

   /// Starting point: uniform portfolio, or clip(0, lower, upper) in box mode.
   Vector initial_point() const;
};

/// argmax mu'x over the simple region (a vertex).
Vector linear_maximizer( const VectorRef& mu, const FeasibleRegion& region );

/// lambda* = 2 |mu'x*| / |x*|_1 with x* the linear maximizer.
double default_lambda( const VectorRef& mu, const FeasibleRegion& region );

} // namespace specrisk
