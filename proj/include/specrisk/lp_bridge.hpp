#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <specrisk/problem.hpp>
#include <specrisk/types.hpp>

namespace specrisk {

/// Sizes of the lifted LP: blocks x, xi (absolute values), z (one free
/// threshold per ES component) and y (one excess per scenario and component).
struct LPDimensions
{
   Index x = 0;
   Index xi = 0;
   Index z = 0;
   Index y = 0;
   Index risk_rows = 0;
   Index epigraph_rows = 0;
   Index abs_rows = 0;
   Index budget_rows = 0;

   Index variables() const { return x + xi + z + y; }
   Index constraints() const
   {
      return risk_rows + epigraph_rows + abs_rows + budget_rows;
   }
   /// Count that leaves out the xi and z blocks.
   Index x_plus_y() const { return x + y; }

   bool operator==( const LPDimensions& ) const = default;
};

/// Dimensions from sizes alone: every model has `scenarios` samples and
/// `components` ES levels.
LPDimensions lp_dimensions( Index assets, Index models, Index components,
                            Index scenarios, bool l1_term, bool budget_row );

LPDimensions lp_dimensions( const ProblemSpec& problem );

/// Row-oriented linear program, maximization.
struct LinearProgram
{
   enum class Sense
   {
      less,
      greater,
      equal,
   };

   struct Row
   {
      std::string name;
      std::vector<std::pair<Index, double>> terms;
      Sense sense = Sense::less;
      double rhs = 0.0;
   };

   std::vector<std::string> names;
   Vector objective;
   Vector lower;
   Vector upper;
   std::vector<Row> rows;
};

/// The lifted LP of the constrained problem. Throws std::domain_error for
/// the weighted and max variants.
LinearProgram build_lp( const ProblemSpec& problem );

/// CPLEX-LP-style text, 17 significant digits.
std::string export_lp( const ProblemSpec& problem );
std::string write_lp( const LinearProgram& lp );

/// Free MPS with an OBJSENSE MAX section.
std::string export_mps( const ProblemSpec& problem );
std::string write_mps( const LinearProgram& lp );

std::string dims_json( const LPDimensions& dims );

/// Counts variables and rows of an emitted LP document; variables are
/// classified by their name prefix.
LPDimensions parse_lp_dimensions( const std::string& lp_text );

/// Reads the value from an `objective: <value>` line.
double read_objective( std::istream& in );

/// Maps a portfolio to an LP point: xi = |x|, z = dual ES threshold,
/// y = (losses - z)^+.
Vector lift_point( const ProblemSpec& problem, const VectorRef& x );

double lp_objective( const LinearProgram& lp, const VectorRef& point );

/// Largest row or bound violation of an LP point.
double lp_violation( const LinearProgram& lp, const VectorRef& point );

struct OracleResult
{
   std::optional<Vector> x; ///< empty when no grid point is feasible
   double objective = 0.0;
   Index evaluated = 0;
};

/// Exhaustive grid search with exact measures for n <= 3, maximizing the
/// variant objective.
OracleResult tiny_oracle( const ProblemSpec& problem, double grid_step );

} // namespace specrisk
