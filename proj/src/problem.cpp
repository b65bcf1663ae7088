#include <specrisk/problem.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace specrisk {

std::string
to_string( Variant v )
{
   switch( v )
   {
   case Variant::constrained:
      return "constrained";
   case Variant::weighted:
      return "weighted";
   case Variant::max:
      return "max";
   }
   return "unknown";
}

Variant
variant_from_string( const std::string& name )
{
   if( name == "constrained" )
      return Variant::constrained;
   if( name == "weighted" )
      return Variant::weighted;
   if( name == "max" )
      return Variant::max;
   throw std::invalid_argument( fmt::format( "unknown variant '{}'", name ) );
}

void
ProblemSpec::validate() const
{
   const Index n = assets();
   if( n < 1 || !mu.allFinite() )
      throw std::domain_error( "expected returns must be finite and nonempty" );
   if( !( lambda >= 0.0 ) || !std::isfinite( lambda ) )
      throw std::domain_error( "sparsity weight must be finite and >= 0" );
   if( risk.size() < 1 )
      throw std::domain_error( "problem needs at least one risk model" );
   if( risk.assets() != n )
      throw std::domain_error( fmt::format(
          "risk models have {} assets, mu has {}", risk.assets(), n ) );

   switch( variant )
   {
   case Variant::constrained:
      break;
   case Variant::weighted:
      if( weights.size() != risk.size() || ( weights.array() < 0.0 ).any() ||
          !weights.allFinite() )
         throw std::domain_error( "weighted variant needs theta_k >= 0 per model" );
      break;
   case Variant::max:
      if( !( theta >= 0.0 ) || !std::isfinite( theta ) )
         throw std::domain_error( "max variant needs theta >= 0" );
      break;
   }

   if( const auto* s = std::get_if<SimplexRegion>( &region ) )
   {
      if( !( s->leverage > 0.0 ) || double( n ) * s->leverage < 1.0 )
         throw std::domain_error( "leverage bound must satisfy n B >= 1" );
   }
   else
   {
      const auto& b = std::get<BoxRegion>( region );
      if( b.lower.size() != n || b.upper.size() != n )
         throw std::domain_error( "box bounds need one entry per asset" );
      if( ( b.lower.array() > b.upper.array() ).any() )
         throw std::domain_error( "box lower bound exceeds upper bound" );
      if( !b.lower.allFinite() )
         throw std::domain_error( "box lower bounds must be finite" );
   }
}

double
ProblemSpec::objective( const VectorRef& x ) const
{
   return mu.dot( x ) - lambda * x.lpNorm<1>();
}

double
ProblemSpec::variant_objective( const VectorRef& x ) const
{
   switch( variant )
   {
   case Variant::constrained:
      return objective( x );
   case Variant::weighted:
      return objective( x ) - weights.dot( risk.risks( x ) );
   case Variant::max:
      return objective( x ) - theta * risk.risks( x ).maxCoeff();
   }
   return objective( x );
}

double
ProblemSpec::region_violation( const VectorRef& x ) const
{
   if( const auto* s = std::get_if<SimplexRegion>( &region ) )
   {
      const double budget = std::abs( x.sum() - 1.0 );
      const double lev = std::max( x.lpNorm<Eigen::Infinity>() - s->leverage, 0.0 );
      return std::max( budget, lev );
   }
   const auto& b = std::get<BoxRegion>( region );
   double worst = 0.0;
   for( Index i = 0; i < x.size(); ++i )
      worst = std::max( { worst, b.lower[i] - x[i], x[i] - b.upper[i] } );
   return worst;
}

Vector
ProblemSpec::initial_point() const
{
   const Index n = assets();
   if( std::holds_alternative<SimplexRegion>( region ) )
      return Vector::Constant( n, 1.0 / double( n ) );
   const auto& b = std::get<BoxRegion>( region );
   return Vector::Zero( n ).cwiseMax( b.lower ).cwiseMin( b.upper );
}

Vector
linear_maximizer( const VectorRef& mu, const FeasibleRegion& region )
{
   const Index n = mu.size();
   if( const auto* s = std::get_if<SimplexRegion>( &region ) )
   {
      // Start every weight at -B and raise the best assets first until the
      // budget 1'x = 1 is met.
      const double B = s->leverage;
      Vector x = Vector::Constant( n, -B );
      double missing = 1.0 + double( n ) * B;
      std::vector<Index> order( n );
      std::iota( order.begin(), order.end(), Index( 0 ) );
      std::stable_sort( order.begin(), order.end(),
                        [&]( Index a, Index b ) { return mu[a] > mu[b]; } );
      for( Index i : order )
      {
         const double raise = std::min( 2.0 * B, missing );
         x[i] += raise;
         missing -= raise;
         if( missing <= 0.0 )
            break;
      }
      return x;
   }
   const auto& b = std::get<BoxRegion>( region );
   Vector x( n );
   for( Index i = 0; i < n; ++i )
      x[i] = mu[i] > 0.0 ? b.upper[i] : b.lower[i];
   return x;
}

double
default_lambda( const VectorRef& mu, const FeasibleRegion& region )
{
   const Vector x = linear_maximizer( mu, region );
   const double l1 = x.lpNorm<1>();
   if( !std::isfinite( l1 ) || l1 == 0.0 )
      throw std::domain_error( "linear maximizer is unbounded or zero" );
   return 2.0 * std::abs( mu.dot( x ) ) / l1;
}

} // namespace specrisk
