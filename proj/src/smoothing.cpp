#include <specrisk/smoothing.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include <specrisk/proximal_qp.hpp>

namespace specrisk {

namespace {

/// Maximizer of zeta'q - nu/2 |q|^2 over the common-cap simplex, written
/// into q, given the ordered prefix of zeta. Returns the maximum.
double
shortfall_component( const VectorRef& zeta, DescendingPrefix& ordered,
                     double beta, double nu, Vector& q )
{
   const Index n = zeta.size();
   const double cap = 1.0 / double( tail_count( beta, n ) );

   // With q = min{(zeta - t)/nu, cap}^+, 1'q = 1 reads
   // sum min{zeta - t, nu cap}^+ = nu.
   const double t = capped_simplex_multiplier( ordered, nu * cap, nu );

   // Value in the form t + sum (s q - nu/2 q^2), s = zeta - t: avoids the
   // cancellation in zeta'q when nu is small.
   q.resize( n );
   double value = 0.0;
   for( Index i = 0; i < n; ++i )
   {
      const double s = zeta[i] - t;
      const double qi = std::clamp( s / nu, 0.0, cap );
      q[i] = qi;
      value += qi * ( s - 0.5 * nu * qi );
   }
   return t + value;
}

} // namespace

void
SmoothingParams::validate() const
{
   if( !( nu > 0.0 ) || !( delta > 0.0 ) || !std::isfinite( nu ) ||
       !std::isfinite( delta ) )
      throw std::domain_error(
          fmt::format( "smoothing needs nu, delta > 0 (got {}, {})", nu,
                       delta ) );
}

Vector
RiskModel::portfolio_losses( const VectorRef& x ) const
{
   Vector y = losses.losses( x );
   if( offset.size() != 0 )
      y += offset;
   return y;
}

double
RiskModel::risk( const VectorRef& x ) const
{
   return generalized_spectral_risk( portfolio_losses( x ), measure );
}

RiskConstraintSet::RiskConstraintSet( std::vector<RiskModel> models,
                                      Vector budgets )
    : models_( std::move( models ) ), budgets_( std::move( budgets ) )
{
   if( models_.empty() )
      throw std::domain_error( "risk constraint set needs at least one model" );
   if( budgets_.size() != Index( models_.size() ) )
      throw std::domain_error( "one budget per risk model required" );
   if( !budgets_.allFinite() )
      throw std::domain_error( "risk budgets must be finite" );
   const Index n = models_.front().assets();
   for( const auto& m : models_ )
   {
      if( m.assets() != n )
         throw std::domain_error( "risk models disagree on asset count" );
      if( m.offset.size() != 0 && m.offset.size() != m.scenarios() )
         throw std::domain_error( "loss offset length != scenario count" );
   }
}

Index
RiskConstraintSet::assets() const
{
   return models_.empty() ? 0 : models_.front().assets();
}

Vector
RiskConstraintSet::risks( const VectorRef& x ) const
{
   Vector r( size() );
   for( Index k = 0; k < size(); ++k )
      r[k] = models_[k].risk( x );
   return r;
}

double
RiskConstraintSet::max_violation( const VectorRef& x ) const
{
   return ( risks( x ) - budgets_ ).maxCoeff();
}

SmoothedValue
smoothed_es( const VectorRef& zeta, double beta, double nu )
{
   if( !( nu > 0.0 ) )
      throw std::domain_error( "smoothed_es needs nu > 0" );
   if( zeta.size() < 1 )
      throw std::domain_error( "smoothed_es needs a nonempty argument" );
   DescendingPrefix ordered( zeta );
   SmoothedValue out;
   out.value = shortfall_component( zeta, ordered, beta, nu, out.grad );
   return out;
}

SmoothedValue
smoothed_max( const VectorRef& t, double delta )
{
   if( !( delta > 0.0 ) )
      throw std::domain_error( "smoothed_max needs delta > 0" );
   CappedSimplexQP qp{ t / delta, Vector::Constant( t.size(), kUnbounded ) };
   const DualSolution sol = solve_capped_simplex( qp );
   SmoothedValue out;
   out.grad = sol.x;
   const double level = delta * sol.multiplier;
   for( Index i = 0; i < t.size(); ++i )
      out.value += sol.x[i] * ( t[i] - level - 0.5 * delta * sol.x[i] );
   out.value += level;
   return out;
}

SmoothedValue
smoothed_spectral_risk( const VectorRef& zeta, const SpectralMeasure& measure,
                        double nu )
{
   if( !( nu > 0.0 ) )
      throw std::domain_error( "smoothed_spectral_risk needs nu > 0" );
   DescendingPrefix ordered( zeta );
   SmoothedValue out;
   out.grad = Vector::Zero( zeta.size() );
   Vector q;
   for( Index l = 0; l < measure.components(); ++l )
   {
      const double g = measure.gamma()[l];
      out.value += g * shortfall_component( zeta, ordered, measure.beta()[l],
                                            nu, q );
      out.grad += g * q;
   }
   return out;
}

ModelSmoothing
smooth_model( const RiskModel& model, const VectorRef& x, double nu,
              bool keep_duals )
{
   return smooth_losses( model.measure, model.portfolio_losses( x ), nu,
                         keep_duals );
}

ModelSmoothing
smooth_losses( const SpectralMeasure& measure, Vector losses, double nu,
               bool keep_duals )
{
   ModelSmoothing out;
   out.losses = std::move( losses );
   DescendingPrefix ordered( out.losses );
   out.scenario_grad = Vector::Zero( out.losses.size() );
   Vector q;
   for( Index l = 0; l < measure.components(); ++l )
   {
      const double g = measure.gamma()[l];
      out.value += g * shortfall_component( out.losses, ordered,
                                            measure.beta()[l], nu, q );
      out.scenario_grad += g * q;
      if( keep_duals )
         out.duals.push_back( q );
   }
   return out;
}

SmoothedPenalty
smoothed_g( const VectorRef& x, const RiskConstraintSet& constraints,
            const SmoothingParams& params )
{
   params.validate();
   const Index m = constraints.size();
   SmoothedPenalty out;
   GradientWorkspace& ws = out.workspace;
   ws.smoothed_risks.resize( m );

   std::vector<Vector> scenario_grads;
   scenario_grads.reserve( m );
   Vector t = Vector::Zero( m + 1 );
   for( Index k = 0; k < m; ++k )
   {
      ModelSmoothing s =
          smooth_model( constraints.models()[k], x, params.nu, true );
      ws.smoothed_risks[k] = s.value;
      t[k] = s.value - constraints.budgets()[k];
      ws.losses.push_back( std::move( s.losses ) );
      ws.duals.push_back( std::move( s.duals ) );
      scenario_grads.push_back( std::move( s.scenario_grad ) );
   }

   const SmoothedValue outer = smoothed_max( t, params.delta );
   out.value = outer.value;
   ws.outer = outer.grad;

   out.grad = Vector::Zero( x.size() );
   for( Index k = 0; k < m; ++k )
   {
      if( ws.outer[k] == 0.0 )
         continue;
      constraints.models()[k].losses.add_transposed( ws.outer[k],
                                                     scenario_grads[k], out.grad );
   }
   return out;
}

double
smoothed_g_value( const VectorRef& x, const RiskConstraintSet& constraints,
                  const SmoothingParams& params )
{
   params.validate();
   const Index m = constraints.size();
   Vector t = Vector::Zero( m + 1 );
   for( Index k = 0; k < m; ++k )
      t[k] = smooth_model( constraints.models()[k], x, params.nu, false ).value -
             constraints.budgets()[k];
   return smoothed_max( t, params.delta ).value;
}

} // namespace specrisk
