#include <specrisk/solver.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include <specrisk/proximal_qp.hpp>

namespace specrisk {

namespace {

double
relative_change( const Vector& x, const Vector& previous )
{
   const double diff = ( x - previous ).norm();
   const double base = previous.norm();
   if( base == 0.0 )
      return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
   return diff / base;
}

double
smallest_nonzero_abs( const Vector& v )
{
   double best = std::numeric_limits<double>::infinity();
   for( Index i = 0; i < v.size(); ++i )
      if( v[i] != 0.0 )
         best = std::min( best, std::abs( v[i] ) );
   return best;
}

void
fill_exact_metrics( const ProblemSpec& problem, SolveReport& report )
{
   report.objective = problem.objective( report.x );
   report.risk_values = problem.risk.risks( report.x );
   report.max_violation =
       ( report.risk_values - problem.risk.budgets() ).maxCoeff();
}

} // namespace

void
SolverConfig::validate() const
{
   auto positive = []( double v ) { return v > 0.0 && std::isfinite( v ); };
   auto factor = []( double v ) { return v > 0.0 && v < 1.0; };
   if( !positive( eta0 ) || !positive( tau0 ) || !positive( delta ) ||
       !positive( varsigma ) || !positive( curvature0 ) ||
       !positive( eta_floor ) || !positive( curvature_limit ) )
      throw std::domain_error( "solver parameters must be positive" );
   if( !factor( c_eta ) || !factor( c_tau ) )
      throw std::domain_error( "c_eta and c_tau must lie in (0, 1)" );
   if( !( zeta > 1.0 ) )
      throw std::domain_error( "backtracking factor must exceed 1" );
   if( nu && !positive( *nu ) )
      throw std::domain_error( "nu must be positive" );
   if( max_outer < 1 || max_inner < 1 )
      throw std::domain_error( "iteration caps must be positive" );
}

SmoothingParams
SolverConfig::smoothing_for( const ProblemSpec& problem ) const
{
   SmoothingParams s;
   s.delta = delta;
   if( nu )
      s.nu = *nu;
   else
   {
      double scale = problem.variant == Variant::constrained
                         ? smallest_nonzero_abs( problem.risk.budgets() )
                         : smallest_nonzero_abs(
                               problem.risk.risks( problem.initial_point() ) );
      s.nu = std::isfinite( scale ) ? 0.01 * scale : 1e-4;
   }
   s.validate();
   return s;
}

LossState
SmoothObjective::losses( const Vector& x ) const
{
   LossState s;
   s.losses.reserve( problem_.risk.models().size() );
   for( const RiskModel& model : problem_.risk.models() )
      s.losses.push_back( model.portfolio_losses( x ) );
   return s;
}

LossState
SmoothObjective::extrapolate( const LossState& a, const LossState& b, double w )
{
   LossState s;
   s.losses.reserve( a.losses.size() );
   for( std::size_t k = 0; k < a.losses.size(); ++k )
      s.losses.push_back( ( 1.0 + w ) * a.losses[k] - w * b.losses[k] );
   return s;
}

double
SmoothObjective::value( const Vector& x ) const
{
   return evaluate( x, losses( x ), nullptr );
}

double
SmoothObjective::value_and_gradient( const Vector& x, Vector& grad ) const
{
   return evaluate( x, losses( x ), &grad );
}

PenalizedObjective::PenalizedObjective( const ProblemSpec& problem,
                                        SmoothingParams smoothing, double eta )
    : SmoothObjective( problem ), smoothing_( smoothing ), eta_( eta )
{
}

double
PenalizedObjective::evaluate( const Vector& x, const LossState& state,
                              Vector* grad ) const
{
   const auto& models = problem_.risk.models();
   const Index m = Index( models.size() );
   std::vector<ModelSmoothing> parts;
   parts.reserve( m );
   Vector t = Vector::Zero( m + 1 );
   for( Index k = 0; k < m; ++k )
   {
      parts.push_back( smooth_losses( models[k].measure, state.losses[k],
                                      smoothing_.nu, false ) );
      t[k] = parts.back().value - problem_.risk.budgets()[k];
   }
   const SmoothedValue outer = smoothed_max( t, smoothing_.delta );
   if( grad )
   {
      *grad = -eta_ * problem_.mu;
      for( Index k = 0; k < m; ++k )
         models[k].losses.add_transposed( outer.grad[k], parts[k].scenario_grad,
                                          *grad );
   }
   return -eta_ * problem_.mu.dot( x ) + outer.value;
}

WeightedRiskObjective::WeightedRiskObjective( const ProblemSpec& problem,
                                              double nu )
    : SmoothObjective( problem ), nu_( nu )
{
}

double
WeightedRiskObjective::evaluate( const Vector& x, const LossState& state,
                                 Vector* grad ) const
{
   const auto& models = problem_.risk.models();
   double v = -problem_.mu.dot( x );
   if( grad )
      *grad = -problem_.mu;
   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const double w = problem_.weights[Index( k )];
      if( w == 0.0 )
         continue;
      const ModelSmoothing s =
          smooth_losses( models[k].measure, state.losses[k], nu_, false );
      v += w * s.value;
      if( grad )
         models[k].losses.add_transposed( w, s.scenario_grad, *grad );
   }
   return v;
}

MaxRiskObjective::MaxRiskObjective( const ProblemSpec& problem,
                                    SmoothingParams smoothing )
    : SmoothObjective( problem ), smoothing_( smoothing )
{
}

double
MaxRiskObjective::evaluate( const Vector& x, const LossState& state,
                            Vector* grad ) const
{
   const auto& models = problem_.risk.models();
   const Index m = Index( models.size() );
   std::vector<ModelSmoothing> parts;
   parts.reserve( m );
   Vector t( m );
   for( Index k = 0; k < m; ++k )
   {
      parts.push_back( smooth_losses( models[k].measure, state.losses[k],
                                      smoothing_.nu, false ) );
      t[k] = parts.back().value;
   }
   const SmoothedValue outer = smoothed_max( t, smoothing_.delta );
   if( grad )
   {
      *grad = -problem_.mu;
      for( Index k = 0; k < m; ++k )
         models[k].losses.add_transposed( problem_.theta * outer.grad[k],
                                          parts[k].scenario_grad, *grad );
   }
   return -problem_.mu.dot( x ) + problem_.theta * outer.value;
}

Vector
prox_step( const FeasibleRegion& region, double l1_weight,
           const Vector& gradient, const Vector& anchor, double curvature )
{
   if( const auto* s = std::get_if<SimplexRegion>( &region ) )
   {
      L1SimplexBoxQP qp;
      qp.l1_weight = l1_weight;
      qp.gradient = gradient;
      qp.anchor = anchor;
      qp.curvature = curvature;
      qp.bound = s->leverage;
      return solve_l1_simplex_box( qp ).x;
   }
   const auto& b = std::get<BoxRegion>( region );
   return solve_box_prox( l1_weight, gradient, anchor, curvature, b.lower,
                          b.upper );
}

FistaResult
fista( const Vector& start, double curvature, double l1_weight, double tau,
       const SmoothObjective& smooth, const FeasibleRegion& region,
       Index max_inner, double growth, double curvature_limit )
{
   FistaResult out;
   out.x = start;
   out.curvature = curvature;

   double t = 1.0;
   Vector y = start;
   LossState x_state = smooth.losses( start );
   LossState y_state = x_state;
   LossState prev_state;
   Vector grad;
   Vector previous;
   while( true )
   {
      previous = out.x;
      prev_state = std::move( x_state );
      const double t_prev = t;
      const double smooth_y = smooth.evaluate( y, y_state, &grad );

      // Backtracking: grow C until the quadratic model bounds the objective.
      // The l1 terms of F and Q coincide and are left out.
      double C = out.curvature;
      bool first = true;
      while( true )
      {
         if( !first )
            ++out.backtracks;
         first = false;
         out.x = prox_step( region, l1_weight, grad, y, C );
         x_state = smooth.losses( out.x );
         const Vector step = out.x - y;
         const double F = smooth.evaluate( out.x, x_state, nullptr );
         const double Q =
             smooth_y + grad.dot( step ) + 0.5 * C * step.squaredNorm();
         C *= growth;
         // Roundoff-level slack keeps converged iterates (x == y) from
         // rejecting forever.
         if( F < Q || F - Q <= 1e-14 * ( 1.0 + std::abs( F ) ) )
            break;
         if( C > curvature_limit )
            throw NumericalFailure( fmt::format(
                "curvature estimate exceeded {:g} during backtracking",
                curvature_limit ) );
      }
      out.curvature = C / growth;

      t = 0.5 * ( 1.0 + std::sqrt( 1.0 + 4.0 * t_prev * t_prev ) );
      const double w = ( t_prev - 1.0 ) / t;
      y = out.x + w * ( out.x - previous );
      y_state = w == 0.0 ? x_state
                         : SmoothObjective::extrapolate( x_state, prev_state, w );
      ++out.iterations;

      out.last_change = relative_change( out.x, previous );
      if( out.last_change <= tau )
         break;
      if( out.iterations >= max_inner )
      {
         out.capped = true;
         break;
      }
   }
   return out;
}

FistaResult
fista( const Vector& start, double curvature, double eta, double tau,
       const SmoothingParams& smoothing, const ProblemSpec& problem,
       const SolverConfig& config )
{
   switch( problem.variant )
   {
   case Variant::constrained:
   {
      PenalizedObjective smooth( problem, smoothing, eta );
      return fista( start, curvature, eta * problem.lambda, tau, smooth,
                    problem.region, config.max_inner, config.zeta,
                    config.curvature_limit );
   }
   case Variant::weighted:
   {
      WeightedRiskObjective smooth( problem, smoothing.nu );
      return fista( start, curvature, eta * problem.lambda, tau, smooth,
                    problem.region, config.max_inner, config.zeta,
                    config.curvature_limit );
   }
   case Variant::max:
   {
      MaxRiskObjective smooth( problem, smoothing );
      return fista( start, curvature, eta * problem.lambda, tau, smooth,
                    problem.region, config.max_inner, config.zeta,
                    config.curvature_limit );
   }
   }
   throw std::logic_error( "unreachable variant" );
}

std::string
to_string( SolveStatus s )
{
   switch( s )
   {
   case SolveStatus::converged:
      return "converged";
   case SolveStatus::infeasible_at_tolerance:
      return "infeasible_at_tolerance";
   case SolveStatus::numerical_failure:
      return "numerical_failure";
   }
   return "unknown";
}

SolveReport
spec_risk_allocate( const ProblemSpec& problem, const SolverConfig& config )
{
   return spec_risk_allocate( problem, config, {} );
}

SolveReport
spec_risk_allocate( const ProblemSpec& problem, const SolverConfig& config,
                    const OuterCallback& callback )
{
   const auto started = std::chrono::steady_clock::now();
   problem.validate();
   config.validate();

   const bool constrained = problem.variant == Variant::constrained;
   const SmoothingParams smoothing = config.smoothing_for( problem );

   SolveReport report;
   report.variant = problem.variant;
   report.nu = smoothing.nu;
   report.delta = smoothing.delta;
   report.x = problem.initial_point();

   // The risk-weighted variants have no penalty to continue on; they keep
   // eta = 1 and only tighten tau.
   double eta = constrained ? config.eta0 : 1.0;
   double tau = config.tau0;
   double C = config.curvature0;
   bool done = false;

   try
   {
      for( Index outer = 1; outer <= config.max_outer; ++outer )
      {
         const Vector previous = report.x;
         const FistaResult inner =
             fista( previous, C, eta, tau, smoothing, problem, config );
         report.x = inner.x;
         C = inner.curvature;
         report.inner_iterations += inner.iterations;
         report.backtracks += inner.backtracks;

         OuterRecord rec;
         rec.outer = outer;
         rec.eta = eta;
         rec.tau = tau;
         rec.inner_iterations = inner.iterations;
         rec.backtracks = inner.backtracks;
         rec.curvature = C;
         rec.inner_capped = inner.capped;
         rec.relative_change = relative_change( report.x, previous );
         rec.max_violation = problem.risk.max_violation( report.x );
         rec.objective = problem.objective( report.x );
         rec.stalled = constrained && rec.relative_change == 0.0 &&
                       rec.max_violation >= config.varsigma;
         report.trace.push_back( rec );
         report.outer_iterations = outer;
         report.eta_final = eta;

         if( constrained )
            eta *= config.c_eta;
         tau *= config.c_tau;

         const bool settled = rec.relative_change < config.varsigma;
         if( settled && ( !constrained || rec.max_violation < config.varsigma ) )
         {
            done = true;
            break;
         }
         if( callback && !callback( rec, report.x ) )
            break;
         if( constrained && eta < config.eta_floor * config.eta0 )
         {
            report.message = "penalty scale reached its floor";
            break;
         }
      }
      report.status = done ? SolveStatus::converged
                           : SolveStatus::infeasible_at_tolerance;
      if( !done && report.message.empty() )
         report.message = "outer iteration limit reached or stopped early";
   }
   catch( const NumericalFailure& e )
   {
      report.status = SolveStatus::numerical_failure;
      report.message = e.what();
   }

   report.curvature_final = C;
   fill_exact_metrics( problem, report );
   report.wall_time = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - started )
                          .count();
   return report;
}

SolveReport
solve_weighted( const ProblemSpec& problem, const SolverConfig& config )
{
   if( problem.variant != Variant::weighted )
      throw std::domain_error( "solve_weighted needs the weighted variant" );
   return spec_risk_allocate( problem, config );
}

SolveReport
solve_max( const ProblemSpec& problem, const SolverConfig& config )
{
   if( problem.variant != Variant::max )
      throw std::domain_error( "solve_max needs the max variant" );
   return spec_risk_allocate( problem, config );
}

Vector
recover_feasible( const VectorRef& x_bar, const VectorRef& z_strict,
                  const ProblemSpec& problem )
{
   const double gz = problem.risk.max_violation( z_strict );
   if( !( gz < 0.0 ) )
      throw std::domain_error( fmt::format(
          "recovery point is not strictly feasible: g_max(z) = {}", gz ) );
   const double gx = problem.risk.max_violation( x_bar );
   const double theta = std::max( gx / std::abs( gz ), 0.0 );
   return ( x_bar + theta * z_strict ) / ( 1.0 + theta );
}

double
eta_star( const VectorRef& z_strict, double upper_bound,
          const ProblemSpec& problem )
{
   const double gz = problem.risk.max_violation( z_strict );
   if( !( gz < 0.0 ) )
      throw std::domain_error( "eta_star needs a strictly feasible point" );
   const double gap = upper_bound - problem.objective( z_strict );
   if( !( gap > 0.0 ) )
      throw std::domain_error( "eta_star needs P_u above the objective at z" );
   return std::abs( gz ) / gap;
}

double
objective_upper_bound( const ProblemSpec& problem )
{
   const Vector x = linear_maximizer( problem.mu, problem.region );
   return problem.mu.dot( x );
}

} // namespace specrisk
