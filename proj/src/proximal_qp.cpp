#include <specrisk/proximal_qp.hpp>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace specrisk {

namespace {

/// A point where the slope of gamma -> sum_i x_i(gamma) changes by
/// `delta` units, counted while gamma decreases.
struct Breakpoint
{
   double at;
   int delta;
};

/// Finds gamma with s(gamma) = target where s is the non-increasing piecewise
/// linear map equal to `upper_sum` for gamma above every breakpoint and whose
/// slope (in -gamma) is `unit` times the running sum of deltas. `next` yields
/// breakpoints in descending order and returns false when exhausted.
///
/// A flat segment lying exactly at the target returns its midpoint.
template <typename NextBreakpoint>
double
scan_for_root( NextBreakpoint&& next, double upper_sum, double target,
               double unit )
{
   const double hit_tol = 1e-12 * std::abs( target );

   Breakpoint bp;
   if( !next( bp ) )
      throw std::domain_error( "dual search has no breakpoints" );

   double sum = upper_sum;
   double at = bp.at;
   long slope = 0;
   bool pending = true;

   while( true )
   {
      // Apply every breakpoint sitting at `at`.
      slope += bp.delta;
      pending = next( bp );
      while( pending && bp.at == at )
      {
         slope += bp.delta;
         pending = next( bp );
      }
      assert( slope >= 0 );

      if( target - sum <= hit_tol && slope == 0 )
      {
         // Flat segment at the target: [next breakpoint, at].
         return pending ? 0.5 * ( at + bp.at ) : at;
      }
      if( !pending )
      {
         // Every coordinate at its cap: the sum is exhausted up to roundoff.
         if( slope == 0 && target - sum <= 1e-9 * std::abs( target ) )
            return at;
         if( slope <= 0 )
            throw std::domain_error( "dual search: target sum unreachable" );
         return at - ( target - sum ) / ( unit * double( slope ) );
      }

      const double reach = sum + unit * double( slope ) * ( at - bp.at );
      if( reach >= target - hit_tol && slope > 0 )
      {
         const double root = at - ( target - sum ) / ( unit * double( slope ) );
         if( root > bp.at )
            return root;
         // Target reached exactly at the next breakpoint; let the next pass
         // decide between a sloped root and a flat segment.
         sum = target;
      }
      else
         sum = reach;
      at = bp.at;
   }
}

} // namespace

DualSolution
solve_capped_simplex( const CappedSimplexQP& qp )
{
   const Index n = qp.c.size();
   if( n < 1 || qp.cap.size() != n )
      throw std::domain_error( "capped simplex: size mismatch" );
   if( ( qp.cap.array() < 0.0 ).any() )
      throw std::domain_error( "capped simplex: negative cap" );
   if( qp.cap.sum() < 1.0 - 1e-12 )
      throw std::domain_error( fmt::format(
          "capped simplex infeasible: caps sum to {}", qp.cap.sum() ) );

   std::vector<Breakpoint> points;
   points.reserve( 2 * n );
   for( Index i = 0; i < n; ++i )
   {
      points.push_back( { qp.c[i], +1 } );
      if( std::isfinite( qp.cap[i] ) )
         points.push_back( { qp.c[i] - qp.cap[i], -1 } );
   }
   std::stable_sort( points.begin(), points.end(),
                     []( const Breakpoint& a, const Breakpoint& b ) {
                        return a.at > b.at;
                     } );

   std::size_t pos = 0;
   auto next = [&]( Breakpoint& bp ) {
      if( pos == points.size() )
         return false;
      bp = points[pos++];
      return true;
   };
   const double gamma = scan_for_root( next, 0.0, 1.0, 1.0 );

   DualSolution out;
   out.multiplier = gamma;
   out.x.resize( n );
   for( Index i = 0; i < n; ++i )
      out.x[i] = std::min( std::max( qp.c[i] - gamma, 0.0 ), qp.cap[i] );
   return out;
}

double
capped_simplex_multiplier_sorted( const double* c, Index n, double cap,
                                  double mass )
{
   if( n < 1 || !( cap >= 0.0 ) || cap * double( n ) < mass * ( 1.0 - 1e-12 ) )
      throw std::domain_error( "capped simplex infeasible" );
   // Caps exhaust the mass: every coordinate sits at its cap.
   if( cap * double( n ) <= mass * ( 1.0 + 1e-12 ) )
      return c[n - 1] - cap;

   // Merge the descending sequences c_i (+1) and c_i - cap (-1).
   Index enter = 0;
   Index leave = 0;
   const bool capped = std::isfinite( cap );
   auto next = [&]( Breakpoint& bp ) {
      const bool has_enter = enter < n;
      const bool has_leave = capped && leave < n;
      if( !has_enter && !has_leave )
         return false;
      if( has_enter && ( !has_leave || c[enter] >= c[leave] - cap ) )
         bp = { c[enter++], +1 };
      else
      {
         bp = { c[leave] - cap, -1 };
         ++leave;
      }
      return true;
   };
   return scan_for_root( next, 0.0, mass, 1.0 );
}

DescendingPrefix::DescendingPrefix( const VectorRef& values )
    : work_( values.data(), values.data() + values.size() )
{
}

double
DescendingPrefix::ensure( Index k )
{
   const Index n = size();
   k = std::min( k, n );
   if( k > ordered_ )
   {
      auto first = work_.begin() + ordered_;
      if( k < n )
         std::nth_element( first, work_.begin() + k, work_.end(),
                           std::greater<>() );
      std::sort( first, work_.begin() + k, std::greater<>() );
      ordered_ = k;
   }
   if( k >= n )
      return -std::numeric_limits<double>::infinity();
   // Either inside the ordered prefix, or the pivot nth_element left at the
   // prefix end, which bounds every unordered entry.
   return work_[k];
}

double
capped_simplex_multiplier( DescendingPrefix& c, double cap, double mass )
{
   const Index n = c.size();
   // The root only involves entries above it, so order a growing prefix
   // until the root provably lies above the first unordered value.
   Index k = std::min<Index>(
       n, std::max<Index>( 64, Index( 4.0 * mass / cap ) + 8 ) );
   while( true )
   {
      const double boundary = c.ensure( k );
      if( k >= n )
         return capped_simplex_multiplier_sorted( c.data(), n, cap, mass );
      if( cap * double( k ) >= mass )
      {
         const double gamma =
             capped_simplex_multiplier_sorted( c.data(), k, cap, mass );
         if( gamma >= boundary )
            return gamma;
      }
      k = std::min( n, 2 * k );
   }
}

DualSolution
solve_l1_simplex_box( const L1SimplexBoxQP& qp )
{
   const Index n = qp.gradient.size();
   if( n < 1 || qp.anchor.size() != n )
      throw std::domain_error( "l1 simplex box: size mismatch" );
   if( !( qp.curvature > 0.0 ) || !( qp.bound > 0.0 ) ||
       !( qp.l1_weight >= 0.0 ) )
      throw std::domain_error( "l1 simplex box: invalid parameters" );
   if( double( n ) * qp.bound < 1.0 )
      throw std::domain_error( "l1 simplex box infeasible: n B < 1" );

   const double C = qp.curvature;
   const double lam = qp.l1_weight;
   const double CB = C * qp.bound;

   // x_i(g) = min{(cu_i - g)/C, B}^+ - min{(cl_i + g)/C, B}^+ with
   // cu_i = a_i - lam and cl_i = -a_i - lam, a_i = C y_i - xi_i.
   std::vector<Breakpoint> points;
   points.reserve( 4 * n );
   Vector a = C * qp.anchor - qp.gradient;
   for( Index i = 0; i < n; ++i )
   {
      points.push_back( { a[i] + lam + CB, +1 } );
      points.push_back( { a[i] + lam, -1 } );
      points.push_back( { a[i] - lam, +1 } );
      points.push_back( { a[i] - lam - CB, -1 } );
   }
   std::stable_sort( points.begin(), points.end(),
                     []( const Breakpoint& l, const Breakpoint& r ) {
                        return l.at > r.at;
                     } );

   std::size_t pos = 0;
   auto next = [&]( Breakpoint& bp ) {
      if( pos == points.size() )
         return false;
      bp = points[pos++];
      return true;
   };
   const double gamma =
       scan_for_root( next, -double( n ) * qp.bound, 1.0, 1.0 / C );

   DualSolution out;
   out.multiplier = gamma;
   out.x.resize( n );
   for( Index i = 0; i < n; ++i )
   {
      const double w = std::min( ( a[i] - lam - gamma ) / C, qp.bound );
      const double v = std::min( ( -a[i] - lam + gamma ) / C, qp.bound );
      const double wp = std::max( w, 0.0 );
      const double vp = std::max( v, 0.0 );
      // Long and short parts are never active together.
      assert( wp == 0.0 || vp == 0.0 );
      out.x[i] = wp - vp;
   }
   return out;
}

Vector
solve_box_prox( double l1_weight, const VectorRef& gradient,
                const VectorRef& anchor, double curvature,
                const VectorRef& lower, const VectorRef& upper )
{
   const Index n = gradient.size();
   if( anchor.size() != n || lower.size() != n || upper.size() != n )
      throw std::domain_error( "box prox: size mismatch" );
   if( !( curvature > 0.0 ) || !( l1_weight >= 0.0 ) )
      throw std::domain_error( "box prox: invalid parameters" );

   Vector x( n );
   const double shrink = l1_weight / curvature;
   for( Index i = 0; i < n; ++i )
   {
      if( lower[i] > upper[i] )
         throw std::domain_error(
             fmt::format( "box prox: lower > upper at {}", i ) );
      const double step = anchor[i] - gradient[i] / curvature;
      const double soft =
          std::copysign( std::max( std::abs( step ) - shrink, 0.0 ), step );
      x[i] = std::clamp( soft, lower[i], upper[i] );
   }
   return x;
}

} // namespace specrisk
