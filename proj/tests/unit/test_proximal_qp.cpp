#include <algorithm>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include <specrisk/proximal_qp.hpp>

#include "oracles.hpp"

using namespace specrisk;

namespace {

Vector
random_vector( std::mt19937_64& rng, Index n, double scale )
{
   std::normal_distribution<double> normal( 0.0, scale );
   Vector v( n );
   for( auto& x : v )
      x = normal( rng );
   return v;
}

double
capped_objective( const Vector& c, const Vector& x )
{
   return c.dot( x ) - 0.5 * x.squaredNorm();
}

} // namespace

TEST( CappedSimplex, ZeroLinearTerm )
{
   const DualSolution s = solve_capped_simplex( { Vector::Zero( 5 ), Vector::Ones( 5 ) } );
   for( Index i = 0; i < 5; ++i )
      EXPECT_NEAR( s.x[i], 0.2, 1e-15 );
}

TEST( CappedSimplex, AlreadyOnSimplex )
{
   Vector c( 2 );
   c << 0.6, 0.4;
   const DualSolution s = solve_capped_simplex( { c, Vector::Constant( 2, kUnbounded ) } );
   EXPECT_NEAR( s.multiplier, 0.0, 1e-15 );
   EXPECT_NEAR( s.x[0], 0.6, 1e-15 );
   EXPECT_NEAR( s.x[1], 0.4, 1e-15 );
}

TEST( CappedSimplex, MatchesProjectedGradient )
{
   std::mt19937_64 rng( 17 );
   for( int trial = 0; trial < 20; ++trial )
   {
      const Vector c = random_vector( rng, 10, 1.0 );
      const Vector cap = Vector::Constant( 10, 0.3 );
      const DualSolution s = solve_capped_simplex( { c, cap } );
      const Vector ref = oracle::pg_capped_simplex( c, cap, 50 );
      EXPECT_LE( ( s.x - ref ).lpNorm<Eigen::Infinity>(), 1e-10 );
   }
}

TEST( CappedSimplex, CapsExhaustMass )
{
   // Every coordinate at its cap; roundoff in cap * n must not break the search.
   for( Index n : { 3, 7, 10, 250, 5000 } )
   {
      const double cap = 1.0 / double( n );
      std::mt19937_64 rng{ std::uint64_t( n ) };
      Vector c = random_vector( rng, n, 1.0 );
      std::sort( c.data(), c.data() + n, std::greater<>() );
      const double g = capped_simplex_multiplier_sorted( c.data(), n, cap );
      const double total =
          ( c.array() - g ).max( 0.0 ).min( cap ).sum();
      EXPECT_NEAR( total, 1.0, 1e-12 ) << n;

      DescendingPrefix prefix( random_vector( rng, n, 1.0 ) );
      EXPECT_NO_THROW( capped_simplex_multiplier( prefix, cap ) );
   }
}

TEST( CappedSimplex, SortedAndPrefixAgree )
{
   std::mt19937_64 rng( 23 );
   for( int trial = 0; trial < 200; ++trial )
   {
      const Index n = 1 + Index( rng() % 200 );
      const Index kappa = 1 + Index( rng() % n );
      const double cap = 1.0 / double( kappa );
      const Vector c = random_vector( rng, n, 2.0 );
      Vector sorted = c;
      std::sort( sorted.data(), sorted.data() + n, std::greater<>() );
      DescendingPrefix prefix( c );
      const double a = capped_simplex_multiplier_sorted( sorted.data(), n, cap );
      const double b = capped_simplex_multiplier( prefix, cap );
      const Vector xa = ( c.array() - a ).max( 0.0 ).min( cap );
      const Vector xb = ( c.array() - b ).max( 0.0 ).min( cap );
      EXPECT_LE( ( xa - xb ).lpNorm<Eigen::Infinity>(), 1e-12 );
      EXPECT_NEAR( xa.sum(), 1.0, 1e-12 );
   }
}

TEST( L1SimplexBox, ProjectionOfOrigin )
{
   L1SimplexBoxQP qp;
   qp.gradient = Vector::Zero( 3 );
   qp.anchor = Vector::Zero( 3 );
   const DualSolution s = solve_l1_simplex_box( qp );
   for( Index i = 0; i < 3; ++i )
      EXPECT_NEAR( s.x[i], 1.0 / 3.0, 1e-15 );
}

TEST( L1SimplexBox, PlainProjection )
{
   std::mt19937_64 rng( 29 );
   for( int trial = 0; trial < 20; ++trial )
   {
      const Index n = 2 + Index( rng() % 8 );
      const double B = 0.5 + double( rng() % 4 ) * 0.5;
      L1SimplexBoxQP qp;
      const Vector c = random_vector( rng, n, 2.0 );
      qp.gradient = -c;
      qp.anchor = Vector::Zero( n );
      qp.bound = B;
      const Vector ref = oracle::project_box_hyperplane(
          c, Vector::Constant( n, -B ), Vector::Constant( n, B ) );
      EXPECT_LE( ( solve_l1_simplex_box( qp ).x - ref ).lpNorm<Eigen::Infinity>(), 1e-12 );
   }
}

TEST( L1SimplexBox, LargeWeightGivesLongOnlyPoint )
{
   std::mt19937_64 rng( 31 );
   L1SimplexBoxQP qp;
   qp.gradient = random_vector( rng, 4, 1.0 );
   qp.anchor = random_vector( rng, 4, 1.0 );
   qp.l1_weight = 1e3;
   const DualSolution s = solve_l1_simplex_box( qp );
   EXPECT_NEAR( s.x.sum(), 1.0, 1e-12 );
   EXPECT_GE( s.x.minCoeff(), 0.0 );
   EXPECT_NEAR( s.x.lpNorm<1>(), 1.0, 1e-12 );
}

TEST( L1SimplexBox, MatchesSplitProjectedGradient )
{
   std::mt19937_64 rng( 37 );
   std::uniform_real_distribution<double> u( 0.0, 1.0 );
   for( int trial = 0; trial < 20; ++trial )
   {
      const Index n = 2 + Index( rng() % 6 );
      L1SimplexBoxQP qp;
      qp.gradient = random_vector( rng, n, 1.0 );
      qp.anchor = random_vector( rng, n, 0.5 );
      qp.l1_weight = u( rng );
      qp.curvature = 0.5 + 2.0 * u( rng );
      qp.bound = std::max( 1.0 / double( n ), 0.2 + u( rng ) );
      const DualSolution s = solve_l1_simplex_box( qp );
      const Vector ref = oracle::pg_l1_simplex_box( qp.l1_weight, qp.gradient, qp.anchor,
                                                    qp.curvature, qp.bound, 5000 );
      auto f = [&]( const Vector& x ) {
         return oracle::l1_simplex_box_objective( qp.l1_weight, qp.gradient, qp.anchor,
                                                  qp.curvature, x );
      };
      EXPECT_LE( f( s.x ), f( ref ) + 1e-9 );
      EXPECT_NEAR( f( s.x ), f( ref ), 1e-6 );
   }
}

TEST( BoxProx, NoShrinkageIsClippedStep )
{
   std::mt19937_64 rng( 41 );
   const Vector g = random_vector( rng, 6, 1.0 ), y = random_vector( rng, 6, 1.0 );
   const Vector lo = Vector::Constant( 6, -0.3 ), hi = Vector::Constant( 6, 0.4 );
   const Vector x = solve_box_prox( 0.0, g, y, 2.0, lo, hi );
   for( Index i = 0; i < 6; ++i )
      EXPECT_DOUBLE_EQ( x[i], std::clamp( y[i] - g[i] / 2.0, -0.3, 0.4 ) );
}

TEST( BoxProx, ShrinkageFixedPoint )
{
   const Vector z = Vector::Zero( 4 );
   const Vector x = solve_box_prox( 0.7, z, z, 1.0, Vector::Constant( 4, -1 ),
                                    Vector::Constant( 4, kUnbounded ) );
   EXPECT_EQ( x, z );
}

TEST( BoxProx, MatchesCoordinateGrid )
{
   std::mt19937_64 rng( 43 );
   std::uniform_real_distribution<double> u( 0.0, 1.0 );
   const Index n = 6;
   const Vector g = random_vector( rng, n, 1.0 ), y = random_vector( rng, n, 1.0 );
   const double w = 0.4, C = 1.7;
   Vector lo( n ), hi( n );
   for( Index i = 0; i < n; ++i )
   {
      lo[i] = -u( rng );
      hi[i] = u( rng );
   }
   const Vector x = solve_box_prox( w, g, y, C, lo, hi );
   for( Index i = 0; i < n; ++i )
   {
      double best = 0.0, arg = lo[i];
      bool first = true;
      for( double v = lo[i]; v <= hi[i] + 1e-12; v += 1e-4 )
      {
         const double f = w * std::abs( v ) + g[i] * ( v - y[i] ) + 0.5 * C * ( v - y[i] ) * ( v - y[i] );
         if( first || f < best )
         {
            best = f;
            arg = v;
            first = false;
         }
      }
      EXPECT_NEAR( x[i], arg, 1e-4 );
   }
}

TEST( ProximalQp, RejectsInfeasibleInputs )
{
   EXPECT_THROW( solve_capped_simplex( { Vector::Zero( 3 ), Vector::Constant( 3, 0.2 ) } ),
                 std::domain_error );
   L1SimplexBoxQP qp;
   qp.gradient = Vector::Zero( 3 );
   qp.anchor = Vector::Zero( 3 );
   qp.bound = 0.2;
   EXPECT_THROW( solve_l1_simplex_box( qp ), std::domain_error );
   EXPECT_THROW( solve_box_prox( 0.0, Vector::Zero( 1 ), Vector::Zero( 1 ), 1.0,
                                 Vector::Ones( 1 ), Vector::Zero( 1 ) ),
                 std::domain_error );
}
