#include <random>

#include <gtest/gtest.h>

#include <specrisk/risk_measures.hpp>

#include "oracles.hpp"

using namespace specrisk;

namespace {

Vector
vec( std::initializer_list<double> v )
{
   Vector out( Index( v.size() ) );
   Index i = 0;
   for( double x : v )
      out[i++] = x;
   return out;
}

} // namespace

TEST( ExpectedShortfall, ConstantSample )
{
   for( double beta : { 0.0, 0.3, 0.9, 0.99 } )
      EXPECT_DOUBLE_EQ( expected_shortfall( Vector::Constant( 4, 2.5 ), beta ), 2.5 );
}

TEST( ExpectedShortfall, MeanOfTwoLargest )
{
   EXPECT_EQ( tail_count( 0.5, 4 ), 2 );
   EXPECT_DOUBLE_EQ( expected_shortfall( vec( { 1, 2, 3, 4 } ), 0.5 ), 3.5 );
}

TEST( ExpectedShortfall, MatchesBreakpointScan )
{
   std::mt19937_64 rng( 11 );
   std::normal_distribution<double> normal;
   Vector y( 100 );
   for( auto& v : y )
      v = normal( rng );
   EXPECT_NEAR( expected_shortfall( y, 0.9 ), oracle::brute_es( y, 0.9 ), 1e-12 );
}

TEST( ExpectedShortfall, TailCountSnapsRoundoff )
{
   // (1 - 0.9) * 100 evaluates to 9.999999999999998
   EXPECT_EQ( tail_count( 0.9, 100 ), 10 );
   EXPECT_EQ( tail_count( 0.95, 5000 ), 250 );
   EXPECT_EQ( tail_count( 0.91, 100 ), 9 );
   EXPECT_EQ( tail_count( 0.999, 10 ), 1 );
}

TEST( ExpectedShortfallDual, Examples )
{
   auto a = expected_shortfall_dual( vec( { 1, 2, 3, 4 } ), 0.5 );
   EXPECT_DOUBLE_EQ( a.value, 3.5 );
   EXPECT_DOUBLE_EQ( a.z_star, 3.0 );

   auto b = expected_shortfall_dual( vec( { 5 } ), 0.0 );
   EXPECT_DOUBLE_EQ( b.value, 5.0 );
   EXPECT_DOUBLE_EQ( b.z_star, 5.0 );

   EXPECT_DOUBLE_EQ( expected_shortfall_dual( vec( { 0, 0, 10 } ), 2.0 / 3.0 ).value,
                     10.0 );
}

TEST( ExpectedShortfallDual, MinimizerAttainsValue )
{
   std::mt19937_64 rng( 5 );
   std::normal_distribution<double> normal;
   Vector y( 37 );
   for( auto& v : y )
      v = normal( rng );
   const auto d = expected_shortfall_dual( y, 0.8 );
   const double kappa = double( tail_count( 0.8, 37 ) );
   const double at = d.z_star + ( y.array() - d.z_star ).max( 0.0 ).sum() / kappa;
   EXPECT_NEAR( at, d.value, 1e-12 );
}

TEST( SpectralRisk, UniformSpectrumIsMean )
{
   const Vector y = vec( { 3, -1, 4, 1, 5 } );
   EXPECT_NEAR( spectral_risk( y, SpectrumWeights( Vector::Constant( 5, 0.2 ) ) ),
                y.mean(), 1e-15 );
}

TEST( SpectralRisk, LastMassIsMax )
{
   EXPECT_DOUBLE_EQ( spectral_risk( vec( { 3, 1, 2 } ), SpectrumWeights( vec( { 0, 0, 1 } ) ) ),
                     3.0 );
}

TEST( SpectralRisk, MatchesConvertedMeasure )
{
   std::mt19937_64 rng( 3 );
   std::normal_distribution<double> normal;
   for( int trial = 0; trial < 20; ++trial )
   {
      Vector y( 20 );
      for( auto& v : y )
         v = normal( rng );
      const Vector omega = oracle::random_spectrum( rng, 20 );
      const double direct = spectral_risk( y, SpectrumWeights( omega ) );
      EXPECT_NEAR( direct, oracle::brute_spectral( y, omega ), 1e-12 );
      EXPECT_NEAR( generalized_spectral_risk( y, convert_spectrum( SpectrumWeights( omega ) ) ),
                   direct, 1e-12 );
   }
}

TEST( ConvertSpectrum, Uniform )
{
   const SpectralMeasure m = convert_spectrum( SpectrumWeights( Vector::Constant( 4, 0.25 ) ) );
   ASSERT_EQ( m.components(), 1 );
   EXPECT_NEAR( m.gamma()[0], 1.0, 1e-15 );
   EXPECT_NEAR( m.beta()[0], 0.0, 1e-15 );
}

TEST( ConvertSpectrum, HandComputed )
{
   // gamma_l = (N - l + 1)(omega_l - omega_{l-1}): only l = 3 is nonzero,
   // (4 - 3 + 1) * 1/2 = 1, at beta = (l - 1)/N = 1/2.
   const SpectralMeasure m = convert_spectrum( SpectrumWeights( vec( { 0, 0, 0.5, 0.5 } ) ) );
   ASSERT_EQ( m.components(), 1 );
   EXPECT_NEAR( m.gamma()[0], 1.0, 1e-15 );
   EXPECT_NEAR( m.beta()[0], 0.5, 1e-15 );
}

TEST( ConvertSpectrum, GammaSumsToOne )
{
   std::mt19937_64 rng( 9 );
   for( int trial = 0; trial < 50; ++trial )
   {
      const Vector omega = oracle::random_spectrum( rng, 1 + Index( rng() % 30 ) );
      EXPECT_NEAR( convert_spectrum( SpectrumWeights( omega ) ).gamma().sum(), 1.0, 1e-12 );
   }
}

TEST( GeneralizedSpectralRisk, Reductions )
{
   std::mt19937_64 rng( 21 );
   std::normal_distribution<double> normal;
   Vector y( 40 );
   for( auto& v : y )
      v = normal( rng );
   EXPECT_NEAR( generalized_spectral_risk( y, SpectralMeasure::single( 0.85 ) ),
                expected_shortfall( y, 0.85 ), 1e-15 );
   EXPECT_NEAR( generalized_spectral_risk( y, SpectralMeasure( vec( { 0.5, 0.5 } ), vec( { 0, 0 } ) ) ),
                y.mean(), 1e-14 );
   const SpectralMeasure m( vec( { 0.2, 0.3, 0.5 } ), vec( { 0.1, 0.5, 0.95 } ) );
   EXPECT_NEAR( generalized_spectral_risk( ( y.array() + 7.25 ).matrix(), m ),
                generalized_spectral_risk( y, m ) + 7.25, 1e-12 );
}

TEST( Validation, RejectsBadInputs )
{
   EXPECT_THROW( SpectralMeasure( vec( { 0.5, 0.6 } ), vec( { 0.1, 0.2 } ) ), std::domain_error );
   EXPECT_THROW( SpectralMeasure( vec( { 1.0 } ), vec( { 1.0 } ) ), std::domain_error );
   EXPECT_THROW( SpectralMeasure( vec( { 1.0 } ), vec( { 0.1, 0.2 } ) ), std::domain_error );
   EXPECT_THROW( SpectrumWeights( vec( { 0.6, 0.4 } ) ), std::domain_error );
   EXPECT_THROW( expected_shortfall( Vector(), 0.5 ), std::domain_error );
   RowMatrix bad( 1, 1 );
   bad( 0, 0 ) = std::numeric_limits<double>::quiet_NaN();
   EXPECT_THROW( LossMatrix{ bad }, std::domain_error );
}
