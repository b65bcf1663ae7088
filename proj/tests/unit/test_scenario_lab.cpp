#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <specrisk/black_scholes.hpp>
#include <specrisk/scenario_lab.hpp>

using namespace specrisk;

namespace {

RandomInstanceSpec
small_spec( std::uint64_t seed )
{
   RandomInstanceSpec s;
   s.n = 6;
   s.N = 80;
   s.m = 3;
   s.d = 2;
   s.seed = seed;
   return s;
}

HedgingSpec
small_hedge()
{
   HedgingSpec s;
   s.samples = 400;
   return s;
}

} // namespace

TEST( RandomInstance, ShapeAndDeterminism )
{
   RandomInstanceSpec s;
   s.seed = 7;
   const ProblemSpec a = generate_random_instance( s );
   EXPECT_EQ( a.assets(), 10 );
   EXPECT_EQ( a.risk.size(), 5 );
   for( const RiskModel& m : a.risk.models() )
   {
      EXPECT_EQ( m.scenarios(), 100 );
      EXPECT_EQ( m.measure.components(), 3 );
      EXPECT_GE( m.measure.beta().minCoeff(), 0.9 );
      EXPECT_LT( m.measure.beta().maxCoeff(), 1.0 );
   }
   const ProblemSpec b = generate_random_instance( s );
   EXPECT_EQ( a.mu, b.mu );
   EXPECT_EQ( a.risk.models()[4].losses.entries(), b.risk.models()[4].losses.entries() );
   EXPECT_EQ( a.risk.budgets(), b.risk.budgets() );
}

TEST( RandomInstance, BudgetFormula )
{
   const ProblemSpec p = generate_random_instance( small_spec( 1 ) );
   std::vector<RiskModel> models = p.risk.models();
   // Shift one model so its uniform-portfolio risk is negative.
   RowMatrix shifted = models[1].losses.entries().array() - 100.0;
   models[1].losses = LossMatrix( shifted );
   const RiskConstraintSet set( models, Vector::Zero( 3 ) );
   const Vector uniform = Vector::Constant( 6, 1.0 / 6.0 );
   const Vector hat = set.risks( uniform );
   ASSERT_LT( hat[1], 0.0 );
   const Vector alpha = uniform_portfolio_budgets( set, 0.1 );
   for( Index k = 0; k < 3; ++k )
   {
      EXPECT_NEAR( alpha[k], hat[k] - 0.1 * std::abs( hat[k] ), 1e-14 );
      EXPECT_NEAR( hat[k] - alpha[k], 0.1 * std::abs( hat[k] ), 1e-14 );
   }

   Vector five( 1 ), minus_two( 1 );
   five << 5.0;
   minus_two << -2.0;
   EXPECT_NEAR( ( five - 0.1 * five.cwiseAbs() )[0], 4.5, 1e-15 );
   EXPECT_NEAR( ( minus_two - 0.1 * minus_two.cwiseAbs() )[0], -2.2, 1e-15 );
}

TEST( RandomInstance, UniformPortfolioViolatesByTenPercent )
{
   const ProblemSpec p = generate_random_instance( small_spec( 2 ) );
   const Vector uniform = Vector::Constant( 6, 1.0 / 6.0 );
   const Vector hat = p.risk.risks( uniform );
   const Vector gap = hat - p.risk.budgets();
   for( Index k = 0; k < 3; ++k )
      EXPECT_NEAR( gap[k], 0.1 * std::abs( hat[k] ), 1e-12 );
}

TEST( RandomInstance, LambdaStarStableAcrossSeeds )
{
   double lo = 1e300, hi = 0.0;
   for( std::uint64_t seed = 1; seed <= 20; ++seed )
   {
      RandomInstanceSpec s;
      s.seed = seed;
      const double l = generate_random_instance( s ).lambda;
      lo = std::min( lo, l );
      hi = std::max( hi, l );
   }
   EXPECT_GT( lo, 0.0 );
   EXPECT_LT( hi / lo, 10.0 );
}

TEST( RandomInstance, RejectsBadSizes )
{
   RandomInstanceSpec s;
   s.N = 0;
   EXPECT_THROW( generate_random_instance( s ), std::domain_error );
   s = RandomInstanceSpec{};
   s.beta_low = 1.2;
   EXPECT_THROW( s.validate(), std::domain_error );
}

TEST( Perturb, ZeroIsIdentity )
{
   const ProblemSpec p = generate_random_instance( small_spec( 3 ) );
   const ProblemSpec q = perturb_instance( p, 0.0, 99 );
   for( Index k = 0; k < p.risk.size(); ++k )
      EXPECT_EQ( p.risk.models()[k].losses.entries(), q.risk.models()[k].losses.entries() );
}

TEST( Perturb, RelativeChangeStatistics )
{
   RandomInstanceSpec s;
   s.n = 10;
   s.N = 100000;
   s.m = 1;
   s.d = 1;
   const ProblemSpec p = generate_random_instance( s );
   const ProblemSpec q = perturb_instance( p, 0.05, 5 );
   const RowMatrix& a = p.risk.models()[0].losses.entries();
   const RowMatrix& b = q.risk.models()[0].losses.entries();
   double sum = 0.0, sq = 0.0;
   Index flips = 0, positive = 0;
   const Index count = a.size();
   for( Index i = 0; i < count; ++i )
   {
      const double r = ( b.data()[i] - a.data()[i] ) / std::abs( a.data()[i] );
      sum += r;
      sq += r * r;
      if( a.data()[i] > 0.0 )
      {
         ++positive;
         flips += b.data()[i] <= 0.0;
      }
   }
   const double mean = sum / double( count );
   const double sd = std::sqrt( sq / double( count ) - mean * mean );
   EXPECT_NEAR( sd, 0.05, 0.05 * 0.02 );
   EXPECT_GT( positive, 0 );
   EXPECT_EQ( flips, 0 );
}

TEST( BlackScholes, Limits )
{
   EXPECT_NEAR( black_scholes_call( 1.0, 1e-9, 0.2, 0.5, 0.01 ), 1.0, 1e-8 );
   const double sigma = 0.25, T = 0.75;
   EXPECT_NEAR( black_scholes_binary( 1.0, 1.0, sigma, T, 0.0 ),
                normal_cdf( -0.5 * sigma * std::sqrt( T ) ), 1e-15 );
   EXPECT_NEAR( normal_cdf( 0.0 ), 0.5, 1e-16 );
}

TEST( BlackScholes, MonteCarloCrossCheck )
{
   const double S = 100, K = 100, sigma = 0.2, T = 0.5, r = 0.01;
   std::mt19937_64 rng( 2024 );
   std::normal_distribution<double> normal;
   const int paths = 10000000;
   double sum = 0.0, sq = 0.0;
   for( int i = 0; i < paths; ++i )
   {
      const double ST = S * std::exp( ( r - 0.5 * sigma * sigma ) * T +
                                      sigma * std::sqrt( T ) * normal( rng ) );
      const double payoff = std::exp( -r * T ) * std::max( ST - K, 0.0 );
      sum += payoff;
      sq += payoff * payoff;
   }
   const double mean = sum / paths;
   const double se = std::sqrt( ( sq / paths - mean * mean ) / paths );
   EXPECT_NEAR( black_scholes_call( S, K, sigma, T, r ), mean, 3.0 * se );
}

TEST( Hedging, ModelSets )
{
   EXPECT_EQ( WorstCaseModelSet::robust( 2 ).omegas.size(), 4u );
   EXPECT_EQ( WorstCaseModelSet::nominal( 2 ).omegas.size(), 1u );
   EXPECT_EQ( WorstCaseModelSet::nominal( 2 ).omegas[0], Vector::Zero( 2 ) );
   EXPECT_THROW( WorstCaseModelSet::from_mode( "other", 2 ), std::invalid_argument );
}

TEST( Hedging, NominalModelIsZeroOmega )
{
   const HedgingSpec s = small_hedge();
   const auto nominal = generate_hedging_models( s, WorstCaseModelSet::nominal( 2 ), 3 );
   ASSERT_EQ( nominal.size(), 1u );
   EXPECT_EQ( nominal[0].sigma_horizon, Vector::Constant( 4, 0.2 ) );
   WorstCaseModelSet both{ { Vector::Zero( 2 ), Vector::Ones( 2 ) } };
   const auto pair = generate_hedging_models( s, both, 3 );
   EXPECT_EQ( pair[0].losses.entries(), nominal[0].losses.entries() );
   EXPECT_NE( pair[1].losses.entries(), nominal[0].losses.entries() );
}

TEST( Hedging, ZeroFactorsGiveIdenticalModels )
{
   HedgingSpec s = small_hedge();
   s.factors = { Vector::Zero( 4 ), Vector::Zero( 4 ) };
   const auto models = generate_hedging_models( s, WorstCaseModelSet::robust( 2 ), 4 );
   ASSERT_EQ( models.size(), 4u );
   for( const auto& m : models )
   {
      EXPECT_EQ( m.losses.entries(), models[0].losses.entries() );
      EXPECT_EQ( m.initial_losses, models[0].initial_losses );
   }
}

TEST( Hedging, EpigraphRowIsMeanConstraint )
{
   const HedgingSpec s = small_hedge();
   const auto models = generate_hedging_models( s, WorstCaseModelSet::robust( 2 ), 5 );
   const ProblemSpec p = build_hedging_problem( models, s, 0.0 );
   ASSERT_TRUE( p.box_mode() );
   const Index n = s.instruments();
   std::mt19937_64 rng( 5 );
   std::uniform_real_distribution<double> u( -1.0, 1.0 );
   for( int trial = 0; trial < 10; ++trial )
   {
      Vector x( n + 2 );
      for( auto& v : x )
         v = u( rng );
      x[n] = std::abs( x[n] );
      x[n + 1] = std::abs( x[n + 1] );
      const double level = x[n] - x[n + 1];
      const Vector risks = p.risk.risks( x );
      for( std::size_t w = 0; w < models.size(); ++w )
      {
         const double expected = level - models[w].mu0 - models[w].mu.dot( x.head( n ) );
         EXPECT_NEAR( risks[Index( 2 * w )], expected, 1e-9 );
      }
   }
}

TEST( Hedging, BudgetUsesSameOmega )
{
   HedgingSpec s = small_hedge();
   const auto models = generate_hedging_models( s, WorstCaseModelSet::robust( 2 ), 6 );
   const ProblemSpec p = build_hedging_problem( models, s, 0.0 );
   const Vector zero = Vector::Zero( p.assets() );
   const Vector risks = p.risk.risks( zero );
   for( std::size_t w = 0; w < models.size(); ++w )
   {
      const double initial = expected_shortfall( models[w].initial_losses, 0.95 );
      EXPECT_NEAR( p.risk.budgets()[Index( 2 * w + 1 )], 0.5 * initial, 1e-12 );
      EXPECT_NEAR( risks[Index( 2 * w + 1 )], initial, 1e-9 );
      if( initial > 0.0 )
         EXPECT_GT( risks[Index( 2 * w + 1 )], p.risk.budgets()[Index( 2 * w + 1 )] );
   }
}

TEST( Hedging, GridAndStderr )
{
   const auto grid = hedge_grid( 9 );
   EXPECT_EQ( grid.size(), 27u );
   EXPECT_EQ( grid.front()[0], -1.0 );
   EXPECT_EQ( grid[8][0], 1.0 );
   std::mt19937_64 rng( 1 );
   std::normal_distribution<double> normal;
   Vector y( 4000 );
   for( auto& v : y )
      v = normal( rng );
   const double se = shortfall_stderr( y, 0.95 );
   EXPECT_GT( se, 0.0 );
   EXPECT_LT( se, 0.2 );
}
