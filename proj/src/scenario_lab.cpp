#include <specrisk/scenario_lab.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <fmt/format.h>

#include <specrisk/black_scholes.hpp>
#include <specrisk/proximal_qp.hpp>
#include <specrisk/risk_measures.hpp>

namespace specrisk {

namespace {

constexpr double kMonthsPerYear = 12.0;
constexpr Index kBatchRows = 1024;

std::mt19937_64
substream( std::uint64_t seed, std::uint64_t stream )
{
   std::seed_seq seq{ std::uint32_t( seed ), std::uint32_t( seed >> 32 ),
                      std::uint32_t( stream ), std::uint32_t( stream >> 32 ) };
   return std::mt19937_64( seq );
}

} // namespace

void
RandomInstanceSpec::validate() const
{
   if( n < 1 || N < 1 || m < 1 || d < 1 )
      throw std::domain_error( "instance sizes n, N, m, d must be positive" );
   if( !( beta_low >= 0.0 ) || !( beta_low < beta_high ) || !( beta_high <= 1.0 ) )
      throw std::domain_error( "beta range must satisfy 0 <= low < high <= 1" );
   if( !( budget_slack >= 0.0 ) )
      throw std::domain_error( "budget slack must be nonnegative" );
   if( !( leverage > 0.0 ) || double( n ) * leverage < 1.0 )
      throw std::domain_error( "leverage bound must satisfy n B >= 1" );
   if( !( mu_high >= 0.0 ) || !( vol_low > 0.0 ) || !( vol_high >= vol_low ) )
      throw std::domain_error( "return and loss scales must be positive" );
}

Vector
uniform_portfolio_budgets( const RiskConstraintSet& risk, double slack )
{
   const Vector uniform =
       Vector::Constant( risk.assets(), 1.0 / double( risk.assets() ) );
   const Vector hat = risk.risks( uniform );
   return hat - slack * hat.cwiseAbs();
}

ProblemSpec
generate_random_instance( const RandomInstanceSpec& spec )
{
   spec.validate();
   std::mt19937_64 rng( spec.seed );
   std::uniform_real_distribution<double> mu_dist( 0.0, spec.mu_high );
   std::normal_distribution<double> normal( 0.0, 1.0 );
   std::gamma_distribution<double> dirichlet( 1.0, 1.0 );
   std::uniform_real_distribution<double> beta_dist( spec.beta_low,
                                                     spec.beta_high );

   ProblemSpec problem;
   problem.mu.resize( spec.n );
   for( Index i = 0; i < spec.n; ++i )
      problem.mu[i] = mu_dist( rng );
   std::uniform_real_distribution<double> vol_dist( spec.vol_low,
                                                    spec.vol_high );
   Vector vol( spec.n );
   for( Index i = 0; i < spec.n; ++i )
      vol[i] = vol_dist( rng );

   std::vector<RiskModel> models;
   models.reserve( spec.m );
   for( Index k = 0; k < spec.m; ++k )
   {
      Matrix L( spec.N, spec.n );
      for( Index j = 0; j < spec.N; ++j )
         for( Index i = 0; i < spec.n; ++i )
            L( j, i ) = -problem.mu[i] + vol[i] * normal( rng );

      Vector gamma( spec.d ), beta( spec.d );
      for( Index l = 0; l < spec.d; ++l )
         gamma[l] = dirichlet( rng );
      gamma /= gamma.sum();
      for( Index l = 0; l < spec.d; ++l )
      {
         double b = beta_dist( rng );
         beta[l] = std::min( b, std::nextafter( 1.0, 0.0 ) );
      }
      models.push_back( RiskModel{ LossMatrix( std::move( L ) ),
                                   SpectralMeasure( gamma, beta ), Vector() } );
   }

   RiskConstraintSet unbudgeted( models, Vector::Zero( spec.m ) );
   Vector budgets = uniform_portfolio_budgets( unbudgeted, spec.budget_slack );
   problem.risk = RiskConstraintSet( std::move( models ), std::move( budgets ) );
   problem.region = SimplexRegion{ spec.leverage };
   problem.lambda =
       spec.sparse ? default_lambda( problem.mu, problem.region ) : 0.0;
   problem.variant = Variant::constrained;
   return problem;
}

ProblemSpec
perturb_instance( const ProblemSpec& problem, double t, std::uint64_t seed )
{
   if( !( t >= 0.0 ) || !std::isfinite( t ) )
      throw std::domain_error( "perturbation size must be nonnegative" );
   ProblemSpec out = problem;
   if( t == 0.0 )
      return out;

   std::mt19937_64 rng( seed );
   std::normal_distribution<double> normal( 0.0, 1.0 );
   std::vector<RiskModel> models;
   for( const RiskModel& model : problem.risk.models() )
   {
      Matrix L = model.losses.entries();
      for( Index j = 0; j < L.rows(); ++j )
         for( Index i = 0; i < L.cols(); ++i )
            L( j, i ) += t * std::abs( L( j, i ) ) * normal( rng );
      models.push_back(
          RiskModel{ LossMatrix( std::move( L ) ), model.measure, model.offset } );
   }
   out.risk = RiskConstraintSet( std::move( models ), problem.risk.budgets() );
   return out;
}

HedgingSpec
HedgingSpec::resolved() const
{
   HedgingSpec s = *this;
   if( s.drift.size() == 0 )
      s.drift = Vector::Constant( s.assets, s.rate );
   if( s.sigma0.size() == 0 )
      s.sigma0 = Vector::Constant( s.assets, 0.2 );
   if( s.correlation.size() == 0 )
   {
      s.correlation = Matrix::Constant( s.assets, s.assets, 0.3 );
      s.correlation.diagonal().setOnes();
   }
   if( s.factors.empty() )
   {
      Vector level = Vector::Constant( s.assets, 0.02 );
      Vector spread( s.assets );
      for( Index a = 0; a < s.assets; ++a )
         spread[a] = a % 2 == 0 ? 0.02 : -0.02;
      s.factors = { level, spread };
   }
   return s;
}

void
HedgingSpec::validate() const
{
   if( assets < 1 || samples < 1 )
      throw std::domain_error( "hedging needs at least one asset and sample" );
   if( drift.size() != assets || sigma0.size() != assets ||
       correlation.rows() != assets || correlation.cols() != assets )
      throw std::domain_error( "hedging vectors must have one entry per asset" );
   if( !( sigma0.array() > 0.0 ).all() )
      throw std::domain_error( "base volatilities must be positive" );
   if( !( spot > 0.0 ) || !( horizon > 0.0 ) )
      throw std::domain_error( "spot and horizon must be positive" );
   if( ( correlation - correlation.transpose() ).cwiseAbs().maxCoeff() > 1e-12 ||
       ( correlation.diagonal().array() - 1.0 ).abs().maxCoeff() > 1e-12 )
      throw std::domain_error(
          "correlation must be symmetric with unit diagonal" );
   Eigen::LLT<Matrix> llt( correlation );
   if( llt.info() != Eigen::Success )
      throw std::domain_error( "correlation matrix is not positive definite" );
   for( const Vector& f : factors )
      if( f.size() != assets )
         throw std::domain_error( "volatility factors need one entry per asset" );
   for( double m : binary_maturities )
      if( !( m > horizon ) )
         throw std::domain_error( "binary maturities must exceed the horizon" );
   for( double m : call_maturities )
      if( !( m > horizon ) )
         throw std::domain_error( "call maturities must exceed the horizon" );
   for( double k : strikes )
      if( !( k > 0.0 ) )
         throw std::domain_error( "strikes must be positive" );
   if( !( es_level >= 0.0 && es_level < 1.0 ) )
      throw std::domain_error( "ES level must lie in [0, 1)" );
   if( !( risk_reduction > 0.0 && risk_reduction < 1.0 ) )
      throw std::domain_error( "risk reduction must lie in (0, 1)" );
   if( !( leverage > 0.0 ) || !( loss_scale > 0.0 ) )
      throw std::domain_error( "leverage and loss scale must be positive" );
}

Index
HedgingSpec::instruments() const
{
   return assets * ( Index( strikes.size() * call_maturities.size() ) + 1 );
}

std::vector<std::string>
HedgingSpec::instrument_names() const
{
   std::vector<std::string> names;
   for( Index a = 0; a < assets; ++a )
      for( double m : call_maturities )
         for( double k : strikes )
            names.push_back( fmt::format( "call_{}_K{:g}_T{:g}", a, k, m ) );
   for( Index a = 0; a < assets; ++a )
      names.push_back( fmt::format( "asset_{}", a ) );
   return names;
}

WorstCaseModelSet
WorstCaseModelSet::nominal( Index q )
{
   return { { Vector::Zero( q ) } };
}

WorstCaseModelSet
WorstCaseModelSet::robust( Index q )
{
   WorstCaseModelSet set;
   for( Index mask = 0; mask < ( Index( 1 ) << q ); ++mask )
   {
      Vector w( q );
      for( Index p = 0; p < q; ++p )
         w[p] = ( mask >> p ) & 1 ? 1.0 : -1.0;
      set.omegas.push_back( w );
   }
   return set;
}

WorstCaseModelSet
WorstCaseModelSet::from_mode( const std::string& mode, Index q )
{
   if( mode == "nominal" )
      return nominal( q );
   if( mode == "robust" )
      return robust( q );
   throw std::invalid_argument(
       fmt::format( "unknown hedging mode '{}' (nominal|robust)", mode ) );
}

std::vector<HedgingModel>
generate_hedging_models( const HedgingSpec& raw, const WorstCaseModelSet& set,
                         std::uint64_t seed )
{
   const HedgingSpec spec = raw.resolved();
   spec.validate();
   const Index s = spec.assets;
   const Index N = spec.samples;
   const Index n = spec.instruments();
   const double T = spec.horizon / kMonthsPerYear;

   const Matrix chol = Eigen::LLT<Matrix>( spec.correlation ).matrixL();
   Matrix Z( N, s );
   for( Index start = 0; start < N; start += kBatchRows )
   {
      std::mt19937_64 rng = substream( seed, std::uint64_t( start / kBatchRows ) );
      std::normal_distribution<double> normal( 0.0, 1.0 );
      const Index stop = std::min( N, start + kBatchRows );
      Vector e( s );
      for( Index j = start; j < stop; ++j )
      {
         for( Index a = 0; a < s; ++a )
            e[a] = normal( rng );
         Z.row( j ) = ( chol * e ).transpose();
      }
   }

   // Prices today use the known volatility.
   Vector call_today( n - s );
   {
      Index col = 0;
      for( Index a = 0; a < s; ++a )
         for( double m : spec.call_maturities )
            for( double k : spec.strikes )
               call_today[col++] = black_scholes_call(
                   spec.spot, k * spec.spot, spec.sigma0[a], m / kMonthsPerYear,
                   spec.rate );
   }
   std::vector<double> binary_today;
   for( std::size_t b = 0; b < spec.binary_maturities.size(); ++b )
      binary_today.push_back( black_scholes_binary(
          spec.spot, spec.spot, spec.sigma0[Index( b ) % s],
          spec.binary_maturities[b] / kMonthsPerYear, spec.rate ) );

   std::vector<HedgingModel> out;
   for( const Vector& omega : set.omegas )
   {
      if( omega.size() != Index( spec.factors.size() ) )
         throw std::domain_error( fmt::format(
             "omega has {} entries, spec has {} factors", omega.size(),
             spec.factors.size() ) );
      HedgingModel model;
      model.omega = omega;
      model.sigma_horizon = spec.sigma0;
      for( Index p = 0; p < omega.size(); ++p )
         model.sigma_horizon += omega[p] * spec.factors[p];
      if( !( model.sigma_horizon.array() > 0.0 ).all() )
         throw std::domain_error( "volatility at the horizon must stay positive" );
      const Vector& sig = model.sigma_horizon;

      Matrix L( N, n );
      Vector l0 = Vector::Zero( N );
      Vector ST( s );
      for( Index j = 0; j < N; ++j )
      {
         for( Index a = 0; a < s; ++a )
            ST[a] = spec.spot *
                    std::exp( ( spec.drift[a] - 0.5 * sig[a] * sig[a] ) * T +
                              sig[a] * std::sqrt( T ) * Z( j, a ) );
         Index col = 0;
         for( Index a = 0; a < s; ++a )
         {
            for( double m : spec.call_maturities )
               for( double k : spec.strikes )
               {
                  const double later = black_scholes_call(
                      ST[a], k * spec.spot, sig[a], ( m - spec.horizon ) / kMonthsPerYear,
                      spec.rate );
                  L( j, col ) = spec.loss_scale * ( call_today[col] - later );
                  ++col;
               }
            L( j, n - s + a ) = spec.loss_scale * ( spec.spot - ST[a] );
         }
         // Short one unit of each binary.
         for( std::size_t b = 0; b < spec.binary_maturities.size(); ++b )
         {
            const Index a = Index( b ) % s;
            const double later = black_scholes_binary(
                ST[a], spec.spot, sig[a],
                ( spec.binary_maturities[b] - spec.horizon ) / kMonthsPerYear,
                spec.rate );
            l0[j] += spec.loss_scale * ( later - binary_today[b] );
         }
      }
      model.mu = -L.colwise().mean().transpose();
      model.mu0 = -l0.mean();
      model.initial_losses = std::move( l0 );
      model.losses = LossMatrix( std::move( L ) );
      out.push_back( std::move( model ) );
   }
   return out;
}

ProblemSpec
build_hedging_problem( const std::vector<HedgingModel>& models,
                       const HedgingSpec& raw, double lambda )
{
   const HedgingSpec spec = raw.resolved();
   if( models.empty() )
      throw std::domain_error( "hedging problem needs at least one model" );
   const Index n = models.front().losses.assets();
   const Index N = models.front().losses.scenarios();

   std::vector<RiskModel> rows;
   std::vector<double> budgets;
   for( const HedgingModel& model : models )
   {
      Matrix hat( N, n + 2 );
      hat.leftCols( n ) = model.losses.entries();
      hat.col( n ).setOnes();
      hat.col( n + 1 ).setConstant( -1.0 );
      rows.push_back( RiskModel{ LossMatrix( std::move( hat ) ),
                                 SpectralMeasure::single( 0.0 ),
                                 model.initial_losses } );
      budgets.push_back( 0.0 );

      Matrix bar = Matrix::Zero( N, n + 2 );
      bar.leftCols( n ) = model.losses.entries();
      rows.push_back( RiskModel{ LossMatrix( std::move( bar ) ),
                                 SpectralMeasure::single( spec.es_level ),
                                 model.initial_losses } );
      budgets.push_back( spec.risk_reduction *
                         expected_shortfall( model.initial_losses, spec.es_level ) );
   }

   ProblemSpec problem;
   problem.mu = Vector::Zero( n + 2 );
   problem.mu[n] = lambda + 1.0;
   problem.mu[n + 1] = lambda - 1.0;
   problem.lambda = lambda;
   problem.risk = RiskConstraintSet(
       std::move( rows ),
       Eigen::Map<const Vector>( budgets.data(), Index( budgets.size() ) ) );
   BoxRegion box;
   box.lower = Vector::Zero( n + 2 );
   box.upper = Vector::Constant( n + 2, kUnbounded );
   box.lower.head( n ).setConstant( -spec.leverage );
   box.upper.head( n ).setConstant( spec.leverage );
   problem.region = box;
   problem.variant = Variant::constrained;
   return problem;
}

double
hedging_lambda( const HedgingSpec& spec, double theta, std::uint64_t seed,
                const SolverConfig& config )
{
   if( !( theta >= 0.0 ) )
      throw std::domain_error( "sparsity multiplier must be nonnegative" );
   if( theta == 0.0 )
      return 0.0;
   const Index q = Index( spec.resolved().factors.size() );
   const auto models =
       generate_hedging_models( spec, WorstCaseModelSet::nominal( q ), seed );
   const ProblemSpec problem = build_hedging_problem( models, spec, 0.0 );
   const SolveReport report = spec_risk_allocate( problem, config );
   const Index n = models.front().losses.assets();
   const Vector x = report.x.head( n );
   const double l1 = x.lpNorm<1>();
   if( l1 == 0.0 )
      return 0.0;
   return theta * 2.0 * std::abs( models.front().mu.dot( x ) ) / l1;
}

double
shortfall_stderr( const VectorRef& y, double beta )
{
   const Index N = y.size();
   const Index kappa = tail_count( beta, N );
   std::vector<double> v( y.data(), y.data() + N );
   std::nth_element( v.begin(), v.begin() + ( kappa - 1 ), v.end(),
                     std::greater<double>() );
   const double var = v[kappa - 1];
   double es = 0.0;
   for( Index i = 0; i < kappa; ++i )
      es += v[i];
   es /= double( kappa );
   double spread = 0.0;
   for( Index i = 0; i < kappa; ++i )
      spread += ( v[i] - es ) * ( v[i] - es );
   const double tail_var = kappa > 1 ? spread / double( kappa - 1 ) : 0.0;
   return std::sqrt( ( tail_var + beta * ( es - var ) * ( es - var ) ) /
                     double( kappa ) );
}

std::vector<HedgeEvaluation>
evaluate_hedge( const HedgingSpec& spec, const VectorRef& hedge,
                const std::vector<Vector>& omegas, std::uint64_t seed )
{
   const HedgingSpec full = spec.resolved();
   const Index n = full.instruments();
   if( hedge.size() != n && hedge.size() != n + 2 )
      throw std::domain_error( fmt::format(
          "hedge has {} entries, expected {}", hedge.size(), n ) );
   const Vector x = hedge.head( n );

   const auto models = generate_hedging_models( full, { omegas }, seed );
   std::vector<HedgeEvaluation> out;
   for( const HedgingModel& model : models )
   {
      const Vector total = model.initial_losses + model.losses.losses( x );
      HedgeEvaluation e;
      e.omega = model.omega;
      e.es = expected_shortfall( total, full.es_level );
      e.es_stderr = shortfall_stderr( total, full.es_level );
      e.mean_return = -total.mean();
      e.initial_es = expected_shortfall( model.initial_losses, full.es_level );
      e.initial_es_stderr = shortfall_stderr( model.initial_losses, full.es_level );
      e.initial_mean_return = model.mu0;
      out.push_back( std::move( e ) );
   }
   return out;
}

std::vector<Vector>
hedge_grid( Index omega1_points )
{
   if( omega1_points < 2 )
      throw std::domain_error( "omega grid needs at least two points" );
   std::vector<Vector> grid;
   for( double w2 : { -1.0, 0.0, 1.0 } )
      for( Index i = 0; i < omega1_points; ++i )
      {
         Vector w( 2 );
         w[0] = -1.0 + 2.0 * double( i ) / double( omega1_points - 1 );
         w[1] = w2;
         grid.push_back( w );
      }
   return grid;
}

} // namespace specrisk
