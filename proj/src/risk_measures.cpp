#include <specrisk/risk_measures.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace specrisk {

namespace {

void
check_level( double beta )
{
   if( !( beta >= 0.0 && beta < 1.0 ) )
      throw std::domain_error(
          fmt::format( "shortfall level {} outside [0, 1)", beta ) );
}

void
check_sample( const VectorRef& y )
{
   if( y.size() == 0 )
      throw std::domain_error( "empty loss sample" );
   if( !y.allFinite() )
      throw std::domain_error( "loss sample has non-finite entries" );
}

std::vector<double>
sorted_descending( const VectorRef& y )
{
   std::vector<double> v( y.data(), y.data() + y.size() );
   std::sort( v.begin(), v.end(), std::greater<>() );
   return v;
}

} // namespace

LossMatrix::LossMatrix( RowMatrix entries ) : entries_( std::move( entries ) )
{
   if( entries_.rows() < 1 || entries_.cols() < 1 )
      throw std::domain_error( "loss matrix needs at least one row and column" );
   if( !entries_.allFinite() )
      throw std::domain_error( "loss matrix has non-finite entries" );
}

Vector
LossMatrix::losses( const VectorRef& x ) const
{
   if( x.size() != assets() )
      throw std::domain_error( fmt::format(
          "portfolio has {} entries, loss matrix has {} assets", x.size(),
          assets() ) );
   return entries_ * x;
}

void
LossMatrix::add_transposed( double weight, const Vector& q, Vector& out ) const
{
   if( weight == 0.0 )
      return;
   Index nonzero = 0;
   for( Index j = 0; j < q.size(); ++j )
      nonzero += q[j] != 0.0;
   if( 2 * nonzero > q.size() )
   {
      out.noalias() += weight * ( entries_.transpose() * q );
      return;
   }
   for( Index j = 0; j < q.size(); ++j )
      if( q[j] != 0.0 )
         out.noalias() += ( weight * q[j] ) * entries_.row( j ).transpose();
}

SpectralMeasure::SpectralMeasure( Vector gamma, Vector beta )
    : gamma_( std::move( gamma ) ), beta_( std::move( beta ) )
{
   if( gamma_.size() < 1 || gamma_.size() != beta_.size() )
      throw std::domain_error( "spectral measure needs matching gamma/beta" );
   if( ( gamma_.array() < 0.0 ).any() || !gamma_.allFinite() )
      throw std::domain_error( "spectral weights must be nonnegative" );
   if( std::abs( gamma_.sum() - 1.0 ) > 1e-12 )
      throw std::domain_error( fmt::format(
          "spectral weights sum to {:.17g}, expected 1", gamma_.sum() ) );
   for( Index l = 0; l < beta_.size(); ++l )
      check_level( beta_[l] );
}

SpectralMeasure
SpectralMeasure::single( double beta )
{
   return SpectralMeasure( Vector::Ones( 1 ), Vector::Constant( 1, beta ) );
}

SpectrumWeights::SpectrumWeights( Vector omega ) : omega_( std::move( omega ) )
{
   if( omega_.size() < 1 )
      throw std::domain_error( "empty spectrum" );
   if( ( omega_.array() < 0.0 ).any() || !omega_.allFinite() )
      throw std::domain_error( "spectrum weights must be nonnegative" );
   if( std::abs( omega_.sum() - 1.0 ) > 1e-12 )
      throw std::domain_error( "spectrum weights must sum to one" );
   for( Index k = 1; k < omega_.size(); ++k )
      if( omega_[k] < omega_[k - 1] - 1e-15 )
         throw std::domain_error( fmt::format(
             "spectrum decreases at index {}", k ) );
}

Index
tail_count( double beta, Index scenarios )
{
   check_level( beta );
   const double raw = ( 1.0 - beta ) * static_cast<double>( scenarios );
   const double nearest = std::round( raw );
   double kappa = std::abs( raw - nearest ) <= 1e-9 * std::max( 1.0, raw )
                      ? nearest
                      : std::ceil( raw );
   return std::clamp<Index>( static_cast<Index>( kappa ), 1, scenarios );
}

double
shortfall_of_sorted( const double* descending, Index count, double beta )
{
   const Index kappa = tail_count( beta, count );
   double sum = 0.0;
   for( Index l = 0; l < kappa; ++l )
      sum += descending[l];
   return sum / static_cast<double>( kappa );
}

double
expected_shortfall( const VectorRef& y, double beta )
{
   check_level( beta );
   check_sample( y );
   const auto v = sorted_descending( y );
   return shortfall_of_sorted( v.data(), y.size(), beta );
}

ShortfallDual
expected_shortfall_dual( const VectorRef& y, double beta )
{
   check_level( beta );
   check_sample( y );
   const Index kappa = tail_count( beta, y.size() );

   // The dual objective is piecewise linear in z with slope
   // 1 - #{y > z}/kappa, so the kappa-th largest sample is a minimizer.
   std::vector<double> v( y.data(), y.data() + y.size() );
   std::nth_element( v.begin(), v.begin() + ( kappa - 1 ), v.end(),
                     std::greater<>() );
   const double z = v[kappa - 1];

   double excess = 0.0;
   for( Index l = 0; l < y.size(); ++l )
      excess += std::max( y[l] - z, 0.0 );
   return { z + excess / static_cast<double>( kappa ), z };
}

double
spectral_risk( const VectorRef& y, const SpectrumWeights& omega )
{
   check_sample( y );
   if( y.size() != omega.size() )
      throw std::domain_error( fmt::format(
          "spectrum has {} weights for {} samples", omega.size(), y.size() ) );
   std::vector<double> v( y.data(), y.data() + y.size() );
   std::sort( v.begin(), v.end() );
   double sum = 0.0;
   for( Index l = 0; l < y.size(); ++l )
      sum += omega.omega()[l] * v[l];
   return sum;
}

SpectralMeasure
convert_spectrum( const SpectrumWeights& weights )
{
   const Vector& omega = weights.omega();
   const Index n = omega.size();

   std::vector<double> gamma;
   std::vector<double> beta;
   double previous = 0.0;
   for( Index l = 0; l < n; ++l )
   {
      const double step = omega[l] - previous;
      if( step < -1e-15 )
         throw std::domain_error( "spectrum is not monotone" );
      previous = omega[l];

      const double g = static_cast<double>( n - l ) * std::max( step, 0.0 );
      if( g < 1e-14 )
         continue;
      gamma.push_back( g );
      beta.push_back( static_cast<double>( l ) / static_cast<double>( n ) );
   }
   if( gamma.empty() )
      throw std::domain_error( "spectrum has no mass" );

   Vector g = Eigen::Map<Vector>( gamma.data(), Index( gamma.size() ) );
   g /= g.sum();
   return SpectralMeasure( std::move( g ),
                           Eigen::Map<Vector>( beta.data(), Index( beta.size() ) ) );
}

double
generalized_spectral_risk( const VectorRef& y, const SpectralMeasure& measure )
{
   check_sample( y );
   const auto v = sorted_descending( y );
   double sum = 0.0;
   for( Index l = 0; l < measure.components(); ++l )
      sum += measure.gamma()[l] *
             shortfall_of_sorted( v.data(), y.size(), measure.beta()[l] );
   return sum;
}

} // namespace specrisk
