#include <specrisk/black_scholes.hpp>

#include <cmath>
#include <stdexcept>

namespace specrisk {

namespace {

struct D12
{
   double d1;
   double d2;
};

D12
d_terms( double spot, double strike, double sigma, double maturity,
         double rate )
{
   if( !( spot > 0.0 ) || !( strike > 0.0 ) || !( sigma > 0.0 ) ||
       !( maturity > 0.0 ) )
      throw std::domain_error(
          "Black-Scholes inputs S0, K, sigma and T must be positive" );
   const double vol = sigma * std::sqrt( maturity );
   const double d1 =
       ( std::log( spot / strike ) + ( rate + 0.5 * sigma * sigma ) * maturity ) /
       vol;
   return { d1, d1 - vol };
}

} // namespace

double
normal_cdf( double x )
{
   return 0.5 * std::erfc( -x / std::sqrt( 2.0 ) );
}

double
black_scholes_call( double spot, double strike, double sigma, double maturity,
                    double rate )
{
   const D12 d = d_terms( spot, strike, sigma, maturity, rate );
   return spot * normal_cdf( d.d1 ) -
          strike * std::exp( -rate * maturity ) * normal_cdf( d.d2 );
}

double
black_scholes_binary( double spot, double strike, double sigma,
                      double maturity, double rate )
{
   const D12 d = d_terms( spot, strike, sigma, maturity, rate );
   return std::exp( -rate * maturity ) * normal_cdf( d.d2 );
}

} // namespace specrisk
