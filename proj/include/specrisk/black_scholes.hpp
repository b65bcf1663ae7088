#pragma once

namespace specrisk {

double normal_cdf( double x );

/// European call, lognormal closed form.
double black_scholes_call( double spot, double strike, double sigma,
                           double maturity, double rate );

/// Cash-or-nothing binary call paying 1.
double black_scholes_binary( double spot, double strike, double sigma,
                             double maturity, double rate );

} // namespace specrisk
