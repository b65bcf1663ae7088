#pragma once

#include <specrisk/types.hpp>

namespace specrisk {

/// Scenario loss realizations for one risk model: one row per scenario,
/// one column per asset. Entries are rates of loss.
class LossMatrix
{
public:
   LossMatrix() = default;
   explicit LossMatrix( RowMatrix entries );

   const RowMatrix& entries() const { return entries_; }
   Index scenarios() const { return entries_.rows(); }
   Index assets() const { return entries_.cols(); }

   /// Portfolio losses L x.
   Vector losses( const VectorRef& x ) const;

   /// out += weight L' q, skipping the zero entries of q.
   void add_transposed( double weight, const Vector& q, Vector& out ) const;

private:
   RowMatrix entries_;
};

/// Mixture of expected shortfalls: sum_l gamma_l ES_{beta_l}.
class SpectralMeasure
{
public:
   SpectralMeasure() = default;
   SpectralMeasure( Vector gamma, Vector beta );

   static SpectralMeasure single( double beta );

   const Vector& gamma() const { return gamma_; }
   const Vector& beta() const { return beta_; }
   Index components() const { return gamma_.size(); }

private:
   Vector gamma_;
   Vector beta_;
};

/// Non-decreasing probability mass over ascending order statistics.
class SpectrumWeights
{
public:
   explicit SpectrumWeights( Vector omega );

   const Vector& omega() const { return omega_; }
   Index size() const { return omega_.size(); }

private:
   Vector omega_;
};

/// Number of tail samples kappa = ceil((1 - beta) N), snapped to the nearest
/// integer when (1 - beta) N is within rounding of one.
Index tail_count( double beta, Index scenarios );

double expected_shortfall( const VectorRef& y, double beta );

struct ShortfallDual
{
   double value;
   double z_star;
};

/// min_z { z + (1/kappa) sum (y - z)^+ } together with a minimizer.
ShortfallDual expected_shortfall_dual( const VectorRef& y, double beta );

double spectral_risk( const VectorRef& y, const SpectrumWeights& omega );

SpectralMeasure convert_spectrum( const SpectrumWeights& omega );

double generalized_spectral_risk( const VectorRef& y,
                                  const SpectralMeasure& measure );

/// Shortfall of an already descending-sorted sample.
double shortfall_of_sorted( const double* descending, Index count,
                            double beta );

} // namespace specrisk
