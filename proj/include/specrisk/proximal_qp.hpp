#pragma once

#include <limits>
#include <vector>

#include <specrisk/types.hpp>

namespace specrisk {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// max c'x - 0.5 |x|^2  s.t.  1'x = 1, 0 <= x <= cap.
/// Cap entries may be kUnbounded.
struct CappedSimplexQP
{
   Vector c;
   Vector cap;
};

/// min l1_weight |x|_1 + gradient'(x - anchor) + curvature/2 |x - anchor|^2
/// s.t. 1'x = 1, |x|_inf <= bound.
struct L1SimplexBoxQP
{
   double l1_weight = 0.0;
   Vector gradient;
   Vector anchor;
   double curvature = 1.0;
   double bound = 1.0;
};

struct DualSolution
{
   Vector x;
   /// Multiplier of the coupling constraint 1'x = 1.
   double multiplier = 0.0;
};

DualSolution solve_capped_simplex( const CappedSimplexQP& qp );

DualSolution solve_l1_simplex_box( const L1SimplexBoxQP& qp );

/// Separable soft-threshold-and-clip prox for box-constrained problems.
Vector solve_box_prox( double l1_weight, const VectorRef& gradient,
                       const VectorRef& anchor, double curvature,
                       const VectorRef& lower, const VectorRef& upper );

/// Multiplier for the capped simplex with a common cap, given c already
/// sorted in descending order: the solution is min{c_i - gamma, cap}^+ and
/// sums to `mass`.
double capped_simplex_multiplier_sorted( const double* c_descending, Index n,
                                         double cap, double mass = 1.0 );

/// Values kept partially ordered: a descending prefix that grows on demand,
/// with every unordered entry no larger than the prefix.
class DescendingPrefix
{
public:
   explicit DescendingPrefix( const VectorRef& values );

   /// Orders the first k entries; returns the largest unordered value, or
   /// -infinity when everything is ordered.
   double ensure( Index k );

   const double* data() const { return work_.data(); }
   Index size() const { return Index( work_.size() ); }

private:
   std::vector<double> work_;
   Index ordered_ = 0;
};

/// Multiplier for the common-cap capped simplex, ordering only as much of
/// the prefix as the root requires.
double capped_simplex_multiplier( DescendingPrefix& c, double cap,
                                  double mass = 1.0 );

} // namespace specrisk
