#pragma once

#include <vector>

#include <specrisk/risk_measures.hpp>
#include <specrisk/types.hpp>

namespace specrisk {

struct SmoothingParams
{
   double nu = 1e-2;    ///< shortfall smoothing strength
   double delta = 1e-2; ///< max smoothing strength

   void validate() const;
};

/// One risk model: portfolio losses offset + L x measured by a generalized
/// spectral risk measure. The offset is empty unless an existing position
/// contributes losses.
struct RiskModel
{
   LossMatrix losses;
   SpectralMeasure measure;
   Vector offset;

   Index scenarios() const { return losses.scenarios(); }
   Index assets() const { return losses.assets(); }

   Vector portfolio_losses( const VectorRef& x ) const;
   /// Exact (non-smoothed) risk of portfolio x.
   double risk( const VectorRef& x ) const;
};

/// Risk models paired with their budgets alpha_k.
class RiskConstraintSet
{
public:
   RiskConstraintSet() = default;
   RiskConstraintSet( std::vector<RiskModel> models, Vector budgets );

   const std::vector<RiskModel>& models() const { return models_; }
   const Vector& budgets() const { return budgets_; }
   Index size() const { return Index( models_.size() ); }
   Index assets() const;

   /// Exact risks rho_k(L_k x).
   Vector risks( const VectorRef& x ) const;
   /// g_max(x) = max_k rho_k(L_k x) - alpha_k, exact measures.
   double max_violation( const VectorRef& x ) const;

private:
   std::vector<RiskModel> models_;
   Vector budgets_;
};

struct SmoothedValue
{
   double value = 0.0;
   /// Gradient with respect to the argument; equals the inner maximizer.
   Vector grad;
};

/// Largest value over the common-cap simplex 0 <= q <= 1/kappa, 1'q = 1 of
/// zeta'q - nu/2 |q|^2, with its unique maximizer.
SmoothedValue smoothed_es( const VectorRef& zeta, double beta, double nu );

/// Smoothed max over the simplex: max t'u - delta/2 |u|^2.
SmoothedValue smoothed_max( const VectorRef& t, double delta );

SmoothedValue smoothed_spectral_risk( const VectorRef& zeta,
                                      const SpectralMeasure& measure,
                                      double nu );

/// Per-call intermediates of the smoothed violation gradient.
struct GradientWorkspace
{
   /// duals[k][l]: maximizer for component l of model k.
   std::vector<std::vector<Vector>> duals;
   /// Weights of the smoothed max; last entry belongs to the appended 0.
   Vector outer;
   /// Portfolio losses per model.
   std::vector<Vector> losses;
   /// Smoothed risks rho_k^(nu).
   Vector smoothed_risks;
};

struct SmoothedPenalty
{
   double value = 0.0;
   Vector grad;
   GradientWorkspace workspace;
};

/// Smoothed violation g_{nu,delta}(x) = Psi^(delta)(rho_k^(nu) - alpha_k, 0)
/// and its gradient sum_k u_k L_k' grad rho_k^(nu).
SmoothedPenalty smoothed_g( const VectorRef& x,
                            const RiskConstraintSet& constraints,
                            const SmoothingParams& params );

/// Value of smoothed_g only; skips the transposed products.
double smoothed_g_value( const VectorRef& x,
                         const RiskConstraintSet& constraints,
                         const SmoothingParams& params );

/// Smoothed risk of one model at x, optionally with its gradient in x.
struct ModelSmoothing
{
   double value = 0.0;
   Vector scenario_grad; ///< grad of rho^(nu) at the losses
   Vector losses;
   std::vector<Vector> duals;
};

ModelSmoothing smooth_model( const RiskModel& model, const VectorRef& x,
                             double nu, bool keep_duals );

/// Same, starting from portfolio losses already computed.
ModelSmoothing smooth_losses( const SpectralMeasure& measure, Vector losses,
                              double nu, bool keep_duals );

} // namespace specrisk
