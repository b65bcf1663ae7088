#include <specrisk/report_io.hpp>

#include <json.hpp>

#include <specrisk/instance_io.hpp>

namespace specrisk {

namespace {

using nlohmann::json;

json
array( const Vector& v )
{
   json a = json::array();
   for( Index i = 0; i < v.size(); ++i )
      a.push_back( v[i] );
   return a;
}

} // namespace

std::string
report_json( const SolveReport& r, const ProblemSpec& problem,
             const SolverConfig& config, const ReportOptions& options )
{
   json doc;
   doc["schema"] = kReportSchema;
   doc["status"] = to_string( r.status );
   doc["message"] = r.message;
   doc["variant"] = to_string( r.variant );
   doc["objective"] = r.objective;
   doc["variant_objective"] = problem.variant_objective( r.x );
   doc["risk_values"] = array( r.risk_values );
   doc["budgets"] = array( problem.risk.budgets() );
   doc["max_violation"] = r.max_violation;
   doc["outer_iterations"] = r.outer_iterations;
   doc["inner_iterations"] = r.inner_iterations;
   doc["backtracks"] = r.backtracks;
   doc["eta_final"] = r.eta_final;
   doc["curvature_final"] = r.curvature_final;
   doc["x"] = array( r.x );
   doc["nonzeros"] = ( r.x.array().abs() > 1e-8 ).count();
   if( options.timing )
      doc["wall_time"] = r.wall_time;

   doc["config"] = { { "eta0", config.eta0 },
                     { "c_eta", config.c_eta },
                     { "tau0", config.tau0 },
                     { "c_tau", config.c_tau },
                     { "nu", r.nu },
                     { "delta", r.delta },
                     { "varsigma", config.varsigma },
                     { "zeta", config.zeta },
                     { "max_outer", config.max_outer },
                     { "max_inner", config.max_inner },
                     { "lambda", problem.lambda } };

   if( options.trace )
   {
      json trace = json::array();
      for( const OuterRecord& t : r.trace )
         trace.push_back( { { "outer", t.outer },
                            { "eta", t.eta },
                            { "tau", t.tau },
                            { "inner", t.inner_iterations },
                            { "backtracks", t.backtracks },
                            { "curvature", t.curvature },
                            { "relative_change", t.relative_change },
                            { "max_violation", t.max_violation },
                            { "objective", t.objective },
                            { "inner_capped", t.inner_capped },
                            { "stalled", t.stalled } } );
      doc["trace"] = std::move( trace );
   }

   const json extra = json::parse( options.extra, nullptr, false );
   if( extra.is_discarded() || !extra.is_object() )
      throw SchemaError( "report extras must be a JSON object" );
   for( auto it = extra.begin(); it != extra.end(); ++it )
      doc[it.key()] = it.value();
   return doc.dump( 2 ) + "\n";
}

} // namespace specrisk
