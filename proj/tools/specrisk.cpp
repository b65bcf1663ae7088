#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <specrisk/instance_io.hpp>
#include <specrisk/lp_bridge.hpp>
#include <specrisk/report_io.hpp>
#include <specrisk/scenario_lab.hpp>
#include <specrisk/solver.hpp>

using namespace specrisk;
using nlohmann::json;

namespace {

enum Exit
{
   kOk = 0,
   kUsage = 1,     // bad flags, I/O or schema problems
   kTolerance = 2, // no varsigma-feasible point / oracle gap too large
   kNumerical = 3,
};

int
exit_code( SolveStatus s )
{
   switch( s )
   {
   case SolveStatus::converged:
      return kOk;
   case SolveStatus::infeasible_at_tolerance:
      return kTolerance;
   case SolveStatus::numerical_failure:
      return kNumerical;
   }
   return kNumerical;
}

void
write_text( const std::filesystem::path& path, const std::string& text )
{
   if( path.empty() || path == "-" )
   {
      std::cout << text;
      return;
   }
   std::ofstream out( path );
   if( !out )
      throw std::runtime_error( fmt::format( "cannot write {}", path.string() ) );
   out << text;
}

struct SolverFlags
{
   SolverConfig config;
   double nu = 0.0; // 0: derive from the budgets

   void add( CLI::App* app )
   {
      app->add_option( "--eta0", config.eta0, "initial objective scale" )
          ->capture_default_str();
      app->add_option( "--c-eta", config.c_eta, "scale decrease factor" )
          ->capture_default_str();
      app->add_option( "--tau0", config.tau0, "initial FISTA tolerance" )
          ->capture_default_str();
      app->add_option( "--c-tau", config.c_tau, "tolerance decrease factor" )
          ->capture_default_str();
      app->add_option( "--nu", nu, "shortfall smoothing (0: 0.01 min|alpha|)" )
          ->capture_default_str();
      app->add_option( "--delta", config.delta, "max smoothing" )
          ->capture_default_str();
      app->add_option( "--varsigma", config.varsigma, "outer tolerance" )
          ->capture_default_str();
      app->add_option( "--zeta", config.zeta, "backtracking growth" )
          ->capture_default_str();
      app->add_option( "--max-outer", config.max_outer )->capture_default_str();
      app->add_option( "--max-inner", config.max_inner )->capture_default_str();
   }

   SolverConfig resolved() const
   {
      SolverConfig c = config;
      if( nu > 0.0 )
         c.nu = nu;
      c.validate();
      return c;
   }
};

SolveReport
dispatch( const ProblemSpec& problem, const SolverConfig& config )
{
   switch( problem.variant )
   {
   case Variant::weighted:
      return solve_weighted( problem, config );
   case Variant::max:
      return solve_max( problem, config );
   case Variant::constrained:
      break;
   }
   return spec_risk_allocate( problem, config );
}

// Runs job(i) for i < count on `jobs` threads.
template <typename Job>
void
run_pool( std::size_t count, unsigned jobs, Job&& job )
{
   std::atomic<std::size_t> next{ 0 };
   std::exception_ptr failure;
   std::mutex failure_lock;
   auto worker = [&] {
      for( std::size_t i = next++; i < count; i = next++ )
      {
         try
         {
            job( i );
         }
         catch( ... )
         {
            std::lock_guard<std::mutex> lock( failure_lock );
            if( !failure )
               failure = std::current_exception();
         }
      }
   };
   std::vector<std::thread> pool;
   for( unsigned t = 1; t < std::max( 1u, jobs ); ++t )
      pool.emplace_back( worker );
   worker();
   for( auto& t : pool )
      t.join();
   if( failure )
      std::rethrow_exception( failure );
}

// ---- gen ------------------------------------------------------------------

struct GenCommand
{
   RandomInstanceSpec spec;
   std::string lambda_mode = "star";
   std::filesystem::path out = "instance.json";

   void add( CLI::App& root )
   {
      CLI::App* app = root.add_subcommand( "gen", "generate a random instance" );
      app->add_option( "--n", spec.n, "assets" )->capture_default_str();
      app->add_option( "--N", spec.N, "scenarios per model" )->capture_default_str();
      app->add_option( "--m", spec.m, "risk models" )->capture_default_str();
      app->add_option( "--d", spec.d, "shortfall components" )->capture_default_str();
      app->add_option( "--seed", spec.seed )->capture_default_str();
      app->add_option( "--budget-slack", spec.budget_slack )->capture_default_str();
      app->add_option( "--beta-low", spec.beta_low )->capture_default_str();
      app->add_option( "--beta-high", spec.beta_high )->capture_default_str();
      app->add_option( "--leverage", spec.leverage )->capture_default_str();
      app->add_option( "--mu-high", spec.mu_high )->capture_default_str();
      app->add_option( "--vol-low", spec.vol_low )->capture_default_str();
      app->add_option( "--vol-high", spec.vol_high )->capture_default_str();
      app->add_option( "--lambda", lambda_mode, "star or zero" )
          ->check( CLI::IsMember( { "star", "zero" } ) )
          ->capture_default_str();
      app->add_option( "-o,--out", out, "instance header (.json)" )
          ->capture_default_str();
      app->callback( [this] { run(); } );
   }

   void run()
   {
      spec.sparse = lambda_mode == "star";
      try
      {
         spec.validate();
      }
      catch( const std::domain_error& e )
      {
         throw SchemaError( e.what() );
      }
      InstanceFile file;
      file.problem = generate_random_instance( spec );
      json g = { { "kind", "random" },
                 { "n", spec.n },
                 { "N", spec.N },
                 { "m", spec.m },
                 { "d", spec.d },
                 { "seed", spec.seed },
                 { "budget_slack", spec.budget_slack },
                 { "beta_range", { spec.beta_low, spec.beta_high } },
                 { "leverage", spec.leverage },
                 { "lambda", lambda_mode },
                 { "mu", fmt::format( "uniform[0,{}]", spec.mu_high ) },
                 { "losses", fmt::format( "normal(-mu_i, sigma_i^2), sigma_i "
                                          "~ uniform[{},{}]",
                                          spec.vol_low, spec.vol_high ) },
                 { "gamma", "dirichlet(1)" } };
      file.generator = g.dump();
      save_instance( out, file );
   }
};

// ---- solve ----------------------------------------------------------------

struct SolveCommand
{
   std::filesystem::path instance;
   std::filesystem::path out = "-";
   SolverFlags flags;
   std::string variant;
   double theta = -1.0;
   std::vector<double> weights;
   std::string oracle;
   double grid_step = 1e-3;
   bool no_trace = false;
   bool no_timing = false;
   int code = kOk;

   void add( CLI::App& root )
   {
      CLI::App* app = root.add_subcommand( "solve", "solve an instance" );
      app->add_option( "instance", instance, "instance header" )
          ->required()
          ->check( CLI::ExistingFile );
      app->add_option( "-o,--out", out, "report path (- for stdout)" )
          ->capture_default_str();
      app->add_option( "--variant", variant,
                       "override: constrained, weighted or max" )
          ->check( CLI::IsMember( { "constrained", "weighted", "max" } ) );
      app->add_option( "--theta", theta,
                       "max multiplier, or the common weighted-risk weight" );
      app->add_option( "--weights", weights, "weighted-risk weights per model" );
      app->add_option( "--oracle", oracle, "compare with an oracle: grid" )
          ->check( CLI::IsMember( { "grid" } ) );
      app->add_option( "--grid-step", grid_step )->capture_default_str();
      app->add_flag( "--no-trace", no_trace, "omit the per-outer trace" );
      app->add_flag( "--no-timing", no_timing,
                     "omit wall time (bit-identical reports)" );
      flags.add( app );
      app->callback( [this] { run(); } );
   }

   void run()
   {
      ProblemSpec problem = load_instance( instance ).problem;
      if( !variant.empty() )
         problem.variant = variant_from_string( variant );
      if( !weights.empty() )
         problem.weights = Eigen::Map<const Vector>( weights.data(),
                                                     Index( weights.size() ) );
      if( theta >= 0.0 )
      {
         problem.theta = theta;
         if( problem.variant == Variant::weighted && weights.empty() )
            problem.weights = Vector::Constant( problem.risk.size(), theta );
      }
      try
      {
         problem.validate();
      }
      catch( const std::domain_error& e )
      {
         throw CLI::ValidationError( "solve", e.what() );
      }
      const SolverConfig config = flags.resolved();
      const SolveReport report = dispatch( problem, config );
      code = exit_code( report.status );

      json extra = json::object();
      if( oracle == "grid" )
      {
         const OracleResult o = tiny_oracle( problem, grid_step );
         const double mine = problem.variant_objective( report.x );
         json section = { { "kind", "grid" },
                          { "grid_step", grid_step },
                          { "evaluated", o.evaluated },
                          { "feasible", o.x.has_value() } };
         if( o.x )
         {
            const double gap =
                std::abs( mine - o.objective ) / std::max( std::abs( o.objective ), 1e-12 );
            section["objective"] = o.objective;
            section["relative_gap"] = gap;
            if( gap > 1e-2 && code == kOk )
               code = kTolerance;
         }
         extra["oracle"] = std::move( section );
      }
      ReportOptions options;
      options.trace = !no_trace;
      options.timing = !no_timing;
      options.extra = extra.dump();
      write_text( out, report_json( report, problem, config, options ) );
   }
};

// ---- export-lp ------------------------------------------------------------

struct ExportCommand
{
   std::filesystem::path instance;
   std::string prefix;

   void add( CLI::App& root )
   {
      CLI::App* app = root.add_subcommand(
          "export-lp", "write the equivalent LP as .lp, .mps and .dims.json" );
      app->add_option( "instance", instance )->required()->check(
          CLI::ExistingFile );
      app->add_option( "-o,--out", prefix,
                       "output prefix (default: instance path without extension)" );
      app->callback( [this] { run(); } );
   }

   void run()
   {
      const ProblemSpec problem = load_instance( instance ).problem;
      std::filesystem::path base = prefix;
      if( prefix.empty() )
         base = std::filesystem::path( instance ).replace_extension();
      const LinearProgram lp = build_lp( problem );
      write_text( base.string() + ".lp", write_lp( lp ) );
      write_text( base.string() + ".mps", write_mps( lp ) );
      write_text( base.string() + ".dims.json",
                  dims_json( lp_dimensions( problem ) ) );
   }
};

// ---- bench-perturb --------------------------------------------------------

struct PerturbCommand
{
   std::filesystem::path instance;
   std::filesystem::path out = "-";
   double t = 0.05;
   int samples = 30;
   std::uint64_t seed = 1;
   unsigned jobs = 1;
   SolverFlags flags;

   void add( CLI::App& root )
   {
      CLI::App* app = root.add_subcommand(
          "bench-perturb", "iteration statistics over perturbed copies" );
      app->add_option( "instance", instance )->required()->check(
          CLI::ExistingFile );
      app->add_option( "-o,--out", out )->capture_default_str();
      app->add_option( "--t", t, "relative perturbation size" )
          ->check( CLI::NonNegativeNumber )
          ->capture_default_str();
      app->add_option( "--S", samples, "perturbed instances" )
          ->check( CLI::PositiveNumber )
          ->capture_default_str();
      app->add_option( "--seed", seed, "first perturbation seed" )
          ->capture_default_str();
      app->add_option( "-j,--jobs", jobs, "worker threads" )->capture_default_str();
      flags.add( app );
      app->callback( [this] { run(); } );
   }

   void run()
   {
      const ProblemSpec base = load_instance( instance ).problem;
      const SolverConfig config = flags.resolved();
      std::vector<SolveReport> reports( static_cast<std::size_t>( samples ) );
      run_pool( reports.size(), jobs, [&]( std::size_t s ) {
         const ProblemSpec p = perturb_instance( base, t, seed + s );
         reports[s] = spec_risk_allocate( p, config );
      } );

      double sum = 0.0;
      for( const auto& r : reports )
         sum += double( r.inner_iterations );
      const double mean = sum / double( samples );
      double spread = 0.0;
      for( const auto& r : reports )
         spread += ( double( r.inner_iterations ) - mean ) *
                   ( double( r.inner_iterations ) - mean );
      const double sd = samples > 1 ? std::sqrt( spread / double( samples - 1 ) ) : 0.0;

      json runs = json::array();
      for( std::size_t s = 0; s < reports.size(); ++s )
         runs.push_back( { { "seed", seed + s },
                           { "status", to_string( reports[s].status ) },
                           { "inner_iterations", reports[s].inner_iterations },
                           { "outer_iterations", reports[s].outer_iterations },
                           { "objective", reports[s].objective },
                           { "max_violation", reports[s].max_violation } } );
      json doc = { { "t", t },
                   { "S", samples },
                   { "mu_S", mean },
                   { "sigma_S", sd },
                   { "cv", mean > 0.0 ? sd / mean : 0.0 },
                   { "runs", std::move( runs ) } };
      write_text( out, doc.dump( 2 ) + "\n" );
   }
};

// ---- bench-scale ----------------------------------------------------------

struct ScaleCommand
{
   std::vector<std::string> sizes{ "10x100", "20x200", "50x1000" };
   int instances = 3;
   std::uint64_t seed = 1;
   std::string lambda_mode = "both";
   std::filesystem::path out = "-";
   std::filesystem::path lp_dir;
   unsigned jobs = 1;
   SolverFlags flags;

   void add( CLI::App& root )
   {
      CLI::App* app = root.add_subcommand(
          "bench-scale", "solve random instances over a grid of sizes" );
      app->add_option( "--sizes", sizes, "nxN pairs" )->capture_default_str();
      app->add_option( "--instances", instances, "seeds per size" )
          ->capture_default_str();
      app->add_option( "--seed", seed )->capture_default_str();
      app->add_option( "--lambda", lambda_mode )
          ->check( CLI::IsMember( { "star", "zero", "both" } ) )
          ->capture_default_str();
      app->add_option( "-o,--out", out, "CSV path" )->capture_default_str();
      app->add_option( "--lp-dir", lp_dir, "also export each instance as MPS here" );
      app->add_option( "-j,--jobs", jobs )->capture_default_str();
      flags.add( app );
      app->callback( [this] { run(); } );
   }

   void run()
   {
      struct Case
      {
         Index n, N;
         bool sparse;
         std::uint64_t seed;
      };
      std::vector<Case> cases;
      for( const std::string& s : sizes )
      {
         Index n = 0, N = 0;
         if( std::sscanf( s.c_str(), "%ldx%ld", &n, &N ) != 2 || n < 1 || N < 1 )
            throw CLI::ValidationError( "--sizes", "expected nxN, got " + s );
         for( int i = 0; i < instances; ++i )
         {
            if( lambda_mode != "zero" )
               cases.push_back( { n, N, true, seed + std::uint64_t( i ) } );
            if( lambda_mode != "star" )
               cases.push_back( { n, N, false, seed + std::uint64_t( i ) } );
         }
      }
      const SolverConfig config = flags.resolved();
      if( !lp_dir.empty() )
         std::filesystem::create_directories( lp_dir );
      std::vector<std::string> rows( cases.size() );
      run_pool( cases.size(), jobs, [&]( std::size_t i ) {
         const Case& c = cases[i];
         RandomInstanceSpec spec;
         spec.n = c.n;
         spec.N = c.N;
         spec.seed = c.seed;
         spec.sparse = c.sparse;
         const ProblemSpec p = generate_random_instance( spec );
         std::string mps;
         if( !lp_dir.empty() )
         {
            mps = ( lp_dir / fmt::format( "n{}_N{}_{}_s{}.mps", c.n, c.N,
                                          c.sparse ? "star" : "zero", c.seed ) )
                      .string();
            write_text( mps, export_mps( p ) );
         }
         const SolveReport r = spec_risk_allocate( p, config );
         rows[i] = fmt::format( "{},{},{},{},{},{:.6f},{},{},{:.10g},{:.6g},{}\n",
                                c.n, c.N, c.sparse ? "star" : "zero", p.lambda,
                                c.seed, r.wall_time, r.outer_iterations,
                                r.inner_iterations, r.objective, r.max_violation,
                                to_string( r.status ) + ( mps.empty() ? "" : "," + mps ) );
      } );
      std::string text =
          "n,N,lambda_mode,lambda,seed,time_s,outer,inner,objective,max_violation,"
          "status";
      text += lp_dir.empty() ? "\n" : ",mps\n";
      for( const auto& r : rows )
         text += r;
      write_text( out, text );
   }
};

// ---- hedge ----------------------------------------------------------------

struct HedgeCommand
{
   HedgingSpec spec;
   std::string mode = "robust";
   double theta = 0.0;
   std::uint64_t seed = 1;
   std::uint64_t eval_seed = 2;
   Index grid = 9;
   std::filesystem::path out = "-";
   std::filesystem::path report;
   SolverFlags flags;
   int code = kOk;

   void add( CLI::App& root )
   {
      // The epigraph rows carry a unit multiplier, so the exact-penalty
      // threshold sits below 1.
      flags.config.eta0 = 0.5;
      CLI::App* app = root.add_subcommand(
          "hedge", "robust or nominal hedge of the short binary book" );
      app->add_option( "--mode", mode )
          ->check( CLI::IsMember( { "nominal", "robust" } ) )
          ->capture_default_str();
      app->add_option( "--theta", theta, "sparsity multiplier" )
          ->capture_default_str();
      app->add_option( "--samples", spec.samples )->capture_default_str();
      app->add_option( "--seed", seed, "training scenarios" )->capture_default_str();
      app->add_option( "--eval-seed", eval_seed, "out-of-sample scenarios" )
          ->capture_default_str();
      app->add_option( "--grid", grid, "omega_1 grid points" )->capture_default_str();
      app->add_option( "--rate", spec.rate )->capture_default_str();
      app->add_option( "--es-level", spec.es_level )->capture_default_str();
      app->add_option( "--risk-reduction", spec.risk_reduction )
          ->capture_default_str();
      app->add_option( "--leverage", spec.leverage )->capture_default_str();
      app->add_option( "-o,--out", out, "CSV table" )->capture_default_str();
      app->add_option( "--report", report, "JSON solve report" );
      flags.add( app );
      app->callback( [this] { run(); } );
   }

   void run()
   {
      try
      {
         spec.resolved().validate();
      }
      catch( const std::domain_error& e )
      {
         throw CLI::ValidationError( "hedge", e.what() );
      }
      const SolverConfig config = flags.resolved();
      const Index q = Index( spec.resolved().factors.size() );
      const double lambda = hedging_lambda( spec, theta, seed, config );
      const auto models = generate_hedging_models(
          spec, WorstCaseModelSet::from_mode( mode, q ), seed );
      const ProblemSpec problem = build_hedging_problem( models, spec, lambda );
      const SolveReport r = spec_risk_allocate( problem, config );
      code = exit_code( r.status );

      const auto table = evaluate_hedge( spec, r.x, hedge_grid( grid ), eval_seed );
      std::string csv = "omega1,omega2,es,mean_return,mode\n";
      for( const auto& e : table )
         csv += fmt::format( "{:.6g},{:.6g},{:.10g},{:.10g},{}\n", e.omega[0],
                             e.omega[1], e.es, e.mean_return, mode );
      for( const auto& e : table )
         csv += fmt::format( "{:.6g},{:.6g},{:.10g},{:.10g},initial\n",
                             e.omega[0], e.omega[1], e.initial_es,
                             e.initial_mean_return );
      write_text( out, csv );

      if( !report.empty() )
      {
         json extra = { { "hedge", { { "mode", mode },
                                     { "theta", theta },
                                     { "lambda", lambda },
                                     { "names", spec.instrument_names() } } } };
         ReportOptions options;
         options.extra = extra.dump();
         write_text( report, report_json( r, problem, config, options ) );
      }
   }
};

} // namespace

int
main( int argc, char** argv )
{
   CLI::App app( "Spectral-risk constrained portfolio selection" );
   app.set_config( "--config", "", "TOML/INI file with flag values" );
   app.require_subcommand( 1 );

   GenCommand gen;
   SolveCommand solve;
   ExportCommand exporter;
   PerturbCommand perturb;
   ScaleCommand scale;
   HedgeCommand hedge;
   gen.add( app );
   solve.add( app );
   exporter.add( app );
   perturb.add( app );
   scale.add( app );
   hedge.add( app );

   try
   {
      app.parse( argc, argv );
   }
   catch( const CLI::ParseError& e )
   {
      const int rc = app.exit( e );
      return rc == 0 ? kOk : kUsage;
   }
   catch( const NumericalFailure& e )
   {
      fmt::print( stderr, "numerical failure: {}\n", e.what() );
      return kNumerical;
   }
   catch( const std::exception& e )
   {
      fmt::print( stderr, "error: {}\n", e.what() );
      return kUsage;
   }
   if( app.got_subcommand( "solve" ) )
      return solve.code;
   if( app.got_subcommand( "hedge" ) )
      return hedge.code;
   return kOk;
}
