#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kDir = fs::temp_directory_path() / "specrisk_cli_test";

int
run( const std::string& args )
{
   fs::create_directories( kDir );
   const std::string cmd = "cd '" + kDir.string() + "' && '" SPECRISK_CLI "' " + args +
                           " >/dev/null 2>&1";
   const int status = std::system( cmd.c_str() );
   return WIFEXITED( status ) ? WEXITSTATUS( status ) : -1;
}

std::string
slurp( const std::string& name )
{
   std::ifstream in( kDir / name, std::ios::binary );
   std::ostringstream s;
   s << in.rdbuf();
   return s.str();
}

json
load( const std::string& name )
{
   return json::parse( slurp( name ) );
}

} // namespace

TEST( Cli, GenShapeAndDeterminism )
{
   ASSERT_EQ( run( "gen --n 10 --N 100 --m 5 --d 3 --seed 7 -o a.json" ), 0 );
   ASSERT_EQ( run( "gen --n 10 --N 100 --m 5 --d 3 --seed 7 -o b.json" ), 0 );
   const json a = load( "a.json" );
   EXPECT_EQ( a["schema"], "specrisk-instance/1" );
   EXPECT_EQ( a["assets"], 10 );
   EXPECT_EQ( a["models"].size(), 5u );
   EXPECT_EQ( a["models"][0]["scenarios"], 100 );
   EXPECT_EQ( a["models"][0]["gamma"].size(), 3u );
   EXPECT_EQ( slurp( "a.bin" ), slurp( "b.bin" ) );
   json b = load( "b.json" );
   b["blob"] = "a.bin";
   EXPECT_EQ( a, b );
}

TEST( Cli, GenRejectsEmptySample )
{
   EXPECT_EQ( run( "gen --N 0 -o z.json" ), 1 );
   EXPECT_EQ( run( "frobnicate" ), 1 );
}

TEST( Cli, SolveDefaultsAndDeterminism )
{
   ASSERT_EQ( run( "gen --n 6 --N 60 --m 3 --d 2 --seed 3 -o s.json" ), 0 );
   ASSERT_EQ( run( "solve s.json --no-timing -o r1.json" ), 0 );
   ASSERT_EQ( run( "solve s.json --no-timing -o r2.json" ), 0 );
   EXPECT_EQ( slurp( "r1.json" ), slurp( "r2.json" ) );
   const json r = load( "r1.json" );
   EXPECT_EQ( r["schema"], "specrisk-report/1" );
   EXPECT_EQ( r["config"]["eta0"], 10.0 );
   EXPECT_EQ( r["config"]["c_eta"], 0.99 );
   EXPECT_EQ( r["config"]["tau0"], 1e-4 );
   EXPECT_EQ( r["config"]["c_tau"], 0.95 );
   EXPECT_EQ( r["config"]["delta"], 0.01 );
   EXPECT_EQ( r["config"]["varsigma"], 0.01 );
   const json inst = load( "s.json" );
   double min_alpha = 1e300;
   for( const auto& m : inst["models"] )
      min_alpha = std::min( min_alpha, std::abs( m["budget"].get<double>() ) );
   EXPECT_DOUBLE_EQ( r["config"]["nu"].get<double>(), 0.01 * min_alpha );
   EXPECT_TRUE( r.contains( "trace" ) );
}

TEST( Cli, ConfigFilePrecedence )
{
   ASSERT_EQ( run( "gen --n 4 --N 40 --m 2 --d 2 --seed 2 --budget-slack 0 -o c.json" ), 0 );
   std::ofstream( kDir / "c.toml" ) << "[solve]\neta0 = 5\nvarsigma = 0.02\n";
   ASSERT_EQ( run( "--config c.toml solve c.json --no-trace -o rc.json" ), 0 );
   EXPECT_EQ( load( "rc.json" )["config"]["eta0"], 5.0 );
   EXPECT_EQ( load( "rc.json" )["config"]["varsigma"], 0.02 );
   ASSERT_EQ( run( "--config c.toml solve c.json --no-trace --eta0 7 -o rc.json" ), 0 );
   EXPECT_EQ( load( "rc.json" )["config"]["eta0"], 7.0 );
}

TEST( Cli, VariantRouting )
{
   ASSERT_EQ( run( "gen --n 4 --N 40 --m 2 --d 2 --seed 5 --lambda zero -o v.json" ), 0 );
   ASSERT_EQ( run( "solve v.json --variant max --theta 0.5 -o rv.json" ), 0 );
   EXPECT_EQ( load( "rv.json" )["variant"], "max" );
   ASSERT_EQ( run( "solve v.json --variant weighted --weights 0.1 0.2 -o rw.json" ), 0 );
   EXPECT_EQ( load( "rw.json" )["variant"], "weighted" );
   EXPECT_EQ( run( "solve v.json --variant weighted --weights 0.1 -o rw.json" ), 1 );
}

TEST( Cli, GridOracleGap )
{
   ASSERT_EQ( run( "gen --n 2 --N 50 --m 1 --d 1 --seed 3 --budget-slack 0 -o t.json" ), 0 );
   ASSERT_EQ( run( "solve t.json --oracle grid --grid-step 1e-5 -o rt.json" ), 0 );
   const json o = load( "rt.json" )["oracle"];
   ASSERT_TRUE( o["feasible"].get<bool>() );
   EXPECT_LE( o["relative_gap"].get<double>(), 1e-2 );
}

TEST( Cli, ExitCodes )
{
   ASSERT_EQ( run( "gen --n 4 --N 40 --m 2 --d 2 --seed 9 -o e.json" ), 0 );
   json doc = load( "e.json" );
   for( auto& m : doc["models"] )
      m["budget"] = -100.0;
   std::ofstream( kDir / "e.json" ) << doc.dump();
   EXPECT_EQ( run( "solve e.json --max-outer 20 -o re.json" ), 2 );
   EXPECT_EQ( load( "re.json" )["status"], "infeasible_at_tolerance" );
   EXPECT_EQ( run( "solve missing.json" ), 1 );
   EXPECT_EQ( run( "solve e.json --c-eta 2" ), 1 );
}

TEST( Cli, ExportLp )
{
   ASSERT_EQ( run( "gen --n 3 --N 10 --m 2 --d 2 --seed 1 -o x.json" ), 0 );
   ASSERT_EQ( run( "export-lp x.json" ), 0 );
   const json dims = load( "x.dims.json" );
   EXPECT_EQ( dims["blocks"]["x"], 3 );
   EXPECT_EQ( dims["blocks"]["y"], 40 );
   EXPECT_EQ( dims["x_plus_y"], 43 );
   const std::string first = slurp( "x.lp" );
   ASSERT_EQ( run( "export-lp x.json" ), 0 );
   EXPECT_EQ( first, slurp( "x.lp" ) );
   EXPECT_FALSE( slurp( "x.mps" ).empty() );
}

TEST( Cli, BenchPerturbSchema )
{
   ASSERT_EQ( run( "gen --n 5 --N 50 --m 2 --d 2 --seed 4 -o p.json" ), 0 );
   ASSERT_EQ( run( "bench-perturb p.json --t 0 --S 3 -o p0.json" ), 0 );
   const json z = load( "p0.json" );
   EXPECT_EQ( z["cv"], 0.0 );
   EXPECT_EQ( z["sigma_S"], 0.0 );
   EXPECT_EQ( z["runs"].size(), 3u );
   ASSERT_EQ( run( "bench-perturb p.json --t 0.05 --S 4 --jobs 2 -o p1.json" ), 0 );
   ASSERT_EQ( run( "bench-perturb p.json --t 0.05 --S 4 --jobs 1 -o p2.json" ), 0 );
   EXPECT_EQ( slurp( "p1.json" ), slurp( "p2.json" ) );
   for( const char* key : { "mu_S", "sigma_S", "cv" } )
      EXPECT_TRUE( load( "p1.json" ).contains( key ) );
}

TEST( Cli, BenchScaleCsv )
{
   ASSERT_EQ( run( "bench-scale --sizes 4x30 --instances 2 --lambda both --max-outer 30 -o scale.csv" ), 0 );
   std::istringstream in( slurp( "scale.csv" ) );
   std::string header, line;
   std::getline( in, header );
   EXPECT_EQ( header,
              "n,N,lambda_mode,lambda,seed,time_s,outer,inner,objective,max_violation,status" );
   int rows = 0;
   while( std::getline( in, line ) )
      ++rows;
   EXPECT_EQ( rows, 4 );
}

TEST( Cli, HedgeTable )
{
   ASSERT_EQ( run( "hedge --mode nominal --samples 300 --grid 3 -o h.csv --report h.json" ), 0 );
   std::istringstream in( slurp( "h.csv" ) );
   std::string header, line;
   std::getline( in, header );
   EXPECT_EQ( header, "omega1,omega2,es,mean_return,mode" );
   int nominal = 0, initial = 0;
   while( std::getline( in, line ) )
   {
      nominal += line.ends_with( ",nominal" );
      initial += line.ends_with( ",initial" );
   }
   EXPECT_EQ( nominal, 9 );
   EXPECT_EQ( initial, 9 );
   EXPECT_EQ( load( "h.json" )["hedge"]["mode"], "nominal" );
   EXPECT_EQ( run( "hedge --mode sideways" ), 1 );
}
