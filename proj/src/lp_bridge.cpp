#include <specrisk/lp_bridge.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include <specrisk/risk_measures.hpp>

namespace specrisk {

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();

std::string
num( double v )
{
   return fmt::format( "{:.17g}", v );
}

void
require_constrained( const ProblemSpec& problem )
{
   if( problem.variant != Variant::constrained )
      throw std::domain_error( fmt::format(
          "LP export needs the constrained variant, got {}",
          to_string( problem.variant ) ) );
}

/// Column offsets of the LP blocks.
struct Layout
{
   Index n = 0;
   bool l1 = false;
   std::vector<Index> z_start; ///< per model, first z column
   std::vector<Index> y_start; ///< per model, first y column
   Index xi0 = 0;
   Index total = 0;

   explicit Layout( const ProblemSpec& problem )
   {
      n = problem.assets();
      l1 = problem.lambda > 0.0;
      xi0 = n;
      Index col = n + ( l1 ? n : 0 );
      for( const RiskModel& m : problem.risk.models() )
      {
         z_start.push_back( col );
         col += m.measure.components();
      }
      for( const RiskModel& m : problem.risk.models() )
      {
         y_start.push_back( col );
         col += m.measure.components() * m.scenarios();
      }
      total = col;
   }
};

} // namespace

LPDimensions
lp_dimensions( Index assets, Index models, Index components, Index scenarios,
               bool l1_term, bool budget_row )
{
   LPDimensions d;
   d.x = assets;
   d.xi = l1_term ? assets : 0;
   d.z = models * components;
   d.y = models * components * scenarios;
   d.risk_rows = models;
   d.epigraph_rows = d.y;
   d.abs_rows = l1_term ? 2 * assets : 0;
   d.budget_rows = budget_row ? 1 : 0;
   return d;
}

LPDimensions
lp_dimensions( const ProblemSpec& problem )
{
   LPDimensions d;
   d.x = problem.assets();
   const bool l1 = problem.lambda > 0.0;
   d.xi = l1 ? d.x : 0;
   for( const RiskModel& m : problem.risk.models() )
   {
      d.z += m.measure.components();
      d.y += m.measure.components() * m.scenarios();
   }
   d.risk_rows = problem.risk.size();
   d.epigraph_rows = d.y;
   d.abs_rows = l1 ? 2 * d.x : 0;
   d.budget_rows = problem.box_mode() ? 0 : 1;
   return d;
}

LinearProgram
build_lp( const ProblemSpec& problem )
{
   require_constrained( problem );
   problem.validate();
   const Layout lay( problem );
   const Index n = lay.n;
   const auto& models = problem.risk.models();

   LinearProgram lp;
   lp.names.resize( lay.total );
   lp.objective = Vector::Zero( lay.total );
   lp.lower = Vector::Zero( lay.total );
   lp.upper = Vector::Constant( lay.total, kInfinity );

   for( Index i = 0; i < n; ++i )
   {
      lp.names[i] = fmt::format( "x_{}", i + 1 );
      lp.objective[i] = problem.mu[i];
   }
   if( const auto* s = std::get_if<SimplexRegion>( &problem.region ) )
   {
      lp.lower.head( n ).setConstant( -s->leverage );
      lp.upper.head( n ).setConstant( s->leverage );
   }
   else
   {
      const auto& b = std::get<BoxRegion>( problem.region );
      lp.lower.head( n ) = b.lower;
      lp.upper.head( n ) = b.upper;
   }
   if( lay.l1 )
      for( Index i = 0; i < n; ++i )
      {
         lp.names[lay.xi0 + i] = fmt::format( "xi_{}", i + 1 );
         lp.objective[lay.xi0 + i] = -problem.lambda;
      }

   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const RiskModel& m = models[k];
      const Index N = m.scenarios();
      for( Index l = 0; l < m.measure.components(); ++l )
      {
         const Index zc = lay.z_start[k] + l;
         lp.names[zc] = fmt::format( "z_{}_{}", k + 1, l + 1 );
         lp.lower[zc] = -kInfinity;
         for( Index j = 0; j < N; ++j )
            lp.names[lay.y_start[k] + l * N + j] =
                fmt::format( "y_{}_{}_{}", j + 1, k + 1, l + 1 );
      }
   }

   // Spectral risk rows.
   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const RiskModel& m = models[k];
      const Index N = m.scenarios();
      LinearProgram::Row row;
      row.name = fmt::format( "risk_{}", k + 1 );
      row.sense = LinearProgram::Sense::less;
      row.rhs = problem.risk.budgets()[Index( k )];
      for( Index l = 0; l < m.measure.components(); ++l )
      {
         const double g = m.measure.gamma()[l];
         if( g == 0.0 )
            continue;
         row.terms.emplace_back( lay.z_start[k] + l, g );
      }
      for( Index l = 0; l < m.measure.components(); ++l )
      {
         const double g = m.measure.gamma()[l];
         if( g == 0.0 )
            continue;
         const double w = g / double( tail_count( m.measure.beta()[l], N ) );
         for( Index j = 0; j < N; ++j )
            row.terms.emplace_back( lay.y_start[k] + l * N + j, w );
      }
      lp.rows.push_back( std::move( row ) );
   }

   // Epigraph rows: y_jkl + z_kl - (L_k x)_j >= offset_j.
   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const RiskModel& m = models[k];
      const Index N = m.scenarios();
      const Matrix& L = m.losses.entries();
      for( Index l = 0; l < m.measure.components(); ++l )
         for( Index j = 0; j < N; ++j )
         {
            LinearProgram::Row row;
            row.name = fmt::format( "ep_{}_{}_{}", j + 1, k + 1, l + 1 );
            row.sense = LinearProgram::Sense::greater;
            row.rhs = m.offset.size() ? m.offset[j] : 0.0;
            for( Index i = 0; i < n; ++i )
               if( L( j, i ) != 0.0 )
                  row.terms.emplace_back( i, -L( j, i ) );
            row.terms.emplace_back( lay.z_start[k] + l, 1.0 );
            row.terms.emplace_back( lay.y_start[k] + l * N + j, 1.0 );
            lp.rows.push_back( std::move( row ) );
         }
   }

   if( lay.l1 )
      for( Index i = 0; i < n; ++i )
      {
         for( double sign : { -1.0, 1.0 } )
         {
            LinearProgram::Row row;
            row.name = fmt::format( "abs{}_{}", sign < 0 ? "p" : "n", i + 1 );
            row.sense = LinearProgram::Sense::greater;
            row.terms = { { i, sign }, { lay.xi0 + i, 1.0 } };
            lp.rows.push_back( std::move( row ) );
         }
      }

   if( !problem.box_mode() )
   {
      LinearProgram::Row row;
      row.name = "budget";
      row.sense = LinearProgram::Sense::equal;
      row.rhs = 1.0;
      for( Index i = 0; i < n; ++i )
         row.terms.emplace_back( i, 1.0 );
      lp.rows.push_back( std::move( row ) );
   }
   return lp;
}

std::string
write_lp( const LinearProgram& lp )
{
   constexpr int kTermsPerLine = 6;
   std::string out;
   auto terms = [&]( const std::vector<std::pair<Index, double>>& t ) {
      int on_line = 0;
      for( const auto& [col, coef] : t )
      {
         if( on_line == kTermsPerLine )
         {
            out += "\n   ";
            on_line = 0;
         }
         out += fmt::format( " {} {} {}", coef < 0 ? '-' : '+',
                             num( std::abs( coef ) ), lp.names[col] );
         ++on_line;
      }
   };

   out += "\\ lifted spectral risk LP\nMaximize\n obj:";
   std::vector<std::pair<Index, double>> obj;
   for( Index c = 0; c < lp.objective.size(); ++c )
      if( lp.objective[c] != 0.0 )
         obj.emplace_back( c, lp.objective[c] );
   if( obj.empty() )
      out += " 0 " + lp.names.front();
   else
      terms( obj );
   out += "\nSubject To\n";
   for( const auto& row : lp.rows )
   {
      out += fmt::format( " {}:", row.name );
      terms( row.terms );
      const char* sense = row.sense == LinearProgram::Sense::less
                              ? "<="
                              : row.sense == LinearProgram::Sense::greater ? ">="
                                                                          : "=";
      out += fmt::format( " {} {}\n", sense, num( row.rhs ) );
   }
   out += "Bounds\n";
   for( Index c = 0; c < lp.objective.size(); ++c )
   {
      const double lo = lp.lower[c], up = lp.upper[c];
      const std::string& v = lp.names[c];
      if( lo == -kInfinity && up == kInfinity )
         out += fmt::format( " {} free\n", v );
      else if( lo == 0.0 && up == kInfinity )
         continue;
      else if( up == kInfinity )
         out += fmt::format( " {} >= {}\n", v, num( lo ) );
      else if( lo == -kInfinity )
         out += fmt::format( " -inf <= {} <= {}\n", v, num( up ) );
      else
         out += fmt::format( " {} <= {} <= {}\n", num( lo ), v, num( up ) );
   }
   out += "End\n";
   return out;
}

std::string
write_mps( const LinearProgram& lp )
{
   const Index cols = lp.objective.size();
   std::vector<std::vector<std::pair<std::size_t, double>>> by_col( cols );
   for( std::size_t r = 0; r < lp.rows.size(); ++r )
      for( const auto& [col, coef] : lp.rows[r].terms )
         by_col[col].emplace_back( r, coef );

   std::string out = "NAME specrisk\nOBJSENSE\n    MAX\nROWS\n N obj\n";
   for( const auto& row : lp.rows )
   {
      const char s = row.sense == LinearProgram::Sense::less
                         ? 'L'
                         : row.sense == LinearProgram::Sense::greater ? 'G' : 'E';
      out += fmt::format( " {} {}\n", s, row.name );
   }
   out += "COLUMNS\n";
   for( Index c = 0; c < cols; ++c )
   {
      out += fmt::format( " {} obj {}\n", lp.names[c], num( lp.objective[c] ) );
      for( const auto& [r, coef] : by_col[c] )
         out += fmt::format( " {} {} {}\n", lp.names[c], lp.rows[r].name,
                             num( coef ) );
   }
   out += "RHS\n";
   for( const auto& row : lp.rows )
      if( row.rhs != 0.0 )
         out += fmt::format( " RHS {} {}\n", row.name, num( row.rhs ) );
   out += "BOUNDS\n";
   for( Index c = 0; c < cols; ++c )
   {
      const double lo = lp.lower[c], up = lp.upper[c];
      const std::string& v = lp.names[c];
      if( lo == -kInfinity && up == kInfinity )
      {
         out += fmt::format( " FR BND {}\n", v );
         continue;
      }
      if( lo == -kInfinity )
         out += fmt::format( " MI BND {}\n", v );
      else if( lo != 0.0 )
         out += fmt::format( " LO BND {} {}\n", v, num( lo ) );
      if( up != kInfinity )
         out += fmt::format( " UP BND {} {}\n", v, num( up ) );
   }
   out += "ENDATA\n";
   return out;
}

std::string
export_lp( const ProblemSpec& problem )
{
   return write_lp( build_lp( problem ) );
}

std::string
export_mps( const ProblemSpec& problem )
{
   return write_mps( build_lp( problem ) );
}

std::string
dims_json( const LPDimensions& d )
{
   return fmt::format(
       "{{\n  \"num_vars\": {},\n  \"num_constraints\": {},\n"
       "  \"blocks\": {{\"x\": {}, \"xi\": {}, \"z\": {}, \"y\": {}}},\n"
       "  \"rows\": {{\"risk\": {}, \"epigraph\": {}, \"abs\": {}, "
       "\"budget\": {}}},\n  \"x_plus_y\": {}\n}}\n",
       d.variables(), d.constraints(), d.x, d.xi, d.z, d.y, d.risk_rows,
       d.epigraph_rows, d.abs_rows, d.budget_rows, d.x_plus_y() );
}

LPDimensions
parse_lp_dimensions( const std::string& lp_text )
{
   LPDimensions d;
   std::set<std::string> vars;
   std::istringstream in( lp_text );
   std::string line;
   enum
   {
      none,
      objective,
      rows,
      bounds
   } section = none;

   auto starts_with = []( const std::string& s, const char* p ) {
      return s.rfind( p, 0 ) == 0;
   };
   auto is_name = []( const std::string& t ) {
      return !t.empty() && std::isalpha( static_cast<unsigned char>( t[0] ) ) &&
             t != "free" && t != "inf" && t != "infinity";
   };

   while( std::getline( in, line ) )
   {
      if( line.empty() || line[0] == '\\' )
         continue;
      if( line == "Maximize" || line == "Minimize" )
      {
         section = objective;
         continue;
      }
      if( line == "Subject To" )
      {
         section = rows;
         continue;
      }
      if( line == "Bounds" )
      {
         section = bounds;
         continue;
      }
      if( line == "End" )
         break;

      std::istringstream tokens( line );
      std::string tok;
      bool first = true;
      while( tokens >> tok )
      {
         if( tok.back() == ':' )
         {
            if( section == rows && first )
            {
               const std::string label = tok.substr( 0, tok.size() - 1 );
               if( starts_with( label, "risk_" ) )
                  ++d.risk_rows;
               else if( starts_with( label, "ep_" ) )
                  ++d.epigraph_rows;
               else if( starts_with( label, "abs" ) )
                  ++d.abs_rows;
               else if( label == "budget" )
                  ++d.budget_rows;
               else
                  throw std::runtime_error(
                      fmt::format( "unexpected row label '{}'", label ) );
            }
            first = false;
            continue;
         }
         first = false;
         if( is_name( tok ) )
            vars.insert( tok );
      }
   }
   for( const std::string& v : vars )
   {
      if( starts_with( v, "xi_" ) )
         ++d.xi;
      else if( starts_with( v, "x_" ) )
         ++d.x;
      else if( starts_with( v, "z_" ) )
         ++d.z;
      else if( starts_with( v, "y_" ) )
         ++d.y;
      else
         throw std::runtime_error( fmt::format( "unexpected variable '{}'", v ) );
   }
   return d;
}

double
read_objective( std::istream& in )
{
   std::string line;
   while( std::getline( in, line ) )
   {
      const auto start = line.find_first_not_of( " \t" );
      if( start == std::string::npos )
         continue;
      if( line.compare( start, 10, "objective:" ) == 0 )
      {
         const std::string rest = line.substr( start + 10 );
         std::size_t used = 0;
         double v = 0.0;
         try
         {
            v = std::stod( rest, &used );
         }
         catch( const std::exception& )
         {
            throw std::runtime_error(
                fmt::format( "malformed objective line '{}'", line ) );
         }
         if( rest.find_first_not_of( " \t\r", used ) != std::string::npos )
            throw std::runtime_error(
                fmt::format( "malformed objective line '{}'", line ) );
         return v;
      }
   }
   throw std::runtime_error( "no 'objective: <value>' line found" );
}

Vector
lift_point( const ProblemSpec& problem, const VectorRef& x )
{
   require_constrained( problem );
   const Layout lay( problem );
   Vector p = Vector::Zero( lay.total );
   p.head( lay.n ) = x;
   if( lay.l1 )
      p.segment( lay.xi0, lay.n ) = x.cwiseAbs();
   const auto& models = problem.risk.models();
   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const RiskModel& m = models[k];
      const Index N = m.scenarios();
      const Vector y = m.portfolio_losses( x );
      for( Index l = 0; l < m.measure.components(); ++l )
      {
         const double z = expected_shortfall_dual( y, m.measure.beta()[l] ).z_star;
         p[lay.z_start[k] + l] = z;
         p.segment( lay.y_start[k] + l * N, N ) =
             ( y.array() - z ).cwiseMax( 0.0 ).matrix();
      }
   }
   return p;
}

double
lp_objective( const LinearProgram& lp, const VectorRef& point )
{
   return lp.objective.dot( point );
}

double
lp_violation( const LinearProgram& lp, const VectorRef& point )
{
   double worst = 0.0;
   for( const auto& row : lp.rows )
   {
      double lhs = 0.0;
      for( const auto& [col, coef] : row.terms )
         lhs += coef * point[col];
      double v = 0.0;
      switch( row.sense )
      {
      case LinearProgram::Sense::less:
         v = lhs - row.rhs;
         break;
      case LinearProgram::Sense::greater:
         v = row.rhs - lhs;
         break;
      case LinearProgram::Sense::equal:
         v = std::abs( lhs - row.rhs );
         break;
      }
      worst = std::max( worst, v );
   }
   for( Index c = 0; c < point.size(); ++c )
      worst = std::max( { worst, lp.lower[c] - point[c], point[c] - lp.upper[c] } );
   return worst;
}

OracleResult
tiny_oracle( const ProblemSpec& problem, double grid_step )
{
   problem.validate();
   const Index n = problem.assets();
   if( n > 3 )
      throw std::domain_error(
          fmt::format( "grid oracle supports n <= 3, got {}", n ) );
   if( !( grid_step > 0.0 ) )
      throw std::domain_error( "grid step must be positive" );

   Vector lo( n ), hi( n );
   const bool simplex = !problem.box_mode();
   if( simplex )
   {
      const double B = std::get<SimplexRegion>( problem.region ).leverage;
      lo.setConstant( -B );
      hi.setConstant( B );
   }
   else
   {
      const auto& b = std::get<BoxRegion>( problem.region );
      lo = b.lower;
      hi = b.upper;
      if( !hi.allFinite() )
         throw std::domain_error( "grid oracle needs finite box bounds" );
   }

   // The last coordinate is implied by the budget in simplex mode.
   const Index free = simplex ? n - 1 : n;
   std::vector<Index> steps( free );
   double cells = 1.0;
   for( Index i = 0; i < free; ++i )
   {
      steps[i] = Index( std::floor( ( hi[i] - lo[i] ) / grid_step + 1e-9 ) );
      cells *= double( steps[i] + 1 );
   }
   if( cells > 5e8 )
      throw std::domain_error( "grid too fine for the oracle" );

   OracleResult best;
   best.objective = -kInfinity;
   std::vector<Index> idx( free, 0 );
   Vector x( n );
   const double slack = 1e-12;
   while( true )
   {
      for( Index i = 0; i < free; ++i )
         x[i] = std::min( lo[i] + double( idx[i] ) * grid_step, hi[i] );
      bool inside = true;
      if( simplex )
      {
         x[n - 1] = 1.0 - x.head( free ).sum();
         inside = x[n - 1] >= lo[n - 1] - slack && x[n - 1] <= hi[n - 1] + slack;
      }
      if( inside )
      {
         ++best.evaluated;
         const bool feasible = problem.variant != Variant::constrained ||
                               problem.risk.max_violation( x ) <= 0.0;
         if( feasible )
         {
            const double v = problem.variant_objective( x );
            if( v > best.objective )
            {
               best.objective = v;
               best.x = x;
            }
         }
      }
      Index i = 0;
      while( i < free && idx[i] == steps[i] )
         idx[i++] = 0;
      if( i == free )
         break;
      ++idx[i];
   }
   if( !best.x )
      best.objective = std::numeric_limits<double>::quiet_NaN();
   return best;
}

} // namespace specrisk
