#include <specrisk/instance_io.hpp>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include <specrisk/proximal_qp.hpp>

namespace specrisk {

static_assert( std::endian::native == std::endian::little,
               "instance blobs are little-endian float64" );

namespace {

using nlohmann::json;

json
to_json_array( const Vector& v )
{
   json a = json::array();
   for( Index i = 0; i < v.size(); ++i )
   {
      if( std::isfinite( v[i] ) )
         a.push_back( v[i] );
      else
         a.push_back( nullptr ); // unbounded
   }
   return a;
}

Vector
vector_field( const json& doc, const char* key, Index expected )
{
   if( !doc.contains( key ) || !doc[key].is_array() )
      throw SchemaError( fmt::format( "missing array field '{}'", key ) );
   const json& a = doc[key];
   if( expected >= 0 && Index( a.size() ) != expected )
      throw SchemaError( fmt::format( "field '{}' has {} entries, expected {}",
                                      key, a.size(), expected ) );
   Vector v( Index( a.size() ) );
   for( std::size_t i = 0; i < a.size(); ++i )
   {
      if( a[i].is_null() )
         v[Index( i )] = kUnbounded;
      else if( a[i].is_number() )
         v[Index( i )] = a[i].get<double>();
      else
         throw SchemaError( fmt::format( "field '{}' holds a non-number", key ) );
   }
   return v;
}

template <typename T>
T
field( const json& doc, const char* key )
{
   if( !doc.contains( key ) )
      throw SchemaError( fmt::format( "missing field '{}'", key ) );
   try
   {
      return doc[key].get<T>();
   }
   catch( const json::exception& e )
   {
      throw SchemaError( fmt::format( "field '{}': {}", key, e.what() ) );
   }
}

} // namespace

std::filesystem::path
instance_blob_path( const std::filesystem::path& path )
{
   std::filesystem::path blob = path;
   blob.replace_extension( ".bin" );
   return blob;
}

void
save_instance( const std::filesystem::path& path, const InstanceFile& instance )
{
   const ProblemSpec& p = instance.problem;
   p.validate();

   json doc;
   doc["schema"] = kInstanceSchema;
   doc["assets"] = p.assets();
   doc["variant"] = to_string( p.variant );
   doc["lambda"] = p.lambda;
   doc["theta"] = p.theta;
   doc["weights"] = to_json_array( p.weights );
   doc["mu"] = to_json_array( p.mu );
   if( const auto* s = std::get_if<SimplexRegion>( &p.region ) )
      doc["region"] = { { "kind", "simplex" }, { "leverage", s->leverage } };
   else
   {
      const auto& b = std::get<BoxRegion>( p.region );
      doc["region"] = { { "kind", "box" },
                        { "lower", to_json_array( b.lower ) },
                        { "upper", to_json_array( b.upper ) } };
   }

   const std::filesystem::path blob = instance_blob_path( path );
   doc["blob"] = blob.filename().string();

   std::vector<double> data;
   json models = json::array();
   for( Index k = 0; k < p.risk.size(); ++k )
   {
      const RiskModel& m = p.risk.models()[k];
      json entry;
      entry["scenarios"] = m.scenarios();
      entry["gamma"] = to_json_array( m.measure.gamma() );
      entry["beta"] = to_json_array( m.measure.beta() );
      entry["budget"] = p.risk.budgets()[k];
      entry["losses_at"] = data.size();
      const RowMatrix& L = m.losses.entries();
      data.insert( data.end(), L.data(), L.data() + L.size() );
      if( m.offset.size() != 0 )
      {
         entry["offset_at"] = data.size();
         data.insert( data.end(), m.offset.data(),
                      m.offset.data() + m.offset.size() );
      }
      models.push_back( std::move( entry ) );
   }
   doc["models"] = std::move( models );
   doc["blob_doubles"] = data.size();

   json generator = json::parse( instance.generator, nullptr, false );
   if( generator.is_discarded() || !generator.is_object() )
      throw SchemaError( "generator description must be a JSON object" );
   doc["generator"] = std::move( generator );

   std::ofstream header( path );
   if( !header )
      throw std::runtime_error( fmt::format( "cannot write {}", path.string() ) );
   header << doc.dump( 2 ) << '\n';

   std::ofstream out( blob, std::ios::binary );
   if( !out )
      throw std::runtime_error( fmt::format( "cannot write {}", blob.string() ) );
   out.write( reinterpret_cast<const char*>( data.data() ),
              std::streamsize( data.size() * sizeof( double ) ) );
   if( !out || !header )
      throw std::runtime_error( "short write while saving instance" );
}

InstanceFile
load_instance( const std::filesystem::path& path )
{
   std::ifstream in( path );
   if( !in )
      throw std::runtime_error( fmt::format( "cannot read {}", path.string() ) );
   json doc = json::parse( in, nullptr, false );
   if( doc.is_discarded() || !doc.is_object() )
      throw SchemaError( fmt::format( "{} is not a JSON object", path.string() ) );
   if( field<std::string>( doc, "schema" ) != kInstanceSchema )
      throw SchemaError( fmt::format( "unsupported schema '{}'",
                                      doc["schema"].dump() ) );

   InstanceFile out;
   ProblemSpec& p = out.problem;
   const Index n = field<Index>( doc, "assets" );
   if( n < 1 )
      throw SchemaError( "assets must be positive" );
   try
   {
      p.variant = variant_from_string( field<std::string>( doc, "variant" ) );
   }
   catch( const std::invalid_argument& e )
   {
      throw SchemaError( e.what() );
   }
   p.lambda = field<double>( doc, "lambda" );
   p.theta = field<double>( doc, "theta" );
   p.mu = vector_field( doc, "mu", n );
   p.weights = vector_field( doc, "weights", -1 );

   const json& region = doc.at( "region" );
   const std::string kind = field<std::string>( region, "kind" );
   if( kind == "simplex" )
      p.region = SimplexRegion{ field<double>( region, "leverage" ) };
   else if( kind == "box" )
      p.region =
          BoxRegion{ vector_field( region, "lower", n ),
                     vector_field( region, "upper", n ) };
   else
      throw SchemaError( fmt::format( "unknown region kind '{}'", kind ) );

   const std::size_t total = field<std::size_t>( doc, "blob_doubles" );
   const std::filesystem::path blob =
       path.parent_path() / field<std::string>( doc, "blob" );
   std::ifstream bin( blob, std::ios::binary );
   if( !bin )
      throw std::runtime_error( fmt::format( "cannot read {}", blob.string() ) );
   std::vector<double> data( total );
   bin.read( reinterpret_cast<char*>( data.data() ),
             std::streamsize( total * sizeof( double ) ) );
   if( std::size_t( bin.gcount() ) != total * sizeof( double ) ||
       bin.peek() != std::char_traits<char>::eof() )
      throw SchemaError( fmt::format( "{} does not hold {} doubles",
                                      blob.string(), total ) );

   const json& models = doc.at( "models" );
   if( !models.is_array() || models.empty() )
      throw SchemaError( "instance needs at least one risk model" );
   std::vector<RiskModel> risk;
   Vector budgets( Index( models.size() ) );
   for( std::size_t k = 0; k < models.size(); ++k )
   {
      const json& m = models[k];
      const Index N = field<Index>( m, "scenarios" );
      if( N < 1 )
         throw SchemaError( "scenario count must be positive" );
      const std::size_t at = field<std::size_t>( m, "losses_at" );
      const std::size_t count = std::size_t( N ) * std::size_t( n );
      if( at + count > total )
         throw SchemaError( "loss matrix runs past the blob" );
      RowMatrix L = Eigen::Map<const RowMatrix>( data.data() + at, N, n );
      Vector offset;
      if( m.contains( "offset_at" ) )
      {
         const std::size_t o = field<std::size_t>( m, "offset_at" );
         if( o + std::size_t( N ) > total )
            throw SchemaError( "offset runs past the blob" );
         offset = Eigen::Map<const Vector>( data.data() + o, N );
      }
      SpectralMeasure measure;
      try
      {
         measure = SpectralMeasure( vector_field( m, "gamma", -1 ),
                                    vector_field( m, "beta", -1 ) );
      }
      catch( const std::domain_error& e )
      {
         throw SchemaError( e.what() );
      }
      budgets[Index( k )] = field<double>( m, "budget" );
      risk.push_back( RiskModel{ LossMatrix( std::move( L ) ),
                                 std::move( measure ), std::move( offset ) } );
   }
   p.risk = RiskConstraintSet( std::move( risk ), std::move( budgets ) );

   if( doc.contains( "generator" ) )
      out.generator = doc["generator"].dump();
   try
   {
      p.validate();
   }
   catch( const std::domain_error& e )
   {
      throw SchemaError( e.what() );
   }
   return out;
}

} // namespace specrisk
