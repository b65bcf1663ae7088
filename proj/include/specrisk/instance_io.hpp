#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <specrisk/problem.hpp>

namespace specrisk {

inline constexpr const char* kInstanceSchema = "specrisk-instance/1";

/// Malformed or mismatched instance/report document.
class SchemaError : public std::runtime_error
{
public:
   using std::runtime_error::runtime_error;
};

struct InstanceFile
{
   ProblemSpec problem;
   /// Free-form JSON object describing how the instance was produced.
   std::string generator = "{}";
};

/// Writes `path` (JSON header) and a sibling `.bin` blob holding every loss
/// matrix row-major followed by its offset, as little-endian float64.
void save_instance( const std::filesystem::path& path,
                    const InstanceFile& instance );

InstanceFile load_instance( const std::filesystem::path& path );

/// Path of the blob that accompanies a header.
std::filesystem::path instance_blob_path( const std::filesystem::path& path );

} // namespace specrisk
