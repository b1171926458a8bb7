#pragma once

#include <json.hpp>

#include <string>

#include "geoloop/camera.hpp"

namespace geoloop {

using Json = nlohmann::json;

Json camera_to_json(const Camera& cam);
Camera camera_from_json(const Json& j);

// Parse a file into JSON; throws IoError / SchemaError.
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

// Throws SchemaError naming the offending key if `j` contains keys outside
// `allowed`.
void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                         const std::string& context);

}  // namespace geoloop
