#pragma once

#include <json.hpp>
#include <span>
#include <string>
#include <vector>

#include "bellow/actuator.hpp"
#include "bellow/kinematics.hpp"
#include "bellow/segmentation.hpp"
#include "bellow/shape_match.hpp"
#include "bellow/surrogate.hpp"

namespace bellow {

using Json = nlohmann::ordered_json;

// Parses text, mapping syntax errors to FormatError.
Json parse_json(const std::string& text);
// Compact, key order fixed by construction, shortest round-trip doubles.
std::string dump_json(const Json& j);

Json to_json(const ModuleDesign& d);
Json to_json(const Material& m);
Json to_json(const ActuatorSpec& a);
Json to_json(const ArcSegment& s);
Json to_json(std::span<const ArcSegment> segments);
Json to_json(const TrainReport& r, bool with_history = false);
Json to_json(const MatchProblem& p);
Json to_json(const MatchResult& r);
Json to_json(std::span<const Vec3> points);

// Readers throw FormatError on missing or mistyped fields. Optional fields
// fall back to the struct defaults.
ModuleDesign module_from_json(const Json& j);
Material material_from_json(const Json& j);
ActuatorSpec actuator_from_json(const Json& j);
ArcSegment segment_from_json(const Json& j);
std::vector<ArcSegment> segments_from_json(const Json& j);
MatchProblem problem_from_json(const Json& j);
MatchResult match_result_from_json(const Json& j);
std::vector<Vec3> points_from_json(const Json& j);

Json model_to_json(const SurrogateModel& m);
SurrogateModel model_from_json(const Json& j);
// Exact text of a model file.
std::string model_text(const SurrogateModel& m);

// Shape files: CSV with x,y,z columns (header optional) or a JSON array of
// [x, y, z] triples / {"x","y","z"} objects / {"points": [...]}.
std::vector<Vec3> read_shape(const std::string& text);

}  // namespace bellow
