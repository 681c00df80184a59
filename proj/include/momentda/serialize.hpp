#pragma once

#include "momentda/dipals.hpp"
#include "momentda/mann.hpp"
#include "momentda/scitsm.hpp"

#include <json.hpp>

#include <string>

namespace momentda {

using Json = nlohmann::ordered_json;

/// Matrices are stored as arrays of rows.
Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const NetParams& p);
NetParams net_params_from_json(const Json& j);

Json to_json(const DiplsModel& m);
DiplsModel dipals_model_from_json(const Json& j);

Json to_json(const CorrectionModel& m);
CorrectionModel correction_model_from_json(const Json& j);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

}  // namespace momentda
