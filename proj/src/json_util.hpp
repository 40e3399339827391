#pragma once

#include <json.hpp>

#include "posdwell/encoding.hpp"

#include "posdwell/model.hpp"

namespace posdwell {

namespace detail {

using json = nlohmann::ordered_json;

Poly poly_from_json(const json& j, const std::string& field);
json poly_to_json(const Poly& p);
PolyMatrix polymatrix_from_json(const json& obj, const std::string& field, int r, int c);
json polymatrix_to_json(const PolyMatrix& m);
Matrix matrix_from_json(const json& obj, const std::string& field, int r, int c);
json matrix_to_json(const Matrix& m);
std::string dump(const json& j);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace detail

nlohmann::ordered_json handelman_to_json(const HandelmanRecord& r);
HandelmanRecord handelman_from_json(const nlohmann::ordered_json& h);

}  // namespace posdwell
