#pragma once

// Internal helpers shared by the config and solution serializers.
// Canonical form: sorted keys (nlohmann objects iterate sorted), arrays
// inline, floats via format_double, trailing newline.

#include <string>

#include <json.hpp>

#include "mfgsim/common.hpp"
#include "mfgsim/io.hpp"

namespace mfgsim::detail {

inline void emit_canonical(const nlohmann::json& j, std::string& out, int indent) {
    using nlohmann::json;
    switch (j.type()) {
        case json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto& item : j.items()) {
                if (!first) out += ",\n";
                first = false;
                out.append(static_cast<std::size_t>(indent) + 2, ' ');
                out += '"';
                out += item.key();
                out += "\": ";
                emit_canonical(item.value(), out, indent + 2);
            }
            out += '\n';
            out.append(static_cast<std::size_t>(indent), ' ');
            out += '}';
            return;
        }
        case json::value_t::array: {
            out += '[';
            bool first = true;
            for (const auto& v : j) {
                if (!first) out += ", ";
                first = false;
                emit_canonical(v, out, indent);
            }
            out += ']';
            return;
        }
        case json::value_t::string:
            out += '"';
            out += j.get<std::string>();  // schema values never need escaping
            out += '"';
            return;
        case json::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            return;
        case json::value_t::number_integer:
            out += std::to_string(j.get<long long>());
            return;
        case json::value_t::number_unsigned:
            out += std::to_string(j.get<unsigned long long>());
            return;
        case json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        default:
            out += "null";
            return;
    }
}

inline std::string canonical_dump(const nlohmann::json& j) {
    std::string out;
    emit_canonical(j, out, 0);
    out += '\n';
    return out;
}

inline nlohmann::json matrix_to_json(const Matrix& M) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) arr.push_back(M(r, c));
    }
    return arr;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols) {
    Matrix M(rows, cols);
    Eigen::Index idx = 0;
    for (const auto& v : j) {
        M(idx / cols, idx % cols) = v.get<double>();
        ++idx;
    }
    return M;
}

}  // namespace mfgsim::detail
