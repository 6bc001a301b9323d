#include "sofctl/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sofctl/error.hpp"

namespace sofctl::io {

namespace {

std::string dims(Index rows, Index cols) {
    std::ostringstream os;
    os << rows << "x" << cols;
    return os.str();
}

Index read_count(const json& j, const char* field) {
    if (!j.contains(field)) throw InputError(std::string("missing field '") + field + "'");
    const auto& v = j.at(field);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw InputError(std::string("field '") + field + "': expected a non-negative integer");
    }
    return static_cast<Index>(v.get<long long>());
}

Matrix required_matrix(const json& j, const char* field) {
    if (!j.contains(field)) throw InputError(std::string("missing field '") + field + "'");
    return matrix_from_json(j.at(field), field);
}

void expect_shape(const Matrix& m, Index rows, Index cols, const char* field) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(std::string("field '") + field + "': expected " + dims(rows, cols) +
                             " from the declared dimensions, got " + dims(m.rows(), m.cols()));
    }
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array()) throw InputError("field '" + field + "': expected a nested array of rows");
    const auto rows = static_cast<Index>(j.size());
    if (rows == 0) return Matrix(0, 0);
    if (!j.front().is_array()) {
        throw InputError("field '" + field + "': row 0 is not an array");
    }
    const auto cols = static_cast<Index>(j.front().size());
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Index>(row.size()) != cols) {
            std::ostringstream os;
            os << "field '" << field << "': row " << r << " does not have " << cols << " entries";
            throw InputError(os.str());
        }
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row.at(static_cast<std::size_t>(c));
            if (!v.is_number()) {
                std::ostringstream os;
                os << "field '" << field << "': entry (" << r << "," << c << ") is not a number";
                throw InputError(os.str());
            }
            m(r, c) = v.get<double>();
        }
    }
    if (!m.allFinite()) throw InputError("field '" + field + "': non-finite entries");
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json parse_json_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Translate the byte offset into line/column for the message.
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << source << ":" << line << ":" << col << ": parse error: " << e.what();
        throw InputError(os.str());
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
    if (!out) throw InputError("failed writing '" + path + "'");
}

SystemFile system_from_json(const json& j) {
    if (!j.is_object()) throw InputError("system file: top level must be an object");
    const Index n = read_count(j, "n");
    const Index m = read_count(j, "m");
    const Index p = read_count(j, "p");

    SystemFile file;
    auto& sys = file.system;
    sys.A = required_matrix(j, "A");
    sys.B = required_matrix(j, "B");
    sys.C = required_matrix(j, "C");
    expect_shape(sys.A, n, n, "A");
    expect_shape(sys.B, n, m, "B");
    expect_shape(sys.C, p, n, "C");

    const bool has_d = j.contains("D") && !j.at("D").is_null();
    if (j.contains("mode")) {
        if (!j.at("mode").is_string()) throw InputError("field 'mode': expected a string");
        sys.mode = mode_from_string(j.at("mode").get<std::string>());
    } else {
        sys.mode = has_d ? SystemMode::MeasurementDisturbance : SystemMode::NoD;
    }
    if (has_d) {
        sys.D = matrix_from_json(j.at("D"), "D");
        if (sys.mode == SystemMode::NoD) {
            throw InputError("field 'D': given although mode is no-d");
        }
        if (sys.mode == SystemMode::DirectFeedthrough) {
            expect_shape(sys.D, p, m, "D");
        } else if (sys.D.rows() != p) {
            throw DimensionError("field 'D': expected " + std::to_string(p) + " rows, got " +
                                 std::to_string(sys.D.rows()));
        }
    } else if (sys.mode != SystemMode::NoD) {
        throw InputError(std::string("field 'D': required in ") + to_string(sys.mode) + " mode");
    }

    if (j.contains("Q") && !j.at("Q").is_null()) {
        file.Q = matrix_from_json(j.at("Q"), "Q");
        expect_shape(*file.Q, n, n, "Q");
    }
    if (j.contains("R") && !j.at("R").is_null()) {
        file.R = matrix_from_json(j.at("R"), "R");
        expect_shape(*file.R, m, m, "R");
    }
    sys.validate();
    return file;
}

json system_to_json(const SystemFile& file) {
    const auto& sys = file.system;
    json j;
    j["n"] = sys.n();
    j["m"] = sys.m();
    j["p"] = sys.p();
    j["mode"] = to_string(sys.mode);
    j["A"] = matrix_to_json(sys.A);
    j["B"] = matrix_to_json(sys.B);
    j["C"] = matrix_to_json(sys.C);
    if (sys.mode != SystemMode::NoD) j["D"] = matrix_to_json(sys.D);
    if (file.Q) j["Q"] = matrix_to_json(*file.Q);
    if (file.R) j["R"] = matrix_to_json(*file.R);
    return j;
}

SystemFile load_system(const std::string& path) {
    return system_from_json(parse_json_text(read_file(path), path));
}

void save_system(const std::string& path, const SystemFile& file) {
    write_file(path, system_to_json(file).dump(2) + "\n");
}

Matrix parse_weight_spec(const std::string& spec, Index size, const std::string& key) {
    if (spec == "identity") return Matrix::Identity(size, size);
    if (spec.rfind("diag:", 0) == 0) {
        std::vector<double> values;
        std::stringstream ss(spec.substr(5));
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw InputError(key + ": cannot parse diagonal entry '" + item + "'");
            }
        }
        if (static_cast<Index>(values.size()) != size) {
            throw DimensionError(key + ": expected " + std::to_string(size) + " diagonal entries, got " +
                                 std::to_string(values.size()));
        }
        Matrix d = Matrix::Zero(size, size);
        for (Index i = 0; i < size; ++i) d(i, i) = values[static_cast<std::size_t>(i)];
        return d;
    }
    const json j = parse_json_text(read_file(spec), spec);
    Matrix w = j.is_object() ? (j.contains(key) ? matrix_from_json(j.at(key), key)
                                                : throw InputError(spec + ": no '" + key + "' entry"))
                             : matrix_from_json(j, key);
    if (w.rows() != size || w.cols() != size) {
        throw DimensionError(key + ": expected " + dims(size, size) + ", got " + dims(w.rows(), w.cols()));
    }
    return w;
}

Matrix load_gain(const std::string& path) {
    const json j = parse_json_text(read_file(path), path);
    if (j.is_array()) return matrix_from_json(j, "F");
    if (j.is_object()) {
        if (j.contains("F")) return matrix_from_json(j.at("F"), "F");
        if (j.contains("result") && j.at("result").contains("F")) {
            return matrix_from_json(j.at("result").at("F"), "F");
        }
    }
    throw InputError(path + ": no gain 'F' found");
}

}  // namespace sofctl::io
