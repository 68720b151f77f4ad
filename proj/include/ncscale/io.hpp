#ifndef NCSCALE_IO_HPP_
#define NCSCALE_IO_HPP_

// JSON serialization: instance files, JSON-lines traces, rank certificates
// and run reports. Complex entries are [re, im] pairs of doubles.

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ncscale/generators.hpp"
#include "ncscale/ncrank.hpp"
#include "ncscale/scaling_engine.hpp"

namespace ncscale {

using Json = nlohmann::json;

// Malformed or invalid input file; line and column are 1-based (0 if the
// problem is not tied to a position).
class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, int line, int column)
      : InvalidInput(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

namespace detail {

inline void line_column(const std::string& text, std::size_t byte, int& line,
                        int& column) {
  line = 1;
  column = 1;
  const std::size_t end = std::min(byte, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
}

inline Complex parse_complex(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() ||
      !j[1].is_number()) {
    throw ParseError("instance: complex entry must be [re, im]", 0, 0);
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

inline ComplexMatrix parse_matrix(const Json& j, int rows, int cols,
                                  const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows) {
    throw ParseError(std::string(what) + ": wrong number of rows", 0, 0);
  }
  ComplexMatrix a(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const Json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != cols) {
      throw ParseError(std::string(what) + ": wrong number of columns", 0, 0);
    }
    for (int c = 0; c < cols; ++c) a(r, c) = parse_complex(row[c]);
  }
  return a;
}

}  // namespace detail

inline Json matrix_to_json(const ComplexMatrix& a) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      row.push_back({a(r, c).real(), a(r, c).imag()});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json instance_to_json(const Instance& inst) {
  Json j;
  j["n"] = inst.tuple.n();
  j["m"] = inst.tuple.m();
  Json mats = Json::array();
  for (const auto& a : inst.tuple.matrices()) mats.push_back(matrix_to_json(a));
  j["matrices"] = std::move(mats);
  if (!inst.name.empty()) j["name"] = inst.name;
  if (inst.known_ncrank) j["known_ncrank"] = *inst.known_ncrank;
  if (!inst.construction.empty()) j["construction"] = inst.construction;
  return j;
}

inline std::string emit_instance(const Instance& inst) {
  return instance_to_json(inst).dump(2) + "\n";
}

inline Instance instance_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("instance: expected a JSON object", 0, 0);
  for (const char* key : {"n", "m", "matrices"}) {
    if (!j.contains(key)) {
      throw ParseError(std::string("instance: missing field '") + key + "'", 0,
                       0);
    }
  }
  if (!j["n"].is_number_integer() || !j["m"].is_number_integer()) {
    throw ParseError("instance: n and m must be integers", 0, 0);
  }
  const int n = j["n"].get<int>();
  const int m = j["m"].get<int>();
  if (n < 1 || m < 1) throw ParseError("instance: need n, m >= 1", 0, 0);
  const Json& mats = j["matrices"];
  if (!mats.is_array() || static_cast<int>(mats.size()) != m) {
    throw ParseError("instance: 'matrices' must hold m matrices", 0, 0);
  }
  std::vector<ComplexMatrix> tuple;
  for (int k = 0; k < m; ++k) {
    tuple.push_back(detail::parse_matrix(mats[k], n, n, "instance"));
  }
  Instance inst{MatrixTuple(std::move(tuple)), "", std::nullopt, ""};
  if (j.contains("name")) inst.name = j["name"].get<std::string>();
  if (j.contains("construction")) {
    inst.construction = j["construction"].get<std::string>();
  }
  if (j.contains("known_ncrank") && !j["known_ncrank"].is_null()) {
    if (!j["known_ncrank"].is_number_integer()) {
      throw ParseError("instance: known_ncrank must be an integer", 0, 0);
    }
    const int r = j["known_ncrank"].get<int>();
    if (r < 0 || r > n) {
      throw ParseError("instance: known_ncrank must lie in [0, n]", 0, 0);
    }
    inst.known_ncrank = r;
  }
  return inst;
}

inline Instance parse_instance(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    int line = 0;
    int column = 0;
    detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
    std::ostringstream os;
    os << "instance: JSON syntax error at line " << line << ", column "
       << column;
    throw ParseError(os.str(), line, column);
  }
  try {
    return instance_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance: ") + e.what(), 0, 0);
  }
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

// One trace record: step, f, res_l1, slope, dist, direction_eigs.
inline Json record_to_json(const FlowRecord& r) {
  Json j;
  j["step"] = r.step;
  j["f"] = r.f_value;
  j["res_l1"] = r.residual_l1;
  j["slope"] = r.slope;
  j["dist"] = r.dist;
  if (r.direction) {
    const RealVector ev = herm_eig(*r.direction).eigenvalues;
    j["direction_eigs"] = std::vector<double>(ev.data(), ev.data() + ev.size());
  } else {
    j["direction_eigs"] = nullptr;
  }
  return j;
}

inline void write_trace(std::ostream& out, const FlowTrace& trace) {
  for (const auto& r : trace.records) out << record_to_json(r).dump() << "\n";
}

inline Json certificate_to_json(const RankCertificate& c) {
  Json j;
  j["ncrank"] = c.ncrank;
  j["certified"] = c.certified;
  j["upper"] = c.upper;
  j["lower"] = c.lower;
  j["upper_witness_basis"] = matrix_to_json(c.upper_witness.basis());
  j["blowup"] = {{"d", c.lower_witness.d},
                 {"seed", c.lower_witness.seed},
                 {"rank", c.lower_witness.rank},
                 {"trials", c.lower_witness.trials}};
  j["corank"] = c.corank();
  return j;
}

inline Json config_to_json(const FlowConfig& c) {
  Json j;
  j["max_iters"] = c.max_iters;
  j["step_size"] = c.step_size;
  j["tolerance"] = c.tolerance;
  j["norm"] = c.norm.name();
  j["smoothing_p"] = c.smoothing_p;
  j["mm_tau"] = c.mm_tau;
  j["max_blowup_dim"] = c.max_blowup_dim;
  j["seed"] = c.seed;
  return j;
}

}  // namespace ncscale

#endif  // NCSCALE_IO_HPP_
