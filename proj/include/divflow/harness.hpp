#pragma once

#include "divflow/flows.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace divflow::harness {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kResultSchema = "divflow.result/1";

// Malformed JSON text; line and column are 1-based.
class JsonSyntaxError : public Error {
public:
    JsonSyntaxError(const std::string& what, int line, int column)
        : Error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

Json parse_json(const std::string& text);
Json read_json_file(const std::string& path);

struct Options {
    QuadConfig quad;
    std::optional<int> k;
    std::optional<int> p;
    int sign = 1;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;    // path quadrature tolerance
    std::optional<int> nodes;     // initial s-grid size
    std::string suite = "all";
    std::string parity;           // "odd", "even" or empty (from the spec)
    bool timing = false;
};

// Applies {"quad": {...}} from a config document onto cfg; unknown keys are rejected.
QuadConfig apply_config(const Json& doc, QuadConfig cfg);
Json config_to_json(const QuadConfig& cfg);
// Quad config plus every option that was set.
Json options_to_json(const Options& opts);

// Parsing helpers. Matrices: a number, nested real arrays, or {"re": [[..]], "im": [[..]]}.
cplx parse_complex(const Json& j);
Matrix parse_matrix(const Json& j);
Json complex_to_json(cplx z);
Json matrix_to_json(const Matrix& m);
HermitianPath parse_hermitian_path(const Json& spec);
Json hermitian_path_to_json(const HermitianPath& path);
// Symbol expression tree; see README for the grammar.
ParamSymbol parse_expr(const Json& j, int p);

// A DF-ready family built from a FamilySpec.
struct Family {
    SymbolPath path;
    int k = 0;
    bool even = false;
    std::optional<std::int64_t> expected;        // exact answer when the family knows it
    std::optional<HermitianPath> operator_path;  // D_s for suspensions
};
Family parse_family(const Json& spec, const Options& opts);

struct ResultRecord {
    std::string operation;
    std::string input_digest;
    Json config = Json::object();
    cplx value = 0.0;
    std::optional<std::int64_t> snapped;
    std::optional<double> residual;
    std::vector<FlowPart> parts;
    std::map<std::string, double> diagnostics;
    Json extra = Json::object();
    std::optional<double> wall_time;
};

Json record_to_json(const ResultRecord& r);
ResultRecord record_from_json(const Json& j);
// Pretty JSON with a trailing newline.
std::string serialize(const ResultRecord& r);

// "sha256:<hex>" of the compact dump of j.
std::string digest(const Json& j);

ResultRecord cmd_sf(const Json& spec, const Options& opts);
ResultRecord cmd_eta(const Json& spec, const Options& opts);
ResultRecord cmd_df(const Json& spec, const Options& opts);
ResultRecord cmd_regint(const Json& spec, const Options& opts);
ResultRecord cmd_suspend(const Json& spec, const Options& opts);
// Suites: clifford, symbol, regint, forms, cyclic, flows, all.
ResultRecord cmd_verify(const Options& opts);
// CSV: s, eigenvalues, reduced eta mod 1.
std::string cmd_trace(const Json& spec, const Options& opts);

std::vector<std::string> verify_suites();

} // namespace divflow::harness
