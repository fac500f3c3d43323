#include "divflow/harness.hpp"

#include "divflow/clifford.hpp"
#include "divflow/forms.hpp"
#include "divflow/regint.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace divflow::harness {

namespace {

[[noreturn]] void spec_error(const std::string& msg) { throw PreconditionError("spec: " + msg); }

const Json& field(const Json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) spec_error(std::string("missing field \"") + key + "\"");
    return j.at(key);
}

template <class T>
T get(const Json& j, const char* key)
{
    try {
        return field(j, key).get<T>();
    } catch (const Json::type_error&) {
        spec_error(std::string("field \"") + key + "\" has the wrong type");
    }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback)
{
    return j.is_object() && j.contains(key) ? get<T>(j, key) : fallback;
}

std::string kind_of(const Json& spec)
{
    if (!spec.is_object()) spec_error("expected an object");
    if (spec.contains("schema_version") && spec.at("schema_version") != kSchemaVersion)
        spec_error("unsupported schema_version " + spec.at("schema_version").dump() + " (expected " +
                   std::to_string(kSchemaVersion) + ")");
    return get<std::string>(spec, "kind");
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed)
{
    std::set<std::string> ok{"kind", "schema_version"};
    for (const char* a : allowed) ok.insert(a);
    for (const auto& [key, value] : j.items())
        if (!ok.count(key)) spec_error("unknown field \"" + key + "\"");
}

std::vector<cplx> parse_complex_list(const Json& j)
{
    if (!j.is_array()) spec_error("expected an array of coefficients");
    std::vector<cplx> out;
    for (const Json& x : j) out.push_back(parse_complex(x));
    return out;
}

RealVec parse_real_vec(const Json& j)
{
    if (j.is_number()) return RealVec::Constant(1, j.get<double>());
    if (!j.is_array()) spec_error("expected a number or an array of numbers");
    RealVec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) spec_error("expected a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Matrix parse_real_rows(const Json& j)
{
    if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) spec_error("matrix must be a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) spec_error("matrix rows must be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols) spec_error("matrix rows have different lengths");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[r][c].is_number()) spec_error("matrix entries must be numbers");
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
        }
    }
    return m;
}

// Line and column of a 1-based byte offset.
std::pair<int, int> locate(const std::string& text, std::size_t byte)
{
    int line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

QuadConfig effective_quad(const Options& opts)
{
    QuadConfig q = opts.quad;
    if (opts.tol) q.path_tol = *opts.tol;
    if (opts.nodes) q.path_nodes = *opts.nodes;
    q.validate();
    return q;
}

ResultRecord base_record(const std::string& op, const Json& input, const Options& opts)
{
    ResultRecord r;
    r.operation = op;
    r.input_digest = digest(input);
    r.config = options_to_json(opts);
    return r;
}

void fill_flow(ResultRecord& r, const FlowResult& f)
{
    r.value = f.value;
    r.snapped = f.snapped;
    r.residual = f.residual;
    r.parts = f.parts;
    r.diagnostics = f.diagnostics;
}

double finite_or_zero(double x) { return std::isfinite(x) ? x : 0.0; }

} // namespace

Json parse_json(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        const auto [line, column] = locate(text, e.byte);
        std::string msg = e.what();
        const auto pos = msg.find("syntax error");
        if (pos != std::string::npos) msg = msg.substr(pos);
        throw JsonSyntaxError("malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(column) +
                                  ": " + msg,
                              line, column);
    }
}

Json read_json_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PreconditionError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_json(ss.str());
}

QuadConfig apply_config(const Json& doc, QuadConfig cfg)
{
    if (!doc.is_object()) spec_error("config must be an object");
    for (const auto& [key, value] : doc.items())
        if (key != "quad" && key != "schema_version") spec_error("unknown config field \"" + key + "\"");
    if (!doc.contains("quad")) return cfg;
    const Json& q = doc.at("quad");
    if (!q.is_object()) spec_error("config \"quad\" must be an object");
    for (const auto& [key, value] : q.items()) {
        try {
            if (key == "split_radius") cfg.split_radius = value.get<double>();
            else if (key == "radial_tol") cfg.radial_tol = value.get<double>();
            else if (key == "radial_max_depth") cfg.radial_max_depth = value.get<int>();
            else if (key == "tail_tol") cfg.tail_tol = value.get<double>();
            else if (key == "max_shells") cfg.max_shells = value.get<int>();
            else if (key == "expansion_depth") cfg.expansion_depth = value.get<double>();
            else if (key == "sphere_nodes_2d") cfg.sphere_nodes_2d = value.get<int>();
            else if (key == "sphere_gauss_3d") cfg.sphere_gauss_3d = value.get<int>();
            else if (key == "sphere_phi_3d") cfg.sphere_phi_3d = value.get<int>();
            else if (key == "path_nodes") cfg.path_nodes = value.get<int>();
            else if (key == "path_tol") cfg.path_tol = value.get<double>();
            else if (key == "path_max_doublings") cfg.path_max_doublings = value.get<int>();
            else spec_error("unknown quad field \"" + key + "\"");
        } catch (const Json::type_error&) {
            spec_error("quad field \"" + key + "\" has the wrong type");
        }
    }
    cfg.validate();
    return cfg;
}

Json config_to_json(const QuadConfig& c)
{
    return Json{{"split_radius", c.split_radius},       {"radial_tol", c.radial_tol},
                {"radial_max_depth", c.radial_max_depth}, {"tail_tol", c.tail_tol},
                {"max_shells", c.max_shells},           {"expansion_depth", c.expansion_depth},
                {"sphere_nodes_2d", c.sphere_nodes_2d}, {"sphere_gauss_3d", c.sphere_gauss_3d},
                {"sphere_phi_3d", c.sphere_phi_3d},     {"path_nodes", c.path_nodes},
                {"path_tol", c.path_tol},               {"path_max_doublings", c.path_max_doublings}};
}

Json options_to_json(const Options& o)
{
    Json j{{"quad", config_to_json(o.quad)}, {"sign", o.sign}};
    if (o.k) j["k"] = *o.k;
    if (o.p) j["p"] = *o.p;
    if (o.seed) j["seed"] = *o.seed;
    if (o.tol) j["tol"] = *o.tol;
    if (o.nodes) j["nodes"] = *o.nodes;
    if (!o.parity.empty()) j["parity"] = o.parity;
    return j;
}

cplx parse_complex(const Json& j)
{
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    if (j.is_object() && j.contains("re")) return {get<double>(j, "re"), get_or<double>(j, "im", 0.0)};
    spec_error("expected a complex number (number, [re, im] or {\"re\", \"im\"})");
}

Matrix parse_matrix(const Json& j)
{
    if (j.is_object()) {
        Matrix m = parse_real_rows(field(j, "re"));
        if (j.contains("im")) {
            const Matrix im = parse_real_rows(j.at("im"));
            if (im.rows() != m.rows() || im.cols() != m.cols()) spec_error("re and im parts differ in shape");
            m += kI * im.real();
        }
        return m;
    }
    return parse_real_rows(j);
}

Json complex_to_json(cplx z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json matrix_to_json(const Matrix& m)
{
    Json re = Json::array(), im = Json::array();
    bool complex = false;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json rr = Json::array(), ri = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            rr.push_back(m(r, c).real());
            ri.push_back(m(r, c).imag());
            complex = complex || m(r, c).imag() != 0.0;
        }
        re.push_back(rr);
        im.push_back(ri);
    }
    if (!complex) return Json{{"re", re}};
    return Json{{"re", re}, {"im", im}};
}

HermitianPath parse_hermitian_path(const Json& spec)
{
    if (kind_of(spec) != "hermitian_path") spec_error("expected kind \"hermitian_path\"");
    check_keys(spec, {"knots", "seed", "max_n", "max_knots"});
    if (spec.contains("knots")) {
        std::vector<double> s;
        std::vector<Matrix> h;
        for (const Json& knot : spec.at("knots")) {
            s.push_back(get<double>(knot, "s"));
            h.push_back(parse_matrix(field(knot, "matrix")));
        }
        return HermitianPath(s, h);
    }
    if (!spec.contains("seed")) spec_error("hermitian_path needs \"knots\" or \"seed\"");
    std::mt19937 rng(static_cast<std::uint32_t>(get<std::uint64_t>(spec, "seed")));
    return random_hermitian_path(rng, get_or<int>(spec, "max_n", 3), get_or<int>(spec, "max_knots", 4));
}

Json hermitian_path_to_json(const HermitianPath& path)
{
    Json knots = Json::array();
    for (std::size_t i = 0; i < path.knots().size(); ++i)
        knots.push_back(Json{{"s", path.knots()[i]}, {"matrix", matrix_to_json(path.matrices()[i])}});
    return Json{{"schema_version", kSchemaVersion}, {"kind", "hermitian_path"}, {"knots", knots}};
}

ParamSymbol parse_expr(const Json& j, int p)
{
    if (j.is_number() || j.is_array()) return scalar_constant(p, parse_complex(j));
    const std::string kind = get<std::string>(j, "kind");
    auto sub = [&](const char* key) { return parse_expr(field(j, key), p); };
    auto list = [&](const char* key) {
        std::vector<ParamSymbol> out;
        const Json& arr = field(j, key);
        if (!arr.is_array() || arr.empty()) spec_error(std::string("\"") + key + "\" must be a non-empty array");
        for (const Json& x : arr) out.push_back(parse_expr(x, p));
        return out;
    };
    if (kind == "constant") {
        if (j.contains("matrix")) return constant_symbol(p, parse_matrix(j.at("matrix")));
        return scalar_constant(p, parse_complex(field(j, "value")));
    }
    if (kind == "identity") return identity_symbol(p, get<int>(j, "n"));
    if (kind == "coordinate") {
        const int axis = get<int>(j, "axis");
        if (axis < 0 || axis >= p) spec_error("coordinate axis out of range (axes are 0-based)");
        return coordinate_symbol(p, axis);
    }
    if (kind == "rational") {
        if (p != 1) spec_error("rational symbols need p = 1");
        return rational_symbol(parse_complex_list(field(j, "num")), parse_complex_list(field(j, "den")));
    }
    if (kind == "winding") {
        if (p != 1) spec_error("winding symbols need p = 1");
        return winding_symbol(get<int>(j, "n"));
    }
    if (kind == "polynomial") {
        std::vector<Monomial> monos;
        const int n = get_or<int>(j, "n", 1);
        for (const Json& m : field(j, "monomials")) {
            Monomial mono;
            mono.exps = get<std::vector<int>>(m, "exps");
            const Json& c = field(m, "coef");
            mono.coef = c.is_object() && c.contains("re") && c.at("re").is_array() ? parse_matrix(c)
                                                                                  : Matrix::Constant(1, 1, parse_complex(c));
            if (mono.coef.rows() == 1 && n > 1) mono.coef = mono.coef(0, 0) * Matrix::Identity(n, n);
            monos.push_back(mono);
        }
        return polynomial_symbol(p, n, monos);
    }
    if (kind == "linear") {
        std::vector<Matrix> m;
        for (const Json& x : field(j, "m")) m.push_back(parse_matrix(x));
        return linear_symbol(p, parse_matrix(field(j, "m0")), m);
    }
    if (kind == "radial_power") return radial_power_symbol(p, parse_matrix(field(j, "D")), get<double>(j, "z"));
    if (kind == "cutoff_radial") return cutoff_radial_symbol(p, parse_matrix(field(j, "D")), default_cutoff());
    if (kind == "bump") {
        const Matrix m = j.contains("matrix") ? parse_matrix(j.at("matrix")) : Matrix::Identity(1, 1);
        const RealVec center = j.contains("center") ? parse_real_vec(j.at("center")) : RealVec::Zero(p);
        if (center.size() != p) spec_error("bump center must have p entries");
        return bump_symbol(p, m, parse_complex(field(j, "amplitude")), get<double>(j, "width"), center);
    }
    if (kind == "sum") {
        const std::vector<ParamSymbol> terms = list("terms");
        std::vector<cplx> coefs(terms.size(), 1.0);
        if (j.contains("coefs")) coefs = parse_complex_list(j.at("coefs"));
        if (coefs.size() != terms.size()) spec_error("\"coefs\" and \"terms\" differ in length");
        std::vector<std::pair<cplx, ParamSymbol>> parts;
        for (std::size_t i = 0; i < terms.size(); ++i) parts.emplace_back(coefs[i], terms[i]);
        return sym_lincomb(parts);
    }
    if (kind == "product") return sym_mul(list("factors"));
    if (kind == "scale") return sym_scale(parse_complex(field(j, "coef")), sub("expr"));
    if (kind == "inverse") return sym_inv(sub("expr"));
    if (kind == "trace") return sym_trace(sub("expr"));
    if (kind == "partial") {
        const int axis = get<int>(j, "axis");
        if (axis < 0 || axis >= p) spec_error("partial axis out of range (axes are 0-based)");
        return sym_partial(sub("expr"), axis);
    }
    spec_error("unknown expression kind \"" + kind + "\"");
}

Family parse_family(const Json& spec, const Options& opts)
{
    const std::string kind = kind_of(spec);
    Family f;
    if (kind == "winding") {
        check_keys(spec, {"n", "exponents", "v", "seed"});
        ParamSymbol g;
        if (spec.contains("n")) {
            g = winding_symbol(get<int>(spec, "n"));
            f.expected = get<int>(spec, "n");
        } else if (spec.contains("exponents")) {
            const auto e = get<std::vector<int>>(spec, "exponents");
            const Matrix v = spec.contains("v") ? parse_matrix(spec.at("v"))
                                                : Matrix::Identity(static_cast<Eigen::Index>(e.size()),
                                                                   static_cast<Eigen::Index>(e.size()));
            g = winding_matrix_symbol(e, v);
            f.expected = WindingFamily{e, v}.expected();
        } else if (spec.contains("seed")) {
            std::mt19937 rng(static_cast<std::uint32_t>(get<std::uint64_t>(spec, "seed")));
            const WindingFamily w = random_winding_family(rng);
            g = winding_matrix_symbol(w.exponents, w.v);
            f.expected = w.expected();
        } else {
            spec_error("winding needs \"n\", \"exponents\" or \"seed\"");
        }
        f.path = linear_path_to(g);
        f.k = 0;
    } else if (kind == "bump") {
        check_keys(spec, {"amplitude", "width", "center", "matrix"});
        const Matrix m = spec.contains("matrix") ? parse_matrix(spec.at("matrix")) : Matrix::Identity(1, 1);
        f.path = bump_path(m, parse_complex(field(spec, "amplitude")), get_or<double>(spec, "width", 1.0),
                           get_or<double>(spec, "center", 0.0));
        f.k = 0;
        f.expected = 0;
    } else if (kind == "hermitian_path" || kind == "suspension_odd") {
        const HermitianPath d = kind == "hermitian_path" ? parse_hermitian_path(spec) : parse_hermitian_path(field(spec, "path"));
        if (kind == "suspension_odd") check_keys(spec, {"p", "sign", "path"});
        int p = opts.p.value_or(opts.k ? 2 * *opts.k + 1 : 1);
        int sign = opts.sign;
        if (kind == "suspension_odd") {
            p = get_or<int>(spec, "p", p);
            if (spec.contains("sign")) {
                const Json& s = spec.at("sign");
                sign = s.is_string() ? (s.get<std::string>() == "-" ? -1 : 1) : s.get<int>();
            }
        }
        if (p % 2 == 0) spec_error("odd suspension needs odd p");
        f.path = suspend_odd(d, p, sign);
        f.k = (p - 1) / 2;
        f.operator_path = d;
        f.expected = sign * spectral_flow(d);
    } else if (kind == "suspension_even") {
        check_keys(spec, {"k", "path"});
        const HermitianPath d = parse_hermitian_path(field(spec, "path"));
        f.k = get_or<int>(spec, "k", opts.k.value_or(1));
        f.path = almost_idempotent_path(d, f.k);
        f.even = true;
        f.operator_path = d;
        f.expected = spectral_flow(d);
    } else {
        spec_error("kind \"" + kind + "\" does not describe a path family");
    }
    if (opts.k && *opts.k != f.k && kind != "hermitian_path")
        spec_error("--k " + std::to_string(*opts.k) + " does not match the family (k = " + std::to_string(f.k) + ")");
    if (opts.parity == "even" && !f.even) spec_error("--parity even needs a suspension_even family");
    if (opts.parity == "odd" && f.even) spec_error("--parity odd does not apply to a suspension_even family");
    return f;
}

Json record_to_json(const ResultRecord& r)
{
    Json parts = Json::array();
    for (const FlowPart& p : r.parts) parts.push_back(Json{{"name", p.name}, {"re", p.value.real()}, {"im", p.value.imag()}});
    Json diag = Json::object();
    for (const auto& [k, v] : r.diagnostics) diag[k] = finite_or_zero(v);
    Json j{{"schema", kResultSchema},       {"operation", r.operation}, {"input_digest", r.input_digest},
           {"config", r.config},            {"value", complex_to_json(r.value)},
           {"parts", parts},                {"diagnostics", diag},      {"extra", r.extra}};
    if (r.snapped) j["snapped"] = *r.snapped;
    if (r.residual) j["residual"] = *r.residual;
    if (r.wall_time) j["wall_time_s"] = *r.wall_time;
    return j;
}

ResultRecord record_from_json(const Json& j)
{
    if (get<std::string>(j, "schema") != kResultSchema) spec_error("unsupported result schema");
    ResultRecord r;
    r.operation = get<std::string>(j, "operation");
    r.input_digest = get<std::string>(j, "input_digest");
    r.config = field(j, "config");
    r.value = parse_complex(field(j, "value"));
    for (const Json& p : field(j, "parts")) r.parts.push_back({get<std::string>(p, "name"), parse_complex(p)});
    for (const auto& [k, v] : field(j, "diagnostics").items()) r.diagnostics[k] = v.get<double>();
    r.extra = field(j, "extra");
    if (j.contains("snapped")) r.snapped = j.at("snapped").get<std::int64_t>();
    if (j.contains("residual")) r.residual = j.at("residual").get<double>();
    if (j.contains("wall_time_s")) r.wall_time = j.at("wall_time_s").get<double>();
    return r;
}

std::string serialize(const ResultRecord& r) { return record_to_json(r).dump(2) + "\n"; }

std::string digest(const Json& j)
{
    const std::string text = j.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 digest failed");
    std::ostringstream out;
    out << "sha256:" << std::hex << std::setfill('0');
    for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(md[i]);
    return out.str();
}

ResultRecord cmd_sf(const Json& spec, const Options& opts)
{
    const HermitianPath path = parse_hermitian_path(spec);
    const SpectralFlowResult sf = spectral_flow_details(path, opts.nodes.value_or(16));
    ResultRecord r = base_record("sf", spec, opts);
    r.value = sf.value;
    r.snapped = sf.value;
    r.residual = 0.0;
    Json crossings = Json::array();
    for (const Crossing& c : sf.crossings) crossings.push_back(Json{{"s", c.s}, {"direction", c.direction}});
    r.extra = Json{{"crossings", crossings}};
    r.diagnostics["certified_intervals"] = sf.intervals;
    return r;
}

ResultRecord cmd_eta(const Json& spec, const Options& opts)
{
    const QuadConfig cfg = effective_quad(opts);
    const std::string kind = kind_of(spec);
    if (kind != "hermitian_matrix") spec_error("eta expects kind \"hermitian_matrix\"");
    check_keys(spec, {"matrix"});
    const Matrix d = parse_matrix(field(spec, "matrix"));
    if (d.rows() != d.cols() || (d - d.adjoint()).norm() >= 1e-12) spec_error("matrix must be square and Hermitian");
    ResultRecord r = base_record("eta", spec, opts);
    r.extra["eta_spectral"] = eta_spectral(d);
    r.extra["eta_reduced"] = eta_reduced(d);
    if (opts.k && !opts.p) {
        const cplx trace = even_eta_trace(idempotent_from_D(d, *opts.k), *opts.k, cfg);
        r.value = eta_even(idempotent_from_D(d, *opts.k), *opts.k, cfg);
        r.parts = {{"trace_term", trace}};
        r.extra["method"] = "even";
    } else {
        const int p = opts.p.value_or(1);
        r.value = eta_parametric(d, p, cfg);
        r.parts = {{"parametric", r.value}};
        const cplx radial = eta_parametric_radial(d, p, cfg);
        r.extra["radial"] = complex_to_json(radial);
        r.diagnostics["radial_difference"] = std::abs(radial - r.value);
        r.extra["method"] = "parametric";
    }
    r.snapped = std::llround(r.value.real());
    r.residual = std::abs(r.value - cplx(static_cast<double>(*r.snapped), 0.0));
    return r;
}

ResultRecord cmd_df(const Json& spec, const Options& opts)
{
    const QuadConfig cfg = effective_quad(opts);
    const Family f = parse_family(spec, opts);
    ResultRecord r = base_record("df", spec, opts);
    const FlowResult flow = f.even ? divisor_flow_even(f.path, f.k, cfg) : divisor_flow_odd(f.path, f.k, cfg);
    fill_flow(r, flow);
    r.extra["parity"] = f.even ? "even" : "odd";
    r.extra["k"] = f.k;
    if (f.expected) r.extra["expected"] = *f.expected;
    return r;
}

ResultRecord cmd_regint(const Json& spec, const Options& opts)
{
    const QuadConfig cfg = effective_quad(opts);
    const std::string kind = kind_of(spec);
    ResultRecord r = base_record("regint", spec, opts);
    if (kind == "symbol") {
        check_keys(spec, {"p", "expr"});
        const int p = get<int>(spec, "p");
        if (p < 1 || p > 3) spec_error("p must be 1, 2 or 3");
        ParamSymbol f = parse_expr(field(spec, "expr"), p);
        if (f.N() > 1) f = sym_trace(f);
        const RegIntegralParts parts = reg_integral_parts(f, cfg);
        r.value = parts.value();
        r.parts = {{"inner", parts.inner}, {"tails", parts.tails}, {"remainder", parts.remainder}};
    } else if (kind == "radial_rational") {
        check_keys(spec, {"num", "den"});
        const std::vector<cplx> num = parse_complex_list(field(spec, "num")), den = parse_complex_list(field(spec, "den"));
        int n = static_cast<int>(num.size()) - 1, d = static_cast<int>(den.size()) - 1;
        while (n >= 0 && num[static_cast<std::size_t>(n)] == 0.0) --n;
        while (d >= 0 && den[static_cast<std::size_t>(d)] == 0.0) --d;
        if (d < 0) spec_error("denominator is zero");
        if (den[0] == 0.0) spec_error("denominator vanishes at r = 0");
        RadialFunction g;
        g.g = [num, den](double x) {
            cplx a = 0.0, b = 0.0;
            for (std::size_t i = num.size(); i-- > 0;) a = a * x + num[i];
            for (std::size_t i = den.size(); i-- > 0;) b = b * x + den[i];
            return a / b;
        };
        if (n >= 0) {
            // Laurent series at infinity: r^{n-d} sum_j c_j r^{-j}, remainder O(r^-6).
            const int terms = n - d + 6;
            auto a_at = [&](int i) { return i <= n ? num[static_cast<std::size_t>(n - i)] : cplx(0.0); };
            auto b_at = [&](int i) { return i <= d ? den[static_cast<std::size_t>(d - i)] : cplx(0.0); };
            std::vector<cplx> c;
            for (int j = 0; j < std::max(terms, 0); ++j) {
                cplx v = a_at(j);
                for (int i = 1; i <= j; ++i) v -= b_at(i) * c[static_cast<std::size_t>(j - i)];
                c.push_back(v / b_at(0));
            }
            for (int j = 0; j < static_cast<int>(c.size()); ++j)
                if (c[static_cast<std::size_t>(j)] != 0.0) g.at_infinity.push_back({c[static_cast<std::size_t>(j)], static_cast<double>(n - d - j)});
            g.remainder_at_infinity = std::min(n - d - std::max(terms, 0), -6);
        }
        r.value = reg_integral_radial(g, cfg);
    } else if (kind == "radial_exp") {
        check_keys(spec, {"rate"});
        const double a = get<double>(spec, "rate");
        if (!(a > 0)) spec_error("rate must be positive");
        RadialFunction g;
        g.g = [a](double x) { return cplx(std::exp(-a * x), 0.0); };
        g.remainder_at_infinity = kNegInf;
        r.value = reg_integral_radial(g, cfg);
    } else {
        spec_error("regint expects kind \"symbol\", \"radial_rational\" or \"radial_exp\"");
    }
    return r;
}

ResultRecord cmd_suspend(const Json& spec, const Options& opts)
{
    const QuadConfig cfg = effective_quad(opts);
    const HermitianPath d = parse_hermitian_path(spec);
    const int sf = spectral_flow(d, 16);
    ResultRecord r = base_record("suspend", spec, opts);
    FlowResult flow;
    int expected = sf;
    if (opts.k && !opts.p) {
        flow = divisor_flow_even(almost_idempotent_path(d, *opts.k), *opts.k, cfg);
        r.extra["parity"] = "even";
    } else {
        const int p = opts.p.value_or(1);
        if (p % 2 == 0) spec_error("suspend: use --k for even suspensions; --p must be odd");
        flow = divisor_flow_odd(suspend_odd(d, p, opts.sign), (p - 1) / 2, cfg);
        expected = opts.sign * sf;
        r.extra["parity"] = "odd";
    }
    fill_flow(r, flow);
    r.extra["SF"] = sf;
    r.extra["DF"] = flow.snapped;
    r.extra["expected_DF"] = expected;
    r.extra["match"] = flow.snapped == expected;
    return r;
}

std::string cmd_trace(const Json& spec, const Options& opts)
{
    const HermitianPath d = parse_hermitian_path(spec);
    const int n = opts.nodes.value_or(200);
    if (n < 1) spec_error("--nodes must be positive");
    std::ostringstream out;
    out << std::setprecision(17);
    out << "s";
    for (int i = 0; i < d.N(); ++i) out << ",lambda_" << i;
    out << ",eta_reduced_mod_1\n";
    for (int i = 0; i <= n; ++i) {
        const double s = static_cast<double>(i) / n;
        const Matrix m = d.at(s);
        const RealVec e = hermitian_eigenvalues(m);
        out << s;
        for (Eigen::Index j = 0; j < e.size(); ++j) out << "," << e(j);
        const double eta = eta_reduced(m);
        out << "," << eta - std::floor(eta) << "\n";
    }
    return out.str();
}

// Verification suites

namespace {

struct Check {
    std::string name;
    double residual;
    double tolerance;
};

Matrix random_complex_matrix(std::mt19937& rng, int n, double scale = 1.0)
{
    std::normal_distribution<double> g;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = scale * cplx(g(rng), g(rng));
    return m;
}

RealVec random_point(std::mt19937& rng, int p)
{
    std::normal_distribution<double> g;
    RealVec v(p);
    for (int i = 0; i < p; ++i) v(i) = 2.0 * g(rng);
    return v;
}

// Linear symbol times (D^2 + |mu|^2)^z with D well away from singular.
ParamSymbol random_symbol(std::mt19937& rng, int p, int n, double z)
{
    std::vector<Matrix> a;
    for (int j = 0; j < p; ++j) a.push_back(random_complex_matrix(rng, n));
    const Matrix m0 = random_complex_matrix(rng, n);
    Matrix d = random_complex_matrix(rng, n);
    d = (0.5 * (d + d.adjoint())).eval();
    d += (0.5 + d.norm()) * Matrix::Identity(n, n);
    return sym_mul(linear_symbol(p, m0, a), radial_power_symbol(p, d, z));
}

void suite_clifford(std::vector<Check>& out)
{
    for (int p = 1; p <= 4; ++p) {
        const CliffordRep rep = build_clifford(p);
        const Matrix id = Matrix::Identity(rep.dim(), rep.dim());
        double res = 0.0;
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j) {
                const Matrix ac = rep.generators[i] * rep.generators[j] + rep.generators[j] * rep.generators[i];
                res = std::max(res, (ac + (i == j ? 2.0 : 0.0) * id).norm());
            }
        out.push_back({"clifford relations p=" + std::to_string(p), res, 1e-12});
        if (rep.grading) {
            double g = ((*rep.grading) * (*rep.grading) - id).norm();
            for (const Matrix& c : rep.generators) g = std::max(g, ((*rep.grading) * c + c * (*rep.grading)).norm());
            out.push_back({"grading p=" + std::to_string(p), g, 1e-12});
        }
    }
}

void suite_symbol(std::vector<Check>& out, std::mt19937& rng)
{
    for (int p = 1; p <= 3; ++p) {
        const ParamSymbol a = random_symbol(rng, p, 2, -0.5), b = random_symbol(rng, p, 2, 0.0);
        const ParamSymbol ab = sym_mul(a, b);
        const ParamSymbol inv = sym_inv(sym_add(identity_symbol(p, 2), sym_scale(0.1, b)));
        double prod = 0.0, inverse = 0.0;
        for (int i = 0; i < 20; ++i) {
            const RealVec mu = random_point(rng, p);
            const Matrix va = a.eval(mu), vb = b.eval(mu);
            prod = std::max(prod, (ab.eval(mu) - va * vb).norm() / (1.0 + (va * vb).norm()));
            const Matrix m = Matrix::Identity(2, 2) + 0.1 * vb;
            inverse = std::max(inverse, (inv.eval(mu) * m - Matrix::Identity(2, 2)).norm());
        }
        out.push_back({"product consistency p=" + std::to_string(p), prod, 1e-12});
        out.push_back({"inverse consistency p=" + std::to_string(p), inverse, 1e-10});
        const ExpansionCheck e = check_expansion(a, a.default_target());
        out.push_back({"expansion stability p=" + std::to_string(p), e.stable ? 0.0 : 1.0, 0.5});
    }
}

void suite_regint(std::vector<Check>& out, const QuadConfig& cfg)
{
    const cplx mu2 = reg_integral(rational_symbol({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0}), cfg);
    out.push_back({"regint 1 = 0", std::abs(reg_integral(identity_symbol(1, 1), cfg)), 1e-7});
    out.push_back({"regint mu^2/(1+mu^2) = -pi", std::abs(mu2 + kPi), 1e-7});
    out.push_back({"regint 1/(1+mu^2) = pi", std::abs(reg_integral(rational_symbol({1.0}, {1.0, 0.0, 1.0}), cfg) - kPi), 1e-7});
    out.push_back({"regint p=3 (1+|mu|^2)^-2 = pi^2",
                   std::abs(reg_integral(radial_power_symbol(3, Matrix::Identity(1, 1), -2.0), cfg) - kPi * kPi), 1e-7});
    double spread = 0.0;
    for (double r0 : {0.5, 2.0}) {
        QuadConfig c = cfg;
        c.split_radius = r0;
        spread = std::max(spread, std::abs(reg_integral(rational_symbol({0.0, 0.0, 1.0}, {1.0, 0.0, 1.0}), c) - mu2));
    }
    out.push_back({"split radius independence", spread, 1e-7});
    RadialFunction g;
    g.g = [](double r) { return cplx(r / (1.0 + r * r), 0.0); };
    g.at_infinity = {{1.0, -1.0}, {-1.0, -3.0}, {1.0, -5.0}};
    g.remainder_at_infinity = -7.0;
    out.push_back({"radial r/(1+r^2) = 0", std::abs(reg_integral_radial(g, cfg)), 1e-7});
    RadialFunction e;
    e.g = [](double r) { return cplx(std::exp(-r), 0.0); };
    e.remainder_at_infinity = kNegInf;
    out.push_back({"radial exp(-r) = 1", std::abs(reg_integral_radial(e, cfg) - 1.0), 1e-7});
    RadialFunction q;
    q.g = [](double r) { return cplx(r * r / ((1 + r * r) * (1 + r * r)), 0.0); };
    q.at_infinity = {{1.0, -2.0}, {-2.0, -4.0}};
    q.remainder_at_infinity = -6.0;
    out.push_back({"radial r^2/(1+r^2)^2 = pi/4", std::abs(reg_integral_radial(q, cfg) - kPi / 4), 1e-7});
    const ParamSymbol f = sym_mul(coordinate_symbol(1, 0), radial_power_symbol(1, Matrix::Identity(1, 1), -0.5));
    out.push_back({"Stokes defect = 2", std::abs(reg_integral(sym_partial(f, 0), cfg) - 2.0), 1e-7});
}

OperatorForm random_form(std::mt19937& rng, int p, int degree, double z)
{
    OperatorForm w = zero_form(p, 2, degree);
    for (unsigned mask = 0; mask < (1u << p); ++mask) {
        if (std::popcount(mask) != degree) continue;
        std::vector<int> idx;
        for (int j = 0; j < p; ++j)
            if (mask & (1u << j)) idx.push_back(j);
        w = form_add(w, basis_form(random_symbol(rng, p, 2, z), idx));
    }
    return w;
}

void suite_forms(std::vector<Check>& out, std::mt19937& rng, const QuadConfig& cfg)
{
    for (int p = 2; p <= 3; ++p) {
        const OperatorForm w = random_form(rng, p, 0, 0.0);
        const OperatorForm dd = ext_d(ext_d(w));
        double res = 0.0;
        const RealVec mu = random_point(rng, p);
        for (const auto& [mask, c] : dd.coefficients) res = std::max(res, c.eval(mu).norm());
        out.push_back({"d^2 = 0 p=" + std::to_string(p), res, 1e-8});
    }
    for (int p = 1; p <= 2; ++p) {
        const OperatorForm w = random_form(rng, p, p - 1, -0.5);
        const cplx bulk = tr_bar(ext_d(w), cfg), boundary = tr_tilde_sphere(w, cfg);
        out.push_back({"Stokes with boundary p=" + std::to_string(p), std::abs(bulk - boundary) / (1.0 + std::abs(bulk)), 1e-6});
    }
    const ParamSymbol f = sym_mul(coordinate_symbol(1, 0), radial_power_symbol(1, Matrix::Identity(1, 1), -0.5));
    out.push_back({"formal trace of mu(1+mu^2)^-1/2 = 2", std::abs(tr_tilde(function_form(f), cfg) - 2.0), 1e-10});
}

double dense_norm(const TensorChain& c, int degree)
{
    // Components of constant chains are compared through their dense tensors at mu = 0.
    const RealVec mu = RealVec::Zero(c.p());
    Eigen::VectorXcd acc;
    for (const ChainWord& w : c.component(degree)) {
        Eigen::VectorXcd t = Eigen::Map<const Eigen::VectorXcd>(w.letters[0].eval(mu).data(), c.N() * c.N());
        for (std::size_t i = 1; i < w.letters.size(); ++i) {
            const Matrix m = w.letters[i].eval(mu);
            const Eigen::Map<const Eigen::VectorXcd> v(m.data(), m.size());
            Eigen::VectorXcd next(t.size() * v.size());
            for (Eigen::Index k = 0; k < t.size(); ++k) next.segment(k * v.size(), v.size()) = t(k) * v;
            t = next;
        }
        if (acc.size() == 0) acc = Eigen::VectorXcd::Zero(t.size());
        acc += w.coef * t;
    }
    return acc.size() ? acc.norm() : 0.0;
}

void suite_cyclic(std::vector<Check>& out, std::mt19937& rng, const QuadConfig& cfg)
{
    TensorChain c(1, 2);
    std::normal_distribution<double> g;
    for (int d = 0; d <= 5; ++d)
        for (int r = 0; r < 2; ++r) {
            std::vector<ParamSymbol> w;
            for (int i = 0; i <= d; ++i) {
                const Matrix m = random_complex_matrix(rng, 2);
                w.push_back(constant_symbol(1, m / m.norm()));
            }
            c.add_word(cplx(g(rng), g(rng)), w);
        }
    const TensorChain bb = b_chain(b_chain(c)), BB = B_chain(B_chain(c));
    const TensorChain anti = chain_add(b_chain(B_chain(c)), B_chain(b_chain(c)));
    double rb = 0.0, rB = 0.0, ra = 0.0;
    for (int d = 0; d <= 7; ++d) {
        rb = std::max(rb, dense_norm(bb, d));
        rB = std::max(rB, dense_norm(BB, d));
        ra = std::max(ra, dense_norm(anti, d));
    }
    out.push_back({"b^2 = 0", rb, 1e-12});
    out.push_back({"B^2 = 0", rB, 1e-12});
    out.push_back({"bB + Bb = 0", ra, 1e-12});

    const Cochain phi = character_cochain(1, cfg);
    TensorChain longer(1, 2);
    longer.add_word(1.0, {random_symbol(rng, 1, 2, -1.0), random_symbol(rng, 1, 2, -0.5), random_symbol(rng, 1, 2, -0.5)});
    out.push_back({"b phi_1 = 0", std::abs(pair(phi, b_chain(longer))), 1e-6});
    const ParamSymbol a = random_symbol(rng, 1, 2, -0.5);
    TensorChain single(1, 2);
    single.add_word(1.0, {a});
    const cplx psi = phi.boundary({symbol_class(a)});
    out.push_back({"B phi_1 = sigma* psi_0", std::abs(pair(phi, B_chain(single)) - psi) / (1.0 + std::abs(psi)), 1e-6});
}

void suite_flows(std::vector<Check>& out, std::mt19937& rng, const QuadConfig& cfg)
{
    const int n = std::uniform_int_distribution<int>(-2, 2)(rng);
    const SymbolPath w = linear_path_to(winding_symbol(n));
    const FlowResult df = divisor_flow_odd(w, 0, cfg);
    out.push_back({"winding DF = " + std::to_string(n), std::abs(df.value - static_cast<double>(n)), 1e-8});
    out.push_back({"pairing = DF (winding)", std::abs(df_via_pairing(w, 0, cfg) - df.value), 1e-6});
    const HermitianPath path = random_hermitian_path(rng);
    const int sf = spectral_flow(path);
    for (int sign : {1, -1}) {
        const FlowResult r = divisor_flow_odd(suspend_odd(path, 1, sign), 0, cfg);
        out.push_back({"DF = " + std::string(sign > 0 ? "+" : "-") + "SF (p=1, N=" + std::to_string(path.N()) + ")",
                       std::abs(r.value - static_cast<double>(sign * sf)), 1e-5});
    }
    Matrix d = Matrix::Zero(3, 3);
    std::uniform_real_distribution<double> u(0.5, 3.0);
    for (int i = 0; i < 3; ++i) d(i, i) = (i == 2 ? -1.0 : 1.0) * u(rng);
    out.push_back({"parametric eta p=1", std::abs(eta_parametric(d, 1, cfg) - eta_spectral(d)), 1e-6});
    out.push_back({"parametric eta p=2", std::abs(eta_parametric(d, 2, cfg) - eta_spectral(d)), 1e-4});
    out.push_back({"even eta D=1", std::abs(eta_even(idempotent_from_D(Matrix::Identity(1, 1), 1), 1, cfg) - 1.0), 1e-4});
}

} // namespace

std::vector<std::string> verify_suites() { return {"clifford", "symbol", "regint", "forms", "cyclic", "flows"}; }

ResultRecord cmd_verify(const Options& opts)
{
    const QuadConfig cfg = effective_quad(opts);
    std::vector<std::string> suites;
    if (opts.suite == "all") {
        suites = verify_suites();
    } else {
        const auto all = verify_suites();
        if (std::find(all.begin(), all.end(), opts.suite) == all.end())
            throw PreconditionError("verify: unknown suite \"" + opts.suite + "\"");
        suites = {opts.suite};
    }
    const std::uint64_t seed = opts.seed.value_or(0);
    Json results = Json::array();
    int failed = 0;
    for (const std::string& s : suites) {
        std::mt19937 rng(static_cast<std::uint32_t>(seed));
        std::vector<Check> checks;
        if (s == "clifford") suite_clifford(checks);
        if (s == "symbol") suite_symbol(checks, rng);
        if (s == "regint") suite_regint(checks, cfg);
        if (s == "forms") suite_forms(checks, rng, cfg);
        if (s == "cyclic") suite_cyclic(checks, rng, cfg);
        if (s == "flows") suite_flows(checks, rng, cfg);
        for (const Check& c : checks) {
            const bool pass = c.residual < c.tolerance;
            failed += !pass;
            results.push_back(Json{{"suite", s}, {"check", c.name}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"pass", pass}});
        }
    }
    ResultRecord r = base_record("verify", Json{{"suite", opts.suite}, {"seed", seed}}, opts);
    r.value = failed;
    r.snapped = failed;
    r.residual = 0.0;
    r.extra = Json{{"checks", results}, {"pass", failed == 0}};
    return r;
}

} // namespace divflow::harness
