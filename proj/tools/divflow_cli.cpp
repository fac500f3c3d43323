// divflow: command-line front end for the flow, eta and integral engines.
//
// Exit codes: 0 ok, 1 malformed JSON, 2 precondition failure, 3 numeric
// non-convergence, 4 verify reported failing checks.

#include "divflow/harness.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace h = divflow::harness;

namespace {

struct Args {
    std::string input;
    std::string out;
    std::string config;
    std::string sign = "+";
    h::Options opts;
};

void write_output(const std::string& text, const std::string& path)
{
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw divflow::PreconditionError("cannot write " + path);
    out << text;
}

h::Json load_input(const std::string& path)
{
    if (path.empty()) throw divflow::PreconditionError("--input is required");
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return h::parse_json(ss.str());
    }
    return h::read_json_file(path);
}

int run(const std::string& command, Args& a)
{
    std::string config_path = a.config;
    if (config_path.empty())
        if (const char* env = std::getenv("DIVFLOW_CONFIG")) config_path = env;
    if (!config_path.empty()) a.opts.quad = h::apply_config(h::read_json_file(config_path), a.opts.quad);

    if (a.sign == "+" || a.sign == "1" || a.sign == "+1") a.opts.sign = 1;
    else if (a.sign == "-" || a.sign == "-1") a.opts.sign = -1;
    else throw divflow::PreconditionError("--sign must be + or -");

    const auto start = std::chrono::steady_clock::now();
    if (command == "trace") {
        write_output(h::cmd_trace(load_input(a.input), a.opts), a.out);
        return 0;
    }
    h::ResultRecord r;
    if (command == "verify") r = h::cmd_verify(a.opts);
    else {
        const h::Json spec = load_input(a.input);
        if (command == "sf") r = h::cmd_sf(spec, a.opts);
        else if (command == "eta") r = h::cmd_eta(spec, a.opts);
        else if (command == "df") r = h::cmd_df(spec, a.opts);
        else if (command == "regint") r = h::cmd_regint(spec, a.opts);
        else if (command == "suspend") r = h::cmd_suspend(spec, a.opts);
    }
    if (a.opts.timing)
        r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_output(h::serialize(r), a.out);
    if (command == "verify" && r.snapped.value_or(0) != 0) return 4;
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"divflow: divisor flow, spectral flow, eta invariants and regularized integrals"};
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* sub, bool input) {
        if (input) sub->add_option("--input", a.input, "family or expression spec (JSON, '-' for stdin)");
        sub->add_option("--out", a.out, "output path (default stdout)");
        sub->add_option("--config", a.config, "config file {\"quad\": {...}} (default $DIVFLOW_CONFIG)");
        sub->add_option("--tol", a.opts.tol, "path quadrature tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--nodes", a.opts.nodes, "initial node count (path rule, s-grid or CSV samples)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--timing", a.opts.timing, "record wall time (breaks byte-identical output)");
    };

    auto* sf = app.add_subcommand("sf", "spectral flow of a Hermitian path");
    common(sf, true);
    auto* eta = app.add_subcommand("eta", "eta invariant of a Hermitian matrix");
    common(eta, true);
    eta->add_option("--p", a.opts.p, "suspension dimension (odd/parametric formula)");
    eta->add_option("--k", a.opts.k, "even formula with p = 2k");
    auto* df = app.add_subcommand("df", "divisor flow of a family");
    common(df, true);
    df->add_option("--k", a.opts.k, "degree k (p = 2k + 1 odd, p = 2k even)");
    df->add_option("--p", a.opts.p, "suspension dimension for hermitian_path input");
    df->add_option("--sign", a.sign, "Clifford sign for hermitian_path input (+ or -)");
    df->add_option("--parity", a.opts.parity, "odd or even")->check(CLI::IsMember({"odd", "even"}));
    auto* regint = app.add_subcommand("regint", "regularized integral of a symbol expression");
    common(regint, true);
    auto* suspend = app.add_subcommand("suspend", "suspend a Hermitian path and compare DF with SF");
    common(suspend, true);
    suspend->add_option("--p", a.opts.p, "odd suspension dimension");
    suspend->add_option("--k", a.opts.k, "even suspension with p = 2k");
    suspend->add_option("--sign", a.sign, "Clifford sign (+ or -)");
    auto* verify = app.add_subcommand("verify", "run the invariant suites");
    common(verify, false);
    verify->add_option("--suite", a.opts.suite, "clifford, symbol, regint, forms, cyclic, flows or all");
    verify->add_option("--seed", a.opts.seed, "RNG seed");
    auto* trace = app.add_subcommand("trace", "CSV of eigenvalues and reduced eta mod 1 along a path");
    common(trace, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        return run(command, a);
    } catch (const h::JsonSyntaxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const divflow::ConvergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const divflow::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const h::Json::exception& e) {
        std::cerr << "error: spec: " << e.what() << "\n";
        return 2;
    }
}
