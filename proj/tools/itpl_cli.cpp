// itpl: coefficients, values, verification suites and value tables from the command line.
// Exit codes: 0 success / all checks pass, 1 verification failure, 2 usage, configuration or data error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "itpl/error.hpp"
#include "itpl/iterated.hpp"
#include "itpl/lseries.hpp"
#include "suites.hpp"

using json = nlohmann::ordered_json;
using namespace itpl;

namespace {

constexpr int kUsage = 2;
constexpr double kDefaultTol = 1e-8;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// "a+bi", "a", "bi", "-i"; no spaces.
Complex parse_complex(const std::string& text) {
    auto number = [&](const std::string& s) {
        if (s.empty() || s == "+") return 1.0;
        if (s == "-") return -1.0;
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size()) throw UsageError("malformed complex number '" + text + "'");
        return v;
    };
    if (text.empty()) throw UsageError("empty complex number");
    if (text.back() != 'i') return number(text);
    const std::string body = text.substr(0, text.size() - 1);
    // Split at the last sign that is not the leading one and not part of an exponent.
    std::size_t split = std::string::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    if (split == std::string::npos) return {0.0, number(body)};
    return {number(body.substr(0, split)), number(body.substr(split))};
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) throw UsageError("empty entry in list '" + s + "'");
        out.push_back(item);
    }
    return out;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    if (s.empty()) return out;
    for (const std::string& item : split_list(s)) {
        std::size_t used = 0;
        int v = 0;
        try {
            v = std::stoi(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw UsageError("malformed integer '" + item + "'");
        out.push_back(v);
    }
    return out;
}

// Built-in name or coefficient file.
QExpansion load_form(const std::string& ref, std::size_t count) {
    for (const char* name : {"delta", "delta_e4", "delta_e6"}) {
        if (ref == name) return builtin_form(parse_builtin(ref), count);
    }
    return load_coefficients(ref);
}

double default_tol() {
    if (const char* env = std::getenv("ITPL_DEFAULT_TOL")) {
        char* end = nullptr;
        const double v = std::strtod(env, &end);
        if (end == env || *end != '\0' || !(v > 0)) throw ConfigurationError("ITPL_DEFAULT_TOL must be a positive number");
        return v;
    }
    return kDefaultTol;
}

Endpoint parse_endpoint(const std::string& s) {
    if (s == "inf" || s == "i_inf") return Endpoint::infinity();
    if (s == "0") return Endpoint::zero();
    return Endpoint::point(parse_complex(s));
}

json result_json(const EvalResult& r) {
    json j;
    j["value"] = complex_json(r.value);
    j["err_abs"] = r.err_abs;
    return j;
}

// Parameters shared by `value` and `table`.
struct ValueParams {
    std::string kind = "lseries";
    std::string forms;
    std::string alphas;
    std::string z;
    std::string base = "inf";
    std::size_t count = 4000;
    double tol = 0;
    double T = VerticalPathSpec{}.T;
    double eps = VerticalPathSpec{}.eps;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--kind", kind, "lseries | lcontinued | period | tilde")
            ->check(CLI::IsMember({"lseries", "lcontinued", "period", "tilde"}));
        cmd->add_option("--forms", forms, "comma-separated built-in names or coefficient files")->required();
        cmd->add_option("--alphas", alphas, "comma-separated integers (alpha_2.. ; alpha_1.. for tilde)");
        cmd->add_option("--z", z, "endpoint for tilde, a+bi");
        cmd->add_option("--base", base, "base point for tilde: inf, 0 or a+bi");
        cmd->add_option("--count", count, "coefficients generated for built-in forms");
        cmd->add_option("--tol", tol, "tolerance (default 1e-8 or ITPL_DEFAULT_TOL)");
        cmd->add_option("--T", T, "height replacing i infinity");
        cmd->add_option("--eps", eps, "height replacing the cusp 0");
    }

    json echo() const {
        json j;
        j["kind"] = kind;
        j["forms"] = forms;
        j["alphas"] = parse_ints(alphas);
        if (kind == "tilde") {
            j["z"] = z;
            j["base"] = base;
        }
        j["count"] = count;
        j["tol"] = tol;
        j["T"] = T;
        j["eps"] = eps;
        return j;
    }
};

class Evaluator {
  public:
    explicit Evaluator(ValueParams& p) : p_(p) {
        if (p_.tol == 0) p_.tol = default_tol();
        if (!(p_.tol > 0)) throw UsageError("--tol must be positive");
        const std::vector<std::string> refs = split_list(p_.forms);
        // Checked before any form is loaded, so that depth errors take precedence.
        if (p_.kind != "lseries" && refs.size() > kMaxDepth) {
            throw CostGuardError("nesting depth " + std::to_string(refs.size()) + " exceeds " + std::to_string(kMaxDepth));
        }
        for (const std::string& r : refs) forms_.push_back(load_form(r, p_.count));
        alphas_ = parse_ints(p_.alphas);
        path_.T = p_.T;
        path_.eps = p_.eps;
        path_.tol = p_.tol;
        path_.validate();
    }

    EvalResult at(Complex s) const {
        if (p_.kind == "lseries") return multiple_L_series(LArgument{s, alphas_, forms_}, p_.tol);
        if (p_.kind == "lcontinued") return multiple_L_continued(LArgument{s, alphas_, forms_}, path_);
        std::vector<CuspFunction> f;
        for (const QExpansion& q : forms_) f.push_back(as_cusp_function(q, 1e-30));
        if (p_.kind == "period") {
            if (alphas_.size() + 1 != forms_.size()) throw DomainError("period: need one alpha per form after the first");
            IteratedSpec spec{Endpoint::infinity(), {s}, f};
            spec.exponents.insert(spec.exponents.end(), alphas_.begin(), alphas_.end());
            return iterated_I_direct(spec, Endpoint::zero(), path_);
        }
        if (p_.z.empty()) throw UsageError("tilde needs --z");
        IteratedSpec spec{parse_endpoint(p_.base), {alphas_.begin(), alphas_.end()}, f};
        return tilde_I_direct(spec, parse_endpoint(p_.z), path_);
    }

  private:
    ValueParams& p_;
    std::vector<QExpansion> forms_;
    std::vector<int> alphas_;
    VerticalPathSpec path_;
};

json coeffs_command(const std::string& form, const std::string& file, const std::string& eta, int level,
                    std::optional<int> fricke, long count, const std::string& out) {
    if (count < 1) throw UsageError("--count must be at least 1");
    if (int(!form.empty()) + int(!file.empty()) + int(!eta.empty()) != 1) {
        throw UsageError("give exactly one of --form, --file, --eta");
    }
    const std::size_t n = std::size_t(count);
    json report;
    report["command"] = "coeffs";
    json in;
    std::vector<BigInt> exact;
    std::optional<QExpansion> q;
    if (!form.empty()) {
        in["form"] = form;
        IntSeries c = builtin_integer_coefficients(parse_builtin(form), n);
        exact.assign(c.begin(), c.end());
        q = builtin_form(parse_builtin(form), n);
    } else if (!file.empty()) {
        in["file"] = file;
        q = load_coefficients(file);
        if (q->size() < n) throw ValidationError("file holds only " + std::to_string(q->size()) + " coefficients");
    } else {
        in["eta"] = eta;
        // "d:r,d:r,..." for prod eta(d z)^r.
        std::vector<std::pair<int, int>> factors;
        int weight2 = 0, lcm = 1;
        for (const std::string& item : split_list(eta)) {
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw UsageError("eta factor '" + item + "' is not of the form d:r");
            std::vector<int> dr = parse_ints(item.substr(0, colon) + "," + item.substr(colon + 1));
            if (dr[0] < 1) throw UsageError("eta factor: d must be positive");
            factors.emplace_back(dr[0], dr[1]);
            weight2 += dr[1];
            lcm = std::lcm(lcm, dr[0]);
        }
        if (weight2 % 2 != 0) throw ValidationError("eta quotient has half-integral weight");
        IntSeries c = eta_quotient(factors, n + 1);
        if (c[0] != 0) throw ValidationError("eta quotient has a non-zero constant term");
        exact.assign(c.begin() + 1, c.end());
        std::vector<Complex> values;
        for (const BigInt& v : exact) values.emplace_back(v.convert_to<double>(), 0.0);
        q = QExpansion::create("eta(" + eta + ")", weight2 / 2, level > 0 ? level : lcm, std::move(values), fricke);
    }
    in["count"] = count;
    report["inputs"] = in;
    json results = json::array();
    for (std::size_t m = 1; m <= n; ++m) {
        json r;
        r["m"] = m;
        r["value"] = complex_json(q->coefficient(m));
        r["err_abs"] = 0.0;
        results.push_back(r);
    }
    report["results"] = results;
    json list = json::array();
    if (!exact.empty()) {
        for (const BigInt& v : exact) {
            if (v >= BigInt(std::numeric_limits<long long>::min()) && v <= BigInt(std::numeric_limits<long long>::max())) {
                list.push_back(v.convert_to<long long>());
            } else {
                list.push_back(v.str());
            }
        }
    } else {
        for (std::size_t m = 1; m <= n; ++m) list.push_back(results[m - 1]["value"][0]);
    }
    report["coefficients"] = list;
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw ConfigurationError("cannot write '" + out + "'");
        f << coefficients_to_json(*q) << "\n";
        if (!f) throw ConfigurationError("write to '" + out + "' failed");
    }
    return report;
}

json verify_command(const std::string& suite, std::optional<double> tol, std::uint64_t seed, const std::string& file,
                    const std::string& base_point, bool& all_pass) {
    const std::vector<int> criteria = suites::suite_criteria(suite);
    suites::Options opt;
    opt.data_dir = ITPL_DATA_DIR;
    opt.seed = seed;
    if (tol) {
        if (!(*tol > 0)) throw UsageError("--tol must be positive");
        opt.threshold = *tol;
        opt.path.tol = std::min(opt.path.tol, *tol * 1e-2);
    }
    if (suite == "twisted") {
        if (file.empty()) throw ConfigurationError("suite twisted needs --file");
        if (base_point.empty()) throw ConfigurationError("suite twisted needs --base-point");
    }
    if (!file.empty()) opt.twisted_file = file;
    if (!base_point.empty()) opt.base_point = parse_complex(base_point);

    json report;
    report["command"] = "verify";
    json in;
    in["suite"] = suite;
    if (tol) in["tol"] = *tol;
    in["seed"] = seed;
    if (!file.empty()) in["file"] = file;
    if (opt.base_point) in["base_point"] = complex_json(*opt.base_point);
    report["inputs"] = in;
    json results = json::array();
    all_pass = true;
    for (int k : criteria) {
        suites::Outcome o = suites::run_criterion(k, opt);
        all_pass = all_pass && o.pass();
        if (o.skipped) {
            json r;
            r["criterion"] = k;
            r["label"] = "skipped: " + o.note;
            r["pass"] = true;
            results.push_back(r);
        }
        for (const suites::Check& c : o.checks) {
            json r;
            r["criterion"] = k;
            r["label"] = c.label;
            r["value"] = complex_json(c.value);
            r["err_abs"] = c.err_abs;
            r["residual"] = std::isfinite(c.residual) ? json(c.residual) : json("inf");
            r["threshold"] = c.threshold;
            r["pass"] = c.pass;
            results.push_back(r);
        }
        if (o.time_limit > 0 || o.instance_limit > 0) {
            // Runtime limits enter the verdict but not the report, which stays reproducible.
            const bool in_time = (o.time_limit == 0 || o.seconds <= o.time_limit) &&
                                 (o.instance_limit == 0 || o.slowest_instance <= o.instance_limit);
            json r;
            r["criterion"] = k;
            r["label"] = "runtime within limit";
            r["pass"] = in_time;
            results.push_back(r);
        }
    }
    report["results"] = results;
    report["pass"] = all_pass;
    return report;
}

json table_command(ValueParams& p, const std::string& s_start, const std::string& s_end, int steps,
                   const std::string& out, const std::string& format) {
    if (steps < 1) throw UsageError("--steps must be at least 1");
    if (p.kind == "tilde") throw UsageError("table sweeps s; kind tilde does not depend on s");
    const Complex a = parse_complex(s_start);
    const Complex b = s_end.empty() ? a : parse_complex(s_end);
    Evaluator ev(p);
    json report;
    report["command"] = "table";
    json in = p.echo();
    in["s_start"] = complex_json(a);
    in["s_end"] = complex_json(b);
    in["steps"] = steps;
    in["out"] = out;
    in["format"] = format;
    report["inputs"] = in;
    json results = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "re_s,im_s,re_val,im_val,err_abs\n";
    for (int k = 0; k < steps; ++k) {
        const Complex s = steps == 1 ? a : a + (b - a) * (double(k) / double(steps - 1));
        EvalResult r = ev.at(s);
        json rec = result_json(r);
        rec["s"] = complex_json(s);
        results.push_back(rec);
        csv << s.real() << ',' << s.imag() << ',' << r.value.real() << ',' << r.value.imag() << ',' << r.err_abs << '\n';
    }
    report["results"] = results;
    if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw ConfigurationError("cannot write '" + out + "'");
        if (format == "csv") {
            f << csv.str();
        } else {
            f << results.dump(2) << "\n";
        }
        if (!f) throw ConfigurationError("write to '" + out + "' failed");
    }
    return report;
}

void emit(json report, std::chrono::steady_clock::time_point start) {
    report["wall_time_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    std::cout << report.dump(2) << std::endl;
}

int fail(const std::string& kind, const std::string& message) {
    json err;
    err["error"] = kind;
    err["message"] = message;
    std::cerr << err.dump() << std::endl;
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) {
    const auto start = std::chrono::steady_clock::now();
    CLI::App app{"Iterated period integrals and multiple Hecke L-values"};
    app.require_subcommand(1);

    auto* coeffs = app.add_subcommand("coeffs", "print Fourier coefficients");
    std::string c_form, c_file, c_eta, c_out;
    long c_count = 10;
    int c_level = 0;
    std::optional<int> c_fricke;
    coeffs->add_option("--form", c_form, "delta | delta_e4 | delta_e6");
    coeffs->add_option("--file", c_file, "coefficient file");
    coeffs->add_option("--eta", c_eta, "eta quotient d:r,d:r,...");
    coeffs->add_option("--level", c_level, "level of the eta quotient (default lcm of d)");
    coeffs->add_option("--fricke", c_fricke, "Fricke sign recorded with --out");
    coeffs->add_option("--count", c_count, "number of coefficients");
    coeffs->add_option("--out", c_out, "also write a coefficient file");

    auto* value = app.add_subcommand("value", "evaluate one value");
    ValueParams v_params;
    std::string v_s;
    v_params.add_to(value);
    value->add_option("--s", v_s, "complex s as a+bi");

    auto* verify = app.add_subcommand("verify", "run a verification suite");
    std::string r_suite = "all", r_file, r_base;
    std::optional<double> r_tol;
    std::uint64_t r_seed = suites::Options{}.seed;
    verify->add_option("--suite", r_suite,
                       "mellin | theorem1 | corollary | prop32 | prop33 | prop34 | prop41 | modularity | "
                       "functional_eq | twisted | all");
    verify->add_option("--tol", r_tol, "replace every numeric threshold");
    verify->add_option("--seed", r_seed, "seed for random test points");
    verify->add_option("--file", r_file, "coefficient file for the twisted suite");
    verify->add_option("--base-point", r_base, "base point a+bi for the twisted suite");

    auto* table = app.add_subcommand("table", "tabulate values along a segment in s");
    ValueParams t_params;
    std::string t_start, t_end, t_out, t_format = "json";
    int t_steps = 1;
    t_params.add_to(table);
    table->add_option("--s-start", t_start, "first s (a+bi)")->required();
    table->add_option("--s-end", t_end, "last s (a+bi)");
    table->add_option("--steps", t_steps, "number of points");
    table->add_option("--out", t_out, "output file");
    table->add_option("--format", t_format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (app.got_subcommand(coeffs)) {
            emit(coeffs_command(c_form, c_file, c_eta, c_level, c_fricke, c_count, c_out), start);
        } else if (app.got_subcommand(value)) {
            if (v_s.empty() && v_params.kind != "tilde") throw UsageError("value needs --s");
            Evaluator ev(v_params);
            json report;
            report["command"] = "value";
            json in = v_params.echo();
            if (!v_s.empty()) in["s"] = complex_json(parse_complex(v_s));
            report["inputs"] = in;
            report["results"] = json::array({result_json(ev.at(v_s.empty() ? Complex{} : parse_complex(v_s)))});
            emit(report, start);
        } else if (app.got_subcommand(verify)) {
            bool all_pass = false;
            emit(verify_command(r_suite, r_tol, r_seed, r_file, r_base, all_pass), start);
            return all_pass ? 0 : 1;
        } else if (app.got_subcommand(table)) {
            emit(table_command(t_params, t_start, t_end, t_steps, t_out, t_format), start);
        }
    } catch (const UsageError& e) {
        return fail("usage", e.what());
    } catch (const itpl::Error& e) {
        return fail("error", e.what());
    }
    return 0;
}
