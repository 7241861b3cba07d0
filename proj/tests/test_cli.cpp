#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using json = nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + ITPL_CLI + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p);
    std::string out;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), n);
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string data(const std::string& name) { return std::string(ITPL_DATA_DIR) + "/" + name; }
std::string tmp(const std::string& name) { return std::string(ITPL_TEST_TMP) + "/" + name; }

}  // namespace

TEST_CASE("coeffs") {
    Run r = run("coeffs --form delta --count 5");
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["coefficients"] == json::array({1, -24, 252, -1472, 4830}));
    CHECK(j["results"].size() == 5);
    CHECK(j["results"][0].contains("err_abs"));
    CHECK(j.contains("wall_time_ms"));

    Run f = run("coeffs --file " + data("level11_eta.json") + " --count 3");
    REQUIRE(f.code == 0);
    CHECK(json::parse(f.out)["coefficients"] == json::array({1.0, -2.0, -1.0}));

    // eta(z)^2 eta(11z)^2 regenerates the shipped level-11 data.
    Run e = run("coeffs --eta 1:2,11:2 --count 200");
    REQUIRE(e.code == 0);
    std::ifstream in(data("level11_eta.json"));
    json shipped = json::parse(in);
    json gen = json::parse(e.out)["coefficients"];
    for (std::size_t m = 0; m < 200; ++m) REQUIRE(gen[m].get<long long>() == shipped["coefficients"][m].get<long long>());

    CHECK(run("coeffs --form delta --count 0").code == 2);
    CHECK(run("coeffs --form nosuchform --count 3").code == 2);
    CHECK(run("coeffs --count 3").code == 2);
}

TEST_CASE("value") {
    Run r = run("value --kind lseries --forms delta,delta --alphas 2 --s 16");
    REQUIRE(r.code == 0);
    json v = json::parse(r.out)["results"][0];
    CHECK(v["err_abs"].get<double>() < 1e-10);

    Run p = run("value --kind period --forms delta --s 6");
    REQUIRE(p.code == 0);
    // -Gamma(6) L(Delta, 6) with L normalised by (-2 pi i)^{-s}; real and positive here.
    const double val = json::parse(p.out)["results"][0]["value"][0].get<double>();
    CHECK(val == doctest::Approx(0.0015448793603950264).epsilon(1e-9));

    CHECK(run("value --kind period --forms delta,delta,delta,delta --alphas 1,1,1 --s 6").code == 2);
    CHECK(run("value --kind lseries --forms delta,delta --alphas 1 --s 10").code == 2);
    CHECK(run("value --kind lseries --forms delta --s 1+").code == 2);

    Run c = run("value --kind lcontinued --forms delta,delta --alphas 1 --s 2.5-0.5i");
    REQUIRE(c.code == 0);
    CHECK(json::parse(c.out)["inputs"]["s"] == json::array({2.5, -0.5}));

    // The environment default is echoed.
    Run t = run("value --kind lseries --forms delta,delta --alphas 2 --s 16", "ITPL_DEFAULT_TOL=1e-6");
    REQUIRE(t.code == 0);
    CHECK(json::parse(t.out)["inputs"]["tol"].get<double>() == 1e-6);
    CHECK(run("value --kind lseries --forms delta --s 14", "ITPL_DEFAULT_TOL=abc").code == 2);
}

TEST_CASE("verify") {
    Run r = run("verify --suite prop32 --tol 1e-8");
    CHECK(r.code == 0);
    json j = json::parse(r.out);
    CHECK(j["pass"] == true);
    CHECK(j["inputs"]["seed"].is_number());
    for (const auto& c : j["results"]) CHECK(c.contains("pass"));

    CHECK(run("verify --suite twisted").code == 2);
    CHECK(run("verify --suite twisted --file " + data("level11_eta.json")).code == 2);
    CHECK(run("verify --suite nosuchsuite").code == 2);

    // An impossible threshold turns into a verification failure.
    CHECK(run("verify --suite mellin --tol 1e-30").code == 1);

    // Identical invocations give identical reports apart from the wall time.
    auto strip = [](std::string s) {
        json j = json::parse(s);
        j.erase("wall_time_ms");
        return j.dump();
    };
    CHECK(strip(run("verify --suite prop33 --seed 9").out) == strip(run("verify --suite prop33 --seed 9").out));
}

TEST_CASE("table") {
    const std::string csv = tmp("sweep.csv");
    Run r = run("table --kind lseries --forms delta,delta --alphas 2 --count 16384 --s-start 15 --s-end 20 --steps 6 "
                "--format csv --out " +
                csv);
    REQUIRE(r.code == 0);
    json j = json::parse(r.out);
    REQUIRE(j["results"].size() == 6);
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "re_s,im_s,re_val,im_val,err_abs");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 6);
    // Each record matches the single-point command.
    Run v = run("value --kind lseries --forms delta,delta --alphas 2 --count 16384 --s 17");
    CHECK(json::parse(v.out)["results"][0]["value"] == j["results"][2]["value"]);

    Run one = run("table --kind lseries --forms delta,delta --alphas 2 --s-start 16 --steps 1");
    REQUIRE(one.code == 0);
    json o = json::parse(one.out);
    REQUIRE(o["results"].size() == 1);
    CHECK(o["results"][0]["s"] == json::array({16.0, 0.0}));

    CHECK(run("table --kind lseries --forms delta,delta --alphas 2 --s-start 16 --steps 1 --out /nonexistent/dir/x.csv")
              .code == 2);
    CHECK(run("table --kind lseries --forms delta,delta --alphas 2 --s-start 16 --steps 0").code == 2);
}
