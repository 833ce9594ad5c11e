#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "narrinf/cli.hpp"
#include "narrinf/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "narrinf");
    std::ostringstream out, err;
    const int code = narrinf::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("narrinf_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string fixture(const std::string& name) { return std::string(NARRINF_FIXTURES) + "/" + name; }

// Edgeless two-vertex dataset plus a posterior degenerate at tau = ln 2.
fs::path edgeless(const fs::path& dir) {
    write(dir / "edges.csv", "src,dst,weight\n");
    write(dir / "covariates.csv", "vertex_id,popularity\nv1,0\nv2,0\n");
    write(dir / "outcomes.csv", "vertex_id,y\nv1,2\nv2,1\n");
    write(dir / "sources.csv", "vertex_id,z\nv1,1\nv2,0\n");
    std::string post = "chain,draw,tau,gamma_1,beta_1,mu,sigma_eps\n";
    for (int k = 0; k < 20; ++k) {
        post += "0," + std::to_string(k) + ",0.69314718055994529,0.5,0,0,0\n";
    }
    write(dir / "posterior.csv", post);
    return dir;
}

std::vector<std::string> lines(const fs::path& p) {
    std::istringstream in(narrinf::io::read_file(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    CHECK(run({"--help"}).code == 0);
    CHECK(run({}).code == 2);
    CHECK(run({"fit", "--bogus"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("ingest the bundled fixture") {
    const auto dir = scratch("ingest");
    auto r = run({"ingest", "--input", fixture("synthetic/records.jsonl"), "--narrative",
                  fixture("synthetic/narrative.json"), "--out", (dir / "data").string()});
    REQUIRE(r.code == 0);
    for (const char* f : {"edges.csv", "covariates.csv", "outcomes.csv", "sources.csv", "manifest.json"}) {
        CHECK(fs::exists(dir / "data" / f));
    }
    CHECK(r.err.find("skipped 1") != std::string::npos);
    CHECK(run({"verify", "--manifest", (dir / "data" / "manifest.json").string()}).code == 0);

    write(dir / "data" / "edges.csv", "tampered\n");
    CHECK(run({"verify", "--manifest", (dir / "data" / "manifest.json").string()}).code == 2);

    write(dir / "none.json", R"({"hashtags":["NothingLikeThis"]})");
    auto empty = run({"ingest", "--input", fixture("synthetic/records.jsonl"), "--narrative",
                      (dir / "none.json").string(), "--out", (dir / "empty").string()});
    CHECK(empty.code == 3);
    CHECK(!fs::exists(dir / "empty"));

    auto missing = run({"ingest", "--input", (dir / "absent.jsonl").string(), "--narrative",
                        fixture("synthetic/narrative.json"), "--out", (dir / "x").string()});
    CHECK(missing.code == 2);
    fs::remove_all(dir);
}

TEST_CASE("fit: determinism, configuration errors, convergence exit") {
    const auto dir = scratch("fit");
    REQUIRE(run({"ingest", "--input", fixture("synthetic/records.jsonl"), "--narrative",
                 fixture("synthetic/narrative.json"), "--out", (dir / "data").string()})
                .code == 0);
    std::vector<std::string> base{"fit", "--data", (dir / "data").string(), "--iters", "2000", "--burn", "1000",
                                  "--thin", "4", "--seed", "7"};
    auto a = base;
    a.insert(a.end(), {"--out", (dir / "a").string(), "--max-rhat", "10"});
    auto b = base;
    b.insert(b.end(), {"--out", (dir / "b").string(), "--max-rhat", "10", "--threads", "3"});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    CHECK(narrinf::io::read_file(dir / "a" / "posterior.csv") == narrinf::io::read_file(dir / "b" / "posterior.csv"));
    CHECK(lines(dir / "a" / "posterior.csv").size() == 1 + 4 * 250);
    auto diag = nlohmann::json::parse(narrinf::io::read_file(dir / "a" / "diagnostics.json"));
    CHECK(diag.contains("acceptance_rates"));

    auto strict = base;
    strict.insert(strict.end(), {"--out", (dir / "c").string(), "--max-rhat", "0.5"});
    CHECK(run(strict).code == 4);
    CHECK(fs::exists(dir / "c" / "posterior.csv"));

    CHECK(run({"fit", "--data", (dir / "data").string(), "--out", (dir / "d").string(), "--iters", "100", "--burn",
               "100"})
              .code == 2);
    CHECK(run({"fit", "--data", (dir / "nowhere").string(), "--out", (dir / "d").string()}).code == 2);
    fs::remove_all(dir);
}

TEST_CASE("impact on the edgeless fixture") {
    const auto dir = edgeless(scratch("impact"));
    auto r = run({"impact", "--data", dir.string(), "--posterior", (dir / "posterior.csv").string(), "--out",
                  (dir / "impact.csv").string()});
    REQUIRE(r.code == 0);
    auto rows = lines(dir / "impact.csv");
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].rfind("v1,v1,0.5,0.5,0.5,20", 0) == 0);
    auto report = lines(dir / "impact_report.csv");
    CHECK(report[0] == "screen_name,T,TRT,MRT,F,first_time,PR,impact");
    CHECK(report[1].substr(report[1].size() - 5) == ",0.50");

    auto one = run({"impact", "--data", dir.string(), "--posterior", (dir / "posterior.csv").string(), "--out",
                    (dir / "one.csv").string(), "--vertices", "v2"});
    REQUIRE(one.code == 0);
    CHECK(lines(dir / "one.csv").size() == 2);

    write(dir / "empty.csv", "chain,draw,tau,gamma_1,beta_1,mu,sigma_eps\n");
    CHECK(run({"impact", "--data", dir.string(), "--posterior", (dir / "empty.csv").string(), "--out",
               (dir / "e.csv").string()})
              .code == 2);
    fs::remove_all(dir);
}

TEST_CASE("crlb exit codes") {
    const auto dir = scratch("crlb");
    write(dir / "params.json", R"({"tau":0.8,"gamma":[0.5],"beta":[0.4],"mu":-0.2,"sigma_eps":0})");

    fs::create_directories(dir / "four");
    write(dir / "four" / "edges.csv", "src,dst,weight\na,b,1\na,c,2\nd,c,1\n");
    write(dir / "four" / "covariates.csv", "vertex_id,popularity\na,0\nb,1\nc,0.5\nd,2\n");
    write(dir / "four" / "outcomes.csv", "vertex_id,y\na,1\nb,0\nc,2\nd,1\n");
    write(dir / "four" / "sources.csv", "vertex_id,z\na,1\nb,0\nc,0\nd,1\n");
    REQUIRE(run({"crlb", "--data", (dir / "four").string(), "--params", (dir / "params.json").string(), "--out",
                 (dir / "crlb.json").string()})
                .code == 0);
    auto j = nlohmann::json::parse(narrinf::io::read_file(dir / "crlb.json"));
    CHECK(j["covariance_bound"].size() == 4);
    CHECK(j["covariance_bound"][0].size() == 4);

    fs::create_directories(dir / "single");
    write(dir / "single" / "edges.csv", "src,dst,weight\n");
    write(dir / "single" / "covariates.csv", "vertex_id,popularity\na,1\n");
    write(dir / "single" / "outcomes.csv", "vertex_id,y\na,1\n");
    write(dir / "single" / "sources.csv", "vertex_id,z\na,1\n");
    CHECK(run({"crlb", "--data", (dir / "single").string(), "--params", (dir / "params.json").string(), "--out",
               (dir / "s.json").string()})
              .code == 6);

    fs::create_directories(dir / "multi");
    for (const char* f : {"edges.csv", "outcomes.csv", "sources.csv"}) fs::copy_file(dir / "four" / f, dir / "multi" / f);
    write(dir / "multi" / "covariates.csv", "vertex_id,popularity,lang_en\na,0,1\nb,1,0\nc,0.5,0\nd,2,1\n");
    CHECK(run({"crlb", "--data", (dir / "multi").string(), "--params", (dir / "params.json").string(), "--out",
               (dir / "m.json").string()})
              .code == 5);
    fs::remove_all(dir);
}

TEST_CASE("simulate") {
    const auto dir = scratch("simulate");
    write(dir / "p.json", R"({"tau":1.0,"gamma":[0.5],"beta":[0.3],"mu":-0.5,"sigma_eps":0.1})");
    auto args = [&](const std::string& out, const std::string& n) {
        return std::vector<std::string>{"simulate", "--n", n, "--params", (dir / "p.json").string(), "--seed", "3",
                                        "--out", (dir / out).string()};
    };
    REQUIRE(run(args("a", "50")).code == 0);
    REQUIRE(run(args("b", "50")).code == 0);
    for (const char* f : {"records.jsonl", "edges.csv", "outcomes.csv", "sources.csv", "covariates.csv", "params.json"}) {
        CHECK(narrinf::io::read_file(dir / "a" / f) == narrinf::io::read_file(dir / "b" / f));
    }
    REQUIRE(run(args("one", "1")).code == 0);
    CHECK(lines(dir / "one" / "outcomes.csv").size() == 2);
    CHECK(run({"ingest", "--input", (dir / "one" / "records.jsonl").string(), "--narrative",
               (dir / "one" / "narrative.json").string(), "--out", (dir / "one_data").string()})
              .code == 0);

    write(dir / "bad.json", R"({"tau":-1.0,"gamma":[0.5],"beta":[0.3],"mu":-0.5,"sigma_eps":0.1})");
    CHECK(run({"simulate", "--params", (dir / "bad.json").string(), "--out", (dir / "c").string()}).code == 2);
    fs::remove_all(dir);
}

}  // TEST_SUITE

TEST_SUITE("roundtrip") {

TEST_CASE("simulate, ingest and fit recover tau") {
    const auto dir = scratch("roundtrip");
    write(dir / "p.json", R"({"tau":1.0,"gamma":[0.5],"beta":[0.3],"mu":-0.5,"sigma_eps":0.1})");
    int covered = 0;
    std::string detail;
    for (int seed = 1; seed <= 20; ++seed) {
        const auto s = std::to_string(seed);
        const auto sim = dir / ("sim" + s);
        const auto data = dir / ("data" + s);
        const auto fit = dir / ("fit" + s);
        REQUIRE(run({"simulate", "--n", "200", "--mean-degree", "5", "--params", (dir / "p.json").string(), "--seed",
                     s, "--out", sim.string()})
                    .code == 0);
        REQUIRE(run({"ingest", "--input", (sim / "records.jsonl").string(), "--narrative",
                     (sim / "narrative.json").string(), "--out", data.string()})
                    .code == 0);
        REQUIRE(run({"fit", "--data", data.string(), "--out", fit.string(), "--seed", s}).code == 0);
        const auto diag = nlohmann::json::parse(narrinf::io::read_file(fit / "diagnostics.json"));
        for (const auto& p : diag["parameters"]) {
            if (p["name"] != "tau") continue;
            const double lo = p["q05"].get<double>();
            const double hi = p["q95"].get<double>();
            if (lo <= 1.0 && 1.0 <= hi) ++covered;
            detail += " [" + std::to_string(lo) + ", " + std::to_string(hi) + "]";
        }
    }
    INFO("tau intervals:" << detail);
    CHECK(covered >= 15);
    fs::remove_all(dir);
}

}  // TEST_SUITE
