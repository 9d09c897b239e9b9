#include "doctest.h"
#include "oracles.hpp"

#include "cli.hpp"

#include "pfm/serialize.hpp"

#include <fstream>
#include <sstream>

namespace {

struct Run {
    int code = 0;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = pfm::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

std::string small_bench(const oracle::TempDir& dir) {
    const auto path = (dir / "bench.csv").string();
    const auto r = run({"synth", "--output", path, "--cluster-size", "40", "--bridge-size", "12",
                        "--distractor-size", "30", "--dim", "6"});
    REQUIRE(r.code == 0);
    return path;
}

} // namespace

TEST_CASE("usage errors exit with 2") {
    auto r = run({});
    CHECK(r.code == 2);
    r = run({"frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    r = run({"retrieve", "--nope"});
    CHECK(r.code == 2);
    r = run({"evaluate", "--pairs", "many", "--dataset", "x.csv"});
    CHECK(r.code == 2);
    r = run({"--help"});
    CHECK(r.code == 0);
    CHECK(r.out.find("build-model") != std::string::npos);
}

TEST_CASE("domain errors exit with 1") {
    oracle::TempDir dir;
    auto r = run({"ingest", "--input", (dir / "missing.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error [format_error]") != std::string::npos);
    r = run({"retrieve", "--model", "nothing", "--queries", "1,2", "--data-dir", dir.path.string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("not_found") != std::string::npos);
}

TEST_CASE("ingest converts between formats") {
    oracle::TempDir dir;
    const auto csv = small_bench(dir);
    const auto bin = (dir / "bench.pfm").string();
    auto r = run({"ingest", "--input", csv, "--output", bin});
    REQUIRE(r.code == 0);
    const auto j = pfm::Json::parse(r.out);
    CHECK(j["n"] == 122);
    CHECK(j["m"] == 6);
    CHECK(j["classes"] == 3);
    const auto back = (dir / "back.csv").string();
    CHECK(run({"ingest", "--input", bin, "--output", back}).code == 0);
    CHECK(slurp(back) == slurp(csv));
}

TEST_CASE("build-model twice gives byte-identical files") {
    oracle::TempDir dir;
    const auto data = small_bench(dir);
    const auto a = (dir / "a.emr").string(), b = (dir / "b.emr").string();
    CHECK(run({"build-model", "--dataset", data, "--anchors", "64", "--seed", "7", "--output", a}).code == 0);
    CHECK(run({"build-model", "--dataset", data, "--anchors", "64", "--seed", "7", "--output", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_FALSE(slurp(a).empty());
    const auto c = (dir / "c.emr").string();
    CHECK(run({"build-model", "--dataset", data, "--anchors", "64", "--seed", "8", "--output", c}).code == 0);
    CHECK(slurp(a) != slurp(c));
    CHECK(run({"build-model", "--dataset", data, "--anchors", "1000", "--output", c}).code == 1);
}

TEST_CASE("retrieve through the registry and from a model file") {
    oracle::TempDir dir;
    const auto data = small_bench(dir);
    auto r = run({"build-model", "--dataset", data, "--anchors", "32", "--seed", "3", "--model-id", "M",
                  "--data-dir", dir.path.string()});
    REQUIRE(r.code == 0);
    CHECK(pfm::Json::parse(r.out)["model_id"] == "M");

    r = run({"retrieve", "--model", "M", "--queries", "3,17", "--k", "20", "--method", "pfm", "--data-dir",
             dir.path.string()});
    REQUIRE(r.code == 0);
    auto j = pfm::Json::parse(r.out);
    CHECK(j["method"] == "pfm");
    std::size_t count = 0;
    for (const auto& f : j["fronts"])
        count += f.size();
    CHECK(count <= 20);
    CHECK(count > 0);

    const auto file = (dir / "m.emr").string();
    REQUIRE(run({"build-model", "--dataset", data, "--anchors", "32", "--seed", "3", "--output", file}).code == 0);
    r = run({"retrieve", "--model", file, "--dataset", data, "--queries", "3,17", "--k", "20"});
    REQUIRE(r.code == 0);
    auto k = pfm::Json::parse(r.out);
    CHECK(k["fronts"] == j["fronts"]);

    r = run({"retrieve", "--model", "M", "--query-ids", "a00003,b00002", "--method", "scalarized", "--weights",
             "0.5,0.5", "--k", "5", "--data-dir", dir.path.string()});
    REQUIRE(r.code == 0);
    CHECK(pfm::Json::parse(r.out)["fronts"][0].size() == 5);

    CHECK(run({"retrieve", "--model", "M", "--queries", "3,17", "--k", "0", "--data-dir", dir.path.string()}).code ==
          1);
    CHECK(run({"retrieve", "--model", "M", "--queries", "3,3", "--data-dir", dir.path.string()}).code == 1);
    CHECK(run({"retrieve", "--model", "M", "--queries", "3", "--query-ids", "a00001"}).code == 2);
}

TEST_CASE("evaluate writes one column per method") {
    oracle::TempDir dir;
    const auto data = small_bench(dir);
    const auto json = (dir / "report.json").string();
    const auto prof = (dir / "profiles.csv").string();
    const auto r = run({"evaluate", "--dataset", data, "--pairs", "20", "--models", "2", "--methods",
                        "pfm,mq_avg,mq_max", "--anchors", "32", "--k", "10", "--json", json, "--profiles", prof});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 11);
    CHECK(rows[0] == "k,pfm,mq_avg,mq_max");
    CHECK(std::count(rows[5].begin(), rows[5].end(), ',') == 3);
    const auto j = pfm::Json::parse(slurp(json));
    CHECK(j["meta"]["pair_count"] == 20);
    CHECK(j["meta"]["model_seeds"] == pfm::Json::array({1, 2}));
    CHECK(lines(slurp(prof))[0] == "grid,front1,front2,front3,front4,front5");

    const auto again = run({"evaluate", "--dataset", data, "--pairs", "20", "--models", "2", "--methods",
                            "pfm,mq_avg,mq_max", "--anchors", "32", "--k", "10"});
    CHECK(again.out == r.out);
}

TEST_CASE("asymptotics subcommands") {
    auto r = run({"asymptotics", "chains", "--instances", "5", "--n-min", "20", "--n-max", "60", "--dims", "2,3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("mismatches") != std::string::npos);

    r = run({"asymptotics", "--format", "json", "continuum", "--density", "uniform", "--dim", "2", "--n",
             "500,2000", "--runs", "2"});
    REQUIRE(r.code == 0);
    const auto j = pfm::Json::parse(r.out);
    CHECK(j["rows"].size() == 2);
    CHECK(j["c_hat"].get<double>() > 1.0);

    r = run({"asymptotics", "probe", "--density", "uniform", "--n", "5000", "--levels", "0.5,60"});
    REQUIRE(r.code == 0);
    const auto rows = lines(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].find("empty level set") != std::string::npos);

    CHECK(run({"asymptotics", "continuum", "--density", "gauss", "--n", "100"}).code == 1);
    CHECK(run({"asymptotics", "--format", "xml", "chains"}).code != 0);
}
