#include <filesystem>
#include <fstream>

#include "cfs/dataio.hpp"
#include "cfs/simulate.hpp"
#include "doctest.h"

using namespace cfs;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const char* tag) {
    const fs::path p = fs::temp_directory_path() / (std::string("cfs_io_") + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Episode small_episode() {
    sim::SimConfig cfg;
    cfg.duration = 6.0;
    cfg.seed = 12;
    return sim::gen_episode(cfg, {}, 0).episode;
}

}  // namespace

TEST_SUITE("dataio") {

TEST_CASE("episodes round-trip bit-identically") {
    const fs::path dir = temp_dir("roundtrip");
    const Episode ep = small_episode();
    io::write_episode(ep, dir / "ep000");
    const Episode back = io::read_episode(dir / "ep000");
    CHECK(back.interrogator.t == ep.interrogator.t);
    CHECK(back.interrogator.values == ep.interrogator.values);
    CHECK(back.scale.t == ep.scale.t);
    CHECK(back.scale.values == ep.scale.values);
    CHECK(back.meta.seed == ep.meta.seed);
    REQUIRE(back.sor_events.size() == ep.sor_events.size());
    for (std::size_t i = 0; i < ep.sor_events.size(); ++i) {
        CHECK(back.sor_events[i].t == ep.sor_events[i].t);
        CHECK(back.sor_events[i].sensor == ep.sor_events[i].sensor);
        CHECK(back.sor_events[i].offset == ep.sor_events[i].offset);
    }
    fs::remove_all(dir);
}

TEST_CASE("missing columns in the header are rejected by name") {
    const fs::path dir = temp_dir("badheader");
    {
        std::ofstream os(dir / "interrogator.csv");
        os << "time,s0,s1\n0.0,1.0,2.0\n";
        std::ofstream os2(dir / "scale.csv");
        os2 << "time,force\n0.0,0.0\n";
    }
    try {
        io::read_episode(dir);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("time,s0,s1,s2") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("malformed cells carry their line number") {
    const fs::path dir = temp_dir("badcell");
    {
        std::ofstream os(dir / "interrogator.csv");
        os << "time,s0,s1,s2\n0.0,1.0,2.0,3.0\n0.1,oops,2.0,3.0\n";
        std::ofstream os2(dir / "scale.csv");
        os2 << "time,force\n0.0,0.0\n";
    }
    try {
        io::read_episode(dir);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("out-of-order timestamps surface as validation errors") {
    const fs::path dir = temp_dir("outoforder");
    {
        std::ofstream os(dir / "interrogator.csv");
        os << "time,s0,s1,s2\n0.2,1.0,2.0,3.0\n0.1,1.0,2.0,3.0\n";
        std::ofstream os2(dir / "scale.csv");
        os2 << "time,force\n0.0,0.0\n";
    }
    try {
        io::read_episode(dir);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("non-increasing timestamp") != std::string::npos);
    }
    fs::remove_all(dir);
}

TEST_CASE("prediction files have the documented shape and round-trip") {
    const fs::path dir = temp_dir("pred");
    const std::vector<double> t{0.1, 0.2, 0.3, 0.4, 0.5};
    const std::vector<double> real{0.0, 1.0, 2.5, 1.0, 0.0};
    const std::vector<double> pred{0.1, 0.9, 2.55, 1.1, -0.02};
    io::write_predictions(t, real, pred, dir / "pred.csv");

    std::ifstream is(dir / "pred.csv");
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line)) lines.push_back(line);
    REQUIRE(lines.size() == 6);
    CHECK(lines[0] == "time,real,pred");

    CHECK_THROWS_AS(
        io::write_predictions(t, real, std::vector<double>{1.0}, dir / "bad.csv"), Error);
    fs::remove_all(dir);
}

TEST_CASE("empty episodes and unwritable directories error out") {
    Episode empty;
    try {
        io::write_episode(empty, temp_dir("empty") / "x");
        FAIL("expected EmptyEpisode");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyEpisode);
    }

    const fs::path blocked = temp_dir("blocked") / "file";
    {
        std::ofstream os(blocked);
        os << "x";
    }
    CHECK_THROWS_AS(io::write_episode(small_episode(), blocked / "sub"), Error);
}

TEST_CASE("datasets round-trip through the manifest") {
    const fs::path dir = temp_dir("dataset");
    sim::SimConfig cfg;
    cfg.episodes = 2;
    cfg.duration = 5.0;
    const auto gen = sim::gen_dataset(cfg, {});
    io::write_dataset(gen, cfg, {}, dir);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(fs::exists(dir / "ep000" / "interrogator.csv"));
    const auto episodes = io::read_dataset(dir);
    REQUIRE(episodes.size() == 2);
    CHECK(episodes[0].interrogator.values == gen[0].episode.interrogator.values);
    fs::remove_all(dir);
}

TEST_CASE("fnv1a is stable") {
    CHECK(io::fnv1a("") == 14695981039346656037ULL);
    CHECK(io::fnv1a("a") != io::fnv1a("b"));
}

}  // TEST_SUITE
