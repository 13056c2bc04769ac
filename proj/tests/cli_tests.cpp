#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>
#include <sys/wait.h>

#include "tempdepth/io.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace tempdepth;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "tempdepth_cli_tests";
    fs::create_directories(dir);
    return dir;
}

RunResult run_cli(const std::string& args) {
    static int counter = 0;
    fs::path out = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
    fs::path err = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;

    std::string cmd = std::string(TEMPDEPTH_CLI_PATH) + " " + args + " > " + out.string() +
                      " 2> " + err.string();
    int status = std::system(cmd.c_str());

    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream fo(out), fe(err);
    r.out.assign(std::istreambuf_iterator<char>(fo), {});
    r.err.assign(std::istreambuf_iterator<char>(fe), {});
    return r;
}

fs::path write_scene(const std::string& name, const std::string& body) {
    fs::path p = work_dir() / name;
    std::ofstream out(p);
    out << body;
    return p;
}

const char* kBoxScene = R"({
  "width": 64, "height": 48,
  "background": {"a": 0.9, "b": 0.1, "c": 100.0},
  "objects": [
    {"shape": "box", "position": [12, 24], "size": 8,
     "depth_offset": 12.0, "velocity": [-12, 0]}
  ]
})";

const char* kStaticScene = R"({
  "width": 48, "height": 40,
  "background": {"a": 0.4, "b": 0.1, "c": 60.0}
})";

} // namespace

TEST_CASE("gen writes four rasters per frame plus a manifest") {
    fs::path spec = write_scene("box.json", kBoxScene);
    fs::path out = work_dir() / "gen_box";
    fs::remove_all(out);

    RunResult r = run_cli("gen " + spec.string() + " " + out.string() + " --frames 2");
    REQUIRE(r.exit_code == 0);

    int rasters = 0;
    for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".pfm" || e.path().extension() == ".pgm")
            ++rasters;
    CHECK(rasters == 8);
    CHECK(fs::exists(out / "manifest.json"));

    json manifest = json::parse(r.out);
    CHECK(manifest["frames"] == 2);
    CHECK(manifest["files"].size() == 2);
}

TEST_CASE("gen exit codes") {
    SUBCASE("missing spec file") {
        RunResult r = run_cli("gen /nonexistent/spec.json " + (work_dir() / "x").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("malformed spec json") {
        fs::path spec = write_scene("broken.json", "{ not json");
        RunResult r = run_cli("gen " + spec.string() + " " + (work_dir() / "x").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("spec violating scene preconditions") {
        fs::path spec = write_scene("negdepth.json", R"({
          "width": 16, "height": 16,
          "background": {"a": 0.0, "b": 0.0, "c": 2.0},
          "objects": [{"shape": "box", "position": [8, 8], "size": 4,
                       "depth_offset": 10.0, "velocity": [0, 0]}]
        })");
        RunResult r = run_cli("gen " + spec.string() + " " + (work_dir() / "x").string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("nested output directory is created") {
        fs::path spec = write_scene("static.json", kStaticScene);
        fs::path out = work_dir() / "made" / "on" / "demand";
        fs::remove_all(work_dir() / "made");
        RunResult r = run_cli("gen " + spec.string() + " " + out.string());
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(out / "manifest.json"));
    }
}

TEST_CASE("diffmask on identical frames reports zero dynamic fraction") {
    fs::path spec = write_scene("static.json", kStaticScene);
    fs::path frames = work_dir() / "static_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    fs::path dmdir = work_dir() / "dm_static";
    RunResult r = run_cli("diffmask " + (frames / "depth_000.pfm").string() + " " +
                          (frames / "depth_001.pfm").string() + " --out-dir " + dmdir.string());
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["dynamic_fraction"] == 0.0);
    CHECK(rep["alpha"] == 0.05);
    BinaryMask ml = read_mask_pgm((dmdir / "ml.pgm").string());
    CHECK(ml.count() == 0);
}

TEST_CASE("diffmask on a translating box finds dynamic pixels") {
    fs::path spec = write_scene("box.json", kBoxScene);
    fs::path frames = work_dir() / "box_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    RunResult r = run_cli("diffmask " + (frames / "depth_000.pfm").string() + " " +
                          (frames / "depth_001.pfm").string() + " --out-dir " +
                          (work_dir() / "dm_box").string());
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["dynamic_fraction"].get<double>() > 0.0);
}

TEST_CASE("diffmask rejects mismatched frames with exit 3") {
    fs::path spec_a = write_scene("static.json", kStaticScene);
    fs::path spec_b = write_scene("small.json", R"({
      "width": 24, "height": 20, "background": {"a": 0.0, "b": 0.0, "c": 10.0}
    })");
    fs::path fa = work_dir() / "frames_a";
    fs::path fb = work_dir() / "frames_b";
    fs::remove_all(fa);
    fs::remove_all(fb);
    REQUIRE(run_cli("gen " + spec_a.string() + " " + fa.string()).exit_code == 0);
    REQUIRE(run_cli("gen " + spec_b.string() + " " + fb.string()).exit_code == 0);

    RunResult r = run_cli("diffmask " + (fa / "depth_000.pfm").string() + " " +
                          (fb / "depth_000.pfm").string());
    CHECK(r.exit_code == 3);
}

TEST_CASE("pipeline self-checks pass on synthetic scenes") {
    fs::path spec = write_scene("box.json", kBoxScene);
    fs::path frames = work_dir() / "pipe_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    fs::path out = work_dir() / "pipe_out";
    RunResult r = run_cli("pipeline " + frames.string() + " --out-dir " + out.string() +
                          " --stride 8 --cd 6 --cn 3 --seed 11");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["checks_passed"] == 1.0);
    CHECK(rep["sns_row_sum_err"].get<double>() <= 1e-6);
    CHECK(rep["ms_hull_err"].get<double>() <= 1e-6);
    CHECK(fs::exists(out / "zv0.fgrid"));
    CHECK(fs::exists(out / "weights" / "kernel.fgrid"));

    FeatureGrid zv = read_fgrid((out / "zv0.fgrid").string());
    CHECK(zv.channels == 6);
    CHECK(zv.height == 48 / 8);
    CHECK(zv.width == 64 / 8);
}

TEST_CASE("pipeline on a static scene reports an empty feature mask") {
    fs::path spec = write_scene("static.json", kStaticScene);
    fs::path frames = work_dir() / "pipe_static_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    RunResult r = run_cli("pipeline " + frames.string() + " --out-dir " +
                          (work_dir() / "pipe_static_out").string() + " --stride 8 --cd 4 --cn 2");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["checks_passed"] == 1.0);
    CHECK(rep["dynamic_fraction_feature"] == 0.0);
}

TEST_CASE("pipeline reloads the weights it persisted") {
    fs::path spec = write_scene("box.json", kBoxScene);
    fs::path frames = work_dir() / "pipe_w_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    fs::path out1 = work_dir() / "pipe_w_first";
    REQUIRE(run_cli("pipeline " + frames.string() + " --out-dir " + out1.string() +
                    " --stride 8 --cd 5 --cn 2 --seed 3")
                .exit_code == 0);

    fs::path out2 = work_dir() / "pipe_w_second";
    RunResult r = run_cli("pipeline " + frames.string() + " --out-dir " + out2.string() +
                          " --stride 8 --cd 5 --cn 2 --seed 3 --weights-dir " +
                          (out1 / "weights").string());
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out)["checks_passed"] == 1.0);
}

TEST_CASE("pipeline propagates io failures as exit 3") {
    fs::path spec = write_scene("static.json", kStaticScene);
    fs::path frames = work_dir() / "pipe_bad_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    SUBCASE("too few frames") {
        fs::path empty = work_dir() / "no_frames";
        fs::create_directories(empty);
        RunResult r = run_cli("pipeline " + empty.string());
        CHECK(r.exit_code == 3);
    }
    SUBCASE("corrupt weights fgrid") {
        fs::path wdir = work_dir() / "bad_weights";
        fs::create_directories(wdir);
        for (const char* name : {"wq.fgrid", "wk.fgrid", "wv.fgrid", "kernel.fgrid"}) {
            std::ofstream f(wdir / name, std::ios::binary);
            f << "FGRX garbage";
        }
        RunResult r = run_cli("pipeline " + frames.string() + " --weights-dir " + wdir.string() +
                              " --stride 8 --cd 4 --cn 2");
        CHECK(r.exit_code == 3);
    }
}

TEST_CASE("eval reports zero error for a perfect prediction") {
    fs::path spec = write_scene("static.json", kStaticScene);
    fs::path frames = work_dir() / "eval_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string()).exit_code == 0);

    std::string depth = (frames / "depth_000.pfm").string();
    RunResult r = run_cli("eval " + depth + " " + depth + " --cap 200");
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["abs_rel"] == 0.0);
    CHECK(rep["delta1"] == 1.0);
    CHECK(rep["cap"] == 200.0);
}

TEST_CASE("eval with no valid overlap exits 5") {
    Raster zeros(1, 4, 4); // depth 0 everywhere = invalid
    fs::path p = work_dir() / "zeros.pfm";
    write_pfm(zeros, p.string());
    RunResult r = run_cli("eval " + p.string() + " " + p.string());
    CHECK(r.exit_code == 5);
}

TEST_CASE("tc on identical frames with zero flow") {
    fs::path spec = write_scene("static.json", kStaticScene);
    fs::path frames = work_dir() / "tc_frames";
    fs::remove_all(frames);
    REQUIRE(run_cli("gen " + spec.string() + " " + frames.string() + " --frames 2").exit_code == 0);

    std::string d = (frames / "depth_000.pfm").string();
    std::string flow = (frames / "flow_000.pfm").string(); // first-frame flow is zero
    RunResult r = run_cli("tc " + d + " " + d + " " + flow);
    REQUIRE(r.exit_code == 0);
    json rep = json::parse(r.out);
    CHECK(rep["qtc"] == 0.0);
    CHECK(rep["rtc"] == 1.0);
    CHECK(rep["thr"] == 1.25);

    SUBCASE("all-invalid user mask exits 5") {
        BinaryMask none(40, 48); // all zeros
        fs::path mp = work_dir() / "none.pgm";
        write_mask_pgm(none, mp.string());
        RunResult r2 = run_cli("tc " + d + " " + d + " " + flow + " --validity " + mp.string());
        CHECK(r2.exit_code == 5);
    }
}

TEST_CASE("gradcheck passes, is deterministic, and catches injected bugs") {
    RunResult a = run_cli("gradcheck --seed 9 --trials 10");
    REQUIRE(a.exit_code == 0);
    json rep = json::parse(a.out);
    CHECK(rep["passed"] == 1.0);
    CHECK(rep["silog_max_rel_err"].get<double>() < 1e-4);

    RunResult b = run_cli("gradcheck --seed 9 --trials 10");
    CHECK(a.out == b.out);

    RunResult bug = run_cli("gradcheck --seed 9 --trials 10 --inject-bug");
    CHECK(bug.exit_code == 4);
}

TEST_CASE("usage errors exit 2") {
    CHECK(run_cli("").exit_code == 2);
    CHECK(run_cli("gradcheck --no-such-flag").exit_code == 2);
    CHECK(run_cli("frobnicate").exit_code == 2);
}
