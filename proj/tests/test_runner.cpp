#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include "dtlife/error.hpp"
#include "dtlife/runner.hpp"

using namespace dtlife;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dtlife_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    f << text;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(DTLIFE_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTinyRun =
    "run --synth-stages 9 --warmup-m 3 --window-w 2 --holdout 2 --init-epochs 40 --fine-tune-epochs 3 "
    "--dynamic-epochs 5 --burn-in 1 --fnn-dims 2-3-1";

}  // namespace

TEST_CASE("paper-battery preset") {
    const RunConfig c = preset_config("paper-battery");
    CHECK(c.fnn_dims == std::vector<std::size_t>{2, 6, 6, 6, 6, 1});
    CHECK(c.synth_kind == "battery");
    CHECK(c.synth_stages == 80);
    CHECK(c.lifecycle.warmup_m == 20);
    CHECK(c.lifecycle.window_w == 5);
    CHECK(c.lifecycle.holdout_tail == 5);
    CHECK(c.lifecycle.init == TrainConfig{1000, 5e-3, 0.0, 0});
    CHECK(c.lifecycle.fine_tune == TrainConfig{10, 1e-3, 1e-5, 0});
    CHECK(c.lifecycle.dynamic == TrainConfig{1000, 1e-4, 1e-4, 0});
    CHECK(c.lifecycle.entropy == EntropyConfig{1.0, 2.0});
    CHECK(c.lifecycle.forecaster == ForecasterKind::lstm);
    CHECK(c.lifecycle.ae_mode == AeMode::joint);
    CHECK(c.burn_in == 10);
}

TEST_CASE("paper-engine differs only in m, w, network and data preparation") {
    const auto b = config_items(preset_config("paper-battery"));
    const auto e = config_items(preset_config("paper-engine"));
    std::set<std::string> differing;
    for (std::size_t i = 0; i < b.size(); ++i) {
        CHECK(b[i].first == e[i].first);
        if (b[i].second != e[i].second) differing.insert(b[i].first);
    }
    CHECK(differing == std::set<std::string>{"preset", "warmup-m", "window-w", "fnn-dims", "synth-kind", "synth-stages"});
    const RunConfig c = preset_config("paper-engine");
    CHECK(c.lifecycle.warmup_m == 40);
    CHECK(c.lifecycle.window_w == 10);
    CHECK(c.fnn().param_count() == 6561);
    CHECK(c.smooth_window == 50);
    CHECK_THROWS_AS(preset_config("nope"), ValidationError);
}

TEST_CASE("resolution order: preset < config file < flags") {
    const fs::path dir = scratch("resolve");
    fs::create_directories(dir);
    spit(dir / "run.cfg", "# comment\npreset = scaled-battery\nwarmup-m = 12\nwindow-w = 4 # trailing\n");
    const fs::path file = dir / "run.cfg";
    const RunConfig c = resolve_config(&file, {{"window-w", "3"}});
    CHECK(c.preset == "scaled-battery");
    CHECK(c.synth_stages == 40);
    CHECK(c.lifecycle.dynamic.epochs == 300);
    CHECK(c.lifecycle.warmup_m == 12);
    CHECK(c.lifecycle.window_w == 3);

    const RunConfig d = resolve_config(&file, {{"preset", "paper-battery"}});
    CHECK(d.synth_stages == 80);
    CHECK(d.lifecycle.warmup_m == 12);

    CHECK_THROWS_AS(resolve_config(nullptr, {{"bogus", "1"}}), ValidationError);
    CHECK_THROWS_AS(resolve_config(nullptr, {{"seed", "-1"}}), ValidationError);
    CHECK_THROWS_AS(resolve_config(nullptr, {{"warmup-m", "2"}, {"window-w", "3"}}), ValidationError);
}

TEST_CASE("resolved config text round trips") {
    RunConfig c = resolve_config(nullptr, {{"forecaster", "transformer"}, {"ae-mode", "per-layer"},
                                           {"entropy-beta", "0.3"}, {"seed", "9"}});
    const fs::path dir = scratch("cfgtext");
    fs::create_directories(dir);
    spit(dir / "config.resolved", config_to_text(c));
    const RunConfig back = load_resolved_config(dir / "config.resolved");
    CHECK(config_to_text(back) == config_to_text(c));
    CHECK(back.lifecycle.forecaster == ForecasterKind::transformer);
    CHECK(back.lifecycle.seed == 9);
}

TEST_CASE("report from CSVs") {
    const fs::path dir = scratch("report");
    fs::create_directories(dir);
    RunConfig c = preset_config("paper-battery");
    c.lifecycle.warmup_m = 2;
    c.lifecycle.window_w = 2;
    c.burn_in = 0;
    c.seed = 4;
    spit(dir / "config.resolved", config_to_text(c));
    spit(dir / "success_ratio.csv", "update_step,n_better,n_all,ratio\n2,1,2,0.5\n3,1,1,1\n");
    spit(dir / "mse_curves.csv",
         "update_step,future_stage,source,mse\n2,3,fine_tuned,0.2\n2,3,generated,0.1\n2,4,fine_tuned,0.2\n"
         "2,4,generated,0.3\n3,4,fine_tuned,0.2\n3,4,generated,0.1\n");
    const std::string text = report_run(dir);
    CHECK(text.find("mean success ratio 0.75") != std::string::npos);
    CHECK(text.find("preset paper-battery, seed 4") != std::string::npos);
    CHECK(text == slurp(dir / "summary.txt"));
    fs::remove(dir / "mse_curves.csv");
    CHECK_THROWS_AS(report_run(dir), IoError);
}

TEST_CASE("cli: synth is deterministic") {
    const fs::path a = scratch("synth_a"), b = scratch("synth_b");
    CHECK(cli("synth --synth-stages 40 --seed 7 --synth-noise 0.001 --out " + a.string()) == 0);
    CHECK(cli("synth --synth-stages 40 --seed 7 --synth-noise 0.001 --out " + b.string()) == 0);
    CHECK(fs::exists(a / "stage_0039.csv"));
    CHECK_FALSE(fs::exists(a / "stage_0040.csv"));
    CHECK(slurp(a / "stage_0017.csv") == slurp(b / "stage_0017.csv"));
    CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
    const fs::path one = scratch("synth_one");
    CHECK(cli("synth --synth-stages 1 --out " + one.string()) == 0);
    CHECK(fs::exists(one / "stage_0000.csv"));
}

TEST_CASE("cli: exit codes") {
    CHECK(cli("run --warmup-m 2 --window-w 3 --out " + scratch("bad").string()) == 2);
    CHECK(cli("run --preset nonsense --out " + scratch("bad").string()) == 2);
    CHECK(cli("run --data /nonexistent/dtlife/manifest.json --out " + scratch("bad").string()) == 4);
    CHECK(cli("frobnicate") == 2);
    CHECK(cli(std::string(kTinyRun) + " --init-lr 1e300 --out " + scratch("diverge").string()) == 3);
}

TEST_CASE("cli: run, evaluate and report") {
    const fs::path out = scratch("cli_run");
    REQUIRE(cli(std::string(kTinyRun) + " --out " + out.string()) == 0);
    for (const char* f : {"config.resolved", "db/manifest.json", "db/theta_6.bin", "db/generated/step_0003.bin",
                          "mse_curves.csv", "success_ratio.csv", "boxplot.csv", "entropy.json", "summary.txt",
                          "training_log.csv", "data/manifest.json"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    CHECK_FALSE(fs::exists(out / "db/theta_7.bin"));  // holdout stages never trained on
    const std::string curves = slurp(out / "mse_curves.csv");
    const std::string ratios = slurp(out / "success_ratio.csv");
    CHECK(cli("evaluate " + out.string()) == 0);
    CHECK(slurp(out / "mse_curves.csv") == curves);
    CHECK(slurp(out / "success_ratio.csv") == ratios);
    CHECK(cli("report " + out.string()) == 0);
    CHECK(slurp(out / "summary.txt").find("preset paper-battery") != std::string::npos);
}

TEST_CASE("zero holdout omits the undefined final success ratio") {
    RunConfig c = resolve_config(nullptr, {{"synth-stages", "6"}, {"warmup-m", "3"}, {"window-w", "2"},
                                           {"holdout", "0"}, {"init-epochs", "20"}, {"fine-tune-epochs", "2"},
                                           {"dynamic-epochs", "3"}, {"fnn-dims", "2-3-1"}});
    c.out = scratch("noholdout").string();
    const auto report = run_experiment(c);
    CHECK(report.ratios.size() == 2);  // steps 3 and 4; step 5 has no future stage
    REQUIRE(report.notes.size() == 1);
    CHECK(report.notes[0].find("update step 5") != std::string::npos);
}
