#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "dtlife/database.hpp"
#include "dtlife/error.hpp"
#include "dtlife/lifecycle.hpp"
#include "dtlife/synth.hpp"

using namespace dtlife;
namespace fs = std::filesystem;

namespace {

const FnnSpec kSmall{{2, 3, 3, 1}};

LifecycleConfig small_config() {
    LifecycleConfig c;
    c.warmup_m = 4;
    c.window_w = 2;
    c.holdout_tail = 2;
    c.init = {60, 5e-3, 0.0, 0};
    c.fine_tune = {5, 1e-3, 1e-5, 0};
    c.dynamic = {15, 1e-3, 1e-4, 0};
    c.seed = 3;
    return c;
}

std::vector<StageDataset> small_stages(std::size_t k) {
    BatterySynthParams p;
    p.stages = k;
    p.points = 40;
    p.raw_points = 200;
    return synth_battery(p);
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("dtlife_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("database save/load round trip is bitwise") {
    Rng rng(31);
    ConfigDatabase db(FnnSpec::battery());
    for (std::size_t i = 0; i < 3; ++i) {
        auto s = fnn_init(FnnSpec::battery(), rng);
        s.stage_index = i;
        db.append(s);
    }
    db.attributes["latent"] = "14";
    const fs::path dir = scratch("db");
    save_database(db, dir);
    const auto spec = FnnSpec::battery();
    const ConfigDatabase back = load_database(dir, &spec);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(bitwise_equal(back.at(i), db.at(i)));
    CHECK(back.attributes.at("latent") == "14");

    const auto other = FnnSpec::engine();
    try {
        load_database(dir, &other);
        FAIL("expected spec mismatch");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("spec") != std::string::npos);
    }

    fs::resize_file(dir / "theta_1.bin", 24);
    CHECK_THROWS(load_database(dir, &spec));
}

TEST_CASE("empty database round trips") {
    const fs::path dir = scratch("db_empty");
    save_database(ConfigDatabase(kSmall), dir);
    const ConfigDatabase back = load_database(dir, &kSmall);
    CHECK(back.empty());
    CHECK(back.spec() == kSmall);
}

TEST_CASE("database enforces contiguous stages and matching specs") {
    ConfigDatabase db(kSmall);
    auto s = zero_snapshot(kSmall, 1);
    CHECK_THROWS_AS(db.append(s), ValidationError);
    s.stage_index = 0;
    db.append(s);
    CHECK_THROWS_AS(db.append(zero_snapshot(FnnSpec::battery(), 1)), std::invalid_argument);
}

TEST_CASE("config validation") {
    LifecycleConfig c = small_config();
    c.warmup_m = 1;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = small_config();
    c.fine_tune.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    CHECK(parse_ae_mode("per-layer") == AeMode::per_layer);
    CHECK_THROWS(parse_ae_mode("both"));
}

TEST_CASE("init stores theta_0 and freezes the latent width") {
    const auto stages = small_stages(3);
    const auto s = init_phase(stages[0], kSmall, small_config());
    CHECK(s.db.size() == 1);
    CHECK(s.db.at(0).stage_index == 0);
    CHECK(s.latent_dims == std::vector<std::size_t>{s.entropy.latent_dim});
    CHECK(s.entropy.latent_dim == latent_dim(s.entropy.entropy_bits, 2.0));
    CHECK_FALSE(s.dynamic.has_value());
    CHECK_THROWS_AS(init_phase(stages[1], kSmall, small_config()), ValidationError);
}

TEST_CASE("fine-tuning: ordering, zero-epoch identity, objective decomposition") {
    const auto stages = small_stages(4);
    auto cfg = small_config();
    auto s = init_phase(stages[0], kSmall, cfg);
    CHECK_THROWS_AS(fine_tune_step(s, stages[2]), ValidationError);

    s.cfg.fine_tune = {0, 1e-3, 0.0, 0};
    fine_tune_step(s, stages[1]);
    CHECK(s.db.at(1).layers == s.db.at(0).layers);

    s.cfg.fine_tune = cfg.fine_tune;
    fine_tune_step(s, stages[2]);
    const auto terms = fnn_objective(kSmall, s.current, stages[2], cfg.fine_tune.alpha);
    CHECK(std::abs(terms.total - s.log.back().fine_tune_loss) <= 1e-10);
    CHECK(std::abs(terms.mse + cfg.fine_tune.alpha * terms.l2 - terms.total) <= 1e-15);
}

TEST_CASE("diverging fine-tune keeps the previous snapshot") {
    const auto stages = small_stages(2);
    auto s = init_phase(stages[0], kSmall, small_config());
    StageDataset bad = stages[1];
    bad.outputs.fill(1e300);
    CHECK_THROWS_AS(fine_tune_step(s, bad), TrainingError);
    CHECK(s.db.size() == 1);
    CHECK(bitwise_equal(s.current, s.db.at(0)));
}

TEST_CASE("warm-up needs exactly m datasets") {
    const auto stages = small_stages(8);
    auto s = init_phase(stages[0], kSmall, small_config());
    CHECK_THROWS_AS(warmup_phase(s, std::span(stages).subspan(1, 3)), ValidationError);
    warmup_phase(s, std::span(stages).subspan(1, 4));
    CHECK(s.db.size() == 5);
    REQUIRE(s.dynamic.has_value());
    CHECK(s.dynamic->features.front().size() == 5);
    CHECK(s.dynamic->forecasters.front().spec.window == 2);
    lifelong_update_step(s, stages[5]);
    CHECK(s.db.size() == 6);
    CHECK(s.dynamic->features.front().size() == 6);
    CHECK(s.dynamic->trained_stage == 5);
}

TEST_CASE("progressive rollout window mechanics") {
    const std::vector<LatentFeature> hist{{1.0}, {2.0}};
    std::vector<std::vector<double>> seen;
    const auto out = progressive_rollout(hist, 2, 3, [&](std::span<const LatentFeature> w) {
        seen.push_back({w[0][0], w[1][0]});
        return LatentFeature{w[0][0] + w[1][0]};
    });
    CHECK(seen == std::vector<std::vector<double>>{{1, 2}, {2, 3}, {3, 5}});
    CHECK(out == std::vector<LatentFeature>{{3.0}, {5.0}, {8.0}});

    const auto fixed = progressive_rollout(hist, 2, 4, [](std::span<const LatentFeature> w) { return w.back(); });
    for (const auto& f : fixed) CHECK(f == LatentFeature{2.0});

    int calls = 0;
    progressive_rollout(hist, 2, 1, [&](std::span<const LatentFeature> w) { ++calls; return w.back(); });
    CHECK(calls == 1);
    CHECK_THROWS(progressive_rollout(hist, 2, 0, [](std::span<const LatentFeature> w) { return w.back(); }));
    CHECK_THROWS(progressive_rollout(hist, 3, 1, [](std::span<const LatentFeature> w) { return w.back(); }));
}

TEST_CASE("predictions are pure, indexed after the last stored stage, and deterministic") {
    const auto stages = small_stages(8);
    auto run = [&] {
        auto s = init_phase(stages[0], kSmall, small_config());
        warmup_phase(s, std::span(stages).subspan(1, 4));
        return s;
    };
    const auto a = run();
    const auto p1 = predict_future_configs(a, 3);
    const auto p2 = predict_future_configs(a, 3);
    REQUIRE(p1.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(p1[k].stage_index == 5 + k);
        CHECK(p1[k].matches(kSmall));
        CHECK(bitwise_equal(p1[k], p2[k]));
    }
    const auto b = run();
    const auto q = predict_future_configs(b, 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(bitwise_equal(p1[k], q[k]));
    CHECK_THROWS(predict_future_configs(a, 0));
}

TEST_CASE("per-layer mode trains one autoencoder and forecaster per layer") {
    const auto stages = small_stages(6);
    auto cfg = small_config();
    cfg.ae_mode = AeMode::per_layer;
    auto s = init_phase(stages[0], kSmall, cfg);
    CHECK(s.latent_dims.size() == kSmall.layer_count());
    for (std::size_t i = 0; i < kSmall.layer_count(); ++i) {
        CHECK(s.latent_dims[i] == entropy_report(s.db.at(0).layers[i], cfg.entropy).latent_dim);
    }
    warmup_phase(s, std::span(stages).subspan(1, 4));
    CHECK(s.dynamic->autoencoders.size() == 3);
    CHECK(s.dynamic->forecasters.size() == 3);
    const auto p = predict_future_configs(s, 1);
    CHECK(p[0].matches(kSmall));
}

TEST_CASE("baseline run equals the lifecycle's stored snapshots") {
    const auto stages = small_stages(6);
    const auto base = baseline_fine_tune_run(std::span(stages).first(5), kSmall, small_config());
    auto s = init_phase(stages[0], kSmall, small_config());
    warmup_phase(s, std::span(stages).subspan(1, 4));
    REQUIRE(base.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(bitwise_equal(base[i], s.db.at(i)));
    CHECK(baseline_fine_tune_run(std::span(stages).first(1), kSmall, small_config()).size() == 1);
}
