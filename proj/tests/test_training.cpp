/*
 * Copyright (c) 2026 The SVGNet Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "svgnet/checkpoint.hpp"
#include "svgnet/gradcheck.hpp"
#include "svgnet/io.hpp"
#include "svgnet/training.hpp"
#include "test_support.hpp"

#include <unistd.h>

using namespace svgnet;
using namespace svgnet::train;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("svgnet_train_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

double mse_of(const std::vector<double>& pred, const std::vector<double>& target, std::int64_t rows) {
  const auto p = nn::Var<double>::constant(nn::Tensor<double>({rows, 60}, pred));
  const auto t = nn::Var<double>::constant(nn::Tensor<double>({rows, 60}, target));
  return nn::mse_loss(p, t).item();
}

}  // namespace

TEST_CASE("mse loss examples") {
  std::vector<double> target(60);
  for (std::size_t i = 0; i < 60; ++i) target[i] = 0.5 * static_cast<double>(i);
  CHECK(mse_of(target, target, 1) == 0.0);

  auto shifted = target;
  for (std::size_t i = 0; i < 60; i += 2) shifted[i] += 1.0;
  CHECK(mse_of(shifted, target, 1) == 30.0);

  auto off = target;
  for (std::size_t i = 0; i < 60; i += 2) {
    off[i] += 3.0;
    off[i + 1] += 4.0;
  }
  CHECK(mse_of(off, target, 1) == 750.0);

  // batch mean
  std::vector<double> two_pred(target), two_target(target);
  two_pred.insert(two_pred.end(), off.begin(), off.end());
  two_target.insert(two_target.end(), target.begin(), target.end());
  CHECK(mse_of(two_pred, two_target, 2) == 375.0);

  const auto a = nn::Var<double>::constant(nn::Tensor<double>({1, 60}));
  const auto b = nn::Var<double>::constant(nn::Tensor<double>({2, 60}));
  CHECK_THROWS_AS(nn::mse_loss(a, b), Error);
}

TEST_CASE("mse loss gradient") {
  nn::Rng rng(1);
  nn::Tensor<double> p({3, 60}), t({3, 60});
  for (auto& v : p.values()) v = rng.uniform(-5, 5);
  for (auto& v : t.values()) v = rng.uniform(-5, 5);
  std::vector<nn::Parameter<double>> params = {{"pred", nn::Var<double>::leaf(p)}};
  const auto target = nn::Var<double>::constant(t);
  const auto r = nn::grad_check([&] { return nn::mse_loss(params[0].var, target); }, params);
  CHECK(r.max_rel_error < 1e-6);
}

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  for (std::int64_t spe : {1, 2, 4, 7, 63, 250}) {
    const double expected[] = {1e-4, 1e-4 * 0.9, 1e-4 * 0.9 * 0.9, 1e-4 * std::pow(0.9, 8)};
    const double epochs[] = {0.0, 2.5, 5.0, 20.0};
    for (int i = 0; i < 4; ++i) {
      const auto step = static_cast<std::int64_t>(std::ceil(epochs[i] * static_cast<double>(spe)));
      CHECK(std::abs(learning_rate(c, step, spe) - expected[i]) < 1e-12);
    }
    // constant within a decay period
    CHECK(learning_rate(c, 0, spe) == learning_rate(c, static_cast<std::int64_t>(2.5 * spe) - 1 + (spe % 2), spe));
  }
  CHECK(std::abs(learning_rate(c, 5 * 100, 100) - 8.1e-5) < 1e-12);
  CHECK(steps_per_epoch(2000, 32) == 63);
  CHECK(steps_per_epoch(64, 32) == 2);
  CHECK_THROWS_AS(learning_rate(c, -1, 10), Error);
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c;
  c.grad_clip = 1.5;
  c.seed = 42;
  const auto back = train_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(*back.grad_clip == 1.5);
  CHECK_FALSE(train_config_from_json(to_json(TrainConfig{})).grad_clip.has_value());

  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& t) { t.lr = 0; }, [](TrainConfig& t) { t.lr_decay = 1.5; },
           [](TrainConfig& t) { t.lr_decay = 0; }, [](TrainConfig& t) { t.batch_size = 0; },
           [](TrainConfig& t) { t.grad_clip = -1.0; }}) {
    TrainConfig t;
    mutate(t);
    CHECK_THROWS_AS(t.validate(), Error);
  }
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"learning_rate", 1}}), Error);
}

TEST_CASE("AdamW steps") {
  nn::ParameterSet<double> params;
  auto p = params.add("p", nn::Tensor<double>::scalar(1.0));
  TrainConfig c;
  c.weight_decay = 0.0;
  AdamW<double> opt(params, c);

  // zero gradients, zero decay: unchanged
  params.zero_grad();
  opt.step(0.1);
  CHECK(p.value()[0] == 1.0);
  CHECK(opt.state().step == 1);

  AdamW<double> fresh(params, c);
  {
    nn::GradientTape<double> tape;
    nn::TapeScope<double> scope(tape);
    params.zero_grad();
    tape.backward(nn::mul(p, p));
  }
  CHECK(p.grad()[0] == 2.0);
  fresh.step(0.1);
  const double dp = p.value()[0] - 1.0;
  CHECK(dp < 0.0);
  CHECK(std::abs(dp) <= 0.1 * (1 + 1e-7));
  CHECK(std::abs(dp + 0.1) < 1e-6);  // first bias-corrected step has magnitude ~lr
  CHECK(fresh.state().m[0].shape() == p.shape());

  // decoupled decay with zero gradient
  nn::ParameterSet<double> q;
  auto w = q.add("w", nn::Tensor<double>({2}, {2.0, -4.0}));
  c.weight_decay = 0.5;
  AdamW<double> decay(q, c);
  q.zero_grad();
  decay.step(0.1);
  CHECK(w.value()[0] == doctest::Approx(2.0 * 0.95));
  CHECK(w.value()[1] == doctest::Approx(-4.0 * 0.95));
}

TEST_CASE("gradient clipping") {
  nn::ParameterSet<double> params;
  auto a = params.add("a", nn::Tensor<double>({2}));
  auto b = params.add("b", nn::Tensor<double>({1}));
  a.mutable_grad()[0] = 3.0;
  b.mutable_grad()[0] = 4.0;
  CHECK(clip_grad_norm(params, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad()[0] == doctest::Approx(0.6));
  CHECK(b.grad()[0] == doctest::Approx(0.8));
  CHECK(clip_grad_norm(params, 10.0) == doctest::Approx(1.0));
  CHECK(b.grad()[0] == doctest::Approx(0.8));
}

TEST_CASE("micro-batching does not change the gradient") {
  model::SvgNet<double> net(model::ModelConfig::tiny());
  const auto samples = testing::synth_samples(6, 4);
  const double whole = accumulate_gradients(net, samples, 6);
  std::vector<nn::Tensor<double>> g1;
  for (const auto& p : net.parameters().items()) g1.push_back(p.var.grad());
  const double split = accumulate_gradients(net, samples, 4);
  CHECK(std::abs(whole - split) <= 1e-9 * std::abs(whole));
  CHECK(std::abs(batch_loss(net, samples, 5) - whole) <= 1e-9 * std::abs(whole));
  std::size_t i = 0;
  for (const auto& p : net.parameters().items()) {
    const auto& g = p.var.grad();
    for (std::size_t k = 0; k < g.numel(); ++k) CHECK(std::abs(g[k] - g1[i][k]) <= 1e-9 * (1 + std::abs(g1[i][k])));
    ++i;
  }
}

TEST_CASE("checkpoint round trip") {
  auto cfg = model::ModelConfig::tiny();
  cfg.input_mode = model::InputMode::HistScene;
  model::SvgNet<float> net(cfg);
  TrainConfig tc;
  AdamW<float> opt(net.parameters(), tc);
  {
    const auto samples = testing::synth_samples(4, 2);
    accumulate_gradients(net, samples, 4);
    opt.step(1e-3);
    accumulate_gradients(net, samples, 4);
    opt.step(1e-3);
  }
  const auto dir = scratch("ckpt");
  save_checkpoint(dir, net, &opt);
  CHECK(fs::exists(dir / "config.json"));
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "params.bin"));

  const auto manifest = nlohmann::json::parse(io::read_file(dir / "manifest.json"));
  CHECK(manifest["format_version"] == 1);
  CHECK(manifest["params"].size() == net.parameters().size());
  CHECK(fs::file_size(dir / "params.bin") == 4 * net.parameters().total_elements());

  auto loaded = load_checkpoint<float>(dir);
  CHECK(loaded.config().input_mode == model::InputMode::HistScene);
  REQUIRE(loaded.parameters().size() == net.parameters().size());
  for (std::size_t i = 0; i < net.parameters().size(); ++i) {
    const auto& a = net.parameters().items()[i];
    const auto& b = loaded.parameters().items()[i];
    CHECK(a.name == b.name);
    CHECK(std::memcmp(a.var.value().data(), b.var.value().data(), a.var.numel() * sizeof(float)) == 0);
  }

  OptimizerState<float> state;
  REQUIRE(load_optimizer_state(dir, loaded.parameters(), state));
  CHECK(state.step == 2);
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    CHECK(std::memcmp(state.m[i].data(), opt.state().m[i].data(), state.m[i].numel() * sizeof(float)) == 0);
    CHECK(std::memcmp(state.v[i].data(), opt.state().v[i].data(), state.v[i].numel() * sizeof(float)) == 0);
  }

  const auto bare = scratch("bare");
  save_checkpoint(bare, net);
  OptimizerState<float> none;
  CHECK_FALSE(load_optimizer_state(bare, loaded.parameters(), none));

  // shape mismatch against a different config
  auto other = cfg;
  other.d_model = 32;
  io::write_file_atomic(bare / "config.json", model::to_json(other).dump());
  CHECK_THROWS_AS(load_checkpoint<float>(bare), Error);

  try {
    load_checkpoint<float>(scratch("absent"));
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}

TEST_CASE("training is deterministic and logs every epoch") {
  const auto train_set = testing::synth_samples(10, 6);
  const auto val_set = testing::synth_samples(3, 6, 20);
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  tc.lr = 1e-3;
  std::vector<std::string> blobs;
  for (int run = 0; run < 2; ++run) {
    model::SvgNet<float> net(model::ModelConfig::tiny());
    TrainOptions opt;
    opt.out_dir = scratch("run" + std::to_string(run));
    std::vector<EpochLog> seen;
    opt.on_epoch = [&](const EpochLog& e) { seen.push_back(e); };
    const auto result = train::train(net, train_set, val_set, tc, opt);
    CHECK(result.step_losses.size() == 6);
    CHECK(seen.size() == 2);
    CHECK(seen.back().step == 6);
    REQUIRE(seen.back().val_ade.has_value());
    CHECK(std::isfinite(*seen.back().val_ade));
    CHECK(fs::exists(*opt.out_dir / "epoch_001" / "params.bin"));
    CHECK(fs::exists(*opt.out_dir / "epoch_002" / "optimizer.bin"));
    CHECK(fs::exists(*opt.out_dir / "final" / "params.bin"));

    const auto log = io::read_file(*opt.out_dir / "loss_log.jsonl");
    std::size_t lines = 0;
    for (std::size_t pos = 0; (pos = log.find('\n', pos)) != std::string::npos; ++pos) ++lines;
    CHECK(lines == 2);
    const auto first = nlohmann::json::parse(log.substr(0, log.find('\n')));
    for (const char* k : {"epoch", "step", "lr", "loss", "val_ade", "val_fde"}) CHECK(first.contains(k));
    CHECK(first["epoch"] == 1);
    blobs.push_back(io::read_file(*opt.out_dir / "epoch_001" / "params.bin") +
                    io::read_file(*opt.out_dir / "final" / "params.bin"));
  }
  CHECK(blobs[0] == blobs[1]);

  // no validation set: null metrics
  model::SvgNet<float> net(model::ModelConfig::tiny());
  tc.epochs = 1;
  const auto r = train::train(net, train_set, {}, tc);
  CHECK_FALSE(r.epochs[0].val_ade.has_value());
  CHECK(to_json(r.epochs[0])["val_ade"].is_null());
  CHECK_THROWS_AS(train::train(net, {}, {}, tc), Error);
}

TEST_CASE("fixed-batch loss decreases at lr 1e-4") {
  model::SvgNet<float> net(model::ModelConfig::tiny());
  const auto batch = testing::synth_samples(8, 7);
  TrainConfig tc;
  AdamW<float> opt(net.parameters(), tc);
  double prev = accumulate_gradients(net, batch, 8);
  const double start = prev;
  int non_increasing = 0;
  for (int s = 0; s < 100; ++s) {
    opt.step(1e-4);
    const double cur = accumulate_gradients(net, batch, 8);
    if (cur <= prev) ++non_increasing;
    prev = cur;
  }
  CHECK(non_increasing >= 95);
  CHECK(prev < start);
}

TEST_CASE("checkpoint write failure is an IoError") {
  model::SvgNet<float> net(model::ModelConfig::tiny());
  const auto blocker = scratch("blocker");
  io::write_file_atomic(blocker, "x");
  try {
    save_checkpoint(blocker / "sub", net);
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
}
