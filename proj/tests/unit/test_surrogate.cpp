#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "bellow/error.hpp"
#include "bellow/json_io.hpp"
#include "bellow/oracle.hpp"
#include "bellow/surrogate.hpp"
#include "fixtures.hpp"

using namespace bellow;

namespace {

std::vector<OracleSample> small_dataset() {
  return generate_dataset(DatasetGrid{{2, 6, 2}, {0, 10, 2}}, agilus30());
}

}  // namespace

TEST_SUITE("surrogate") {
  TEST_CASE("gradient matches central differences") {
    const auto rows = small_dataset();
    SurrogateModel m = make_network({5, 20, 20, 1}, 9);
    m.norm.input_min = {2, 0.5, 2.5, 2, 0};
    m.norm.input_max = {6, 2, 12, 16, 10};
    m.norm.output_min = 0.0;
    m.norm.output_max = 1.0;
    std::vector<std::size_t> idx(rows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const auto batch = make_batch(m.norm, rows, idx);
    std::vector<double> grad;
    objective(m, batch, 1e-3, &grad);
    const auto p = m.parameters();
    REQUIRE(grad.size() == p.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(p[i]));
      auto q = p;
      q[i] = p[i] + h;
      m.set_parameters(q);
      const double fp = objective(m, batch, 1e-3);
      q[i] = p[i] - h;
      m.set_parameters(q);
      const double fm = objective(m, batch, 1e-3);
      const double fd = (fp - fm) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3, std::abs(fd) + std::abs(grad[i])));
    }
    m.set_parameters(p);
    CHECK(worst < 1e-5);
  }

  TEST_CASE("training is deterministic and monotone") {
    const auto rows = small_dataset();
    TrainOptions o;
    o.epochs = 20;
    o.min_rows = 10;
    const auto [a, ra] = train(rows, o);
    const auto [b, rb] = train(rows, o);
    CHECK(a == b);
    CHECK(ra.loss_history == rb.loss_history);
    for (std::size_t i = 1; i < ra.loss_history.size(); ++i) CHECK(ra.loss_history[i] < ra.loss_history[i - 1]);
    CHECK(ra.train_rows + ra.test_rows == rows.size());
    CHECK(ra.test_mse < 1e-2);
  }

  TEST_CASE("shared model fits the oracle") {
    const auto& m = testing::shared_model();
    CHECK(m.layer_sizes() == std::vector<std::size_t>{5, 20, 20, 1});
    CHECK(m.report.test_mse < 1e-4);
    const ModuleDesign d;
    CHECK(m.theta(d, 5.0) == doctest::Approx(oracle_theta(d, 5.0, agilus30())).epsilon(0.05));
  }

  TEST_CASE("extrapolation warning outside the training box") {
    const auto& m = testing::shared_model();
    CHECK_FALSE(m.predict(ModuleDesign{}, 5.0).extrapolation_warning);
    const auto far = m.predict(ModuleDesign{30, 8, 40, 36}, 5.0);
    CHECK(far.extrapolation_warning);
    CHECK(far.extrapolation > kExtrapolationWarning);
  }

  TEST_CASE("rigid modules do not bend") {
    ActuatorSpec a;
    a.modules = {ModuleDesign{}, ModuleDesign{5, 1.5, 8, 10, true}};
    a.rotations_rad = {0.0};
    a.pressure_kpa = 8.0;
    const auto th = predict_thetas(testing::shared_model(), a);
    CHECK(th[0] > 0.0);
    CHECK(th[1] == 0.0);
  }

  TEST_CASE("model file round trip and version check") {
    const auto dir = testing::scratch_dir("surrogate");
    const auto& m = testing::shared_model();
    save_model(m, (dir / "m.json").string());
    const SurrogateModel back = load_model((dir / "m.json").string());
    CHECK(back.parameters() == m.parameters());
    CHECK(back.norm == m.norm);
    CHECK(model_text(back) == testing::read_file(dir / "m.json"));

    Json j = model_to_json(m);
    j["version"] = kSurrogateFormatVersion + 1;
    CHECK_THROWS_AS(model_from_json(j), VersionError);
    j = model_to_json(m);
    j["layers"][0]["weights"].erase(0);
    CHECK_THROWS_AS(model_from_json(j), FormatError);
  }

  TEST_CASE("training rejects tiny datasets") {
    const auto rows = generate_dataset(DatasetGrid{{2, 2, 2}, {0, 1, 1}}, agilus30());
    CHECK_THROWS_AS(train(rows, TrainOptions{}), ValidationError);
  }
}
