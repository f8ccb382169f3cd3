#include <gtest/gtest.h>

#include "kric/config.hpp"
#include "kric/errors.hpp"

using namespace kric;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  EXPECT_EQ(parse_config("{}").mode, "validate");
}

TEST(Config, FullDocumentRoundTrips) {
  const char* doc = R"({
    "mode": "sweep", "seed": 18446744073709551615,
    "problem": {
      "measure": {"type": "fractional", "hurst": 0.25, "theta_min": 0.01, "theta_max": 100, "levels": 30,
                  "lump_lower_tail": false},
      "T": 2.5, "B": 0.3, "C": [[1.0, 2.0]], "D": 0.2, "F": [[0.1, 0.0]], "Q": 1.0,
      "N": [[2.0, 0.0], [0.0, 3.0]], "lambda_margin": 1.0,
      "lyapunov": {"Qtilde": 2.0, "Btilde": 0.1}
    },
    "solver": {"riccati_method": "direct", "time_steps": 300, "lyapunov_method": "picard_contraction",
               "picard_lambda": 5.0, "check_stride": 3},
    "mc": {"paths": 1000, "steps": 20, "antithetic": true, "t": 0.5, "phi": [[1.0], [2.0]]},
    "kernel": {"points": 7},
    "sweep": {"axis": "H", "values": [0.1, 0.2]},
    "output": {"dir": "x/y", "write_field": false, "field_stride": 5}
  })";
  const RunConfig c = parse_config(doc);
  EXPECT_EQ(c.seed, 18446744073709551615ULL);
  EXPECT_EQ(c.problem.measure.kind, MeasureConfig::Kind::fractional);
  EXPECT_EQ(c.problem.lq.C.cols(), 2);
  EXPECT_EQ(c.problem.lq.N(1, 1), 3.0);
  EXPECT_TRUE(c.problem.qtilde.has_value());
  EXPECT_FALSE(c.problem.dtilde.has_value());
  EXPECT_EQ(c.solver.lyapunov_options().method, LyapunovMethod::picard_contraction);
  EXPECT_EQ(c.solver.riccati_options().lyapunov.time_steps, 300u);
  EXPECT_EQ(c.mc.phi->rows(), 2);
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
}

TEST(Config, AtomMeasureWithMatrixWeights) {
  const RunConfig c = parse_config(R"({"problem": {"measure": {"type": "atoms", "d": 1, "d_prime": 2,
      "atoms": [{"theta": 0.0, "weight": [[1.0, 0.5]]}, {"theta": 3.0, "weight": [[0.0, 2.0]]}]}}})");
  const MeasureAtoms m = c.problem.measure.build();
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.d_prime(), 2);
  EXPECT_EQ(m.weight(1)(0, 1), 2.0);
  EXPECT_EQ(serialize_config(parse_config(serialize_config(c))), serialize_config(c));
}

TEST(Config, UserDensityRoundTrips) {
  const RunConfig c = parse_config(R"({"problem": {"measure": {"type": "user_density", "theta_min": 0.5,
      "theta_max": 4.0, "levels": 8, "samples": [{"theta": 0.5, "density": 2.0}, {"theta": 4.0, "density": 1.0}]}}})");
  EXPECT_EQ(c.problem.measure.build().size(), 8u);
  EXPECT_EQ(serialize_config(parse_config(serialize_config(c))), serialize_config(c));
}

TEST(Config, RejectsBadDocuments) {
  EXPECT_THROW(parse_config("{"), ConfigError);
  EXPECT_THROW(parse_config("[]"), ConfigError);
  EXPECT_THROW(parse_config(R"({"modes": "validate"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"mode": "plot"})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": -1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver": {"time_steps": 0}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"solver": {"riccati_method": "newton"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"Q": [[1, 2], [3]]}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"Q": "one"}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"measure": {"type": "gaussian"}}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"problem": {"measure": {"type": "fractional", "nodes": [1]}}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"sweep": {"axis": "q"}})"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ModesInCliOrder) {
  const std::vector<std::string> expect{"solve-riccati", "solve-lyapunov", "validate", "kernel", "mc-check", "sweep"};
  EXPECT_EQ(run_modes(), expect);
}
