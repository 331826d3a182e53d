#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "mdp_tcm/errors.hpp"
#include "mdp_tcm/model_io.hpp"

using namespace mdp_tcm;

namespace {

DbnModel random_dbn(std::vector<std::size_t> sizes, HeadKind head, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  DbnModel m;
  m.layer_sizes = sizes;
  m.head_kind = head;
  for (std::size_t l = 0; l + 2 < sizes.size(); ++l) {
    DenseLayer layer{Eigen::MatrixXd(sizes[l], sizes[l + 1]), Eigen::VectorXd(sizes[l + 1])};
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = g(rng);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = g(rng);
    m.hidden.push_back(layer);
  }
  m.head = {Eigen::MatrixXd(sizes[sizes.size() - 2], sizes.back()), Eigen::VectorXd(sizes.back())};
  for (Eigen::Index i = 0; i < m.head.weights.size(); ++i) m.head.weights.data()[i] = g(rng);
  for (Eigen::Index i = 0; i < m.head.bias.size(); ++i) m.head.bias(i) = g(rng);
  if (head == HeadKind::Linear) {
    m.target_offset = 12.5 + g(rng);
    m.target_scale = 387.25 + g(rng);
  }
  return m;
}

ModelFile multistate_file(Rng& rng) {
  MultiStateModel ms;
  ms.diagnoser = {random_dbn({6, 5, 4, 4}, HeadKind::Softmax, rng), CostVector{{0.1, 0.9, 1.0 / 3.0, 0.5}}};
  ms.regressors.emplace(0, random_dbn({6, 3, 1}, HeadKind::Linear, rng));
  ms.regressors.emplace(2, random_dbn({6, 4, 1}, HeadKind::Linear, rng));
  ms.fallback = random_dbn({6, 7, 2, 1}, HeadKind::Linear, rng);
  ms.smoothing_window = 50;
  ms.sticky_count = 2;
  ModelFile f;
  f.kind = ModelKind::MultiState;
  f.window = {{"force", "torque"}, 1650.0, 200.0, 1, 3, 3};
  f.multistate = ms;
  f.config_echo = {{"seed", "7"}, {"preset", "desk"}};
  return f;
}

void expect_same(const DbnModel& a, const DbnModel& b) {
  EXPECT_EQ(a.layer_sizes, b.layer_sizes);
  EXPECT_EQ(a.head_kind, b.head_kind);
  ASSERT_EQ(a.hidden.size(), b.hidden.size());
  for (std::size_t l = 0; l < a.hidden.size(); ++l) {
    EXPECT_EQ(a.hidden[l].weights, b.hidden[l].weights);
    EXPECT_EQ(a.hidden[l].bias, b.hidden[l].bias);
  }
  EXPECT_EQ(a.head.weights, b.head.weights);
  EXPECT_EQ(a.head.bias, b.head.bias);
  EXPECT_EQ(a.target_offset, b.target_offset);
  EXPECT_EQ(a.target_scale, b.target_scale);
}

}  // namespace

TEST(F64, HexRoundTrip) {
  EXPECT_EQ(encode_f64(1.0), "000000000000f03f");
  for (double v : {0.0, -0.0, 1.0 / 3.0, -2.5e-300, 1e308, std::numeric_limits<double>::denorm_min()}) {
    const double back = decode_f64(encode_f64(v));
    EXPECT_EQ(std::signbit(back), std::signbit(v));
    EXPECT_EQ(back, v);
  }
  EXPECT_TRUE(std::isnan(decode_f64(encode_f64(std::nan("")))));
  EXPECT_THROW(decode_f64("xyz"), DataError);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(ModelFile, MultiStateRoundTripIsExact) {
  Rng rng = make_rng(1, "t");
  const ModelFile f = multistate_file(rng);
  const std::string text = serialize_model(f);
  const ModelFile g = parse_model(text);
  ASSERT_EQ(g.kind, ModelKind::MultiState);
  ASSERT_TRUE(g.multistate);
  const auto& a = *f.multistate;
  const auto& b = *g.multistate;
  expect_same(a.diagnoser.base, b.diagnoser.base);
  EXPECT_EQ(a.diagnoser.costs.costs, b.diagnoser.costs.costs);
  ASSERT_EQ(b.regressors.size(), 2u);
  expect_same(a.regressors.at(0), b.regressors.at(0));
  expect_same(a.regressors.at(2), b.regressors.at(2));
  expect_same(a.fallback, b.fallback);
  EXPECT_EQ(b.smoothing_window, 50u);
  EXPECT_EQ(b.sticky_count, 2);
  EXPECT_EQ(g.window.channel_ids, f.window.channel_ids);
  EXPECT_EQ(g.config_echo, f.config_echo);
  EXPECT_EQ(serialize_model(g), text);

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(25, 6);
  const WearEstimate ea = estimate_wear(a, x), eb = estimate_wear(b, x);
  EXPECT_EQ(ea.raw, eb.raw);
  EXPECT_EQ(ea.smoothed, eb.smoothed);
  EXPECT_EQ(ea.states, eb.states);
}

TEST(ModelFile, OtherKindsRoundTrip) {
  Rng rng = make_rng(2, "t");
  ModelFile c;
  c.kind = ModelKind::DbnClassifier;
  c.classifier = random_dbn({5, 4, 4}, HeadKind::Softmax, rng);
  expect_same(*parse_model(serialize_model(c)).classifier, *c.classifier);

  ModelFile e;
  e.kind = ModelKind::EcsDbn;
  e.ecs = EcsDbnModel{random_dbn({5, 4, 4}, HeadKind::Softmax, rng), CostVector{{0.2, 0.4, 0.6, 0.8}}};
  const ModelFile e2 = parse_model(serialize_model(e));
  EXPECT_EQ(e2.ecs->costs.costs.size(), 4u);
  EXPECT_EQ(e2.ecs->costs.costs, e.ecs->costs.costs);

  ModelFile r;
  r.kind = ModelKind::DbnRegressor;
  r.regressor = random_dbn({5, 4, 3, 1}, HeadKind::Linear, rng);
  expect_same(*parse_model(serialize_model(r)).regressor, *r.regressor);
}

TEST(ModelFile, ChecksumCatchesTampering) {
  Rng rng = make_rng(3, "t");
  std::string text = serialize_model(multistate_file(rng));
  const auto pos = text.find("fallback.output.bias");
  ASSERT_NE(pos, std::string::npos);
  const auto digit = text.find_first_of("0123456789abcdef", text.find(" = ", pos) + 5);
  text[digit] = text[digit] == '0' ? '1' : '0';
  EXPECT_THROW(parse_model(text), DataError);
}

TEST(ModelFile, VersionAndMagicGates) {
  Rng rng = make_rng(4, "t");
  const std::string text = serialize_model(multistate_file(rng));
  std::string v2 = text;
  v2.replace(v2.find("version = 1"), 11, "version = 2");
  EXPECT_THROW(parse_model(v2), DataError);
  EXPECT_THROW(parse_model("NOT-A-MODEL\n" + text.substr(text.find('\n') + 1)), DataError);
  EXPECT_THROW(parse_model(""), DataError);
  EXPECT_THROW(load_model("/nonexistent/model.txt"), DataError);
}

TEST(ModelKinds, Names) {
  for (auto k : {ModelKind::DbnClassifier, ModelKind::EcsDbn, ModelKind::DbnRegressor, ModelKind::MultiState}) {
    EXPECT_EQ(parse_model_kind(model_kind_name(k)), k);
  }
  EXPECT_STREQ(model_kind_name(ModelKind::EcsDbn), "ecs-dbn");
  EXPECT_THROW(parse_model_kind("svm"), std::invalid_argument);
}
