#include <gtest/gtest.h>

#include "cqa/checkpoint.hpp"
#include "test_util.hpp"

using namespace cqa;

namespace {

ModelConfig small_config(Topology topo = Topology::attention) {
  ModelConfig mc;
  mc.topology = topo;
  mc.vocab_size = 6;
  mc.embed_dim = 3;
  mc.cell_count = 4;
  mc.mlp_hidden = 5;
  mc.attention_hidden = 3;
  mc.ir_rank_slots = 2;
  return mc;
}

Vocabulary small_vocab() {
  Vocabulary v;
  for (const char* t : {"a", "b", "c", "d", "e"}) v.add(t);
  return v;
}

void expect_same_tensors(const ParamSet& a, const ParamSet& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.entries()[i].name, b.entries()[i].name);
    EXPECT_EQ(a.entries()[i].value, b.entries()[i].value) << a.entries()[i].name;
  }
}

GradCheckReport check_model(Model& model, Rng& rng) {
  std::vector<Example> examples;
  for (std::size_t k = 0; k < 3; ++k) {
    Example ex;
    for (std::size_t t = 0; t <= k; ++t) ex.first.push_back(static_cast<int>(rng.index(6)));
    for (std::size_t t = 0; t < 3 - k; ++t) ex.second.push_back(static_cast<int>(rng.index(6)));
    ex.bridge = ex.first;
    ex.label = static_cast<int>(k % 2);
    ex.aux_labels = {1, 0};
    ex.ir_rank = 1;
    examples.push_back(ex);
  }
  auto loss = [&] {
    double total = 0.0;
    for (const auto& ex : examples) total += model.loss(ex);
    return total;
  };
  auto backward = [&] {
    model.params().zero_grads();
    for (const auto& ex : examples) model.accumulate_gradients(ex, kDefaultBeta, 1.0);
  };
  return grad_check(model.params(), loss, backward, 1e-4);
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitwise) {
  for (Topology topo : {Topology::parallel, Topology::serialized, Topology::attention,
                        Topology::multitask}) {
    Rng rng(3);
    const Model m(small_config(topo), &rng);
    const Vocabulary v = small_vocab();
    const auto dir = testutil::scratch("ckpt");
    const std::string path = (dir / "m.ckpt").string();
    save_checkpoint(m, v, path, {{"seed", "3"}});
    const Checkpoint c = load_checkpoint(path);
    EXPECT_EQ(c.model, m.config());
    EXPECT_EQ(c.vocab, v);
    ASSERT_EQ(c.train_echo.size(), 1u);
    EXPECT_EQ(c.train_echo[0].second, "3");
    const Model back = model_from_checkpoint(c);
    expect_same_tensors(back.params(), m.params());
    EXPECT_EQ(serialize_checkpoint(make_checkpoint(back, v, {{"seed", "3"}})),
              testutil::slurp(path));
  }
}

TEST(Checkpoint, ZeroModelLoadsAsZeros) {
  const Model m(small_config(), nullptr);
  const Checkpoint c = deserialize_checkpoint(serialize_checkpoint(make_checkpoint(m, small_vocab())));
  for (const auto& t : c.tensors) {
    for (double x : t.value.data) EXPECT_EQ(x, 0.0);
  }
}

TEST(Checkpoint, TruncationReportsOffset) {
  Rng rng(1);
  const Model m(small_config(), &rng);
  const std::string bytes = serialize_checkpoint(make_checkpoint(m, small_vocab()));
  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    try {
      deserialize_checkpoint(bytes.substr(0, cut));
      FAIL() << "cut at " << cut;
    } catch (const std::runtime_error& e) {
      EXPECT_NE(std::string(e.what()).find("corrupt checkpoint at offset"), std::string::npos)
          << e.what();
    }
  }
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  EXPECT_THROW(deserialize_checkpoint(flipped), std::runtime_error);
}

TEST(Checkpoint, VersionMismatchIsExplicit) {
  Rng rng(1);
  const Model m(small_config(), &rng);
  Checkpoint c = make_checkpoint(m, small_vocab());
  c.version = kCheckpointVersion + 1;
  try {
    deserialize_checkpoint(serialize_checkpoint(c));
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(Transfer, OnlySoftmaxTensorsChange) {
  Rng rng(5);
  const Model pre(small_config(), &rng);
  const Checkpoint c = make_checkpoint(pre, small_vocab());
  Rng fresh(99);
  const Model target = transfer_init(c, small_config(), fresh);
  ASSERT_EQ(target.params().size(), pre.params().size());
  std::size_t softmax = 0;
  for (std::size_t i = 0; i < pre.params().size(); ++i) {
    const auto& a = pre.params().entries()[i];
    const auto& b = target.params().entries()[i];
    if (is_softmax_tensor(a.name)) {
      ++softmax;
      EXPECT_NE(a.value, b.value) << a.name;
    } else {
      EXPECT_EQ(a.value, b.value) << a.name;
    }
  }
  EXPECT_EQ(softmax, 2u);
}

TEST(Transfer, IntoMultitaskKeepsEncoderCopies) {
  Rng rng(5);
  const Model pre(small_config(Topology::multitask), &rng);
  Rng fresh(2);
  const Model target = transfer_init(make_checkpoint(pre, small_vocab()),
                                     small_config(Topology::multitask), fresh);
  for (const auto& p : target.params().entries()) {
    if (!is_softmax_tensor(p.name)) {
      EXPECT_EQ(p.value, *make_checkpoint(pre, small_vocab()).find(p.name)) << p.name;
    }
  }
}

TEST(Transfer, CellMismatchNamesLstmTensors) {
  Rng rng(5);
  const Model pre(small_config(), &rng);
  ModelConfig wider = small_config();
  wider.cell_count = 6;
  Rng fresh(1);
  try {
    transfer_init(make_checkpoint(pre, small_vocab()), wider, fresh);
    FAIL();
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("incompatible"), std::string::npos);
    EXPECT_NE(what.find("lstm"), std::string::npos) << what;
  }
}

TEST(Transfer, GradientsStillCheck) {
  Rng rng(5);
  ModelConfig mc = small_config();
  mc.init_scale = 1.0;
  const Model pre(mc, &rng);
  Rng fresh(8);
  Model target = transfer_init(make_checkpoint(pre, small_vocab()), mc, fresh);
  const auto report = check_model(target, fresh);
  EXPECT_LT(report.max_rel_error, 1e-4);
}
