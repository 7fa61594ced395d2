#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "reentry/checkpoint.hpp"
#include "reentry/gradcheck.hpp"

using namespace reentry;
using namespace reentry::model;

namespace {

corpus::Vocabulary tiny_vocab() {
  std::vector<std::string> tokens{"<pad>", "<unk>"};
  for (int i = 0; i < 10; ++i) tokens.push_back("w" + std::to_string(i));
  return corpus::Vocabulary(tokens);
}

}  // namespace

TEST_CASE("checkpoint round trip preserves every value bitwise") {
  const auto c = gradcheck::tiny_config();
  ModelParams p(c);
  p.initialize(7);
  const auto vocab = tiny_vocab();
  CheckpointInfo info;
  info.step = 42;
  info.epoch = 3;
  info.extra = {{"note", "x"}};
  const auto bytes = serialize_checkpoint(c, p, vocab, info);
  CHECK(bytes.substr(0, 8) == "RECKPT01");

  const auto dir = testing::temp_dir("ckpt");
  save_checkpoint(dir / "a.ckpt", c, p, vocab, info);
  CHECK(testing::read_file(dir / "a.ckpt") == bytes);

  const auto back = load_checkpoint(dir / "a.ckpt");
  CHECK(to_json(back.config) == to_json(c));
  CHECK(back.vocab.tokens() == vocab.tokens());
  CHECK(back.info.step == 42);
  CHECK(back.info.epoch == 3);
  CHECK(back.info.extra == info.extra);
  const auto a = p.all();
  const auto b = back.params->all();
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k]->name == b[k]->name);
    CHECK(a[k]->value.shape() == b[k]->value.shape());
    CHECK(std::memcmp(a[k]->value.values().data(), b[k]->value.values().data(),
                      a[k]->size() * sizeof(double)) == 0);
  }
  CHECK(serialize_checkpoint(back.config, *back.params, back.vocab, back.info) == bytes);

  Rng rng(3);
  const auto inst = gradcheck::random_instance(rng, c.vocab_size);
  CHECK(forward(p, c, inst).y_main == forward(*back.params, back.config, inst).y_main);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto c = gradcheck::tiny_config();
  ModelParams p(c);
  p.initialize(1);
  const auto bytes = serialize_checkpoint(c, p, tiny_vocab(), {});

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS(parse_checkpoint(bad_magic));
  CHECK_THROWS(parse_checkpoint(bytes.substr(0, bytes.size() - 8)));
  CHECK_THROWS(parse_checkpoint(bytes + "extra"));
  CHECK_THROWS(parse_checkpoint(bytes.substr(0, 12)));
  CHECK_THROWS(load_checkpoint("/nonexistent/path.ckpt"));

  // A vocabulary that does not match its recorded hash.
  const auto pos = bytes.find("\"w3\"");
  REQUIRE(pos != std::string::npos);
  auto renamed = bytes;
  renamed[pos + 1] = 'q';
  CHECK_THROWS(parse_checkpoint(renamed));
}
