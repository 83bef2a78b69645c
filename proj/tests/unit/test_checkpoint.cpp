#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "camctl/checkpoint.hpp"
#include "helpers.hpp"

using namespace camctl;

namespace {

Checkpoint sample_checkpoint() {
  NetworkConfig c;
  c.input_size = 16;
  c.conv_widths = {4, 4, 8, 8};
  c.fc_widths = {8, 4};
  c.epsilon = 0.3;
  Network<float> net(c, 12);
  Rng rng(1);
  Eigen::MatrixXf x(15, 3 * 16 * 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(uniform01(rng));
  Workspace<float> ws;
  net.forward(x, 3, Mode::train, &rng, ws);
  net.update_running_stats(ws);
  return Checkpoint{c, 2, net.export_tensors()};
}

std::string serialize(const Checkpoint& ck) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(out, ck);
  return out.str();
}

Checkpoint deserialize(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return read_checkpoint(in);
}

}  // namespace

TEST(Checkpoint, RoundTripPreservesEverything) {
  const Checkpoint ck = sample_checkpoint();
  const Checkpoint back = deserialize(serialize(ck));
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.round, 2);
  ASSERT_EQ(back.tensors.size(), ck.tensors.size());
  for (std::size_t i = 0; i < ck.tensors.size(); ++i) {
    EXPECT_EQ(back.tensors[i].name, ck.tensors[i].name);
    EXPECT_EQ(back.tensors[i].shape, ck.tensors[i].shape);
    EXPECT_EQ(back.tensors[i].values, ck.tensors[i].values);
  }
}

TEST(Checkpoint, LoadedNetworkReproducesForwardExactly) {
  const Checkpoint ck = sample_checkpoint();
  const auto dir = test::temp_dir("checkpoint");
  save_checkpoint(dir / "ck.bin", ck);
  const Checkpoint back = load_checkpoint(dir / "ck.bin");
  Network<float> a(ck.config), b(back.config);
  a.import_tensors(ck.tensors);
  b.import_tensors(back.tensors);
  Rng rng(3);
  Eigen::MatrixXf x(15, 2 * 16 * 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(uniform01(rng));
  Workspace<float> ws;
  EXPECT_EQ(a.forward(x, 2, Mode::eval, nullptr, ws), b.forward(x, 2, Mode::eval, nullptr, ws));
}

TEST(Checkpoint, HeaderIsVersionedAndLittleEndian) {
  const std::string bytes = serialize(sample_checkpoint());
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 8), "CAMCTLCK");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), Checkpoint::kFormatVersion);
  EXPECT_EQ(bytes[9], 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 2);  // round
}

TEST(Checkpoint, SerializationIsDeterministic) {
  EXPECT_EQ(serialize(sample_checkpoint()), serialize(sample_checkpoint()));
}

TEST(Checkpoint, RejectsBadMagic) {
  std::string bytes = serialize(sample_checkpoint());
  bytes[0] = 'X';
  EXPECT_THROW(deserialize(bytes), InvalidArgument);
}

TEST(Checkpoint, RejectsUnknownVersion) {
  std::string bytes = serialize(sample_checkpoint());
  bytes[8] = 99;
  EXPECT_THROW(deserialize(bytes), InvalidArgument);
}

TEST(Checkpoint, RejectsTruncation) {
  const std::string bytes = serialize(sample_checkpoint());
  for (std::size_t keep : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    EXPECT_THROW(deserialize(bytes.substr(0, keep)), InvalidArgument) << keep;
  }
}

TEST(Checkpoint, RejectsCorruptedPayload) {
  std::string bytes = serialize(sample_checkpoint());
  bytes[bytes.size() - 40] ^= 0x10;
  EXPECT_THROW(deserialize(bytes), InvalidArgument);
}

TEST(Checkpoint, RejectsTrailingBytes) {
  EXPECT_THROW(deserialize(serialize(sample_checkpoint()) + "x"), InvalidArgument);
}

TEST(Checkpoint, MissingFileIsAnError) {
  EXPECT_THROW(load_checkpoint(test::temp_dir("checkpoint_missing") / "nope.bin"), InvalidArgument);
}
